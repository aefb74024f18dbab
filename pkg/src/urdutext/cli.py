"""Command-line entry point: synth, extract-patches, train, detect, eval.

Exit codes: 0 success, 1 domain failure (missing or malformed files,
untrainable data), 2 usage or configuration error. Human-readable progress
goes to stderr; machine-readable ``key=value`` results go to stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset_io as dio
from .config import DetectorConfig, format_config, read_config
from .errors import ConfigError, FormatError, TrainingError
from .filtering import standardize
from .hog import hog_descriptor
from .imaging import read_image
from .pipeline_eval import DetectorModels, check_compatible, classifier_accuracy, detect
from .svm import KernelSpec, TrainConfig, read_model, save_model, train

log = logging.getLogger("urdutext")


class DomainError(Exception):
    """Failure attributable to inputs rather than usage (exit code 1)."""


def _require(path, kind="file") -> Path:
    path = Path(path)
    ok = path.is_dir() if kind == "dir" else path.is_file()
    if not ok:
        raise DomainError(f"{kind} not found: {path}")
    return path


# --- subcommands ------------------------------------------------------------------------------

def cmd_synth(args) -> int:
    out = Path(args.out)
    test = args.test_count if args.test_count is not None else args.count // 4
    ids = dio.write_corpus(out, args.count, seed=args.seed, test_count=test)
    (out / "config.txt").write_text(format_config(DetectorConfig()))
    log.info("wrote %d scenes to %s (%d train, %d test)", len(ids), out, len(ids) - test, test)
    print(f"scenes={len(ids)}")
    print(f"train={len(ids) - test}")
    print(f"test={test}")
    return 0


def cmd_extract(args) -> int:
    images = _require(args.images, "dir")
    gt_dir = _require(args.gt, "dir")
    chars = _require(args.chars, "dir") if args.chars else None
    cfg = read_config(_require(args.config)) if args.config else DetectorConfig()
    ids = dio.read_manifest(_require(args.manifest)) if args.manifest else dio.list_ids(images, ".ppm")
    if not ids:
        raise DomainError(f"no images found in {images}")
    patches, lines = dio.PatchDataset(), dio.PatchDataset()
    for k, iid in enumerate(ids):
        img = _read_any_image(images, iid)
        ann = dio.load_annotation(_require(gt_dir / f"{iid}.txt"))
        ann.image_id = iid
        glyphs = dio.load_annotation(_require(chars / f"{iid}.txt")).boxes if chars else None
        seed = dio.scene_seed(args.seed, k)
        patches.extend(dio.extract_patches(img, ann, args.neg_ratio, seed, cfg.patch, glyphs,
                                            args.jitter))
        lines.extend(dio.extract_line_windows(img, ann, args.neg_ratio, seed + 1, cfg.hog))
    out = Path(args.out)
    dio.write_patch_dir(out / "patch", patches)
    dio.write_patch_dir(out / "line", lines)
    log.info("extracted %d/%d patch and %d/%d line samples (pos/neg) from %d images",
             len(patches.positives), len(patches.negatives), len(lines.positives),
             len(lines.negatives), len(ids))
    print(f"patch_pos={len(patches.positives)}")
    print(f"patch_neg={len(patches.negatives)}")
    print(f"line_pos={len(lines.positives)}")
    print(f"line_neg={len(lines.negatives)}")
    print(f"warnings={patches.warnings + lines.warnings}")
    return 0


def _read_any_image(directory: Path, iid: str):
    for suffix in (".ppm", ".pgm"):
        p = directory / f"{iid}{suffix}"
        if p.exists():
            return read_image(p)
    raise DomainError(f"image not found: {directory / (iid + '.ppm')}")


def training_set(patch_dir, target, cfg):
    pos, neg = dio.read_patch_dir(patch_dir)
    if target == "patch":
        feats = [standardize(p.astype(np.float64)) for p in pos + neg]
    else:
        feats = [hog_descriptor(p, cfg.hog) for p in pos + neg]
    if not feats:
        raise TrainingError(f"no samples in {patch_dir}")
    y = np.r_[np.ones(len(pos)), -np.ones(len(neg))]
    return np.stack(feats), y


def cmd_train(args) -> int:
    root = _require(args.patches, "dir")
    cfg = read_config(_require(args.config)) if args.config else DetectorConfig()
    X, y = training_set(_require(root / args.target, "dir"), args.target, cfg)
    kernel = KernelSpec(args.kernel, degree=args.degree, gamma=args.gamma, coef0=args.coef0)
    tcfg = TrainConfig.balanced(args.c, seed=args.seed)
    metadata = [f"target {args.target}"]
    if args.target == "line":
        metadata.append(cfg.hog.fingerprint())
    log.info("training %s SVM on %d samples of dim %d", args.target, len(y), X.shape[1])
    model = train(X, y, kernel, tcfg, metadata)
    dio.atomic_write(args.out, save_model(model))
    print(f"target={args.target}")
    print(f"samples={len(y)}")
    print(f"support_vectors={model.dual_coefs.size}")
    print(f"train_accuracy={classifier_accuracy(model, X, y):.4f}")
    return 0


def cmd_detect(args) -> int:
    cfg = read_config(_require(args.config))
    models = DetectorModels(read_model(_require(args.patch_model)), read_model(_require(args.line_model)))
    check_compatible(models, cfg)  # before any image work
    img = read_image(_require(args.image))
    iid = Path(args.image).stem
    result = detect(img, models, cfg, image_id=iid, trace=bool(args.debug_dir))
    dio.save_annotation(args.out, dio.Annotation(iid, result.boxes))
    if args.debug_dir:
        _write_debug(Path(args.debug_dir), img, result, cfg)
    print(f"image={iid}")
    print(f"boxes={len(result.boxes)}")
    return 0


def _write_debug(directory: Path, img, result, cfg) -> None:
    from .plotting import stage_overlay

    directory.mkdir(parents=True, exist_ok=True)
    for k, (stage, boxes) in enumerate(result.trace.items()):
        dio.save_annotation(directory / f"{k}_{stage}.txt", dio.Annotation(result.image_id, boxes))
    counts = "".join(f"{stage} {len(b)}\n" for stage, b in result.trace.items())
    dio.atomic_write(directory / "counts.txt", counts.encode())
    stage_overlay(img, result.trace, directory / "stages.png")


def cmd_eval(args) -> int:
    from .reporting import evaluate_dirs, metrics_lines, table, write_report

    det = _require(args.det, "dir")
    gt = _require(args.gt, "dir")
    ids = dio.read_manifest(_require(args.manifest)) if args.manifest else None
    try:
        report = evaluate_dirs(det, gt, ids, args.threshold, args.jobs)
    except FileNotFoundError as exc:
        raise DomainError(str(exc)) from None
    sys.stderr.write(table(report) + "\n")
    for line in metrics_lines(report, threshold=args.threshold):
        print(line)
    if args.report_dir:
        write_report(args.report_dir, report, threshold=args.threshold)
    return 0


# --- parser -----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="urdutext", description="Urdu scene-text detector toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="render a synthetic scene corpus")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--test-count", type=int, default=None,
                   help="scenes reserved for test.txt (default: a quarter)")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract-patches", help="cut training patches and line windows")
    s.add_argument("--images", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--neg-ratio", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jitter", type=int, default=0,
                   help="shifted copies added per positive patch")
    s.add_argument("--chars", help="glyph box directory; glyphs become the patch positives")
    s.add_argument("--manifest", help="restrict to the image ids listed in this file")
    s.add_argument("--config")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("train", help="train the patch or line SVM")
    s.add_argument("--patches", required=True)
    s.add_argument("--target", choices=("patch", "line"), required=True)
    s.add_argument("--kernel", choices=("poly", "rbf"), required=True)
    s.add_argument("--degree", type=int, default=3)
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--coef0", type=float, default=1.0)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("detect", help="detect text lines in one image")
    s.add_argument("--image", required=True)
    s.add_argument("--patch-model", required=True)
    s.add_argument("--line-model", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--debug-dir")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("eval", help="score detections against ground truth")
    s.add_argument("--det", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--manifest")
    s.add_argument("--report-dir")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"urdutext: configuration error: {exc}\n")
        return 2
    except (DomainError, FormatError, TrainingError, OSError) as exc:
        sys.stderr.write(f"urdutext: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

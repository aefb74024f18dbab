"""Directory-level evaluation and report rendering."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .dataset_io import Annotation, atomic_write, load_annotation
from .pipeline_eval import EvalReport, match_detections


def evaluate_dirs(det_dir, gt_dir, ids=None, threshold: float = 0.5, jobs: int = 1) -> EvalReport:
    """Match ``det_dir/<id>.txt`` against ``gt_dir/<id>.txt``.

    Without ``ids`` the detection files define the image set; a missing
    detection file counts as an empty detection list.
    """
    det_dir, gt_dir = Path(det_dir), Path(gt_dir)
    if ids is None:
        ids = sorted(p.stem for p in det_dir.glob("*.txt"))

    def one(iid):
        gt_path = gt_dir / f"{iid}.txt"
        if not gt_path.exists():
            raise FileNotFoundError(f"missing ground truth {gt_path}")
        gt = load_annotation(gt_path)
        det_path = det_dir / f"{iid}.txt"
        det = load_annotation(det_path) if det_path.exists() else Annotation(iid)
        return iid, match_detections(gt.boxes, det.boxes, threshold)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(one, ids))
    report = EvalReport()
    for iid, m in results:
        report.add(iid, m)
    return report


def metrics_lines(report: EvalReport, **extra) -> list[str]:
    vals = {
        "images": len(report.per_image),
        "tp": report.tp,
        "fp": report.fp,
        "fn": report.fn,
        "precision": f"{report.precision:.4f}",
        "recall": f"{report.recall:.4f}",
        "f_measure": f"{report.f_measure:.4f}",
    }
    vals.update(extra)
    return [f"{k}={v}" for k, v in vals.items()]


def table(report: EvalReport) -> str:
    rows = [("image", "tp", "fp", "fn")]
    rows += [(iid, str(m.tp), str(m.fp), str(m.fn)) for iid, m in report.per_image.items()]
    rows.append(("total", str(report.tp), str(report.fp), str(report.fn)))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    out = ["  ".join(cell.ljust(widths[0]) if c == 0 else cell.rjust(widths[c])
                     for c, cell in enumerate(r)) for r in rows]
    out.insert(1, "-" * len(out[0]))
    out.insert(len(out) - 1, "-" * len(out[0]))
    out.append(f"precision {report.precision:.4f}  recall {report.recall:.4f}  "
               f"F-measure {report.f_measure:.4f}")
    return "\n".join(out)


def write_report(directory, report: EvalReport, **extra) -> None:
    """Table, key=value metrics, per-image TSV and a summary figure."""
    from .plotting import eval_figure

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    atomic_write(directory / "report.txt", (table(report) + "\n").encode())
    atomic_write(directory / "metrics.txt", ("\n".join(metrics_lines(report, **extra)) + "\n").encode())
    tsv = ["image\ttp\tfp\tfn"] + [f"{i}\t{m.tp}\t{m.fp}\t{m.fn}" for i, m in report.per_image.items()]
    atomic_write(directory / "per_image.tsv", ("\n".join(tsv) + "\n").encode())
    eval_figure(report, directory / "eval.png")

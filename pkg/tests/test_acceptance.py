"""Acceptance criteria 1-8, one test each; every test prints a PASS/FAIL line."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, random_mask
from test_mser import flood_partition, random_plane, square_plane, tree_partition
from test_region_features import oracle_eccentricity, oracle_euler4, oracle_hull_area, tight
from test_svm import XOR_CFG, XOR_KERNEL, XOR_X, XOR_Y, assert_kkt, blobs
from test_linking import box_at, brute_force_groups, random_boxes
from test_pipeline_eval import TABLE

from urdutext.hog import hog_descriptor
from urdutext.imaging import BoundingBox
from urdutext.linking import link_lines, linkable
from urdutext.mser import BRIGHT, DARK, ComponentTree, stable_regions
from urdutext.pipeline_eval import match_detections, overlap_ratio
from urdutext.region_features import compute_features
from urdutext.svm import KernelSpec, TrainConfig, decision_values, load_model, predict, save_model, train


def verdict(n, ok, seconds, limit, detail):
    ok = bool(ok) and seconds <= limit
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({seconds:.2f}s, limit {limit:g}s) {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def test_criterion_1_reference_f_consistency():
    t0 = time.perf_counter()
    gaps = [abs(2 * p * r / (p + r) - f) for p, r, f in TABLE]
    verdict(1, max(gaps) <= 5e-4 and len(gaps) == 4, time.perf_counter() - t0, 1,
            f"max |2pr/(p+r) - F| = {max(gaps):.2e} over {len(gaps)} rows")


def test_criterion_2_component_tree_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    mismatches = 0
    for _ in range(50):
        plane = random_plane(rng)
        for polarity in (DARK, BRIGHT):
            tree = ComponentTree(plane, polarity)
            mismatches += sum(tree_partition(tree, t) != flood_partition(plane, t, polarity)
                              for t in range(256))
    regions = stable_regions(ComponentTree(square_plane()))
    square_ok = len(regions) == 1 and regions[0].area == 400
    verdict(2, mismatches == 0 and square_ok, time.perf_counter() - t0, 10,
            f"{mismatches} cut mismatches over 50 images x 2 polarities x 256 levels; "
            f"planted square -> {[r.area for r in regions]}")


def test_criterion_3_feature_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    exact_bad = approx_err = 0
    for _ in range(200):
        m = random_mask(rng)
        f, t = compute_features(m), tight(m)
        exact_bad += (f.area != m.sum() or f.extent != f.area / t.size
                      or f.aspect_ratio != t.shape[1] / t.shape[0] or f.euler_number != oracle_euler4(m))
        approx_err = max(approx_err, abs(f.eccentricity - oracle_eccentricity(m)),
                         abs(f.solidity - f.area / oracle_hull_area(m)))
    verdict(3, exact_bad == 0 and approx_err <= 1e-9, time.perf_counter() - t0, 10,
            f"{exact_bad} exact mismatches, max ecc/solidity error {approx_err:.1e} on 200 masks")


def feasible(model, cfg):
    """Box and equality constraints recovered from a trained model's signed coefficients."""
    a = model.dual_coefs * np.sign(model.dual_coefs)
    C = np.where(model.dual_coefs > 0, cfg.c_positive, cfg.c_negative)
    return bool(np.all(a >= 0) and np.all(a <= C) and abs(model.dual_coefs.sum()) <= 1e-6)


def test_criterion_4_svm(degree3):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    assert_kkt(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)
    xor = train(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)
    xor_acc = np.mean(predict(xor, XOR_X) == XOR_Y)
    X, y = blobs(rng, 200)
    Xt, yt = blobs(rng, 400)
    cfg = TrainConfig()
    assert_kkt(X, y, KernelSpec("rbf", gamma=0.5), cfg)
    blob = train(X, y, KernelSpec("rbf", gamma=0.5), cfg)
    blob_acc = np.mean(predict(blob, Xt) == yt)
    for k in range(5):
        Xr = rng.normal(size=(60, 4))
        yr = np.where(Xr[:, 0] * Xr[:, 1] + 0.3 * rng.normal(size=60) > 0, 1.0, -1.0)
        assert_kkt(Xr, yr, KernelSpec("poly", 3), TrainConfig(seed=k))
    feas = all(feasible(m, TrainConfig.balanced(1.0))
               for m in (degree3.models.patch, degree3.models.line)) and feasible(xor, XOR_CFG)
    probes = rng.normal(size=(200, 2))
    exact = all(np.array_equal(decision_values(load_model(save_model(m)), probes), decision_values(m, probes))
                for m in (xor, blob))
    verdict(4, xor_acc == 1.0 and blob_acc >= 0.99 and feas and exact, time.perf_counter() - t0, 30,
            f"XOR accuracy {xor_acc:.2f}, blob held-out {blob_acc:.4f}, KKT ok, "
            f"round trip exact={exact}")


def test_criterion_5_linking():
    t0 = time.perf_counter()
    a = box_at(50, 50, 20)
    boundary = (linkable(a, box_at(110, 70, 30)), linkable(a, box_at(110, 71, 30)),
                linkable(a, box_at(111, 70, 30)))
    bad = 0
    for seed in range(500):
        rng = np.random.default_rng(seed)
        boxes = random_boxes(rng, int(rng.integers(0, 16)))
        bad += {frozenset(ln.members) for ln in link_lines(boxes)} != brute_force_groups(boxes)
    verdict(5, boundary == (True, False, False) and bad == 0, time.perf_counter() - t0, 5,
            f"boundary cases {boundary}, {bad}/500 component mismatches")


def test_criterion_6_overlap_evaluator():
    t0 = time.perf_counter()
    g = BoundingBox(0, 0, 10, 10)
    examples = (overlap_ratio(g, g) == 1.0, overlap_ratio(g, BoundingBox(20, 20, 5, 5)) == 0.0,
                overlap_ratio(g, BoundingBox(5, 0, 10, 10)) == 1 / 3)
    bad = 0
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        gts = random_boxes(rng, int(rng.integers(0, 8)))
        dts = [b.translate(int(rng.integers(-4, 5)), 0) for b in gts if rng.random() < 0.6]
        dts += random_boxes(rng, int(rng.integers(0, 5)))
        m = match_detections(gts, dts)
        bad += m.tp + m.fp != len(dts) or m.tp + m.fn != len(gts)
    verdict(6, all(examples) and bad == 0, time.perf_counter() - t0, 5,
            f"overlap examples {examples}, {bad}/1000 count violations")


@pytest.mark.slow
def test_criterion_7_end_to_end(corpus, degree3):
    from benchmark import run
    t0 = time.perf_counter()
    degree5 = run(corpus, degree=5)
    f3, f5 = degree3.report.f_measure, degree5.report.f_measure
    total = corpus.seconds + degree3.seconds + (time.perf_counter() - t0)
    verdict(7, f3 >= 0.80 and f5 >= f3 - 0.02, total, 300,
            f"{len(corpus.train)} train / {len(corpus.test)} test scenes, "
            f"{len(corpus.patches.positives)}:{len(corpus.patches.negatives)} patches; "
            f"degree 3 P={degree3.report.precision:.4f} R={degree3.report.recall:.4f} F={f3:.4f}; "
            f"degree 5 F={f5:.4f}")


def test_criterion_8_hog():
    rng = np.random.default_rng(0)
    w = rng.integers(60, 196, (32, 96)).astype(float)
    t0 = time.perf_counter()
    d = hog_descriptor(w)
    zero = not hog_descriptor(np.full((32, 96), 128.0)).any()
    shift = all(np.array_equal(hog_descriptor(w + s), d) for s in (-60, -1, 1, 59))
    verdict(8, d.size == 1188 and zero and shift, time.perf_counter() - t0, 1,
            f"length {d.size}, constant -> zero {zero}, shift invariant {shift}")

import numpy as np
import pytest

from urdutext.errors import FormatError, TrainingError
from urdutext.svm import (KernelSpec, SvmModel, TrainConfig, decision_value, decision_values,
                          kernel_matrix, load_model, predict, save_model, solve_dual, train)

XOR_X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], float)
XOR_Y = np.array([-1, -1, 1, 1])
XOR_KERNEL = KernelSpec("poly", degree=2, gamma=1.0, coef0=1.0)
XOR_CFG = TrainConfig(c_negative=10.0, c_positive=10.0)


def assert_kkt(X, y, kernel, cfg):
    """Dual feasibility and complementary slackness of a fresh SMO solution."""
    alpha, b, kernel = solve_dual(X, y, kernel, cfg)
    C = np.where(y > 0, cfg.c_positive, cfg.c_negative)
    assert np.all(alpha >= 0) and np.all(alpha <= C)
    assert abs(np.dot(alpha, y)) <= 1e-6
    yf = y * (kernel_matrix(X, X, kernel) @ (alpha * y) + b)
    tol = cfg.kkt_tolerance
    assert np.all(yf[alpha == 0] >= 1 - tol)
    free = (alpha > 0) & (alpha < C)
    assert np.all(np.abs(yf[free] - 1) <= tol)
    assert np.all(yf[alpha == C] <= 1 + tol)
    return alpha, b


def blobs(rng, n, sep=6.0):
    a = rng.normal(size=(n // 2, 2))
    b = rng.normal(size=(n - n // 2, 2)) + [sep, 0]
    return np.vstack([a, b]), np.r_[-np.ones(n // 2), np.ones(n - n // 2)]


def test_kernel_formulas():
    x, z = np.array([1.0, 2.0]), np.array([3.0, -1.0])
    assert kernel_matrix(x, z, KernelSpec("poly", 3, 0.5, 2.0))[0, 0] == (0.5 * 1 + 2) ** 3
    assert kernel_matrix(x, z, KernelSpec("rbf", gamma=0.1))[0, 0] == pytest.approx(np.exp(-0.1 * 13))


def test_gamma_defaults_to_inverse_dim():
    assert KernelSpec().resolved(8).gamma == 1 / 8
    assert KernelSpec().coef0 == 1.0


def test_separable_pair():
    X, y = np.array([[0, 0], [1, 1]], float), np.array([-1, 1])
    m = train(X, y, KernelSpec("poly", 1, 1.0, 0.0))
    assert predict(m, X).tolist() == [-1, 1]


def test_xor_degree_two():
    m = train(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)
    assert predict(m, XOR_X).tolist() == XOR_Y.tolist()
    assert decision_value(m, [1, 1]) < 0
    assert_kkt(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)


def test_unbound_support_vectors_sit_on_the_margin():
    cfg = XOR_CFG
    alpha, _ = assert_kkt(XOR_X, XOR_Y, XOR_KERNEL, cfg)
    m = train(XOR_X, XOR_Y, XOR_KERNEL, cfg)
    free = (alpha > 0) & (alpha < 10)
    for x, label in zip(XOR_X[free], XOR_Y[free]):
        assert decision_value(m, x) == pytest.approx(label, abs=cfg.kkt_tolerance)


def test_gaussian_blobs_held_out(rng):
    X, y = blobs(rng, 200)
    Xt, yt = blobs(rng, 400)
    cfg = TrainConfig()
    m = train(X, y, KernelSpec("rbf", gamma=0.5), cfg)
    assert np.mean(predict(m, Xt) == yt) >= 0.99
    assert_kkt(X, y, KernelSpec("rbf", gamma=0.5), cfg)


def brute_force_margin(X, y, steps=20000):
    theta = np.linspace(0, 2 * np.pi, steps, endpoint=False)
    u = np.stack([np.cos(theta), np.sin(theta)], 1)
    proj = X @ u.T
    gap = proj[y > 0].min(0) - proj[y < 0].max(0)
    return gap.max() / 2


def test_linear_margin_matches_angular_search(rng):
    kernel = KernelSpec("poly", 1, 1.0, 0.0)
    cfg = TrainConfig(c_negative=1e4, c_positive=1e4, kkt_tolerance=1e-4)
    done = 0
    while done < 25:
        n = int(rng.integers(4, 21))
        X = rng.uniform(-5, 5, (n, 2))
        w, c = rng.normal(size=2), rng.normal()
        s = X @ w + c
        keep = np.abs(s) > 0.3 * np.linalg.norm(w)
        X, y = X[keep], np.sign(s[keep])
        if len(set(y)) < 2:
            continue
        m = train(X, y, kernel, cfg)
        assert np.all(predict(m, X) == y)
        wvec = m.dual_coefs @ m.support_vectors
        assert 1 / np.linalg.norm(wvec) == pytest.approx(brute_force_margin(X, y), rel=0.05)
        assert_kkt(X, y, kernel, cfg)
        done += 1


def test_single_support_vector_formula():
    s = np.array([1.5, -2.0, 0.25])
    m = SvmModel(KernelSpec("poly", 1, 1.0, 0.0), s[None], [1.0], 0.0)
    assert decision_value(m, s) == np.dot(s, s)


def test_decision_scales_linearly(rng):
    m = train(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)
    probes = rng.uniform(-1, 2, (50, 2))
    assert np.allclose(decision_values(m.scaled(2.0), probes), 2 * decision_values(m, probes), rtol=1e-12)
    assert np.array_equal(predict(m.scaled(2.0), probes), predict(m, probes))


def test_zero_decision_maps_to_non_text():
    m = SvmModel(KernelSpec("poly", 1, 1.0, 0.0), [[0.0, 0.0]], [1.0], 0.0)
    assert predict(m, [[3.0, 4.0]]).tolist() == [-1]


def test_errors():
    with pytest.raises(TrainingError):
        train(XOR_X, np.ones(4))
    with pytest.raises(ValueError):
        train(XOR_X, XOR_Y[:3])
    m = train(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)
    with pytest.raises(ValueError):
        decision_value(m, [1.0, 2.0, 3.0])


def test_training_is_deterministic(rng):
    X, y = blobs(rng, 60, sep=2.0)
    a = train(X, y, KernelSpec("rbf", gamma=0.5), TrainConfig(seed=3))
    b = train(X, y, KernelSpec("rbf", gamma=0.5), TrainConfig(seed=3))
    assert save_model(a) == save_model(b)


def test_round_trip_is_exact(rng):
    m = train(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)
    back = load_model(save_model(m))
    probes = rng.normal(size=(100, 2))
    assert np.array_equal(decision_values(back, probes), decision_values(m, probes))
    assert save_model(back) == save_model(m)


def test_file_layout():
    m = SvmModel(KernelSpec("rbf", gamma=0.25), [[1.0, 2.0]], [0.5], -0.125, ("target patch",))
    assert save_model(m).decode().split("\n") == [
        "UTD-SVM 1", "# target patch", "rbf 0.25", "2", "1", "-0.125", "0.5 1 2", ""]
    assert load_model(save_model(m)).metadata == ("target patch",)


def test_version_and_truncation_errors():
    good = save_model(train(XOR_X, XOR_Y, XOR_KERNEL, XOR_CFG)).decode()
    with pytest.raises(FormatError, match="version"):
        load_model(good.replace("UTD-SVM 1", "UTD-SVM 2").encode())
    lines = good.strip().split("\n")
    lines[-1] = " ".join(lines[-1].split()[:-1])
    with pytest.raises(FormatError, match="expected 3 values"):
        load_model("\n".join(lines).encode())
    with pytest.raises(FormatError, match="truncated"):
        load_model("\n".join(good.strip().split("\n")[:-1]).encode())

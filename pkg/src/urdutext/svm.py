"""Two-class kernel SVM trained by sequential minimal optimization.

Labels are +1 (text) and -1 (non-text). A decision value of exactly zero is
treated as non-text.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError, TrainingError

log = logging.getLogger(__name__)

FORMAT_HEADER = "UTD-SVM"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "poly"
    degree: int = 3
    gamma: float | None = None  # None -> 1/dim, resolved at training time
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("poly", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "poly" and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def resolved(self, dim: int) -> "KernelSpec":
        if self.gamma is not None:
            return self
        return replace(self, gamma=1.0 / dim)

    def line(self) -> str:
        if self.kind == "poly":
            return f"poly {self.degree} {self.gamma:.17g} {self.coef0:.17g}"
        return f"rbf {self.gamma:.17g}"


def kernel_matrix(a, b, kernel: KernelSpec) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if kernel.gamma is None:
        kernel = kernel.resolved(a.shape[1])
    if kernel.kind == "poly":
        return (kernel.gamma * (a @ b.T) + kernel.coef0) ** kernel.degree
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-kernel.gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class TrainConfig:
    c_negative: float = 1.0
    c_positive: float = 2.0
    kkt_tolerance: float = 1e-3
    max_passes: int = 10
    seed: int = 0
    max_updates: int = 500_000

    def __post_init__(self):
        if self.c_negative <= 0 or self.c_positive <= 0:
            raise ValueError("box constraints must be positive")
        if self.kkt_tolerance <= 0:
            raise ValueError("kkt_tolerance must be positive")

    @classmethod
    def balanced(cls, c: float, **kw) -> "TrainConfig":
        """Positive class gets twice the box to offset the 1:2 text:non-text ratio."""
        return cls(c_negative=c, c_positive=2.0 * c, **kw)


@dataclass(frozen=True)
class SvmModel:
    kernel: KernelSpec
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    metadata: tuple[str, ...] = field(default=())

    def __post_init__(self):
        sv = np.atleast_2d(np.asarray(self.support_vectors, dtype=np.float64))
        coefs = np.asarray(self.dual_coefs, dtype=np.float64).ravel()
        if sv.shape[0] != coefs.size or coefs.size < 1:
            raise ValueError("need one dual coefficient per support vector (at least one)")
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", coefs)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "metadata", tuple(self.metadata))
        if self.kernel.gamma is None:
            object.__setattr__(self, "kernel", self.kernel.resolved(sv.shape[1]))

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def scaled(self, k: float) -> "SvmModel":
        return replace(self, dual_coefs=self.dual_coefs * k, bias=self.bias * k)


def decision_values(model: SvmModel, xs) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if xs.shape[1] != model.dim:
        raise ValueError(f"feature length {xs.shape[1]} does not match model dim {model.dim}")
    return kernel_matrix(xs, model.support_vectors, model.kernel) @ model.dual_coefs + model.bias


def decision_value(model: SvmModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("decision_value expects a single feature vector")
    return float(decision_values(model, x[None, :])[0])


def predict(model: SvmModel, xs) -> np.ndarray:
    return np.where(decision_values(model, xs) > 0, 1, -1)


# --- SMO ----------------------------------------------------------------------------

def _snap(a, c):
    """Pin values within rounding distance of a box edge onto the edge."""
    eps = 1e-12 * c
    if a < eps:
        return 0.0
    if a > c - eps:
        return c
    return a


class _Smo:
    def __init__(self, K, y, cbox, tol, rng):
        self.K = K
        self.y = y
        self.C = cbox
        self.tol = tol
        self.rng = rng
        n = y.size
        self.alpha = np.zeros(n)
        self.b = 0.0
        self.E = -y.astype(np.float64)  # f = 0 initially

    def violates(self, i) -> bool:
        r = self.E[i] * self.y[i]
        return (r < -self.tol and self.alpha[i] < self.C[i]) or (r > self.tol and self.alpha[i] > 0)

    def take_step(self, i, j) -> bool:
        if i == j:
            return False
        K, y, C, alpha = self.K, self.y, self.C, self.alpha
        ai, aj = alpha[i], alpha[j]
        yi, yj = y[i], y[j]
        Ei, Ej = self.E[i], self.E[j]
        s = yi * yj
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(C[j], C[i] + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - C[i]), min(C[j], ai + aj)
        if hi - lo < 1e-12:
            return False
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 1e-12:
            aj_new = min(hi, max(lo, aj + yj * (Ei - Ej) / eta))
        else:
            # objective at both ends of the feasible segment
            f1 = yi * (Ei + self.b) - ai * K[i, i] - s * aj * K[i, j]
            f2 = yj * (Ej + self.b) - s * ai * K[i, j] - aj * K[j, j]
            obj = []
            for cand in (lo, hi):
                ai_c = ai + s * (aj - cand)
                obj.append(ai_c * f1 + cand * f2 + 0.5 * ai_c ** 2 * K[i, i]
                           + 0.5 * cand ** 2 * K[j, j] + s * cand * ai_c * K[i, j])
            if obj[0] < obj[1] - 1e-12:
                aj_new = lo
            elif obj[1] < obj[0] - 1e-12:
                aj_new = hi
            else:
                return False
        if abs(aj_new - aj) < 1e-10 * (aj_new + aj + 1e-10):
            return False
        aj_new = _snap(aj_new, C[j])
        ai_new = _snap(min(C[i], max(0.0, ai + s * (aj - aj_new))), C[i])
        dai, daj = ai_new - ai, aj_new - aj
        b1 = self.b - Ei - yi * dai * K[i, i] - yj * daj * K[i, j]
        b2 = self.b - Ej - yi * dai * K[i, j] - yj * daj * K[j, j]
        if 0 < ai_new < C[i]:
            b_new = b1
        elif 0 < aj_new < C[j]:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.E += yi * dai * K[i] + yj * daj * K[j] + (b_new - self.b)
        alpha[i], alpha[j] = ai_new, aj_new
        self.b = b_new
        return True

    def examine(self, i) -> bool:
        if not self.violates(i):
            return False
        n = self.y.size
        free = (self.alpha > 0) & (self.alpha < self.C)
        if free.sum() > 1:
            gap = np.where(free, np.abs(self.E[i] - self.E), -1.0)
            if self.take_step(i, int(np.argmax(gap))):
                return True
        start = int(self.rng.integers(n))
        for j in np.roll(np.flatnonzero(free), -start % max(1, int(free.sum()))):
            if self.take_step(i, int(j)):
                return True
        for j in np.roll(np.arange(n), -start):
            if self.take_step(i, int(j)):
                return True
        return False


def solve_dual(X, y, kernel: KernelSpec = KernelSpec(), cfg: TrainConfig = TrainConfig()):
    """Run SMO and return ``(alpha, bias, resolved_kernel)`` for every sample."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y).ravel()
    if X.shape[0] != y.size:
        raise ValueError("one label per sample required")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be +1 or -1")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise TrainingError("training needs at least one sample of each class")
    y = y.astype(np.float64)
    kernel = kernel.resolved(X.shape[1])
    K = kernel_matrix(X, X, kernel)
    cbox = np.where(y > 0, cfg.c_positive, cfg.c_negative)
    smo = _Smo(K, y, cbox, cfg.kkt_tolerance, np.random.default_rng(cfg.seed))

    n = y.size
    updates = 0
    idle_passes = 0
    examine_all = True
    while idle_passes < cfg.max_passes and updates < cfg.max_updates:
        changed = 0
        if examine_all:
            candidates = range(n)
        else:
            candidates = np.flatnonzero((smo.alpha > 0) & (smo.alpha < cbox))
        for i in candidates:
            if smo.examine(int(i)):
                changed += 1
        updates += changed
        if examine_all and changed:
            idle_passes = 0
        if examine_all:
            if changed == 0:
                # a full sweep with no violator left to fix
                if not any(smo.violates(i) for i in range(n)):
                    break
                idle_passes += 1
            examine_all = False
        elif changed == 0:
            examine_all = True
    else:
        log.warning("SMO stopped after %d updates without full convergence", updates)

    return smo.alpha, smo.b, kernel


def train(X, y, kernel: KernelSpec = KernelSpec(), cfg: TrainConfig = TrainConfig(),
          metadata=()) -> SvmModel:
    """Fit a soft-margin SVM; ``y`` holds +1/-1 labels."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    alpha, bias, kernel = solve_dual(X, y, kernel, cfg)
    y = np.asarray(y, dtype=np.float64).ravel()
    sv = alpha > 0
    return SvmModel(kernel, X[sv], alpha[sv] * y[sv], bias, metadata)


# --- persistence -------------------------------------------------------------------------

def save_model(model: SvmModel) -> bytes:
    lines = [f"{FORMAT_HEADER} {FORMAT_VERSION}"]
    lines += [f"# {m}" for m in model.metadata]
    lines.append(model.kernel.line())
    lines.append(str(model.dim))
    lines.append(str(model.dual_coefs.size))
    lines.append(f"{model.bias:.17g}")
    for coef, sv in zip(model.dual_coefs, model.support_vectors):
        lines.append(" ".join(f"{v:.17g}" for v in (coef, *sv)))
    return ("\n".join(lines) + "\n").encode("ascii")


def _parse_kernel(tokens, lineno) -> KernelSpec:
    try:
        if tokens[0] == "poly" and len(tokens) == 4:
            return KernelSpec("poly", int(tokens[1]), float(tokens[2]), float(tokens[3]))
        if tokens[0] == "rbf" and len(tokens) == 2:
            return KernelSpec("rbf", gamma=float(tokens[1]))
    except (ValueError, IndexError) as exc:
        raise FormatError(f"line {lineno}: bad kernel line: {exc}") from None
    raise FormatError(f"line {lineno}: bad kernel line {' '.join(tokens)!r}")


def load_model(data: bytes) -> SvmModel:
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    raw = text.split("\n")
    if not raw or not raw[0].startswith(FORMAT_HEADER + " "):
        raise FormatError("missing UTD-SVM header")
    version = raw[0].split()[1]
    if version != str(FORMAT_VERSION):
        raise FormatError(f"unsupported model version {version} (expected {FORMAT_VERSION})")
    metadata = []
    body = []
    for lineno, line in enumerate(raw[1:], start=2):
        if line.startswith("#"):
            metadata.append(line[1:].strip())
        elif line.strip():
            body.append((lineno, line.split()))
    if len(body) < 4:
        raise FormatError("truncated model: header fields missing")
    kernel = _parse_kernel(body[0][1], body[0][0])
    try:
        dim = int(body[1][1][0])
        count = int(body[2][1][0])
        bias = float(body[3][1][0])
    except (ValueError, IndexError):
        raise FormatError("malformed dim/count/bias lines") from None
    rows = body[4:]
    if len(rows) != count:
        raise FormatError(f"truncated model: expected {count} support vectors, found {len(rows)}")
    coefs = np.empty(count)
    svs = np.empty((count, dim))
    for k, (lineno, tokens) in enumerate(rows):
        if len(tokens) != dim + 1:
            raise FormatError(f"line {lineno}: expected {dim + 1} values, found {len(tokens)}")
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric value") from None
        coefs[k] = values[0]
        svs[k] = values[1:]
    return SvmModel(kernel, svs, coefs, bias, tuple(metadata))


def write_model(path, model: SvmModel) -> None:
    with open(path, "wb") as fh:
        fh.write(save_model(model))


def read_model(path) -> SvmModel:
    with open(path, "rb") as fh:
        return load_model(fh.read())

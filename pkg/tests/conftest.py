import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_mask(rng, max_side=24, fill=None):
    """Random 4-connected mask: largest 4-component of a random blob field."""
    from scipy import ndimage

    h, w = rng.integers(1, max_side + 1, 2)
    p = fill if fill is not None else rng.uniform(0.35, 0.8)
    field = rng.random((h, w)) < p
    if not field.any():
        field[rng.integers(h), rng.integers(w)] = True
    lab, n = ndimage.label(field)
    sizes = np.bincount(lab.ravel())[1:]
    return lab == (np.argmax(sizes) + 1)


@pytest.fixture(scope="session")
def corpus():
    from benchmark import build_corpus
    return build_corpus(seed=0)


@pytest.fixture(scope="session")
def degree3(corpus):
    from benchmark import run
    return run(corpus, degree=3)


# one "criterion N: PASS|FAIL ..." line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)

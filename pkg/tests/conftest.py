import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


def textured_square(size=200, side=60, x=70, y=70, seed=0, fg=0.8, bg=0.2):
    """High-contrast square with a blocky texture on a flat background."""
    rng = np.random.default_rng(seed)
    img = np.full((size, size), bg)
    coarse = rng.uniform(-0.1, 0.1, size=(side // 4 + 1, side // 4 + 1))
    img[y : y + side, x : x + side] = fg + np.kron(coarse, np.ones((4, 4)))[:side, :side]
    return img


def planted_two_blocks(rng, max_n=12, spread=1.0):
    """Two point clouds whose centres sit 4-8 spreads apart.  Returns ``(points, labels)``."""
    n = int(rng.integers(4, max_n + 1))
    na = int(rng.integers(2, n - 1))
    labels = np.r_[np.zeros(na, dtype=bool), np.ones(n - na, dtype=bool)]
    rng.shuffle(labels)
    centres = np.zeros((2, 3))
    centres[1, 0] = rng.uniform(4.0, 8.0) * spread
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return centres[labels.astype(int)] + dirs * rng.uniform(0, spread, size=(n, 1)), labels


def min_ncut(weights):
    """Exhaustive minimum normalised cut over all non-trivial bipartitions."""
    from itertools import product

    n = len(weights)
    deg = weights.sum(axis=1)
    best = np.inf
    for bits in product((False, True), repeat=n - 1):
        a = np.array((False,) + bits)
        if a.all():
            continue
        cut = weights[np.ix_(a, ~a)].sum()
        va, vb = deg[a].sum(), deg[~a].sum()
        if va > 0 and vb > 0:
            best = min(best, cut / va + cut / vb)
    return best


def planted_proposals(rng, n_obj=100, n_bg=900, dim=64):
    """Tight high-scoring object cluster among diffuse low-scoring background.

    Returns ``(features, scores, is_object)`` in shuffled order.
    """
    proto = rng.random(dim)
    obj = proto + rng.normal(0, 0.02, size=(n_obj, dim))
    bg = rng.random((n_bg, dim))
    scores = np.r_[rng.uniform(0.6, 1.0, n_obj), rng.uniform(0.0, 0.5, n_bg)]
    perm = rng.permutation(n_obj + n_bg)
    return np.vstack([obj, bg])[perm], scores[perm], perm < n_obj


def proposal_set(scores, image_size=(200, 200)):
    from speclocal.proposals import ProposalSet

    n = len(scores)
    rng = np.random.default_rng(n)
    boxes = np.column_stack([
        rng.integers(0, 100, n), rng.integers(0, 100, n), rng.integers(10, 100, n), rng.integers(10, 100, n)
    ])
    s = np.asarray(scores, dtype=np.float64)
    return ProposalSet("planted", image_size, boxes, s, "test", s_sal=np.ones(n), s=s)


ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    """Remember one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])

"""Iterative spectral bipartitioning of a proposal-similarity graph."""
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy import linalg

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8


class DegenerateGraphError(ValueError):
    """All features coincide, so the similarity width is zero."""


class NumericError(ArithmeticError):
    """The eigensolver did not meet the residual bound."""


@dataclass(frozen=True, eq=False)
class SimilarityGraph:
    weights: np.ndarray
    sigma: float

    @property
    def n(self):
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class LaplacianSpectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns
    residuals: np.ndarray


@dataclass(frozen=True)
class Cluster:
    members: np.ndarray
    score: float = float("nan")


@dataclass(frozen=True)
class TraceStep:
    size_before: int
    size_kept: int
    score_kept: float
    score_discarded: float
    sigma: float

    def as_dict(self):
        return {
            "size_before": self.size_before,
            "size_kept": self.size_kept,
            "score_kept": self.score_kept,
            "score_discarded": self.score_discarded,
            "sigma": self.sigma,
        }


@dataclass(frozen=True, eq=False)
class FilterResult:
    indices: np.ndarray  # survivors, as indices into the input set
    trace: list = field(default_factory=list)
    stop_reason: str = "size"
    survivors: object = None  # ProposalSet when one was given


def pairwise_sq_distances(features):
    """Squared Euclidean distances; exactly zero between identical rows."""
    f = np.asarray(features, dtype=np.float64)
    sq = np.einsum("ij,ij->i", f, f)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (f @ f.T)
    np.maximum(d2, 0.0, out=d2)
    d2 = 0.5 * (d2 + d2.T)
    _, inverse = np.unique(f, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    d2[inverse[:, None] == inverse[None, :]] = 0.0
    return d2


def build_graph(features, sigma_scale=0.05):
    """Gaussian similarity graph with width ``sigma_scale`` times the largest pairwise distance."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or len(f) < 2:
        raise ValueError("need at least two equal-length feature vectors")
    if sigma_scale <= 0:
        raise ValueError("sigma_scale must be positive")
    d2 = pairwise_sq_distances(f)
    dmax = float(np.sqrt(d2.max()))
    if dmax == 0.0:
        raise DegenerateGraphError("all features are identical")
    sigma = sigma_scale * dmax
    w = np.exp(-d2 / (2.0 * sigma * sigma))
    np.fill_diagonal(w, 0.0)
    return SimilarityGraph(w, sigma)


def normalized_laplacian(graph):
    """``I - D^-1/2 W D^-1/2`` with ``D`` the row sums of ``W``."""
    w = graph.weights if isinstance(graph, SimilarityGraph) else np.asarray(graph, dtype=np.float64)
    deg = w.sum(axis=1)
    if np.any(deg <= 0):
        raise NumericError(f"node {int(np.flatnonzero(deg <= 0)[0])} has zero degree")
    dinv = 1.0 / np.sqrt(deg)
    return np.eye(len(w)) - w * np.outer(dinv, dinv)


def _residuals(L, vals, vecs):
    r = L @ vecs - vecs * vals[None, :]
    return np.linalg.norm(r, axis=0) / np.linalg.norm(vecs, axis=0)


def laplacian_spectrum(L):
    """Full symmetric eigendecomposition with per-pair residuals."""
    L = np.asarray(L, dtype=np.float64)
    vals, vecs = linalg.eigh(L)
    res = _residuals(L, vals, vecs)
    if np.any(res > RESIDUAL_TOL):
        raise NumericError(f"eigen residual {res.max():.3e} exceeds {RESIDUAL_TOL:g}")
    return LaplacianSpectrum(vals, vecs, res)


def fiedler_vector(L, degrees=None, target=None):
    """Unit eigenvector of the second-smallest eigenvalue, largest-magnitude entry positive.

    With ``degrees`` given, the trivial eigenvector ``D^1/2 1`` is shifted out
    of the way before the solve, so a near-disconnected graph yields a vector
    orthogonal to it rather than an arbitrary mix of near-zero eigenvectors.
    Without it the second column of a plain solve is used.

    If the second eigenvalue is numerically zero, it is numerically multiple
    with the trivial one and any vector of their joint eigenspace is an
    equally valid answer.  Given ``target`` (with ``degrees``), the vector is
    then chosen from that eigenspace as the projection of
    ``D^1/2 (target - c)``, with ``c`` the median of the per-node projected
    target.  Its sign split separates the near-disconnected pieces by their
    target level into two halves.  Otherwise the solver's vector is kept.
    """
    L = np.asarray(L, dtype=np.float64)
    n = len(L)
    if n < 2:
        raise ValueError("need at least two nodes")
    v = None
    if degrees is None:
        v = linalg.eigh(L, subset_by_index=[1, 1])[1][:, 0]
    else:
        d = np.asarray(degrees, dtype=np.float64)
        z = np.sqrt(d)
        z = z / np.linalg.norm(z)
        vals, vecs = linalg.eigh(L + 3.0 * np.outer(z, z), subset_by_index=[0, 0])
        if target is not None and n > 2 and vals[0] <= RESIDUAL_TOL:
            v = _null_space_choice(L, float(vals[0]), d, target)
        if v is None:
            v = vecs[:, 0] - z * (z @ vecs[:, 0])
    v = v / np.linalg.norm(v)
    lam = float(v @ L @ v)
    res = float(np.linalg.norm(L @ v - lam * v))
    if not res <= RESIDUAL_TOL:
        raise NumericError(
            f"Fiedler residual {res:.3e} exceeds {RESIDUAL_TOL:g} (n={n}, lambda={lam:.3e})"
        )
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def _null_space_choice(L, lam2, d, target):
    _, basis = linalg.eigh(L, subset_by_value=[-np.inf, lam2 + RESIDUAL_TOL])
    root = np.sqrt(d)
    t = np.asarray(target, dtype=np.float64)

    def project(x):
        return basis @ (basis.T @ x)

    level = project(root * t) / root
    u = project(root * (t - np.median(level)))
    norm = np.linalg.norm(u)
    if not norm > 1e-12 * np.linalg.norm(root * t):
        return None
    return u / norm


def bipartition(v):
    """Sign split (zeros to B); median split, then rank split, when one side is empty."""
    v = np.asarray(v, dtype=np.float64)
    n = len(v)
    a = v > 0
    if a.all() or not a.any():
        a = v > np.median(v)
        if a.all() or not a.any():
            a = np.zeros(n, dtype=bool)
            a[np.argsort(-v, kind="stable")[: n // 2]] = True
    return Cluster(np.flatnonzero(a)), Cluster(np.flatnonzero(~a))


def ncut_value(weights, in_a):
    """Normalized-cut objective of the split ``in_a`` / ``~in_a``."""
    w = np.asarray(weights, dtype=np.float64)
    in_a = np.asarray(in_a, dtype=bool)
    cut = w[np.ix_(in_a, ~in_a)].sum()
    deg = w.sum(axis=1)
    return cut / deg[in_a].sum() + cut / deg[~in_a].sum()


def _choose(a, b, s):
    sa, sb = float(s[a].mean()), float(s[b].mean())
    if sa != sb:
        return (a, sa, sb) if sa > sb else (b, sb, sa)
    top = s.max()
    in_a, in_b = bool(np.any(s[a] == top)), bool(np.any(s[b] == top))
    if in_b and not in_a:
        return b, sb, sa
    return a, sa, sb


def filter_indices(scores, features, T=100, max_iters=50, sigma_scale=0.05):
    """Run the bipartition loop on raw arrays.  Returns ``(indices, trace, stop_reason)``."""
    s_all = np.asarray(scores, dtype=np.float64)
    f_all = np.asarray(features, dtype=np.float64)
    if len(s_all) != len(f_all):
        raise ValueError("scores and features are not aligned")
    idx = np.arange(len(s_all))
    trace = []
    reason = "size"
    while len(idx) > T:
        if len(trace) >= max_iters:
            reason = "max_iters"
            break
        try:
            graph = build_graph(f_all[idx], sigma_scale)
        except DegenerateGraphError:
            reason = "degenerate"
            break
        L = normalized_laplacian(graph)
        s = s_all[idx]
        v = fiedler_vector(L, graph.weights.sum(axis=1), s)
        a, b = bipartition(v)
        keep, kept_score, other_score = _choose(a.members, b.members, s)
        step = TraceStep(len(idx), len(keep), kept_score, other_score, graph.sigma)
        log.debug("filter step %s", step)
        trace.append(step)
        idx = idx[keep]
    return idx, trace, reason


def iterate_filter(proposals, features, T=100, max_iters=50, sigma_scale=0.05):
    """Repeatedly bipartition and keep the higher-scoring side until at most ``T`` remain."""
    if len(proposals) < 2:
        raise ValueError("need at least two proposals")
    idx, trace, reason = filter_indices(proposals.scores, features, T, max_iters, sigma_scale)
    return FilterResult(idx, trace, reason, proposals.subset(idx))

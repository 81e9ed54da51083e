"""Flooding min-sum belief propagation on the Tanner graph of a DEM.

Variable nodes are error events, check nodes are detectors.  Messages are
log-likelihood ratios (positive favours "no error").
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .dem import DetectorErrorModel

LLR_CLIP = 50.0


@dataclass(frozen=True)
class BpConfig:
    """Parameters
    ----------
    max_iterations : int
        Upper bound on completed message-update iterations.
    ms_factor : float
        Normalization factor multiplying check-to-variable magnitudes
        (1.0 is plain min-sum).
    """

    max_iterations: int = 100
    ms_factor: float = 1.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0.0 < self.ms_factor <= 1.0:
            raise ValueError("ms_factor must lie in (0, 1]")


@dataclass(frozen=True)
class BpResult:
    converged: bool
    iterations_used: int
    hard_decision: np.ndarray  # uint8, one bit per event
    posteriors: np.ndarray  # total LLR per event


@dataclass(frozen=True)
class TannerGraph:
    """Edges sorted by check; ``var_edges[var_ptr[v]:var_ptr[v+1]]`` lists v's edges."""

    n_checks: int
    n_vars: int
    chk_ptr: np.ndarray
    edge_var: np.ndarray
    var_ptr: np.ndarray
    var_edges: np.ndarray


def tanner_graph(dem: DetectorErrorModel) -> TannerGraph:
    """Build (and memoise on ``dem``) the edge arrays used by the kernels."""
    graph = dem.cache.get("tanner")
    if graph is None:
        d = dem.check_matrix.tocsr()
        d.sort_indices()
        chk_ptr = d.indptr.astype(np.int64)
        edge_var = d.indices.astype(np.int64)
        order = np.argsort(edge_var, kind="stable")
        counts = np.bincount(edge_var, minlength=dem.n_events)
        var_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        graph = TannerGraph(dem.n_detectors, dem.n_events, chk_ptr, edge_var, var_ptr, order.astype(np.int64))
        dem.cache["tanner"] = graph
    return graph


def prior_llrs(priors: np.ndarray) -> np.ndarray:
    """``ln((1 - P) / P)`` clipped to ``[-LLR_CLIP, LLR_CLIP]``."""
    priors = np.asarray(priors, dtype=np.float64)
    with np.errstate(divide="ignore"):
        llr = np.log1p(-priors) - np.log(priors)
    return np.clip(llr, -LLR_CLIP, LLR_CLIP)


@numba.njit(cache=True)
def _syndrome_ok(chk_ptr, edge_var, hard, syndrome):
    for c in range(len(chk_ptr) - 1):
        parity = 0
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            parity ^= hard[edge_var[e]]
        if parity != syndrome[c]:
            return False
    return True


@numba.njit(cache=True)
def _min_sum(chk_ptr, edge_var, var_ptr, var_edges, syndrome, llr0, max_iter, alpha, clip, hard, post):
    n_checks = len(chk_ptr) - 1
    n_vars = len(llr0)
    q = np.empty(len(edge_var))
    r = np.zeros(len(edge_var))
    for e in range(len(edge_var)):
        q[e] = llr0[edge_var[e]]
    for it in range(1, max_iter + 1):
        for c in range(n_checks):
            lo = chk_ptr[c]
            hi = chk_ptr[c + 1]
            neg = np.int64(syndrome[c])
            min1 = np.inf
            min2 = np.inf
            arg = -1
            for e in range(lo, hi):
                m = q[e]
                a = abs(m)
                if m < 0:
                    neg ^= 1
                if a < min1:
                    min2 = min1
                    min1 = a
                    arg = e
                elif a < min2:
                    min2 = a
            for e in range(lo, hi):
                mag = min2 if e == arg else min1
                s = neg ^ (1 if q[e] < 0 else 0)
                val = alpha * mag
                if val > clip:
                    val = clip
                r[e] = -val if s else val
        for v in range(n_vars):
            total = llr0[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                total += r[var_edges[k]]
            post[v] = total
            hard[v] = 1 if total < 0 else 0
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edges[k]
                m = total - r[e]
                if m > clip:
                    m = clip
                elif m < -clip:
                    m = -clip
                q[e] = m
        if _syndrome_ok(chk_ptr, edge_var, hard, syndrome):
            return True, it
    return False, max_iter


def decode_bp(
    dem: DetectorErrorModel, priors, syndrome, config: BpConfig = BpConfig()
) -> BpResult:
    """Run flooding min-sum until the hard decision reproduces ``syndrome``.

    The syndrome is tested after every completed iteration; ``iterations_used``
    is the number of iterations run.  Posterior ties (exactly 0) decode to 0.
    """
    priors = np.asarray(priors, dtype=np.float64)
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    if priors.shape != (dem.n_events,):
        raise ValueError(f"priors has length {priors.size}, expected {dem.n_events}")
    if syndrome.shape != (dem.n_detectors,):
        raise ValueError(f"syndrome has length {syndrome.size}, expected {dem.n_detectors}")
    g = tanner_graph(dem)
    hard = np.zeros(dem.n_events, dtype=np.uint8)
    post = np.empty(dem.n_events, dtype=np.float64)
    converged, iters = _min_sum(
        g.chk_ptr, g.edge_var, g.var_ptr, g.var_edges, syndrome, prior_llrs(priors),
        config.max_iterations, float(config.ms_factor), LLR_CLIP, hard, post,
    )
    if converged:
        assert np.array_equal(dem.syndrome(hard), syndrome), "converged BP violates D h = s"
    return BpResult(bool(converged), int(iters), hard, post)

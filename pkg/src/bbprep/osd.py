"""Ordered-statistics decoding (OSD-0 and the order-lambda combination sweep).

Columns of ``D`` are visited from most to least likely to be in error.  Each
column is reduced against the running basis of earlier independent columns;
the first ``rank(D)`` independent ones form the information set.  Basis
vectors keep the ascending-scan invariant (their lowest set row is their
pivot row) and carry a bitmask saying which information-set columns they are
built from, so a syndrome reduces straight to a solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .bp import prior_llrs
from .dem import DetectorErrorModel

_ONE = np.uint64(1)


@dataclass(frozen=True)
class OsdConfig:
    """``order`` = 0 is OSD-0; ``order`` > 0 also tries every subset of the
    ``order`` most likely non-information-set columns."""

    order: int = 0

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be non-negative")
        if self.order > 24:
            raise ValueError("order above 24 would test more than 2**24 candidates")


class SyndromeNotInColumnSpace(ValueError):
    """The syndrome is not a sum of columns of ``D``."""


@numba.njit(cache=True)
def _reduce(v, cmb, basis, combo, where, full):
    """Ascending-row reduction of ``v`` in place.

    Returns the first row left set that has no pivot (-1 when ``v`` reduces to
    zero).  With ``full`` the scan keeps going and returns any such row.
    """
    n_words = v.shape[0]
    free_row = -1
    for w in range(n_words):
        word = v[w]
        while word:
            low = word & (~word + np.uint64(1))
            b = 0
            t = low
            while t > np.uint64(1):
                t >>= np.uint64(1)
                b += 1
            row = w * 64 + b
            k = where[row]
            if k >= 0:
                for i in range(n_words):
                    v[i] ^= basis[k, i]
                for i in range(cmb.shape[0]):
                    cmb[i] ^= combo[k, i]
                word = v[w] & ~((low << np.uint64(1)) - np.uint64(1))
            else:
                if not full:
                    return row
                if free_row < 0:
                    free_row = row
                word &= word - np.uint64(1)
    return free_row


@numba.njit(cache=True)
def _eliminate(col_ptr, col_rows, order, n_rows, rank_hint, n_extra):
    """Pick the information set and the first ``n_extra`` dependent columns.

    Returns ``(pivots, basis, combo, where, extra_cols, extra_combo, n_seen)``.
    """
    n_words = (n_rows + 63) // 64
    cap = n_rows if rank_hint < 0 else rank_hint
    c_words = max(1, (cap + 63) // 64)
    basis = np.zeros((cap, n_words), dtype=np.uint64)
    combo = np.zeros((cap, c_words), dtype=np.uint64)
    where = np.full(n_rows, -1, dtype=np.int64)
    pivots = np.empty(cap, dtype=np.int64)
    extra_cols = np.empty(n_extra, dtype=np.int64)
    extra_combo = np.zeros((n_extra, c_words), dtype=np.uint64)
    n_basis = 0
    n_ext = 0
    v = np.zeros(n_words, dtype=np.uint64)
    cmb = np.zeros(c_words, dtype=np.uint64)
    n_seen = 0
    for col in order:
        if n_basis == cap and n_ext == n_extra:
            break
        n_seen += 1
        v[:] = 0
        cmb[:] = 0
        for k in range(col_ptr[col], col_ptr[col + 1]):
            r = col_rows[k]
            v[r >> 6] ^= _ONE << np.uint64(r & 63)
        row = _reduce(v, cmb, basis, combo, where, False)
        if row >= 0:
            basis[n_basis, :] = v
            cmb[n_basis >> 6] ^= _ONE << np.uint64(n_basis & 63)
            combo[n_basis, :] = cmb
            where[row] = n_basis
            pivots[n_basis] = col
            n_basis += 1
        elif n_ext < n_extra:
            extra_cols[n_ext] = col
            extra_combo[n_ext, :] = cmb
            n_ext += 1
    return pivots[:n_basis], basis[:n_basis], combo[:n_basis], where, extra_cols[:n_ext], extra_combo[:n_ext], n_seen


@numba.njit(cache=True)
def _sweep(base, extra_combo, extra_cols, pivots, weights):
    """Best-weight subset of the extra columns (empty subset first; ties keep earlier)."""
    n_extra = extra_cols.shape[0]
    best_mask = 0
    best_w = np.inf
    cur = np.empty_like(base)
    for mask in range(1 << n_extra):
        cur[:] = base
        w = 0.0
        for j in range(n_extra):
            if (mask >> j) & 1:
                for i in range(cur.shape[0]):
                    cur[i] ^= extra_combo[j, i]
                w += weights[extra_cols[j]]
        for k in range(pivots.shape[0]):
            if (cur[k >> 6] >> np.uint64(k & 63)) & _ONE:
                w += weights[pivots[k]]
        if w < best_w:
            best_w = w
            best_mask = mask
    cur[:] = base
    for j in range(n_extra):
        if (best_mask >> j) & 1:
            for i in range(cur.shape[0]):
                cur[i] ^= extra_combo[j, i]
    return cur, best_mask


def reliability_order(posteriors) -> np.ndarray:
    """Most-likely-in-error first (ascending LLR); ties by ascending index."""
    return np.argsort(np.asarray(posteriors, dtype=np.float64), kind="stable")


def decode_osd(
    dem: DetectorErrorModel,
    posteriors,
    syndrome,
    config: OsdConfig = OsdConfig(),
    priors=None,
) -> np.ndarray:
    """Return an event vector ``xi`` with ``D xi = syndrome``.

    Parameters
    ----------
    posteriors : array_like
        Per-event LLRs (typically BP's); lower means more likely in error.
    priors : array_like, optional
        Channel probabilities scoring the order-lambda candidates by
        ``sum ln(P/(1-P)) xi``.  Defaults to the model's priors.

    Raises
    ------
    SyndromeNotInColumnSpace
        When no event vector reproduces ``syndrome``.
    """
    posteriors = np.asarray(posteriors, dtype=np.float64)
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    if posteriors.shape != (dem.n_events,):
        raise ValueError(f"posteriors has length {posteriors.size}, expected {dem.n_events}")
    if syndrome.shape != (dem.n_detectors,):
        raise ValueError(f"syndrome has length {syndrome.size}, expected {dem.n_detectors}")
    xi = np.zeros(dem.n_events, dtype=np.uint8)
    if not syndrome.any():
        return xi

    d = dem.check_matrix
    rank = dem.cache.get("rank", -1)
    pivots, basis, combo, where, extra_cols, extra_combo, n_seen = _eliminate(
        d.indptr.astype(np.int64), d.indices.astype(np.int64), reliability_order(posteriors),
        dem.n_detectors, rank, config.order,
    )
    if rank < 0 and n_seen == dem.n_events:
        dem.cache["rank"] = len(pivots)

    n_words = (dem.n_detectors + 63) // 64
    v = np.zeros(n_words, dtype=np.uint64)
    for r in np.flatnonzero(syndrome):
        v[r >> 6] ^= _ONE << np.uint64(r & 63)
    base = np.zeros(combo.shape[1] if combo.size else 1, dtype=np.uint64)
    if _reduce(v, base, basis, combo, where, True) >= 0:
        raise SyndromeNotInColumnSpace("syndrome is not in the column space of D")

    if len(extra_cols):
        weights = prior_llrs(dem.priors if priors is None else priors)
        sol, mask = _sweep(base, extra_combo, extra_cols, pivots, weights)
        for j in range(len(extra_cols)):
            if (mask >> j) & 1:
                xi[extra_cols[j]] = 1
    else:
        sol = base
    bits = np.unpackbits(sol.view(np.uint8), bitorder="little")[: len(pivots)]
    xi[pivots[bits.astype(bool)]] = 1
    assert np.array_equal(dem.syndrome(xi), syndrome), "OSD solution violates D xi = s"
    return xi

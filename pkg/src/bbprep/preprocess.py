"""Local-syndrome preprocessing: spot likely single error events before BP.

For a flipped detector ``D`` of check ``c`` in detector round ``r``, every data
qubit ``q`` of ``c`` defines a *leaf*: the detectors of all checks touching
``q`` in rounds ``r`` and ``r + 1``.  A leaf fires when each of those checks
flips in exactly one of the two rounds (the "XOR = 1...1" signature, one
term per check of ``q``).  The detectors currently flipped inside a firing
leaf are then looked up in the DEM; an exact footprint match is taken as a
single error event, its footprint is XORed out of the working set, and the
scan restarts.  Matched events get their prior scaled before decoding.

Detectors in the last round have no successor round; their successors read
as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .code import CssCode
from .dem import DetectorErrorModel

PRIOR_CEILING = 0.5 - 1e-9
SIGNATURES = ("anchored", "strict")


@dataclass(frozen=True)
class CheckAdjacency:
    """Tanner adjacency of the detector-carrying checks.

    ``check_data[c]`` lists the data qubits of check ``c`` in leaf order;
    ``data_checks[q]`` lists every check touching data qubit ``q``.
    """

    check_data: tuple[tuple[int, ...], ...]
    data_checks: tuple[tuple[int, ...], ...]

    @classmethod
    def from_code(cls, code: CssCode) -> CheckAdjacency:
        return cls(code.z_check_adjacency, code.data_adjacency_z)

    @classmethod
    def from_lists(cls, check_data: Sequence[Sequence[int]], n_data: int | None = None) -> CheckAdjacency:
        """Adjacency of an arbitrary check matrix given row supports."""
        if n_data is None:
            n_data = 1 + max((q for row in check_data for q in row), default=-1)
        data_checks: list[list[int]] = [[] for _ in range(n_data)]
        for c, row in enumerate(check_data):
            for q in row:
                data_checks[q].append(c)
        return cls(tuple(tuple(r) for r in check_data), tuple(tuple(d) for d in data_checks))

    @property
    def n_checks(self) -> int:
        return len(self.check_data)


@dataclass(frozen=True)
class Leaf:
    data_qubit: int
    checks: tuple[int, ...]  # D's own check first, then the other checks of the qubit
    current: tuple[int, ...]  # their detectors in round r
    following: tuple[int, ...]  # their detectors in round r + 1 (empty in the last round)


@dataclass(frozen=True)
class LocalRegion:
    detector: int
    check: int
    round: int
    leaves: tuple[Leaf, ...]

    @property
    def detectors(self) -> frozenset[int]:
        return frozenset(d for leaf in self.leaves for d in leaf.current + leaf.following)


def local_region(adjacency: CheckAdjacency, n_rounds: int, detector: int) -> LocalRegion:
    """Leaves around ``detector`` for a model with ``n_rounds`` detector rounds."""
    n = adjacency.n_checks
    r, c = divmod(detector, n)
    if not 0 <= r < n_rounds:
        raise ValueError(f"detector {detector} outside {n_rounds} rounds of {n} checks")
    leaves = []
    for q in adjacency.check_data[c]:
        checks = (c,) + tuple(o for o in adjacency.data_checks[q] if o != c)
        cur = tuple(r * n + o for o in checks)
        nxt = tuple((r + 1) * n + o for o in checks) if r + 1 < n_rounds else ()
        leaves.append(Leaf(q, checks, cur, nxt))
    return LocalRegion(detector, c, r, tuple(leaves))


def generalized_signature(current: Sequence[int], following: Sequence[int]) -> bool:
    """True iff every check flips in exactly one of the two rounds.

    ``current[i]``, ``following[i]`` are check ``i``'s detector values in
    rounds ``r`` and ``r + 1``; a missing successor (shorter or empty
    ``following``) reads as 0.  With three checks this is the three-term
    conjunction ``(a ^ a') & (b ^ b') & (D ^ D')``.
    """
    if not current:
        return False
    for i, v in enumerate(current):
        nxt = following[i] if i < len(following) else 0
        if not (v ^ nxt):
            return False
    return True


@dataclass(frozen=True)
class PreprocessConfig:
    """Parameters
    ----------
    signature : {"anchored", "strict"}
        ``"strict"`` looks up a leaf only when the signature holds.
        ``"anchored"`` also looks it up when the leaf's flipped detectors are
        exactly a known footprint; the DEM lookup is the final word either way.
    max_events : int, optional
        Abort the scan (report ``truncated``) after this many events; defaults
        to the DEM's event count.
    """

    signature: str = "anchored"
    max_events: int | None = None

    def __post_init__(self):
        if self.signature not in SIGNATURES:
            raise ValueError(f"signature must be one of {SIGNATURES}")


@dataclass(frozen=True)
class PreprocessReport:
    events: tuple[int, ...]
    scan_passes: int
    truncated: bool = False
    scaled_priors: np.ndarray | None = None


class _Regions:
    """Per-check leaf templates, shifted to the detector's round on demand."""

    def __init__(self, adjacency: CheckAdjacency, n_rounds: int):
        self.n = adjacency.n_checks
        self.n_rounds = n_rounds
        self.templates = [
            [(c,) + tuple(o for o in adjacency.data_checks[q] if o != c) for q in adjacency.check_data[c]]
            for c in range(self.n)
        ]

    def leaves(self, detector: int):
        r, c = divmod(detector, self.n)
        base = r * self.n
        last = r + 1 >= self.n_rounds
        for checks in self.templates[c]:
            cur = [base + o for o in checks]
            nxt = [] if last else [base + self.n + o for o in checks]
            yield cur, nxt


def _regions(dem: DetectorErrorModel, adjacency: CheckAdjacency) -> _Regions:
    key = ("regions", id(adjacency))
    hit = dem.cache.get(key)
    if hit is None or hit[0] is not adjacency:
        if dem.n_detectors % adjacency.n_checks:
            raise ValueError("detector count is not a multiple of the check count")
        hit = (adjacency, _Regions(adjacency, dem.n_detectors // adjacency.n_checks))
        dem.cache[key] = hit
    return hit[1]


def detect_events(
    syndrome,
    dem: DetectorErrorModel,
    adjacency: CheckAdjacency,
    config: PreprocessConfig = PreprocessConfig(),
) -> PreprocessReport:
    """Scan the flipped detectors for single-event signatures.

    ``syndrome`` is never modified; matches are removed from a working copy
    of its flipped-index list.  Each event id is reported at most once, and
    when a footprint is shared by several events (differing only in the
    observables they flip) all of them are reported.
    """
    syndrome = np.asarray(syndrome)
    if syndrome.shape != (dem.n_detectors,):
        raise ValueError(f"syndrome has length {syndrome.size}, expected {dem.n_detectors}")
    regions = _regions(dem, adjacency)
    index = dem.footprint_index
    strict = config.signature == "strict"
    limit = dem.n_events if config.max_events is None else config.max_events

    work = set(np.flatnonzero(syndrome).tolist())
    order = sorted(work)
    found: list[int] = []
    seen: set[int] = set()
    passes = 1
    x = 0
    while x < len(order):
        matched = False
        for cur, nxt in regions.leaves(order[x]):
            vals_cur = [d in work for d in cur]
            vals_nxt = [d in work for d in nxt]
            sub = tuple(sorted([d for d, v in zip(cur, vals_cur) if v] + [d for d, v in zip(nxt, vals_nxt) if v]))
            # anchored: a known footprint passes regardless, and a signature
            # hit without one fails the lookup anyway
            if strict and not generalized_signature(vals_cur, vals_nxt):
                continue
            ids = [i for i in index.get(sub, ()) if i not in seen]
            if not ids:
                continue
            if len(found) + len(ids) > limit:
                return PreprocessReport(tuple(found), passes, truncated=True)
            found.extend(ids)
            seen.update(ids)
            work.symmetric_difference_update(sub)
            matched = True
            break
        if matched:
            order = sorted(work)
            x = 0
            passes += 1
        else:
            x += 1
    return PreprocessReport(tuple(found), passes)


def update_channel(priors, events: Iterable[int], factor: float) -> np.ndarray:
    """Copy of ``priors`` with ``P_i -> min(factor * P_i, 0.5 - 1e-9)`` on ``events``."""
    if factor < 1:
        raise ValueError("factor must be at least 1")
    out = np.array(priors, dtype=np.float64, copy=True)
    idx = np.fromiter(events, dtype=np.int64)
    if factor != 1 and idx.size:
        out[idx] = np.minimum(factor * out[idx], PRIOR_CEILING)
    return out


def preprocess(
    syndrome,
    dem: DetectorErrorModel,
    adjacency: CheckAdjacency,
    factor: float,
    priors=None,
    config: PreprocessConfig = PreprocessConfig(),
) -> PreprocessReport:
    """:func:`detect_events` followed by :func:`update_channel`."""
    report = detect_events(syndrome, dem, adjacency, config)
    base = dem.priors if priors is None else priors
    return PreprocessReport(
        report.events, report.scan_passes, report.truncated, update_channel(base, report.events, factor)
    )


@dataclass(frozen=True)
class Coverage:
    event_coverage: float
    probability_coverage: float
    n_events: int
    n_covered: int
    covered: tuple[int, ...]


def signature_hit(footprint: Iterable[int], dem: DetectorErrorModel, adjacency: CheckAdjacency) -> bool:
    """Does any flipped detector of ``footprint`` have a leaf with the signature?"""
    regions = _regions(dem, adjacency)
    work = set(footprint)
    for d in work:
        for cur, nxt in regions.leaves(d):
            if generalized_signature([v in work for v in cur], [v in work for v in nxt]):
                return True
    return False


def coverage_analysis(
    dem: DetectorErrorModel,
    adjacency: CheckAdjacency,
    config: PreprocessConfig = PreprocessConfig(),
    criterion: str = "detect",
) -> Coverage:
    """Fraction of events (and of their prior mass) the preprocessor recognises.

    ``criterion="detect"``: event ``e`` counts iff :func:`detect_events` on its
    own footprint reports ``e``.  ``criterion="signature"``: iff its footprint
    shows the signature at some flipped detector, whether or not the lookup
    then pins down ``e``.
    """
    if criterion not in ("detect", "signature"):
        raise ValueError("criterion must be 'detect' or 'signature'")
    covered = []
    syn = np.zeros(dem.n_detectors, dtype=np.uint8)
    for i, e in enumerate(dem.events):
        if not e.detectors:
            continue
        if criterion == "signature":
            hit = signature_hit(e.detectors, dem, adjacency)
        else:
            syn[list(e.detectors)] = 1
            hit = i in detect_events(syn, dem, adjacency, config).events
            syn[list(e.detectors)] = 0
        if hit:
            covered.append(i)
    priors = dem.priors
    total = float(priors.sum())
    return Coverage(
        event_coverage=len(covered) / dem.n_events if dem.n_events else float("nan"),
        probability_coverage=float(priors[covered].sum()) / total if total else float("nan"),
        n_events=dem.n_events,
        n_covered=len(covered),
        covered=tuple(covered),
    )

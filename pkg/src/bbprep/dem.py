"""Detector error models: independent error events with detector footprints.

A model holds one row per error event: a prior probability, the sorted set of
detectors it flips and the logical observables it flips.  Its incidence matrix
``D`` (detectors x events) is what the decoders work on, so that a fired event
vector ``xi`` produces the syndrome ``D @ xi mod 2``.

Text format, one event per line, after two header lines::

    detectors 252
    observables 8
    error(0.00040000000000000002) D3 D39 L2

Blank lines and ``#`` comments are ignored.  Fault provenance is not stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .circuit import ExtractionCircuit, enumerate_faults


@dataclass(frozen=True)
class ErrorEvent:
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...] = ()
    provenance: tuple[int, ...] = ()

    @property
    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.detectors, self.observables


class DemParseError(ValueError):
    """Malformed DEM text; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno
        self.reason = reason


@dataclass(eq=False)
class DetectorErrorModel:
    """Event list plus the derived footprint index and sparse matrices.

    Parameters
    ----------
    n_detectors, n_observables : int
        Sizes of the detector and observable index spaces.
    events : list of ErrorEvent
        In a merged model the ``(detectors, observables)`` keys are pairwise
        distinct and no event is empty.
    merged : bool
        Whether the model went through :func:`merge_events`.
    """

    n_detectors: int
    n_observables: int
    events: list[ErrorEvent]
    merged: bool = True
    _index: dict | None = field(default=None, repr=False)
    _d: sp.csc_matrix | None = field(default=None, repr=False)
    _l: sp.csc_matrix | None = field(default=None, repr=False)
    cache: dict = field(default_factory=dict, repr=False)  # derived decoder structures

    def __post_init__(self):
        for i, e in enumerate(self.events):
            if not 0.0 <= e.probability <= 1.0:
                raise ValueError(f"event {i}: probability {e.probability} outside [0, 1]")
            if e.detectors and (e.detectors[0] < 0 or e.detectors[-1] >= self.n_detectors):
                raise ValueError(f"event {i}: detector index out of range")
            if e.observables and (e.observables[0] < 0 or e.observables[-1] >= self.n_observables):
                raise ValueError(f"event {i}: observable index out of range")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def n_events(self) -> int:
        return len(self.events)

    @property
    def priors(self) -> np.ndarray:
        return np.array([e.probability for e in self.events], dtype=np.float64)

    @property
    def footprint_index(self) -> dict[tuple[int, ...], list[int]]:
        """Sorted detector set -> ids of the events with exactly that footprint."""
        if self._index is None:
            index: dict[tuple[int, ...], list[int]] = {}
            for i, e in enumerate(self.events):
                index.setdefault(e.detectors, []).append(i)
            self._index = index
        return self._index

    @property
    def check_matrix(self) -> sp.csc_matrix:
        """``D``: detectors x events, entries 0/1."""
        if self._d is None:
            self._d = _incidence([e.detectors for e in self.events], self.n_detectors)
        return self._d

    @property
    def observable_matrix(self) -> sp.csc_matrix:
        """Observables x events, entries 0/1."""
        if self._l is None:
            self._l = _incidence([e.observables for e in self.events], self.n_observables)
        return self._l

    def syndrome(self, xi) -> np.ndarray:
        """``D @ xi mod 2`` for a 0/1 event vector."""
        return _mod2(self.check_matrix, xi)

    def observable_flips(self, xi) -> np.ndarray:
        return _mod2(self.observable_matrix, xi)

    def with_priors(self, priors: Sequence[float]) -> DetectorErrorModel:
        """Same structure, new probabilities."""
        priors = np.asarray(priors, dtype=np.float64)
        if priors.shape != (self.n_events,):
            raise ValueError("priors length does not match the event count")
        events = [
            ErrorEvent(float(q), e.detectors, e.observables, e.provenance)
            for q, e in zip(priors, self.events)
        ]
        return DetectorErrorModel(self.n_detectors, self.n_observables, events, self.merged)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DetectorErrorModel):
            return NotImplemented
        return (
            self.n_detectors == other.n_detectors
            and self.n_observables == other.n_observables
            and [(e.probability, e.key) for e in self.events]
            == [(e.probability, e.key) for e in other.events]
        )


def _incidence(supports: Sequence[Sequence[int]], n_rows: int) -> sp.csc_matrix:
    lengths = np.fromiter((len(s) for s in supports), dtype=np.int64, count=len(supports))
    indptr = np.concatenate([[0], np.cumsum(lengths)])
    indices = np.fromiter((i for s in supports for i in s), dtype=np.int64, count=int(indptr[-1]))
    data = np.ones(len(indices), dtype=np.uint8)
    return sp.csc_matrix((data, indices, indptr), shape=(n_rows, len(supports)))


def _mod2(mat: sp.csc_matrix, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=np.int64)
    if xi.shape[-1] != mat.shape[1]:
        raise ValueError(f"event vector has length {xi.shape[-1]}, expected {mat.shape[1]}")
    if xi.ndim == 1:
        return ((mat @ xi) & 1).astype(np.uint8)
    return ((mat @ xi.T).T & 1).astype(np.uint8)


def xor_probability(p: float, q: float) -> float:
    """Probability that exactly one of two independent events fires."""
    return p * (1.0 - q) + q * (1.0 - p)


def merge_events(events: Iterable[ErrorEvent]) -> list[ErrorEvent]:
    """Fold events with equal ``(detectors, observables)`` and drop empty ones.

    Output order follows the first occurrence of each key.
    """
    probs: dict[tuple, float] = {}
    prov: dict[tuple, list[int]] = {}
    for e in events:
        key = e.key
        if not key[0] and not key[1]:
            continue
        if key in probs:
            probs[key] = xor_probability(probs[key], e.probability)
            prov[key].extend(e.provenance)
        else:
            probs[key] = e.probability
            prov[key] = list(e.provenance)
    return [ErrorEvent(probs[k], k[0], k[1], tuple(prov[k])) for k in probs]


def build_dem(
    circuit: ExtractionCircuit, p: float, merge: bool = True, idle_mode: str = "split"
) -> DetectorErrorModel:
    """Enumerate every single fault of ``circuit`` at rate ``p`` and propagate it.

    The unmerged model keeps one event per fault (invisible faults included), so
    its length is the fault census.  The merged model folds duplicates with
    :func:`xor_probability` and drops events that flip nothing.
    """
    faults = enumerate_faults(circuit, p, idle_mode=idle_mode)
    dets, obs = circuit.propagate_batch(faults)
    events = [
        ErrorEvent(f.probability, tuple(d.tolist()), tuple(o.tolist()), (f.index,))
        for f, d, o in zip(faults, dets, obs)
    ]
    if merge:
        events = merge_events(events)
    return DetectorErrorModel(circuit.n_detectors, circuit.n_observables, events, merged=merge)


def lookup_footprint(dem: DetectorErrorModel, detectors: Iterable[int]) -> list[int]:
    """Ids of events whose footprint is exactly ``detectors`` (possibly none)."""
    return list(dem.footprint_index.get(tuple(sorted(detectors)), ()))


# ----------------------------------------------------------------------
# text I/O


def format_dem(dem: DetectorErrorModel) -> str:
    lines = [f"detectors {dem.n_detectors}", f"observables {dem.n_observables}"]
    for e in dem.events:
        parts = [f"error({e.probability:.17g})"]
        parts += [f"D{d}" for d in e.detectors]
        parts += [f"L{o}" for o in e.observables]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def write_dem(dem: DetectorErrorModel, path: str | Path) -> None:
    Path(path).write_text(format_dem(dem))


def parse_dem(text: str) -> DetectorErrorModel:
    header: dict[str, int] = {}
    events: list[ErrorEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head in ("detectors", "observables"):
            if events:
                raise DemParseError(lineno, f"'{head}' header after the first event")
            if head in header:
                raise DemParseError(lineno, f"duplicate '{head}' header")
            if len(rest) != 1 or not rest[0].isdigit():
                raise DemParseError(lineno, f"'{head}' needs one non-negative integer")
            header[head] = int(rest[0])
            continue
        if not head.startswith("error(") or not head.endswith(")"):
            raise DemParseError(lineno, f"expected 'error(<prob>)', got {head!r}")
        if len(header) != 2:
            raise DemParseError(lineno, "event before both 'detectors' and 'observables' headers")
        try:
            prob = float(head[6:-1])
        except ValueError:
            raise DemParseError(lineno, f"bad probability {head[6:-1]!r}") from None
        if not 0.0 <= prob <= 1.0:
            raise DemParseError(lineno, f"probability {prob} outside [0, 1]")
        dets: list[int] = []
        obs: list[int] = []
        for tok in rest:
            target = {"D": dets, "L": obs}.get(tok[:1])
            if target is None or not tok[1:].isdigit():
                raise DemParseError(lineno, f"bad target {tok!r}")
            target.append(int(tok[1:]))
        if dets and max(dets) >= header["detectors"]:
            raise DemParseError(lineno, f"detector D{max(dets)} out of range")
        if obs and max(obs) >= header["observables"]:
            raise DemParseError(lineno, f"observable L{max(obs)} out of range")
        if len(set(dets)) != len(dets) or len(set(obs)) != len(obs):
            raise DemParseError(lineno, "repeated target")
        events.append(ErrorEvent(prob, tuple(sorted(dets)), tuple(sorted(obs))))
    if len(header) != 2:
        raise DemParseError(max(1, len(text.splitlines())), "missing 'detectors'/'observables' header")
    keys = {e.key for e in events}
    merged = len(keys) == len(events) and all(e.detectors or e.observables for e in events)
    return DetectorErrorModel(header["detectors"], header["observables"], events, merged=merged)


def read_dem(path: str | Path) -> DetectorErrorModel:
    return parse_dem(Path(path).read_text())

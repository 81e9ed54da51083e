"""Z-basis memory circuits for CSS codes, their fault sites, and fault propagation.

Two layouts are available:

``"z_only"`` (default)
    Z checks only: init, six CNOT layers, measure.  Each data qubit gets one idle
    location per cycle (data qubits ``c`` and ``c + n_z`` are charged to Z check
    ``c``), so there are 98 faults per Z check per cycle.  BB codes default to
    the A-terms-then-B-terms CNOT order.

``"full"``
    The depth-8 interleaved syndrome cycle of the original BB-code construction.
    X-check CNOTs (check -> data) interleave with Z-check CNOTs (data -> check),
    so an X error on an X-check ancilla spreads onto several data qubits
    mid-cycle.  Faults per check qubit per cycle: 6 CNOTs x 15 Paulis, one init,
    one measurement, and 3 idle Paulis on 2 data qubits = 98.

Only Z checks carry detectors.  Detector ``r * n_z + c`` compares round ``r``
of Z check ``c`` with round ``r - 1`` (round 0 compares with the deterministic
``|0>`` preparation); detector round ``N_c`` compares the last check outcomes
with parities recomputed from the final, noiseless, data measurement.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable

import numpy as np

from .code import AB_Z_SCHEDULE, IBM_X_SCHEDULE, IBM_Z_SCHEDULE, CssCode

PAULIS_1Q = ("X", "Y", "Z")
PAULIS_2Q = tuple(a + b for a, b in product("IXYZ", repeat=2) if a + b != "II")
TICKS_PER_CYCLE = {"full": 9, "z_only": 8}


@dataclass(frozen=True)
class Op:
    """One instruction.

    ``name`` is ``R`` (reset to |0>), ``RX`` (reset to |+>), ``CX``
    (``qubits = (control, target)``), ``M`` (Z-basis check measurement),
    ``MX``, ``IDLE`` (noise location only) or ``MD`` (final data measurement).
    """

    tick: int
    name: str
    qubits: tuple[int, ...]
    cycle: int


@dataclass(frozen=True)
class FaultSite:
    index: int
    op: int
    kind: str  # init | measure | idle | cnot
    qubits: tuple[int, ...]
    cycle: int
    check: int  # check qubit charged with this site in the 98-per-check census, -1 if none
    before: bool  # noise acts just before (True) or just after the op
    basis: str = "Z"  # init/measure basis; a flip of a Z-basis op is an X error


@dataclass(frozen=True)
class Fault:
    site: int
    pauli: str  # "F" (flip) for init/measure, 1 or 2 letters otherwise; control first for CNOTs
    probability: float
    index: int = -1


@dataclass(frozen=True)
class FaultEffect:
    detectors: tuple[int, ...]
    observables: tuple[int, ...]


class ExtractionCircuit:
    """Noise-site-annotated syndrome extraction repeated ``n_cycles`` times."""

    def __init__(
        self,
        code: CssCode,
        n_cycles: int,
        layout: str = "z_only",
        cnot_noise: str = "before",
        z_schedule: Iterable[int] | None = None,
        x_schedule: Iterable[int] | None = None,
    ):
        if n_cycles < 2:
            raise ValueError("n_cycles must be at least 2")
        if layout not in TICKS_PER_CYCLE:
            raise ValueError(f"unknown layout {layout!r}")
        if cnot_noise not in ("before", "after"):
            raise ValueError("cnot_noise must be 'before' or 'after'")
        self.code = code
        self.n_cycles = int(n_cycles)
        self.layout = layout
        self.cnot_noise = cnot_noise

        spec = code.spec
        if z_schedule is None and spec is not None:
            z_schedule = spec.z_schedule
        if x_schedule is None and spec is not None:
            x_schedule = spec.x_schedule
        z_deg = max(len(a) for a in code.z_check_adjacency)
        x_deg = max((len(a) for a in code.x_check_adjacency), default=0)
        if layout == "full" and {len(a) for a in code.z_check_adjacency + code.x_check_adjacency} != {6}:
            raise ValueError("the full layout interleaves six layers and needs weight-6 checks")
        if z_schedule is None:
            if z_deg != 6:
                z_schedule = tuple(range(z_deg))
            else:
                z_schedule = IBM_Z_SCHEDULE if layout == "full" else AB_Z_SCHEDULE
        if x_schedule is None:
            x_schedule = IBM_X_SCHEDULE if x_deg == 6 else tuple(range(x_deg))
        self.z_schedule = tuple(z_schedule)
        self.x_schedule = tuple(x_schedule)

        self.n_data = code.n_data
        self.n_z = code.n_z_checks
        self.n_x = code.n_x_checks if layout == "full" else 0
        self.z_qubits = tuple(range(self.n_data, self.n_data + self.n_z))
        self.x_qubits = tuple(range(self.n_data + self.n_z, self.n_data + self.n_z + self.n_x))
        self.n_qubits = self.n_data + self.n_z + self.n_x
        self.n_detectors = self.n_z * (self.n_cycles + 1)
        self.n_observables = code.logical_z.rows if code.logical_z is not None else 0
        self.n_checks = self.n_z + self.n_x

        self.ops: list[Op] = []
        self.fault_sites: list[FaultSite] = []
        self._build()
        self._index_ops()

    # ------------------------------------------------------------------
    # construction

    def _emit(self, tick: int, name: str, qubits: tuple[int, ...], cycle: int) -> int:
        self.ops.append(Op(tick, name, qubits, cycle))
        return len(self.ops) - 1

    def _site(self, op, kind, qubits, cycle, check, before, basis="Z") -> None:
        self.fault_sites.append(
            FaultSite(len(self.fault_sites), op, kind, tuple(qubits), cycle, check, before, basis)
        )

    def _z_cnot(self, layer: int, tick: int, cycle: int) -> set[int]:
        touched = set()
        direction = self.z_schedule[layer]
        for c, nbrs in enumerate(self.code.z_check_adjacency):
            if direction >= len(nbrs):
                continue
            q, anc = nbrs[direction], self.z_qubits[c]
            i = self._emit(tick, "CX", (q, anc), cycle)
            self._site(i, "cnot", (q, anc), cycle, anc, self.cnot_noise == "before")
            touched.add(q)
        return touched

    def _x_cnot(self, layer: int, tick: int, cycle: int) -> set[int]:
        touched = set()
        direction = self.x_schedule[layer]
        for c, nbrs in enumerate(self.code.x_check_adjacency):
            if direction >= len(nbrs):
                continue
            anc, q = self.x_qubits[c], nbrs[direction]
            i = self._emit(tick, "CX", (anc, q), cycle)
            self._site(i, "cnot", (anc, q), cycle, anc, self.cnot_noise == "before")
            touched.add(q)
        return touched

    def _idle(self, qubits: Iterable[int], tick: int, cycle: int) -> None:
        for q in qubits:
            i = self._emit(tick, "IDLE", (q,), cycle)
            owner = self.z_qubits[q % self.n_z] if self.layout == "z_only" else -1
            self._site(i, "idle", (q,), cycle, owner, False)

    def _reset(self, qubits, name: str, tick: int, cycle: int) -> None:
        for anc in qubits:
            i = self._emit(tick, name, (anc,), cycle)
            self._site(i, "init", (anc,), cycle, anc, False, "Z" if name == "R" else "X")

    def _measure(self, qubits, name: str, tick: int, cycle: int) -> None:
        for anc in qubits:
            i = self._emit(tick, name, (anc,), cycle)
            self._site(i, "measure", (anc,), cycle, anc, True, "Z" if name == "M" else "X")

    def _build(self) -> None:
        data = range(self.n_data)
        for j in range(self.n_cycles):
            if self.layout == "z_only":
                self._reset(self.z_qubits, "R", 0, j)
                self._idle(data, 0, j)
                for t in range(len(self.z_schedule)):
                    self._z_cnot(t, 1 + t, j)
                self._measure(self.z_qubits, "M", 1 + len(self.z_schedule), j)
                continue
            # tick 0: prepare Z checks while every data qubit idles
            self._reset(self.z_qubits, "R", 0, j)
            self._idle(data, 0, j)
            # tick 1: prepare X checks, first Z layer
            self._reset(self.x_qubits, "RX", 1, j)
            touched = self._z_cnot(0, 1, j)
            self._idle([q for q in data if q not in touched], 1, j)
            # ticks 2-6: interleaved X and Z layers
            for t in range(1, 6):
                self._x_cnot(t - 1, 1 + t, j)
                self._z_cnot(t, 1 + t, j)
            # tick 7: measure Z checks alongside the last X layer
            self._measure(self.z_qubits, "M", 7, j)
            touched = self._x_cnot(5, 7, j)
            self._idle([q for q in data if q not in touched], 7, j)
            # tick 8: measure X checks
            self._measure(self.x_qubits, "MX", 8, j)
        self._emit(0, "MD", tuple(data), self.n_cycles)

    def _index_ops(self) -> None:
        n = len(self.ops)
        self._kind = np.zeros(n, dtype=np.int8)  # 0 noop, 1 reset, 2 cx, 3 M, 4 MD
        self._q0 = np.full(n, -1, dtype=np.int64)
        self._q1 = np.full(n, -1, dtype=np.int64)
        self._mcycle = np.full(n, -1, dtype=np.int64)
        codes = {"R": 1, "RX": 1, "CX": 2, "M": 3, "MD": 4}
        for i, op in enumerate(self.ops):
            self._kind[i] = codes.get(op.name, 0)
            if op.name != "MD":
                self._q0[i] = op.qubits[0]
            if op.name == "CX":
                self._q1[i] = op.qubits[1]
            if op.name == "M":
                self._mcycle[i] = op.cycle
        hz = self.code.h_z.to_dense()
        self._data_checks = [np.flatnonzero(hz[:, q]) for q in range(self.n_data)]
        lz = self.code.logical_z.to_dense() if self.n_observables else np.zeros((0, self.n_data))
        self._data_logicals = [np.flatnonzero(lz[:, q]) for q in range(self.n_data)]
        self._hz = hz.astype(np.uint8)
        self._lz = lz.astype(np.uint8)

    # ------------------------------------------------------------------
    # helpers

    def detector(self, check: int, round_: int) -> int:
        return round_ * self.n_z + check

    def detector_coords(self, det: int) -> tuple[int, int]:
        """``(check, round)`` of a detector index."""
        r, c = divmod(det, self.n_z)
        return c, r

    def time_of(self, site: FaultSite) -> int:
        op = self.ops[site.op]
        return op.cycle * TICKS_PER_CYCLE[self.layout] + op.tick

    def dump(self) -> str:
        """Human-readable listing, one op per line: ``tick, op, qubits  # noise``."""
        sites_by_op: dict[int, list[FaultSite]] = {}
        for s in self.fault_sites:
            sites_by_op.setdefault(s.op, []).append(s)
        header = (
            f"# layout={self.layout} cycles={self.n_cycles} data=0..{self.n_data - 1} "
            f"zchecks={self.z_qubits[0]}..{self.z_qubits[-1]}"
        )
        if self.n_x:
            header += f" xchecks={self.x_qubits[0]}..{self.x_qubits[-1]}"
        lines = [header, f"# cnot noise acts {self.cnot_noise} the gate"]
        per_cycle = TICKS_PER_CYCLE[self.layout]
        for i, op in enumerate(self.ops):
            tick = op.cycle * per_cycle + op.tick
            qs = " ".join(map(str, op.qubits)) if op.name != "MD" else f"0..{self.n_data - 1}"
            notes = []
            for s in sites_by_op.get(i, []):
                note = s.kind
                if s.kind == "idle" and s.check >= 0:
                    note += f"(check {s.check})"
                notes.append(note)
            lines.append(f"{tick}, {op.name}, {qs}" + (f"  # {' '.join(notes)}" if notes else ""))
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------------
    # propagation

    def x_support(self, site: FaultSite, pauli: str) -> tuple[int, ...]:
        """Qubits left with an X component by the fault (all that Z checks can see)."""
        if site.kind in ("init", "measure"):
            return site.qubits if site.basis == "Z" else ()
        return tuple(q for q, ch in zip(site.qubits, pauli) if ch in "XY")

    def propagate_x(self, op_index: int, before: bool, qubits: Iterable[int]) -> FaultEffect:
        """Push X errors on ``qubits`` inserted at ``op_index`` to the end of the circuit."""
        frame = set(qubits)
        dets: set[int] = set()
        obs: set[int] = set()
        start = op_index if before else op_index + 1
        kind, q0, q1, mcyc = self._kind, self._q0, self._q1, self._mcycle
        n_z, n_data = self.n_z, self.n_data
        for i in range(start, len(self.ops)):
            if not frame:
                break
            k = kind[i]
            if k == 2:
                if q0[i] in frame:
                    frame.symmetric_difference_update((int(q1[i]),))
            elif k == 1:
                frame.discard(int(q0[i]))
            elif k == 3:
                if q0[i] in frame:
                    c = int(q0[i]) - n_data
                    r = int(mcyc[i])
                    dets.symmetric_difference_update((r * n_z + c, (r + 1) * n_z + c))
            elif k == 4:
                last = self.n_cycles * n_z
                for q in frame:
                    if q < n_data:
                        dets.symmetric_difference_update(int(last + c) for c in self._data_checks[q])
                        obs.symmetric_difference_update(int(o) for o in self._data_logicals[q])
        return FaultEffect(tuple(sorted(dets)), tuple(sorted(obs)))

    def propagate_batch(self, faults: list[Fault], chunk: int = 1 << 15) -> tuple[list, list]:
        """Effects of many single faults at once using a bit-packed X frame.

        Returns ``(detectors, observables)``: per fault, sorted index arrays.
        """
        all_dets: list[np.ndarray] = []
        all_obs: list[np.ndarray] = []
        for lo in range(0, len(faults), chunk):
            d, o = self._batch_chunk(faults[lo : lo + chunk])
            all_dets.extend(d)
            all_obs.extend(o)
        return all_dets, all_obs

    def _batch_chunk(self, faults: list[Fault]):
        n_f = len(faults)
        n_bytes = -(-n_f // 8)
        frame = np.zeros((self.n_qubits, n_bytes), dtype=np.uint8)
        # injections grouped by (op, before)
        inject: dict[tuple[int, bool], list[tuple[int, int]]] = {}
        for col, f in enumerate(faults):
            site = self.fault_sites[f.site]
            for q in self.x_support(site, f.pauli):
                inject.setdefault((site.op, site.before), []).append((q, col))
        first_op = min((op for op, _ in inject), default=len(self.ops))

        def apply(key):
            for q, col in inject.get(key, ()):
                frame[q, col >> 3] ^= np.uint8(1 << (col & 7))

        meas = np.zeros((self.n_cycles, self.n_z, n_bytes), dtype=np.uint8)
        final = None
        kind, q0, q1, mcyc = self._kind, self._q0, self._q1, self._mcycle
        for i in range(first_op, len(self.ops)):
            apply((i, True))
            k = kind[i]
            if k == 2:
                frame[q1[i]] ^= frame[q0[i]]
            elif k == 1:
                frame[q0[i]] = 0
            elif k == 3:
                meas[mcyc[i], q0[i] - self.n_data] = frame[q0[i]]
            elif k == 4:
                final = frame[: self.n_data].copy()
            apply((i, False))

        det = np.empty((self.n_cycles + 1, self.n_z, n_bytes), dtype=np.uint8)
        det[0] = meas[0]
        det[1 : self.n_cycles] = meas[1:] ^ meas[:-1]
        final_bits = np.unpackbits(final, axis=1, bitorder="little")[:, :n_f]
        check_par = (self._hz.astype(np.int64) @ final_bits.astype(np.int64)) & 1
        det[self.n_cycles] = meas[-1] ^ np.packbits(check_par.astype(np.uint8), axis=1, bitorder="little")
        det_bits = np.unpackbits(det.reshape(self.n_detectors, n_bytes), axis=1, bitorder="little")[:, :n_f]
        obs_bits = ((self._lz.astype(np.int64) @ final_bits.astype(np.int64)) & 1).astype(np.uint8)

        cols, rows = np.nonzero(det_bits.T)
        splits = np.searchsorted(cols, np.arange(1, n_f))
        dets = np.split(rows, splits)
        ocols, orows = np.nonzero(obs_bits.T)
        obs = np.split(orows, np.searchsorted(ocols, np.arange(1, n_f)))
        return dets, obs


def build_extraction_circuit(
    code: CssCode, n_cycles: int, layout: str = "z_only", cnot_noise: str = "before", **kwargs
) -> ExtractionCircuit:
    """Build the repeated Z-basis memory circuit for ``code``."""
    return ExtractionCircuit(code, n_cycles, layout=layout, cnot_noise=cnot_noise, **kwargs)


def site_paulis(site: FaultSite) -> tuple[str, ...]:
    if site.kind == "cnot":
        return PAULIS_2Q
    if site.kind == "idle":
        return PAULIS_1Q
    return ("F",)


def enumerate_faults(circuit: ExtractionCircuit, p: float, idle_mode: str = "split") -> list[Fault]:
    """Every single fault of the circuit-level noise model at physical rate ``p``.

    CNOT: each of the 15 two-qubit Paulis with ``p/15``.  Init, measure: a flip
    with ``p``.  Idle: ``X``, ``Y``, ``Z`` with ``p/3`` each (``idle_mode="split"``)
    or ``p`` each (``"full"``).
    """
    if not 0 < p < 0.5:
        raise ValueError("p must lie in (0, 0.5)")
    if idle_mode not in ("split", "full"):
        raise ValueError("idle_mode must be 'split' or 'full'")
    idle_p = p / 3 if idle_mode == "split" else p
    faults: list[Fault] = []
    for site in circuit.fault_sites:
        if site.kind == "cnot":
            prob = p / 15
        elif site.kind == "idle":
            prob = idle_p
        else:
            prob = p
        for pauli in site_paulis(site):
            faults.append(Fault(site.index, pauli, prob, len(faults)))
    return faults


def propagate(circuit: ExtractionCircuit, fault: Fault) -> FaultEffect:
    """Detector footprint and observable flips of a single fault."""
    site = circuit.fault_sites[fault.site]
    return circuit.propagate_x(site.op, site.before, circuit.x_support(site, fault.pauli))

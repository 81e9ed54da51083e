import numpy as np
import pytest

from bbprep.circuit import (
    PAULIS_2Q,
    Fault,
    build_extraction_circuit,
    enumerate_faults,
    propagate,
    site_paulis,
)
from bbprep.code import BB_72, BB_90, BB_144, build_bb

from oracles import FrameOracle, as_vectors, cnots_of, fault_at, fig4_pattern


# --- structure ---------------------------------------------------------------


@pytest.mark.parametrize(
    "spec,cycles,census,detectors",
    [(BB_72, 6, 21_168, 252), (BB_90, 10, 44_100, 495), (BB_144, 12, 84_672, 936)],
)
def test_census_and_detector_count(spec, cycles, census, detectors):
    circ = build_extraction_circuit(build_bb(spec), cycles)
    assert len(enumerate_faults(circ, 0.001)) == census
    assert circ.n_detectors == detectors


@pytest.mark.parametrize("spec,cycles,census", [(BB_72, 6, 42_336), (BB_144, 12, 169_344)])
def test_full_layout_census_counts_all_check_qubits(spec, cycles, census):
    circ = build_extraction_circuit(build_bb(spec), cycles, layout="full")
    assert len(enumerate_faults(circ, 0.001)) == census


def test_two_cycles_gives_three_rounds(code72):
    assert build_extraction_circuit(code72, 2).n_detectors == 3 * 36


def test_rejects_single_cycle(code72):
    with pytest.raises(ValueError):
        build_extraction_circuit(code72, 1)


def test_full_layout_needs_weight_six(steane):
    with pytest.raises(ValueError):
        build_extraction_circuit(steane, 3, layout="full")


def test_ninety_eight_faults_per_check_per_cycle(circ72):
    faults = enumerate_faults(circ72, 0.001)
    per = {}
    for f in faults:
        s = circ72.fault_sites[f.site]
        per[(s.check, s.cycle)] = per.get((s.check, s.cycle), 0) + 1
    assert set(per.values()) == {98}
    assert len(per) == 36 * 6


def test_six_cnots_per_check_per_cycle(circ72):
    counts = {}
    for op in circ72.ops:
        if op.name == "CX":
            counts[(op.qubits[1], op.cycle)] = counts.get((op.qubits[1], op.cycle), 0) + 1
    assert set(counts.values()) == {6}


def test_fault_probabilities():
    circ = build_extraction_circuit(build_bb(BB_72), 2)
    faults = enumerate_faults(circ, 0.006)
    kinds = {}
    for f in faults:
        kinds.setdefault(circ.fault_sites[f.site].kind, set()).add(f.probability)
    assert sorted(kinds["cnot"]) == pytest.approx([0.0004])
    assert kinds["init"] == {0.006} and kinds["measure"] == {0.006}
    assert sorted(kinds["idle"]) == pytest.approx([0.002])
    full = enumerate_faults(circ, 0.006, idle_mode="full")
    assert {f.probability for f in full if circ.fault_sites[f.site].kind == "idle"} == {0.006}


@pytest.mark.parametrize("p", [0.0, 0.5, -0.1])
def test_fault_rate_domain(circ72, p):
    with pytest.raises(ValueError):
        enumerate_faults(circ72, p)


def test_site_paulis():
    assert len(PAULIS_2Q) == 15 and "II" not in PAULIS_2Q


def test_dump_lists_every_op(circ72):
    lines = circ72.dump().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    assert len(body) == len(circ72.ops)
    tick, name, qubits = body[0].split("  #")[0].split(", ")
    assert name == "R" and int(tick) == 0
    assert "idle(check" in circ72.dump()


# --- the four CNOT fault cases -------------------------------------------------


@pytest.mark.parametrize(
    "gate,pauli,expected",
    [(0, "XI", ("111", "000")), (0, "XX", ("011", "100")), (1, "XZ", ("011", "100")), (1, "XY", ("001", "110"))],
)
@pytest.mark.parametrize("q", [0, 17, 40, 71])
def test_cnot_fault_cases(circ72, q, gate, pauli, expected):
    cycle = 2
    cnots = cnots_of(circ72, q, cycle)
    checks = [op.qubits[1] - circ72.n_data for _, op in cnots]
    eff = propagate(circ72, fault_at(circ72, cnots[gate][0], pauli))
    pattern = fig4_pattern(eff, circ72, checks, cycle)
    assert pattern == expected
    xor = "".join(str(int(a) ^ int(b)) for a, b in zip(*pattern))
    assert xor == "111"


def test_xi_matches_direct_data_error(circ72):
    q, cycle = 9, 3
    (first, _), *_ = cnots_of(circ72, q, cycle)
    idle = next(s for s in circ72.fault_sites if s.kind == "idle" and s.qubits == (q,) and s.cycle == cycle)
    assert propagate(circ72, fault_at(circ72, first, "XI")) == propagate(circ72, Fault(idle.index, "X", 0.001))


def test_ix_at_first_gate_looks_like_measurement_error(circ72):
    q, cycle = 9, 3
    (first, op), *_ = cnots_of(circ72, q, cycle)
    check = op.qubits[1] - circ72.n_data
    eff = propagate(circ72, fault_at(circ72, first, "IX"))
    assert eff.detectors == (circ72.detector(check, cycle), circ72.detector(check, cycle + 1))


def test_measurement_flip_pair(circ72):
    site = next(s for s in circ72.fault_sites if s.kind == "measure" and s.cycle == 4)
    c = site.qubits[0] - circ72.n_data
    eff = propagate(circ72, Fault(site.index, "F", 0.001))
    assert eff.detectors == (circ72.detector(c, 4), circ72.detector(c, 5))


def test_z_on_data_is_invisible(circ72):
    idle = next(s for s in circ72.fault_sites if s.kind == "idle")
    eff = propagate(circ72, Fault(idle.index, "Z", 0.001))
    assert eff.detectors == () and eff.observables == ()


# --- oracle comparisons -----------------------------------------------------


@pytest.mark.parametrize("layout", ["z_only", "full"])
def test_random_faults_match_frame_oracle(code72, layout):
    circ = build_extraction_circuit(code72, 4, layout=layout)
    oracle = FrameOracle(circ)
    faults = enumerate_faults(circ, 0.001)
    rng = np.random.default_rng(2024)
    for idx in rng.choice(len(faults), size=1000, replace=False):
        f = faults[idx]
        d, o = oracle.run([f])
        ed, eo = as_vectors(propagate(circ, f), circ)
        np.testing.assert_array_equal(ed, d)
        np.testing.assert_array_equal(eo, o)


def test_linearity_on_random_pairs(circ72):
    oracle = FrameOracle(circ72)
    faults = enumerate_faults(circ72, 0.001)
    rng = np.random.default_rng(5)
    for _ in range(1000):
        i, j = rng.choice(len(faults), size=2, replace=False)
        d, o = oracle.run([faults[i], faults[j]])
        d1, o1 = as_vectors(propagate(circ72, faults[i]), circ72)
        d2, o2 = as_vectors(propagate(circ72, faults[j]), circ72)
        np.testing.assert_array_equal(d, d1 ^ d2)
        np.testing.assert_array_equal(o, o1 ^ o2)


def test_fault_free_circuit_is_silent(circ72):
    d, o = FrameOracle(circ72).run([])
    assert not d.any() and not o.any()


@pytest.mark.parametrize("layout", ["z_only", "full"])
def test_batch_matches_single(code72, layout):
    circ = build_extraction_circuit(code72, 3, layout=layout)
    faults = enumerate_faults(circ, 0.001)
    rng = np.random.default_rng(9)
    picks = [faults[i] for i in rng.choice(len(faults), size=1500, replace=False)]
    dets, obs = circ.propagate_batch(picks, chunk=512)
    for f, d, o in zip(picks, dets, obs):
        eff = propagate(circ, f)
        assert tuple(d.tolist()) == eff.detectors
        assert tuple(o.tolist()) == eff.observables


def test_footprints_never_precede_the_fault(circ72):
    faults = enumerate_faults(circ72, 0.001)
    dets, _ = circ72.propagate_batch(faults)
    for f, d in zip(faults, dets):
        if len(d):
            assert d.min() // circ72.n_z >= circ72.fault_sites[f.site].cycle


def test_site_paulis_by_kind(circ72):
    kinds = {s.kind: site_paulis(s) for s in circ72.fault_sites}
    assert kinds["init"] == ("F",) and kinds["measure"] == ("F",)
    assert kinds["idle"] == ("X", "Y", "Z")
    assert len(kinds["cnot"]) == 15

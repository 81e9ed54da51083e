import itertools

import numpy as np
import pytest

from bbprep.circuit import build_extraction_circuit, enumerate_faults
from bbprep.code import BB_90, BB_144, build_bb
from bbprep.dem import (
    DemParseError,
    DetectorErrorModel,
    ErrorEvent,
    build_dem,
    format_dem,
    lookup_footprint,
    merge_events,
    parse_dem,
    read_dem,
    write_dem,
    xor_probability,
)


def test_xor_probability_values():
    assert xor_probability(0.1, 0.2) == pytest.approx(0.26)
    assert xor_probability(0.5, 0.3) == pytest.approx(0.5)
    assert xor_probability(0.0, 0.7) == 0.7


def test_merge_matches_brute_force_enumeration():
    # three detectors; several faults share footprints, one flips nothing
    raw = [
        ErrorEvent(0.01, (0,)),
        ErrorEvent(0.02, (0, 1)),
        ErrorEvent(0.03, (0,)),
        ErrorEvent(0.04, (1, 2), (0,)),
        ErrorEvent(0.05, (0,)),
        ErrorEvent(0.06, ()),
        ErrorEvent(0.07, (0, 1)),
        ErrorEvent(0.08, (1, 2)),
    ]
    merged = merge_events(raw)
    assert [e.key for e in merged] == [((0,), ()), ((0, 1), ()), ((1, 2), (0,)), ((1, 2), ())]
    exact = {e.key: 0.0 for e in merged}
    for fired in itertools.product((0, 1), repeat=len(raw)):
        weight = np.prod([e.probability if f else 1 - e.probability for e, f in zip(raw, fired)])
        for key in exact:
            if sum(f for e, f in zip(raw, fired) if e.key == key) % 2:
                exact[key] += weight
    for e in merged:
        assert e.probability == pytest.approx(exact[e.key], abs=1e-12)


def test_merged_keys_distinct_and_nonempty(dem72, dem72_full):
    for dem in (dem72, dem72_full):
        keys = [e.key for e in dem.events]
        assert len(set(keys)) == len(keys)
        assert all(e.detectors for e in dem.events)


@pytest.mark.parametrize(
    "spec,cycles,layout,count",
    [
        (None, 6, "z_only", 1584),
        (BB_90, 10, "z_only", 3240),
        (BB_144, 12, "z_only", 6192),
        (None, 6, "full", 2232),
        (BB_144, 12, "full", 8784),
    ],
)
def test_frozen_merged_counts(code72, spec, cycles, layout, count):
    code = code72 if spec is None else build_bb(spec)
    dem = build_dem(build_extraction_circuit(code, cycles, layout=layout), 0.001)
    assert len(dem) == count


def test_unmerged_length_is_fault_census(circ72):
    assert len(build_dem(circ72, 0.001, merge=False)) == 21_168


def test_event_shapes_z_only(dem72):
    sizes = np.bincount([len(e.detectors) for e in dem72.events])
    assert sizes[2] == 216 and sizes[3] == 1368 and sizes.sum() == 1584


def test_footprint_index_is_bijective(dem72):
    index = dem72.footprint_index
    ids = sorted(i for v in index.values() for i in v)
    assert ids == list(range(len(dem72)))
    for fp, v in index.items():
        for i in v:
            assert dem72.events[i].detectors == fp
    e = dem72.events[100]
    assert 100 in lookup_footprint(dem72, reversed(e.detectors))
    assert lookup_footprint(dem72, (0, 1, 2, 3, 4)) == []


def test_check_matrix_orientation(dem72):
    d = dem72.check_matrix
    assert d.shape == (252, 1584)
    xi = np.zeros(len(dem72), dtype=np.uint8)
    xi[7] = 1
    assert np.flatnonzero(dem72.syndrome(xi)).tolist() == list(dem72.events[7].detectors)
    batch = np.stack([xi, np.zeros_like(xi)])
    assert dem72.syndrome(batch).shape == (2, 252)


def test_syndrome_is_linear_in_fired_faults(circ72, dem72):
    """A set of faults yields ``D @ xi`` where ``xi`` is their parity per event."""
    faults = enumerate_faults(circ72, 0.001)
    dets, obs = circ72.propagate_batch(faults)
    owner = {}
    for i, e in enumerate(dem72.events):
        for f in e.provenance:
            owner[f] = i
    rng = np.random.default_rng(17)
    for _ in range(200):
        chosen = rng.choice(len(faults), size=rng.integers(1, 12), replace=False)
        want_d = np.zeros(dem72.n_detectors, dtype=np.uint8)
        want_o = np.zeros(dem72.n_observables, dtype=np.uint8)
        xi = np.zeros(len(dem72), dtype=np.uint8)
        for f in chosen:
            want_d[dets[f]] ^= 1
            want_o[obs[f]] ^= 1
            if f in owner:
                xi[owner[f]] ^= 1
        np.testing.assert_array_equal(dem72.syndrome(xi), want_d)
        np.testing.assert_array_equal(dem72.observable_flips(xi), want_o)


def test_probabilities_vanish_monotonically(circ72):
    totals = [build_dem(circ72, p).priors.sum() for p in (1e-3, 1e-4, 1e-5)]
    assert totals[0] > totals[1] > totals[2]
    assert totals[2] < 0.02


def test_roundtrip_is_exact(dem72, tmp_path):
    path = tmp_path / "m.dem"
    write_dem(dem72, path)
    back = read_dem(path)
    assert back == dem72
    assert back.merged


def test_two_event_file():
    text = "detectors 4\nobservables 1\n# comment\n\nerror(0.125) D0 D3 L0\nerror(0.5) D2  # tail\n"
    dem = parse_dem(text)
    assert dem.n_detectors == 4 and dem.n_observables == 1
    assert [e.key for e in dem.events] == [((0, 3), (0,)), ((2,), ())]
    assert dem.priors.tolist() == [0.125, 0.5]
    assert format_dem(dem) == "detectors 4\nobservables 1\nerror(0.125) D0 D3 L0\nerror(0.5) D2\n"


def test_truncated_file_reports_line(dem72):
    text = format_dem(dem72)
    cut = text[: text.index("\n", 200) + 8]
    with pytest.raises(DemParseError) as info:
        parse_dem(cut)
    assert info.value.lineno == cut.count("\n") + 1


@pytest.mark.parametrize(
    "text,line",
    [
        ("observables 1\nerror(0.1) D0\n", 2),
        ("detectors 2\nobservables 0\nerror(1.5) D0\n", 3),
        ("detectors 2\nobservables 0\nerror(0.1) D2\n", 3),
        ("detectors 2\nobservables 0\nerror(0.1) X1\n", 3),
        ("detectors 2\nobservables 0\nerror(0.1) D1 D1\n", 3),
        ("detectors 2\ndetectors 2\n", 2),
        ("detectors x\n", 1),
    ],
)
def test_malformed_inputs(text, line):
    with pytest.raises(DemParseError) as info:
        parse_dem(text)
    assert info.value.lineno == line


def test_constructor_range_checks():
    with pytest.raises(ValueError):
        DetectorErrorModel(2, 0, [ErrorEvent(0.1, (2,))])
    with pytest.raises(ValueError):
        DetectorErrorModel(2, 0, [ErrorEvent(1.1, (0,))])


def test_with_priors_keeps_structure(dem72):
    q = np.full(len(dem72), 0.01)
    other = dem72.with_priors(q)
    assert [e.key for e in other.events] == [e.key for e in dem72.events]
    assert other != dem72
    with pytest.raises(ValueError):
        dem72.with_priors(q[:-1])

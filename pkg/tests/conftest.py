import numpy as np
import pytest

from bbprep.circuit import build_extraction_circuit
from bbprep.code import BB_72, BB_90, BB_144, BitMatrix, build_bb, make_css
from bbprep.dem import DetectorErrorModel, ErrorEvent, build_dem
from bbprep.preprocess import CheckAdjacency


@pytest.fixture(scope="session")
def code72():
    return build_bb(BB_72)


@pytest.fixture(scope="session")
def code90():
    return build_bb(BB_90)


@pytest.fixture(scope="session")
def code144():
    return build_bb(BB_144)


@pytest.fixture(scope="session")
def circ72(code72):
    return build_extraction_circuit(code72, 6)


@pytest.fixture(scope="session")
def circ72_full(code72):
    return build_extraction_circuit(code72, 6, layout="full")


@pytest.fixture(scope="session")
def dem72(circ72):
    return build_dem(circ72, 0.001)


@pytest.fixture(scope="session")
def dem72_full(circ72_full):
    return build_dem(circ72_full, 0.001)


@pytest.fixture(scope="session")
def adj72(code72):
    return CheckAdjacency.from_code(code72)


@pytest.fixture(scope="session")
def steane():
    """[[7,1,3]] Steane code: a small CSS code with weight-4 checks."""
    h = np.array(
        [
            [1, 0, 1, 0, 1, 0, 1],
            [0, 1, 1, 0, 0, 1, 1],
            [0, 0, 0, 1, 1, 1, 1],
        ],
        dtype=np.uint8,
    )
    return make_css(BitMatrix.from_dense(h), BitMatrix.from_dense(h), name="[[7,1,3]]", distance=3)


def toy_dem(columns, priors, n_detectors=None, observables=None):
    """DEM from explicit detector supports (one tuple per event)."""
    if n_detectors is None:
        n_detectors = 1 + max(d for col in columns for d in col)
    observables = observables or [()] * len(columns)
    n_obs = 1 + max((o for obs in observables for o in obs), default=-1)
    events = [ErrorEvent(float(p), tuple(sorted(c)), tuple(o)) for c, p, o in zip(columns, priors, observables)]
    return DetectorErrorModel(n_detectors, max(n_obs, 0), events)


# PASS/FAIL lines from the acceptance suite, replayed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

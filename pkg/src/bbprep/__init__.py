"""BP-OSD decoding of bivariate-bicycle codes under circuit-level noise, with
a local-syndrome preprocessing stage that reweights likely single error events.

Modules, bottom-up: :mod:`~bbprep.code` (GF(2) algebra, BB codes),
:mod:`~bbprep.circuit` (Z-basis memory circuit, faults, propagation),
:mod:`~bbprep.dem` (detector error models), :mod:`~bbprep.bp`,
:mod:`~bbprep.osd`, :mod:`~bbprep.preprocess` and :mod:`~bbprep.harness`.
"""

from .bp import BpConfig, BpResult, decode_bp
from .circuit import ExtractionCircuit, Fault, FaultEffect, build_extraction_circuit, enumerate_faults, propagate
from .code import (
    BB_72,
    BB_90,
    BB_144,
    BB_CODES,
    BbSpec,
    BitMatrix,
    CssCode,
    build_bb,
    gf2_nullspace,
    gf2_rank,
    gf2_solve,
    load_spec,
    shift_matrices,
)
from .dem import DetectorErrorModel, ErrorEvent, build_dem, lookup_footprint, read_dem, write_dem
from .harness import Decoder, ExperimentConfig, aggregate, bench, run_trial, sample_shot
from .osd import OsdConfig, decode_osd
from .preprocess import (
    CheckAdjacency,
    PreprocessConfig,
    PreprocessReport,
    coverage_analysis,
    detect_events,
    generalized_signature,
    update_channel,
)

__version__ = "0.1.0"

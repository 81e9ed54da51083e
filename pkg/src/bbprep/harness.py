"""Monte Carlo comparison of plain BP-OSD against preprocessing + BP-OSD.

Every shot samples fired events from the merged DEM, forms the syndrome, and
decodes it with the baseline and with each preprocessing factor.  Both arms
see the same syndrome.  All-zero syndromes skip decoding and count as zero
iterations.

Shots are generated in fixed-size blocks, block ``b`` drawing from
``np.random.default_rng([seed, b])``, so results do not depend on the number
of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bp import BpConfig, decode_bp
from .circuit import ExtractionCircuit, build_extraction_circuit
from .code import BbSpec, CssCode, build_bb
from .dem import DetectorErrorModel, build_dem
from .osd import OsdConfig, decode_osd
from .preprocess import CheckAdjacency, PreprocessConfig, detect_events, update_channel

MAX_ITER_TABLE = ((0.0005, 100), (0.001, 300), (0.002, 500), (0.003, 1000), (0.0045, 3000), (0.006, 5000))
BLOCK_SIZE = 1000


def default_max_iterations(p: float) -> int:
    """Iteration cap of the first table entry whose rate is at least ``p``."""
    for rate, cap in MAX_ITER_TABLE:
        if p <= rate * (1 + 1e-9):
            return cap
    return MAX_ITER_TABLE[-1][1]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    spec: BbSpec
    p: float
    shots: int
    seed: int = 0
    n_cycles: int | None = None  # defaults to the code distance
    max_iterations: int | None = None  # defaults to the rate table
    factors: tuple[float, ...] = (2.0,)
    osd_order: int = 0
    ms_factor: float = 1.0
    layout: str = "z_only"
    signature: str = "anchored"
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.p < 0.5:
            raise ConfigError("p must lie in (0, 0.5)")
        if self.shots < 1:
            raise ConfigError("shots must be positive")
        if self.n_cycles is None and self.spec.distance is None:
            raise ConfigError("n_cycles is required when the spec carries no distance")
        if self.resolved_cycles < 2:
            raise ConfigError("n_cycles must be at least 2")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")
        if any(f < 1 for f in self.factors):
            raise ConfigError("scale factors must be at least 1")
        if self.osd_order < 0:
            raise ConfigError("osd_order must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    @property
    def resolved_cycles(self) -> int:
        return int(self.n_cycles if self.n_cycles is not None else self.spec.distance)

    @property
    def resolved_max_iterations(self) -> int:
        return int(self.max_iterations or default_max_iterations(self.p))


@dataclass
class Experiment:
    config: ExperimentConfig
    code: CssCode
    circuit: ExtractionCircuit
    dem: DetectorErrorModel
    adjacency: CheckAdjacency


def build_experiment(config: ExperimentConfig) -> Experiment:
    code = build_bb(config.spec)
    circuit = build_extraction_circuit(code, config.resolved_cycles, layout=config.layout)
    dem = build_dem(circuit, config.p)
    return Experiment(config, code, circuit, dem, CheckAdjacency.from_code(code))


# ----------------------------------------------------------------------
# sampling


def sample_shots(dem: DetectorErrorModel, rng: np.random.Generator, n: int):
    """``n`` independent shots: fired events, syndromes and observable flips (uint8 rows)."""
    xi = (rng.random((n, dem.n_events)) < dem.priors).astype(np.uint8)
    return xi, dem.syndrome(xi), dem.observable_flips(xi)


def sample_shot(dem: DetectorErrorModel, rng: np.random.Generator):
    """One shot: ``(xi, syndrome, observable flips)``."""
    xi, syn, obs = sample_shots(dem, rng, 1)
    return xi[0], syn[0], obs[0]


# ----------------------------------------------------------------------
# decoding


@dataclass(frozen=True)
class DecodeOutcome:
    converged: bool
    iterations: int
    estimate: np.ndarray
    invoked: bool  # False when the syndrome was all zero
    bp_time: float = 0.0
    osd_time: float = 0.0
    pre_time: float = 0.0
    n_pre_events: int = 0


class Decoder:
    """BP-OSD over a fixed DEM, optionally preceded by preprocessing."""

    def __init__(
        self,
        dem: DetectorErrorModel,
        adjacency: CheckAdjacency | None = None,
        bp: BpConfig = BpConfig(),
        osd: OsdConfig = OsdConfig(),
        pre: PreprocessConfig = PreprocessConfig(),
    ):
        self.dem = dem
        self.adjacency = adjacency
        self.bp = bp
        self.osd = osd
        self.pre = pre
        self.priors = dem.priors

    def decode(self, syndrome, factor: float | None = None) -> DecodeOutcome:
        """Baseline when ``factor`` is None, otherwise preprocessing at ``factor``."""
        syndrome = np.asarray(syndrome, dtype=np.uint8)
        if not syndrome.any():
            return DecodeOutcome(True, 0, np.zeros(self.dem.n_events, dtype=np.uint8), False)
        priors = self.priors
        pre_time = 0.0
        n_pre = 0
        if factor is not None:
            if self.adjacency is None:
                raise ValueError("preprocessing needs the check adjacency")
            t0 = time.perf_counter()
            report = detect_events(syndrome, self.dem, self.adjacency, self.pre)
            priors = update_channel(priors, report.events, factor)
            pre_time = time.perf_counter() - t0
            n_pre = len(report.events)
        t0 = time.perf_counter()
        res = decode_bp(self.dem, priors, syndrome, self.bp)
        bp_time = time.perf_counter() - t0
        osd_time = 0.0
        estimate = res.hard_decision
        if not res.converged:
            t0 = time.perf_counter()
            estimate = decode_osd(self.dem, res.posteriors, syndrome, self.osd, priors=priors)
            osd_time = time.perf_counter() - t0
        return DecodeOutcome(res.converged, res.iterations_used, estimate, True, bp_time, osd_time, pre_time, n_pre)


@dataclass(frozen=True)
class TrialRecord:
    converged: bool
    iterations: int
    invoked: bool
    logical_failure: bool
    bp_time: float
    osd_time: float
    pre_time: float
    n_pre_events: int


def run_trial(decoder: Decoder, syndrome, observables, factor: float | None = None) -> TrialRecord:
    """Decode one syndrome; failure iff the correction's observable flips differ."""
    out = decoder.decode(syndrome, factor)
    fail = bool(np.any(decoder.dem.observable_flips(out.estimate) != np.asarray(observables)))
    return TrialRecord(
        out.converged, out.iterations, out.invoked, fail, out.bp_time, out.osd_time, out.pre_time, out.n_pre_events
    )


@dataclass(frozen=True)
class ShotRecord:
    block: int
    index: int
    syndrome_weight: int
    baseline: TrialRecord
    preprocessed: dict[float, TrialRecord] = field(default_factory=dict)


def run_block(exp: Experiment, block: int, n: int) -> list[ShotRecord]:
    cfg = exp.config
    decoder = Decoder(
        exp.dem,
        exp.adjacency,
        BpConfig(cfg.resolved_max_iterations, cfg.ms_factor),
        OsdConfig(cfg.osd_order),
        PreprocessConfig(cfg.signature),
    )
    rng = np.random.default_rng([cfg.seed, block])
    _, syn, obs = sample_shots(exp.dem, rng, n)
    records = []
    for i in range(n):
        base = run_trial(decoder, syn[i], obs[i])
        arms = {f: run_trial(decoder, syn[i], obs[i], f) for f in cfg.factors}
        records.append(ShotRecord(block, i, int(syn[i].sum()), base, arms))
    return records


_STATE: dict = {}


def _worker_block(args):
    block, n = args
    return run_block(_STATE["exp"], block, n)


def run_experiment(exp: Experiment, workers: int | None = None) -> list[ShotRecord]:
    """All shots of ``exp.config``, in block order."""
    cfg = exp.config
    blocks = [(b, min(BLOCK_SIZE, cfg.shots - b * BLOCK_SIZE)) for b in range(-(-cfg.shots // BLOCK_SIZE))]
    workers = cfg.workers if workers is None else workers
    if workers <= 1 or len(blocks) == 1:
        return [r for b, n in blocks for r in run_block(exp, b, n)]
    _STATE["exp"] = exp
    try:
        with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork")) as pool:
            chunks = list(pool.map(_worker_block, blocks))
    finally:
        _STATE.clear()
    return [r for chunk in chunks for r in chunk]


# ----------------------------------------------------------------------
# metrics


def _ratio(num: float, den: float) -> float | None:
    return num / den if den else None


@dataclass(frozen=True)
class ArmMetrics:
    shots: int
    invoked: int
    mean_iterations: float
    convergence_probability: float | None  # over shots where BP ran
    bp_failures: int
    logical_error_rate: float
    ler_stderr: float
    mean_pre_events: float
    mean_total_time: float
    mean_osd_time_on_failure: float | None


def arm_metrics(trials: Sequence[TrialRecord]) -> ArmMetrics:
    n = len(trials)
    if n == 0:
        raise ValueError("no trials to aggregate")
    invoked = [t for t in trials if t.invoked]
    failed_bp = [t for t in invoked if not t.converged]
    ler = sum(t.logical_failure for t in trials) / n
    return ArmMetrics(
        shots=n,
        invoked=len(invoked),
        mean_iterations=sum(t.iterations for t in trials) / n,
        convergence_probability=_ratio(sum(t.converged for t in invoked), len(invoked)),
        bp_failures=len(failed_bp),
        logical_error_rate=ler,
        ler_stderr=math.sqrt(ler * (1 - ler) / n),
        mean_pre_events=sum(t.n_pre_events for t in trials) / n,
        mean_total_time=sum(t.pre_time + t.bp_time + t.osd_time for t in trials) / n,
        mean_osd_time_on_failure=_ratio(sum(t.osd_time for t in failed_bp), len(failed_bp)),
    )


@dataclass(frozen=True)
class Comparison:
    baseline: ArmMetrics
    preprocessed: ArmMetrics
    relative_iterations: float | None
    relative_time: float | None
    convergence_improvement: float | None
    osd_runtime_reduction: float | None  # percent


def compare(baseline: ArmMetrics, pre: ArmMetrics) -> Comparison:
    conv = None
    if baseline.convergence_probability is not None and pre.convergence_probability is not None:
        conv = pre.convergence_probability - baseline.convergence_probability
    red = None
    tb, tp = baseline.mean_osd_time_on_failure, pre.mean_osd_time_on_failure
    if tb and tp is not None:
        red = (tb - tp) / tb * 100.0
    return Comparison(
        baseline,
        pre,
        _ratio(pre.mean_iterations, baseline.mean_iterations),
        _ratio(pre.mean_total_time, baseline.mean_total_time),
        conv,
        red,
    )


def aggregate(records: Sequence[ShotRecord], factor: float) -> Comparison:
    """Baseline versus the preprocessing arm at ``factor``."""
    if not records:
        raise ValueError("no records to aggregate")
    return compare(
        arm_metrics([r.baseline for r in records]),
        arm_metrics([r.preprocessed[factor] for r in records]),
    )


def paired_identical(records: Iterable[ShotRecord], factor: float) -> bool:
    """Do both arms agree on every decision-relevant field of every shot?"""
    keys = ("converged", "iterations", "invoked", "logical_failure")
    return all(
        all(getattr(r.baseline, k) == getattr(r.preprocessed[factor], k) for k in keys) for r in records
    )


# ----------------------------------------------------------------------
# output

CSV_FIELDS = (
    "code", "p", "n_cycles", "max_iter", "osd_order", "seed", "factor", "arm", "shots", "bp_invoked",
    "mean_iterations", "relative_iterations", "convergence_probability", "convergence_improvement",
    "bp_failures", "logical_error_rate", "ler_stderr", "mean_preprocessed_events",
)
TIMING_FIELDS = ("mean_time_s", "mean_osd_time_on_bp_failure_s", "relative_time", "osd_runtime_reduction_pct")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_rows(exp: Experiment, records: Sequence[ShotRecord], timing: bool = False) -> list[dict]:
    cfg = exp.config
    rows = []
    for f in cfg.factors:
        comp = aggregate(records, f)
        for arm, m in (("baseline", comp.baseline), ("preprocess", comp.preprocessed)):
            pre = arm == "preprocess"
            row = {
                "code": exp.code.label, "p": cfg.p, "n_cycles": cfg.resolved_cycles,
                "max_iter": cfg.resolved_max_iterations, "osd_order": cfg.osd_order, "seed": cfg.seed,
                "factor": f, "arm": arm, "shots": m.shots, "bp_invoked": m.invoked,
                "mean_iterations": m.mean_iterations,
                "relative_iterations": comp.relative_iterations if pre else 1.0,
                "convergence_probability": m.convergence_probability,
                "convergence_improvement": comp.convergence_improvement if pre else 0.0,
                "bp_failures": m.bp_failures, "logical_error_rate": m.logical_error_rate,
                "ler_stderr": m.ler_stderr, "mean_preprocessed_events": m.mean_pre_events,
            }
            if timing:
                row.update({
                    "mean_time_s": m.mean_total_time,
                    "mean_osd_time_on_bp_failure_s": m.mean_osd_time_on_failure,
                    "relative_time": comp.relative_time if pre else 1.0,
                    "osd_runtime_reduction_pct": comp.osd_runtime_reduction if pre else 0.0,
                })
            rows.append(row)
    return rows


def format_csv(rows: Sequence[dict], timing: bool = False) -> str:
    fields = CSV_FIELDS + (TIMING_FIELDS if timing else ())
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in fields})
    return buf.getvalue()


def write_jsonl(records: Sequence[ShotRecord], path: str | Path) -> None:
    """Per-shot audit log, one JSON object per line."""
    with open(path, "w") as fh:
        for r in records:
            obj = {
                "block": r.block, "index": r.index, "syndrome_weight": r.syndrome_weight,
                "baseline": asdict(r.baseline),
                "preprocess": {str(f): asdict(t) for f, t in r.preprocessed.items()},
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def bench(config: ExperimentConfig, timing: bool = False) -> tuple[Experiment, list[ShotRecord], str]:
    """Build, run, and render the CSV for one configuration."""
    exp = build_experiment(config)
    records = run_experiment(exp, workers=1 if timing else config.workers)
    return exp, records, format_csv(csv_rows(exp, records, timing), timing)

"""Command-line entry point: ``bbprep <subcommand> ...``.

Exit status is 0 on success and 2 on a configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bp import BpConfig
from .circuit import TICKS_PER_CYCLE, build_extraction_circuit
from .code import BB_CODES, BbSpec, build_bb, load_spec
from .dem import DemParseError, build_dem, format_dem, read_dem
from .harness import ConfigError, Decoder, ExperimentConfig, bench, default_max_iterations, write_jsonl
from .osd import OsdConfig
from .preprocess import SIGNATURES, CheckAdjacency, PreprocessConfig, coverage_analysis


class UsageError(Exception):
    pass


def resolve_spec(value: str) -> BbSpec:
    """A built-in code name (``72``, ``90``, ``144``) or a JSON spec path."""
    if value in BB_CODES:
        return BB_CODES[value]
    path = Path(value)
    if not path.exists():
        raise UsageError(f"no built-in code or spec file named {value!r} (built-ins: {', '.join(BB_CODES)})")
    try:
        return load_spec(path)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad spec file {value}: {exc}") from exc


def _cycles(spec: BbSpec, cycles: int | None) -> int:
    if cycles is not None:
        return cycles
    if spec.distance is None:
        raise UsageError("--cycles is required for specs without a distance")
    return spec.distance


def cmd_build_code(args) -> int:
    spec = resolve_spec(args.spec)
    code = build_bb(spec)
    print(f"code        {code.label}")
    print(f"l, m        {spec.l}, {spec.m}")
    print(f"n_data      {code.n_data}")
    print(f"k           {code.k}")
    for name, h in (("h_x", code.h_x), ("h_z", code.h_z)):
        rw = sorted(set(h.row_weights().tolist()))
        cw = sorted(set(h.col_weights().tolist()))
        print(f"{name}         {h.rows}x{h.cols}  row weights {rw}  column weights {cw}")
    return 0


def cmd_build_dem(args) -> int:
    spec = resolve_spec(args.spec)
    code = build_bb(spec)
    circuit = build_extraction_circuit(code, _cycles(spec, args.cycles), layout=args.layout, cnot_noise=args.cnot_noise)
    if args.dump_circuit is not None:
        text = circuit.dump()
        if args.dump_circuit == "-":
            sys.stdout.write(text)
        else:
            Path(args.dump_circuit).write_text(text)
    dem = build_dem(circuit, args.p, merge=not args.unmerged, idle_mode=args.idle)
    text = format_dem(dem)
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(dem)} events, {dem.n_detectors} detectors, {dem.n_observables} observables -> {args.out}")
    elif args.dump_circuit != "-":
        sys.stdout.write(text)
    return 0


def cmd_coverage(args) -> int:
    names = args.code or list(BB_CODES)
    print(f"{'code':<16}{'cycles':>7}{'events':>9}{'covered':>9}{'event cov.':>12}{'prob. cov.':>12}")
    for name in names:
        spec = resolve_spec(name)
        code = build_bb(spec)
        circuit = build_extraction_circuit(code, _cycles(spec, args.cycles), layout=args.layout)
        dem = build_dem(circuit, args.p)
        cov = coverage_analysis(
            dem, CheckAdjacency.from_code(code), PreprocessConfig(args.signature), criterion=args.criterion
        )
        print(
            f"{code.label:<16}{circuit.n_cycles:>7}{cov.n_events:>9}{cov.n_covered:>9}"
            f"{100 * cov.event_coverage:>11.2f}%{100 * cov.probability_coverage:>11.2f}%"
        )
    return 0


def _factors(values) -> tuple[float, ...]:
    out = []
    for v in values or ["2"]:
        for part in str(v).split(","):
            if part.strip():
                out.append(float(part))
    return tuple(out)


def cmd_bench(args) -> int:
    spec = resolve_spec(args.spec)
    cfg = ExperimentConfig(
        spec=spec,
        p=args.p,
        shots=args.shots,
        seed=args.seed,
        n_cycles=args.cycles,
        max_iterations=args.max_iter,
        factors=_factors(args.scale_factor),
        osd_order=args.osd_order,
        ms_factor=args.ms_factor,
        layout=args.layout,
        signature=args.signature,
        workers=args.workers,
    )
    _, records, text = bench(cfg, timing=args.timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.jsonl:
        write_jsonl(records, args.jsonl)
    return 0


def _read_syndrome(path: str, n_detectors: int) -> np.ndarray:
    tokens = Path(path).read_text().replace(",", " ").split()
    syn = np.zeros(n_detectors, dtype=np.uint8)
    if len(tokens) == n_detectors and set(tokens) <= {"0", "1"}:
        syn[:] = [int(t) for t in tokens]
        return syn
    if len(tokens) == 1 and len(tokens[0]) == n_detectors and set(tokens[0]) <= {"0", "1"}:
        syn[:] = [int(ch) for ch in tokens[0]]
        return syn
    for tok in tokens:
        tok = tok[1:] if tok.startswith("D") else tok
        if not tok.isdigit() or int(tok) >= n_detectors:
            raise UsageError(f"bad syndrome entry {tok!r} for {n_detectors} detectors")
        syn[int(tok)] ^= 1
    return syn


def cmd_decode(args) -> int:
    adjacency = None
    if args.dem:
        try:
            dem = read_dem(args.dem)
        except (OSError, DemParseError) as exc:
            raise UsageError(str(exc)) from exc
        if args.spec:
            adjacency = CheckAdjacency.from_code(build_bb(resolve_spec(args.spec)))
    elif args.spec:
        spec = resolve_spec(args.spec)
        code = build_bb(spec)
        circuit = build_extraction_circuit(code, _cycles(spec, args.cycles), layout=args.layout)
        dem = build_dem(circuit, args.p)
        adjacency = CheckAdjacency.from_code(code)
    else:
        raise UsageError("decode needs --spec or --dem")
    if args.scale_factor is not None and adjacency is None:
        raise UsageError("--scale-factor with --dem also needs --spec for the check adjacency")
    syndrome = _read_syndrome(args.syndrome, dem.n_detectors)
    max_iter = args.max_iter or default_max_iterations(args.p)
    decoder = Decoder(dem, adjacency, BpConfig(max_iter, args.ms_factor), OsdConfig(args.osd_order),
                      PreprocessConfig(args.signature))
    out = decoder.decode(syndrome, args.scale_factor)
    result = {
        "flipped_detectors": np.flatnonzero(syndrome).tolist(),
        "bp_converged": out.converged,
        "bp_iterations": out.iterations,
        "events": np.flatnonzero(out.estimate).tolist(),
        "observable_flips": np.flatnonzero(dem.observable_flips(out.estimate)).tolist(),
        "preprocessed_events": out.n_pre_events,
    }
    print(json.dumps(result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbprep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def circuit_opts(p, need_p=True):
        p.add_argument("--cycles", type=int, help="syndrome cycles (default: code distance)")
        p.add_argument("--layout", choices=sorted(TICKS_PER_CYCLE), default="z_only")
        if need_p:
            p.add_argument("--p", type=float, default=0.001, help="physical error rate")

    p = sub.add_parser("build-code", help="construct a BB code and print its parameters")
    p.add_argument("--spec", required=True, help="built-in name (72, 90, 144) or JSON spec file")
    p.set_defaults(func=cmd_build_code)

    p = sub.add_parser("build-dem", help="write the detector error model (or dump the circuit)")
    p.add_argument("--spec", required=True)
    circuit_opts(p)
    p.add_argument("--cnot-noise", choices=("before", "after"), default="before")
    p.add_argument("--idle", choices=("split", "full"), default="split", help="idle Paulis at p/3 or p each")
    p.add_argument("--unmerged", action="store_true", help="one event per fault")
    p.add_argument("--out", help="DEM output path (default: stdout)")
    p.add_argument("--dump-circuit", nargs="?", const="-", metavar="PATH", help="also list the circuit")
    p.set_defaults(func=cmd_build_dem)

    p = sub.add_parser("coverage", help="event and probability coverage of the preprocessor")
    p.add_argument("--code", "--spec", action="append", help="repeatable; default: all built-ins")
    circuit_opts(p)
    p.add_argument("--signature", choices=SIGNATURES, default="anchored")
    p.add_argument("--criterion", choices=("detect", "signature"), default="detect")
    p.set_defaults(func=cmd_coverage)

    def decoder_opts(p):
        p.add_argument("--max-iter", type=int, help="BP iteration cap (default: rate table)")
        p.add_argument("--ms-factor", type=float, default=1.0)
        p.add_argument("--osd-order", type=int, default=0)
        p.add_argument("--signature", choices=SIGNATURES, default="anchored")

    p = sub.add_parser("bench", help="Monte Carlo baseline vs preprocessing comparison")
    p.add_argument("--spec", required=True)
    circuit_opts(p)
    decoder_opts(p)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale-factor", action="append", help="repeatable or comma list (default 2)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="single-threaded, adds wall-clock columns")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--jsonl", help="per-shot audit log path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("decode", help="decode one syndrome")
    p.add_argument("--spec")
    p.add_argument("--dem", help="DEM file instead of building one from --spec")
    circuit_opts(p)
    decoder_opts(p)
    p.add_argument("--syndrome", required=True, help="0/1 vector or flipped detector indices")
    p.add_argument("--scale-factor", type=float, help="preprocess with this factor")
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

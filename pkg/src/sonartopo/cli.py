"""Command-line entry point: ``sonartopo <subcommand> ...``.

Exit status is 0 on success, 2 for invalid input or configuration and 3 when
a computation stage fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .core import DomainError
from .echoes import analyze
from .embedding import DelayConfig, delay_embed
from .io import ingest_array, read_cloud, read_diagram, write_array, write_cloud, write_diagram
from .persistence import distance_matrix, rips_persistence
from .pipeline import RunConfig, StageError, clean_signal, noise_sweep, noisy_signal, run_pipeline

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_COMPUTE = 3


def _floats(text: str):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _config(args) -> RunConfig:
    base = RunConfig.from_file(args.config).to_dict() if getattr(args, "config", None) else {}
    for key in ("sigma", "seed", "max_eps", "max_dim", "output_dir", "input"):
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    if getattr(args, "sigmas", None) is not None:
        base["noise_sigmas"] = list(args.sigmas)
    return RunConfig.from_dict(base)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    smap = noisy_signal(clean_signal(cfg), cfg.sigma, cfg.seed)
    write_array(smap, args.out)
    print(f"wrote {smap.domain.size} x {smap.channels} map to {args.out}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    smap = ingest_array(args.path)
    info = {
        "rows": smap.domain.size,
        "channels": smap.channels,
        "complex": smap.is_complex,
        "range_bin_m": smap.range_bin_m,
    }
    print(json.dumps(info, sort_keys=True))
    if args.out:
        write_array(smap, args.out)
    return EXIT_OK


def cmd_embed(args) -> int:
    smap = ingest_array(args.input)
    cfg = DelayConfig(args.offsets, args.reducer, tuple(args.range_gate) if args.range_gate else None)
    cloud = delay_embed(smap, cfg)
    write_cloud(cloud, args.out)
    print(f"wrote {len(cloud)} points of dimension {cloud.ambient_dim} to {args.out}")
    return EXIT_OK


def cmd_persist(args) -> int:
    cloud = read_cloud(args.cloud)
    diag = rips_persistence(distance_matrix(cloud, args.metric), args.max_dim, args.max_eps)
    write_diagram(diag, args.out)
    print(f"wrote {len(diag.features)} features to {args.out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    smap = ingest_array(args.input)
    diag = None
    if args.diagram:
        diag = read_diagram(args.diagram, args.max_eps if args.max_eps is not None else math.inf)
    rep = analyze(smap, diag, args.threshold, args.tolerance, args.effective_sigma)
    text = rep.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    res = run_pipeline(cfg)
    rep = res["report"]
    print(f"{len(rep.echos)} echo(s); artifacts in {cfg.output_dir}")
    for e, v in zip(rep.echos, rep.verdicts):
        print(f"  peak {e.peak_angle:g} deg  sigma {e.sigma:.4g}  {'PASS' if v.passed else 'FAIL'}: {v.reason}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    rows = noise_sweep(cfg)
    for s, d, p in rows:
        print(f"sigma {s:g}: top-loop death {d:.4g}, persistence {p:.4g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sonartopo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--sigma", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--max-eps", dest="max_eps", type=float)
        p.add_argument("--max-dim", dest="max_dim", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--input", help="array file to use instead of simulating")

    p = sub.add_parser("simulate", help="simulate the pipe scene and write the map")
    run_flags(p)
    p.add_argument("--out", required=True, help=".csv or .bin (with .json sidecar)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("ingest", help="validate an array file and print its shape")
    p.add_argument("path")
    p.add_argument("--out", help="optionally convert to another format")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("embed", help="delay-embed a circle map")
    p.add_argument("input")
    p.add_argument("--offsets", type=_floats, default=(0.0, 4.0, 25.0))
    p.add_argument("--reducer", default="identity", choices=("identity", "magnitude", "max", "l2"))
    p.add_argument("--range-gate", dest="range_gate", type=int, nargs=2)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("persist", help="Rips persistence of a point cloud CSV")
    p.add_argument("cloud")
    p.add_argument("--metric", default="euclidean", choices=("euclidean", "polyline-geodesic"))
    p.add_argument("--max-dim", dest="max_dim", type=int, default=1, choices=(0, 1, 2))
    p.add_argument("--max-eps", dest="max_eps", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_persist)

    p = sub.add_parser("analyze", help="detect echos and check death bounds")
    p.add_argument("input")
    p.add_argument("--diagram")
    p.add_argument("--max-eps", dest="max_eps", type=float, help="truncation scale the diagram was computed at")
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--effective-sigma", dest="effective_sigma", type=float)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("pipeline", help="run every stage and write all artifacts")
    run_flags(p)
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("sweep-noise", help="top-loop death and persistence versus noise level")
    run_flags(p)
    p.add_argument("--sigmas", type=_floats)
    p.set_defaults(fn=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.fn(args)
    except StageError as exc:
        if isinstance(exc.cause, DomainError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"error: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``contmem {run,export-density,selftest,gen}``.

Exit codes: 0 success, 2 malformed input, 3 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from .attention import DensityProfile
from .config import PipelineConfig
from .errors import InvalidArgumentError, SingularMatrixError
from .harness import SyntheticStreamSpec, generate_stream
from .numerics import uniform_grid
from .pipeline import default_projections, default_queries, run_stream
from .streamio import StreamReader, read_weights, write_matrix, write_stream

log = logging.getLogger("contmem")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def density_csv(densities: np.ndarray, grid_points: np.ndarray) -> str:
    """CSV with columns ``t, aggregated, head_0..head_{H-1}`` (9 significant digits)."""
    heads = densities.shape[0]
    per_head = densities.mean(axis=1)
    agg = densities.mean(axis=(0, 1))
    lines = [",".join(["t", "aggregated"] + [f"head_{h}" for h in range(heads)])]
    for k, t in enumerate(grid_points):
        row = [t, agg[k]] + list(per_head[:, k])
        lines.append(",".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def _load_config(path):
    if path is None:
        return PipelineConfig()
    with open(path) as fh:
        return PipelineConfig.from_json(fh.read())


def cmd_run(args) -> int:
    reader = StreamReader(args.input)
    h = reader.header
    cfg = _load_config(args.config)
    # the stream's own geometry wins over configured frame/patch/dim values
    cfg = cfg.replace(M=h["chunk_frames"], P=h["patches"], e=h["dim"])
    proj = [read_weights(args.weights)] * cfg.depth if args.weights else default_projections(cfg)
    queries = default_queries(cfg)

    os.makedirs(args.out, exist_ok=True)
    chunks_meta = []

    def save(diag):
        c = diag.chunk_index
        np.save(os.path.join(args.out, f"density_chunk_{c}.npy"), diag.profile.densities)
        with open(os.path.join(args.out, f"density_chunk_{c}.csv"), "w") as fh:
            fh.write(density_csv(diag.profile.densities, diag.profile.grid.points))
        chunks_meta.append({"index": c, "frames": diag.frames, "seconds": diag.seconds,
                            "histogram": [float(x) for x in diag.histogram]})

    started = time.perf_counter()
    result = run_stream(reader, cfg, proj, queries, keep_diagnostics=False, on_chunk=save)
    if not np.all(np.isfinite(result.tokens)):
        raise FloatingPointError("non-finite output tokens")
    write_matrix(os.path.join(args.out, "tokens.bin"), result.tokens)
    report = {
        "input": os.path.abspath(args.input),
        "config": cfg.to_dict(),
        "alpha": cfg.alpha,
        "chunks": chunks_meta,
        "tokens": {"rows": int(result.tokens.shape[0]), "cols": int(result.tokens.shape[1])},
        "seconds": time.perf_counter() - started,
    }
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    log.info("processed %d chunks into %s", result.chunks, args.out)
    return EXIT_OK


def cmd_export_density(args) -> int:
    if args.format != "csv":
        raise InvalidArgumentError(f"unsupported format {args.format!r}")
    path = os.path.join(args.input, f"density_chunk_{args.chunk}.npy")
    if not os.path.exists(path):
        raise InvalidArgumentError(f"no density stored for chunk {args.chunk} in {args.input}")
    densities = np.load(path)
    text = density_csv(densities, uniform_grid(0.0, 1.0, densities.shape[-1]).points)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    weights = None
    if args.weights:
        try:
            weights = read_weights(args.weights)
        except (OSError, InvalidArgumentError) as exc:
            print(f"error: weights file unusable: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
    started = time.perf_counter()
    results = run_selftest(weights)
    width = max(len(name) for name, *_ in results)
    for name, ok, secs, msg in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {secs:6.2f}s  {msg}".rstrip())
    failed = sum(not ok for _, ok, _, _ in results)
    print(f"{len(results) - failed}/{len(results)} passed in {time.perf_counter() - started:.1f}s")
    if failed:
        return EXIT_NUMERIC if weights is not None else 1
    return EXIT_OK


def cmd_gen(args) -> int:
    with open(args.spec) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"spec is not valid JSON: {exc}") from exc
    spec = SyntheticStreamSpec.from_dict(data)
    chunks, truth = generate_stream(spec)
    write_stream(args.out, np.concatenate([c.embeddings for c in chunks]), spec.M)
    with open(args.out + ".truth.json", "w") as fh:
        json.dump({"spec": spec.to_dict(), "truth": truth.to_dict()}, fh, indent=2)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contmem", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="stream an embedding file through the memory")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--weights")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export-density", help="write one chunk's attention density as CSV")
    p.add_argument("--input", required=True, help="run directory")
    p.add_argument("--chunk", type=int, required=True)
    p.add_argument("--format", default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_density)

    p = sub.add_parser("selftest", help="run the built-in property checks")
    p.add_argument("--weights")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("gen", help="write a synthetic needle stream")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SingularMatrixError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidArgumentError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

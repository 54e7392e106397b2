"""Command-line interface: encode, decode, render, report, bench, config.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 format or decode error,
4 infeasible budget.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .bitstream import SECTIONS, decode, encode, section_bits
from .errors import BudgetInfeasibleError, ContractViolation, DecodeError
from .metrics import quality
from .raster import fit_to_square, load_image, render, save_image, wireframe
from .search.config import OPS, SearchConfig, apply_overrides, dump_config, load_config
from .search.greedy import baseline_encode, init_stochastic, shrink_to_budget
from .search.stochastic import fork, make_rng, stochastic_encode

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FORMAT, EXIT_BUDGET = 0, 1, 2, 3, 4
JOBS_ENV = "TRICODEC_JOBS"
IMAGE_SUFFIXES = (".png", ".ppm", ".pnm", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
INIT_LABEL = "init"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- configuration from flags ------------------------------------------------------

def _ops_arg(text: str) -> str:
    """``--ops`` value: a subset of ``abcdefg``; ``init`` or ``none`` mean no search."""
    return "" if text in (INIT_LABEL, "none") else text


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, help="grid points per side (default 52)")
    p.add_argument("--budget", help="target size in bytes, or 'auto' (default)")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--algorithm", choices=("baseline", "stochastic"))
    p.add_argument("--ops", help="operators to enable, a subset of abcdefg")
    p.add_argument("--metric", choices=("mse", "ssim"))
    p.add_argument("--iters", type=int, help="search iterations")
    p.add_argument("--patience", type=int, help="stop after this many stale iterations")
    p.add_argument("--config", help="key = value configuration file")


def config_from_args(args) -> SearchConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else SearchConfig()
    pairs = {}
    for flag, key in (("grid", "grid"), ("budget", "budget"), ("seed", "seed"),
                      ("algorithm", "algorithm"), ("metric", "metric"),
                      ("iters", "max_iterations"), ("patience", "patience")):
        value = getattr(args, flag, None)
        if value is not None:
            pairs[key] = value
    if getattr(args, "ops", None) is not None:
        pairs["ops"] = _ops_arg(args.ops)
    return apply_overrides(cfg, pairs)


def _read_image(path, cfg: SearchConfig):
    return fit_to_square(load_image(path), cfg.size)


def _report_line(q) -> str:
    return f"bytes={q.bytes} psnr={q.psnr:.2f} ssim={q.ssim:.4f}"


# -- single-image commands -----------------------------------------------------------

def _encode_model(target, cfg: SearchConfig):
    if cfg.algorithm == "baseline":
        return baseline_encode(target, cfg)
    return stochastic_encode(target, cfg, make_rng(cfg.seed))


def cmd_encode(args) -> int:
    cfg = config_from_args(args)
    target = _read_image(args.input, cfg)
    model = _encode_model(target, cfg)
    data = encode(model)
    Path(args.output).write_bytes(data)
    print(_report_line(quality(target, render(model), len(data))), file=sys.stderr)
    return EXIT_OK


def _read_model(path):
    return decode(Path(path).read_bytes())


def cmd_decode(args) -> int:
    model = _read_model(args.input)
    save_image(render(model, scale=args.scale), args.output)
    return EXIT_OK


def cmd_render(args) -> int:
    model = _read_model(args.input)
    if args.wireframe:
        img = wireframe(model, scale=args.scale)
    else:
        img = render(model, scale=args.scale)
    save_image(img, args.output)
    return EXIT_OK


def cmd_report(args) -> int:
    data = Path(args.tri).read_bytes()
    model = decode(data)
    out = [f"grid={model.grid.g} size={model.grid.width}x{model.grid.height}",
           f"vertices={model.n_vertices} colors={len(model.colors)}"]
    bits = section_bits(model)
    out.append("header bits=64")
    out.extend(f"{name} bits={bits[name]:.1f}" for name in SECTIONS)
    if args.image:
        target = fit_to_square(load_image(args.image), model.grid.width)
        out.append(_report_line(quality(target, render(model), len(data))))
    else:
        out.append(f"bytes={len(data)}")
    print("\n".join(out))
    return EXIT_OK


def cmd_config(args) -> int:
    sys.stdout.write(dump_config(config_from_args(args)))
    return EXIT_OK


# -- benchmark -----------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRecord:
    """One CSV row: a single image encoded under one configuration."""

    image: str
    grid: int
    bytes: int
    psnr: float
    ssim: float
    seconds: float
    seed: int
    ops: str


CSV_FIELDS = tuple(f.name for f in fields(BenchRecord))


def _ops_label(ops: str) -> str:
    return ops or INIT_LABEL


def _record(name, target, model, cfg, seconds, label) -> BenchRecord:
    data = encode(model)
    q = quality(target, render(model), len(data))
    return BenchRecord(name, cfg.grid, len(data), round(q.psnr, 4), round(q.ssim, 6),
                       round(seconds, 3), cfg.seed, label)


def bench_group(path: str, cfg: SearchConfig, op_sets: tuple[str, ...],
                timing: bool = True) -> list[BenchRecord]:
    """Encode one image at one (grid, seed) under every operator set.

    The stochastic runs share one greedy initialization and each continues
    from its own copy of the generator, so they differ only in the search.
    """
    name = Path(path).stem
    target = _read_image(path, cfg)
    clock = time.perf_counter if timing else (lambda: 0.0)
    t0 = clock()
    if cfg.algorithm == "baseline":
        model = baseline_encode(target, cfg)
        return [_record(name, target, model, cfg, clock() - t0, "baseline")]
    rng = make_rng(cfg.seed)
    init = shrink_to_budget(init_stochastic(target, cfg, rng), target, cfg)
    t_init = clock() - t0
    out = []
    for ops in op_sets:
        run = cfg.with_ops(ops) if ops != cfg.ops else cfg
        t1 = clock()
        model = stochastic_encode(target, run, fork(rng), init=init)
        out.append(_record(name, target, model, run, t_init + clock() - t1, _ops_label(ops)))
    return out


def _bench_task(task):
    return bench_group(*task)


def default_jobs() -> int:
    text = os.environ.get(JOBS_ENV, "")
    try:
        return max(1, int(text))
    except ValueError:
        return 1


def run_bench(paths, cfg: SearchConfig, grids, seeds, op_sets, jobs: int = 1,
              timing: bool = True) -> list[BenchRecord]:
    """All records in canonical order (image, grid, seed, operator set)."""
    tasks = [(str(p), cfg.replace(grid=g, seed=s), tuple(op_sets), timing)
             for p in paths for g in grids for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            groups = list(pool.map(_bench_task, tasks))
    else:
        groups = [_bench_task(t) for t in tasks]
    return [r for g in groups for r in g]


def write_csv(records, handle) -> None:
    w = csv.writer(handle, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow(astuple(r))


def read_csv(handle) -> list[BenchRecord]:
    out = []
    for row in csv.DictReader(handle):
        out.append(BenchRecord(row["image"], int(row["grid"]), int(row["bytes"]),
                               float(row["psnr"]), float(row["ssim"]), float(row["seconds"]),
                               int(row["seed"]), row["ops"]))
    return out


def summarize(records) -> list[tuple]:
    """Mean bytes, PSNR and SSIM per (operator set, grid), in first-seen order."""
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault((r.ops, r.grid), []).append(r)
    return [(ops, grid, len(rs), float(np.mean([r.bytes for r in rs])),
             float(np.mean([r.psnr for r in rs])), float(np.mean([r.ssim for r in rs])))
            for (ops, grid), rs in groups.items()]


def read_external(path) -> list[tuple]:
    """External codec measurements: columns codec, bytes, psnr, ssim and an
    optional setting (e.g. a JPEG quality).  Returns summary rows keyed by
    codec and setting."""
    groups: dict[tuple, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"codec", "bytes", "psnr", "ssim"} - set(reader.fieldnames or ())
        if missing:
            raise ContractViolation(f"external CSV lacks columns: {', '.join(sorted(missing))}")
        for row in reader:
            key = (row["codec"], row.get("setting", ""))
            groups.setdefault(key, []).append(
                (float(row["bytes"]), float(row["psnr"]), float(row["ssim"])))
    out = []
    for (codec, setting), rows in groups.items():
        a = np.array(rows)
        out.append((codec, setting, len(rows), *a.mean(axis=0).tolist()))
    return out


def format_summary(summary, external=()) -> str:
    lines = [f"{'config':<12} {'grid':>5} {'n':>4} {'bytes':>8} {'psnr':>7} {'ssim':>7}"]
    for ops, grid, n, b, p, s in summary:
        lines.append(f"{ops:<12} {grid:>5} {n:>4} {b:>8.1f} {p:>7.2f} {s:>7.4f}")
    for codec, setting, n, b, p, s in external:
        label = f"{codec}:{setting}" if setting else codec
        lines.append(f"{label:<12} {'-':>5} {n:>4} {b:>8.1f} {p:>7.2f} {s:>7.4f}")
    return "\n".join(lines) + "\n"


def gnuplot_data(summary, external=()) -> str:
    """One block per series (two blank lines apart) of ``bytes psnr ssim`` rows
    sorted by bytes; select a series with ``index``."""
    series: dict[str, list] = {}
    for ops, grid, n, b, p, s in summary:
        series.setdefault(ops, []).append((b, p, s))
    for codec, setting, n, b, p, s in external:
        series.setdefault(codec, []).append((b, p, s))
    blocks = []
    for name, rows in series.items():
        body = "\n".join(f"{b:.2f} {p:.4f} {s:.6f}" for b, p, s in sorted(rows))
        blocks.append(f"# {name}\n# bytes psnr ssim\n{body}\n")
    return "\n\n".join(blocks)


def _list_images(corpus) -> list[Path]:
    root = Path(corpus)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory {root} not found")
    return sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def cmd_bench(args) -> int:
    cfg = config_from_args(args)
    paths = _list_images(args.corpus)
    if not paths:
        raise UsageError(f"no images in {args.corpus}")
    grids = _int_list(args.grids) if args.grids else [cfg.grid]
    seeds = _int_list(args.seeds) if args.seeds else [cfg.seed]
    if args.ablation:
        op_sets = ["", "abc", "abcdg", OPS]
    elif args.op_sets:
        op_sets = [_ops_arg(t.strip()) for t in args.op_sets.split(",")]
    else:
        op_sets = [cfg.ops]
    for ops in op_sets:
        cfg.with_ops(ops)        # validates
    jobs = args.jobs if args.jobs is not None else default_jobs()
    records = run_bench(paths, cfg, grids, seeds, op_sets, jobs, timing=not args.no_timing)
    buf = io.StringIO()
    write_csv(records, buf)
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    external = read_external(args.external_csv) if args.external_csv else []
    summary = summarize(records)
    sys.stderr.write(format_summary(summary, external))
    if args.gnuplot:
        Path(args.gnuplot).write_text(gnuplot_data(summary, external))
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tricodec", description="Triangulation thumbnail codec")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("encode", help="encode an image to a .tri file")
    e.add_argument("input")
    e.add_argument("output")
    _add_search_flags(e)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="render a .tri file to an image")
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--scale", type=int, default=1, help="integer upscaling factor")
    d.set_defaults(func=cmd_decode)

    r = sub.add_parser("render", help="like decode, optionally with triangle edges")
    r.add_argument("input")
    r.add_argument("output")
    r.add_argument("--scale", type=int, default=1)
    r.add_argument("--wireframe", action="store_true", help="draw triangle edges")
    r.set_defaults(func=cmd_render)

    rep = sub.add_parser("report", help="describe a .tri file, optionally against its source")
    rep.add_argument("tri")
    rep.add_argument("image", nargs="?")
    rep.set_defaults(func=cmd_report)

    b = sub.add_parser("bench", help="encode a corpus and write a CSV")
    b.add_argument("corpus")
    _add_search_flags(b)
    b.add_argument("--grids", help="comma-separated grid sizes")
    b.add_argument("--seeds", help="comma-separated seeds")
    b.add_argument("--op-sets", help="comma-separated operator sets ('init' = no search)")
    b.add_argument("--ablation", action="store_true",
                   help="operator sets init, abc, abcdg, abcdefg")
    b.add_argument("--csv", help="CSV output path (default stdout)")
    b.add_argument("--gnuplot", help="write mean quality-vs-bytes series here")
    b.add_argument("--external-csv", help="merge external codec measurements")
    b.add_argument("--jobs", type=int, help=f"worker processes (default ${JOBS_ENV} or 1)")
    b.add_argument("--no-timing", action="store_true",
                   help="write 0 for wall time so CSVs compare byte for byte")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("config", help="print the configuration as a key = value file")
    _add_search_flags(c)
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetInfeasibleError as exc:
        print(f"infeasible budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DecodeError as exc:
        print(f"decode error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ContractViolation as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        # unreadable or malformed image files land here (Pillow raises both)
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

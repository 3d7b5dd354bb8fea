"""Command-line front end.

Configuration is a flat ``key = value`` file with dotted sections, e.g.::

    seed = 3
    mill.d_mm = 4
    mill.alpha = 0.2
    grid.width = 820

Command-line flags override file values. Subcommands: ``sandblast``,
``mill``, ``stats``, ``bench`` and ``fixture``.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .fixtures import KINDS, fixture_gen
from .heightfield import HeightField, atomic_write, downsampled_size, read_ascii, read_hfld, stats, write_hfld
from .mill import Grid, MillConfig, adapt_height, simulate
from .rng import RandomStream
from .sandblast import SandblastConfig, choose_branch, spacing_factor, synthesize_sandblast
from .spectral import autocorrelation, histogram

log = logging.getLogger("surftex")

MODES = ("sandblast", "mill", "stats", "bench", "fixture")


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list_of(conv):
    def parse(text: str):
        return [conv(tok) for tok in text.replace(",", " ").split()]
    return parse


_MILL_TYPES = {f.name: type(f.default) for f in fields(MillConfig)}

SCHEMA = {
    "mode": str, "seed": int, "output": str, "input": str, "threads": int, "input_spacing_um": float,
    "sandblast.target_w": int, "sandblast.target_h": int, "sandblast.target_spacing_um": float,
    "sandblast.method": str, "sandblast.patch_size": int, "sandblast.overlap": int,
    "sandblast.size_strategy": str, "sandblast.blend_band": int,
    "grid.width": int, "grid.height": int, "grid.spacing_um": float, "grid.x0_mm": float, "grid.y0_mm": float,
    "adapt.enabled": _parse_bool, "adapt.mean_um": float, "adapt.variance_um2": float,
    "stats.bins": int, "stats.autocorrelation": _parse_bool,
    "bench.sizes": _list_of(int), "bench.alphas": _list_of(float), "bench.repeats": int,
    "bench.spacing_um": float,
    "fixture.kind": str, "fixture.width": int, "fixture.height": int, "fixture.spacing_um": float,
    "mill.a_e": float,
}
SCHEMA.update({f"mill.{name}": tp for name, tp in _MILL_TYPES.items()})


@dataclass
class RunConfig:
    mode: str
    seed: int = 0
    input: str | None = None
    output: str | None = None
    threads: int = 1
    input_spacing_um: float = 1.0
    sandblast: dict = field(default_factory=dict)
    mill: MillConfig = field(default_factory=MillConfig)
    grid: Grid = field(default_factory=lambda: Grid(820, 820, 12.2))
    adapt_enabled: bool = True
    adapt_mean_um: float = 0.0
    adapt_variance_um2: float = 1.0
    stats_bins: int = 64
    stats_autocorrelation: bool = True
    bench_sizes: list = field(default_factory=lambda: [256, 512, 1024])
    bench_alphas: list = field(default_factory=lambda: [0.2, 0.5, 0.8])
    bench_repeats: int = 3
    bench_spacing_um: float = 12.2
    fixture_kind: str = "sandblasted"
    fixture_size: tuple | None = None
    fixture_spacing_um: float | None = None


def read_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> value`` strings from config text; comments start with ``#``."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _convert(raw: dict[str, object]) -> dict[str, object]:
    values = {}
    for key, value in raw.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        conv = SCHEMA[key]
        if not isinstance(value, str):
            values[key] = value
            continue
        try:
            values[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from None
    return values


def build_run_config(values: dict[str, object], mode: str | None = None) -> RunConfig:
    values = _convert(values)
    mode = mode or values.get("mode")
    if mode is None:
        raise ConfigError("missing required key 'mode'")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}, expected one of {MODES}")

    mill_kw = {k[5:]: v for k, v in values.items() if k.startswith("mill.") and k != "mill.a_e"}
    if "mill.a_e" in values:
        if "mill.alpha" in values:
            raise ConfigError("give either 'mill.alpha' or 'mill.a_e', not both")
        mill_kw["alpha"] = 1.0 - values["mill.a_e"]
    for key, tp in _MILL_TYPES.items():
        if key in mill_kw and tp is float:
            mill_kw[key] = float(mill_kw[key])
    try:
        mill = MillConfig(**mill_kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid mill configuration: {exc}") from None

    default_grid = Grid(820, 820, 12.2)
    try:
        grid = Grid(values.get("grid.width", default_grid.width), values.get("grid.height", default_grid.height),
                    values.get("grid.spacing_um", default_grid.spacing_um),
                    values.get("grid.x0_mm", 0.0), values.get("grid.y0_mm", 0.0))
    except ValueError as exc:
        raise ConfigError(f"invalid grid: {exc}") from None

    fx_size = None
    if "fixture.width" in values or "fixture.height" in values:
        fx_size = (values.get("fixture.width"), values.get("fixture.height"))
    run = RunConfig(
        mode=mode,
        seed=values.get("seed", 0),
        input=values.get("input"),
        output=values.get("output"),
        threads=values.get("threads", _env_threads()),
        input_spacing_um=values.get("input_spacing_um", 1.0),
        sandblast={k[len("sandblast."):]: v for k, v in values.items() if k.startswith("sandblast.")},
        mill=mill,
        grid=grid,
        adapt_enabled=values.get("adapt.enabled", True),
        adapt_mean_um=values.get("adapt.mean_um", 0.0),
        adapt_variance_um2=values.get("adapt.variance_um2", 1.0),
        stats_bins=values.get("stats.bins", 64),
        stats_autocorrelation=values.get("stats.autocorrelation", True),
        bench_sizes=values.get("bench.sizes", [256, 512, 1024]),
        bench_alphas=values.get("bench.alphas", [0.2, 0.5, 0.8]),
        bench_repeats=values.get("bench.repeats", 3),
        bench_spacing_um=values.get("bench.spacing_um", 12.2),
        fixture_kind=values.get("fixture.kind", "sandblasted"),
        fixture_size=fx_size,
        fixture_spacing_um=values.get("fixture.spacing_um"),
    )
    if run.threads < 1:
        raise ConfigError("threads must be >= 1")
    if mode in ("sandblast", "stats") and not run.input:
        raise ConfigError(f"mode {mode!r} needs an input file ('input' or --input)")
    return run


def _env_threads() -> int:
    env = os.environ.get("SURFTEX_THREADS")
    if not env:
        return 1
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"SURFTEX_THREADS must be an integer, got {env!r}") from None


def parse_config(path=None, *, mode: str | None = None, overrides: dict | None = None,
                 text: str | None = None) -> RunConfig:
    """Merge a config file (or ``text``) with ``overrides``; overrides win."""
    raw: dict[str, object] = {}
    if path is not None:
        raw.update(read_config_text(Path(path).read_text(), str(path)))
    elif text is not None:
        raw.update(read_config_text(text))
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_run_config(raw, mode)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like WxH, got {text!r}") from None


def _flag_overrides(mode: str, args) -> dict[str, object]:
    out: dict[str, object] = {"seed": args.seed, "output": args.out, "input": args.input, "threads": args.threads}
    if args.size is not None:
        w, h = args.size
        key = {"sandblast": "sandblast.target", "mill": "grid", "fixture": "fixture"}.get(mode)
        if key is None:
            raise ConfigError(f"--size has no meaning for mode {mode!r}")
        out[f"{key}_w" if mode == "sandblast" else f"{key}.width"] = w
        out[f"{key}_h" if mode == "sandblast" else f"{key}.height"] = h
    if args.spacing_um is not None:
        key = {"sandblast": "sandblast.target_spacing_um", "mill": "grid.spacing_um",
               "fixture": "fixture.spacing_um", "bench": "bench.spacing_um", "stats": "input_spacing_um"}[mode]
        out[key] = args.spacing_um
    if mode == "fixture" and getattr(args, "kind", None):
        out["fixture.kind"] = args.kind
    return out


def load_field(path, spacing_um: float = 1.0) -> HeightField:
    """Read ``.hfld``; any other extension is parsed as a whitespace matrix."""
    if str(path).endswith(".hfld"):
        return read_hfld(path)
    return read_ascii(path, spacing_um)


def _write_outputs(jobs) -> None:
    """Write every ``(path, writer)``; on failure remove the ones already written."""
    done = []
    try:
        for path, writer in jobs:
            atomic_write(path, writer)
            done.append(path)
    except BaseException:
        for path in done:
            Path(path).unlink(missing_ok=True)
        raise


def _hfld_job(path, fld):
    return path, lambda p: write_hfld(fld, p)


def _print_stats(fld: HeightField, out=None) -> None:
    out = out or sys.stdout
    st = stats(fld)
    print(f"size: {fld.width}x{fld.height} @ {fld.spacing_um:g} um", file=out)
    print(f"mean: {st.mean:.6g} um  std: {st.std:.6g} um  min: {st.min:.6g}  max: {st.max:.6g}", file=out)


def cmd_sandblast(run: RunConfig) -> int:
    src = load_field(run.input, run.input_spacing_um)
    sb = dict(run.sandblast)
    sb.setdefault("target_w", src.width)
    sb.setdefault("target_h", src.height)
    sb.setdefault("target_spacing_um", src.spacing_um)
    cfg = SandblastConfig(seed=run.seed, **sb)
    factor = spacing_factor(src.spacing_um, cfg.target_spacing_um)
    branch = choose_branch(downsampled_size(src.width, factor), downsampled_size(src.height, factor), cfg)
    print(f"branch: {branch}")
    t0 = time.perf_counter()
    out = synthesize_sandblast(src, cfg, threads=run.threads)
    _write_outputs([_hfld_job(run.output, out)])
    print(f"time: {time.perf_counter() - t0:.3f} s")
    _print_stats(out)
    return 0


def cmd_mill(run: RunConfig) -> int:
    res = simulate(run.mill, run.grid, RandomStream(run.seed), threads=run.threads)
    out = res.field
    if run.adapt_enabled:
        if run.input:
            target = stats(load_field(run.input, run.input_spacing_um))
            mean, var = target.mean, target.variance
        else:
            mean, var = run.adapt_mean_um, run.adapt_variance_um2
        out = adapt_height(out, mean, var)
    _write_outputs([_hfld_job(run.output, out)])
    print(f"rings: {len(res.rings)} (relevant {res.relevant_rings})")
    print(f"time: {res.seconds:.3f} s")
    _print_stats(out)
    return 0


def cmd_stats(run: RunConfig) -> int:
    fld = load_field(run.input, run.input_spacing_um)
    prefix = run.output
    hist = histogram(fld, run.stats_bins)
    jobs = [(f"{prefix}.hist.csv", hist.to_csv)]
    if run.stats_autocorrelation:
        jobs.append(_hfld_job(f"{prefix}.acf.hfld", autocorrelation(fld)))
    _write_outputs(jobs)
    _print_stats(fld)
    return 0


def bench_rows(run: RunConfig):
    """One row per (size, alpha): timings over ``bench_repeats`` runs and the mean relevant-ring count."""
    # compile the kernel outside the timed region
    simulate(run.mill, Grid(8, 8, run.bench_spacing_um), RandomStream(run.seed, "bench/warmup"))
    rows = []
    for size in run.bench_sizes:
        grid = Grid(size, size, run.bench_spacing_um)
        for alpha in run.bench_alphas:
            cfg = replace(run.mill, alpha=alpha)
            times, counts = [], []
            for rep in range(run.bench_repeats):
                res = simulate(cfg, grid, RandomStream(run.seed, f"bench/{size}/{alpha}/{rep}"),
                               threads=run.threads)
                times.append(res.seconds)
                counts.append(res.relevant_rings)
            rows.append({"size": size, "alpha": alpha, "mean_time": float(np.mean(times)),
                         "min": float(np.min(times)), "max": float(np.max(times)),
                         "mean_ring_count": float(np.mean(counts))})
    return rows


def cmd_bench(run: RunConfig) -> int:
    rows = bench_rows(run)

    def write(path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["size", "alpha", "mean_time", "min", "max", "mean_ring_count"])
            writer.writeheader()
            writer.writerows(rows)

    _write_outputs([(run.output, write)])
    for row in rows:
        print("{size} {alpha} {mean_time:.4f}s rings={mean_ring_count:g}".format(**row))
    return 0


def cmd_fixture(run: RunConfig) -> int:
    if run.fixture_kind not in KINDS:
        raise ConfigError(f"unknown fixture kind {run.fixture_kind!r}, expected one of {KINDS}")
    kw = {}
    if run.fixture_size:
        kw["width"], kw["height"] = run.fixture_size
    if run.fixture_spacing_um:
        kw["spacing_um"] = run.fixture_spacing_um
    out = fixture_gen(run.fixture_kind, run.seed, **kw)
    _write_outputs([_hfld_job(run.output, out)])
    _print_stats(out)
    return 0


COMMANDS = {"sandblast": cmd_sandblast, "mill": cmd_mill, "stats": cmd_stats,
            "bench": cmd_bench, "fixture": cmd_fixture}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", help="output file (prefix for stats)")
    common.add_argument("--input", help="input height field (.hfld or text matrix)")
    common.add_argument("--threads", type=int, help="worker threads (default: $SURFTEX_THREADS or 1)")
    common.add_argument("--size", type=_parse_size, help="output size as WxH")
    common.add_argument("--spacing-um", type=float, help="pixel spacing in micrometres")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="surftex", description="Synthesize and analyse surface height images.")
    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser("sandblast", parents=[common], help="texture synthesis from a sandblasted exemplar")
    sub.add_parser("mill", parents=[common], help="render a face-milled surface")
    sub.add_parser("stats", parents=[common], help="histogram and autocorrelation of a height field")
    sub.add_parser("bench", parents=[common], help="time mill renders over sizes and overlaps")
    fx = sub.add_parser("fixture", parents=[common], help="write a synthetic pseudo-measurement")
    fx.add_argument("kind", nargs="?", choices=KINDS)
    return parser


def run_command(run: RunConfig) -> int:
    """Execute one parsed run; every command needs an output."""
    if not run.output:
        raise ConfigError("missing required key 'output' (or --out)")
    return COMMANDS[run.mode](run)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run = parse_config(args.config, mode=args.mode, overrides=_flag_overrides(args.mode, args))
    except (ConfigError, OSError) as exc:
        print(f"surftex: config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_command(run)
    except ConfigError as exc:
        print(f"surftex: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"surftex: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

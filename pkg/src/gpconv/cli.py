"""Command-line entry point.

Three subcommands: ``run`` executes an experiment config from JSON,
``figures`` reproduces the built-in convergence studies, and ``dgp`` runs
a layered-hierarchy config with its chain parameters.  All outputs (CSV
per config, rates.csv, one SVG per norm) are deterministic given the flags
and seed.  Exit codes: 0 success, 2 configuration problem, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import deep, experiments
from .errors import ConfigError, GpconvError
from .plotting import PlotRequest, render_loglog_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _thread_count() -> int:
    raw = os.environ.get("GPCONV_THREADS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"GPCONV_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _load_config(path: str) -> experiments.ExperimentConfig:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return experiments.config_from_dict(data)


def _write_outputs(out_dir: Path, config, records, fits, reference_slopes=()):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{config.id}.csv").write_text(
        experiments.records_csv(records, config.norms)
    )
    for norm, fit in fits.items():
        svg = render_loglog_svg(
            PlotRequest(
                records=records,
                rate_fit=fit,
                title=f"{config.id} ({norm})",
                norm=norm,
                reference_slopes=tuple(reference_slopes),
            )
        )
        (out_dir / f"{config.id}_{norm}.svg").write_text(svg)


def cmd_run(args) -> int:
    config = _load_config(args.config)
    if isinstance(config.kernel, deep.DgpSpec):
        raise ConfigError(
            f"config {config.id!r} holds a layered hierarchy; use the 'dgp' subcommand"
        )
    records, fits = experiments.run_convergence(config, args.seed)
    out_dir = Path(args.out)
    _write_outputs(out_dir, config, records, fits)
    (out_dir / "rates.csv").write_text(experiments.rates_csv({config.id: fits}))
    total_ms = sum(r.wall_time_ms for r in records)
    print(f"{config.id}: {len(records)} levels in {total_ms:.0f} ms")
    for norm, fit in fits.items():
        print(f"  {norm}: slope {fit.slope:.3f} (r^2 {fit.r_squared:.4f})")
    return EXIT_OK


def cmd_figures(args) -> int:
    configs = experiments.builtin_figures()
    if args.which != "all":
        configs = [c for c in configs if c.id == args.which]
        if not configs:
            known = ", ".join(c.id for c in experiments.builtin_figures())
            raise ConfigError(f"unknown figure id {args.which!r}; known ids: {known}, all")

    def run_one(config):
        return config.id, experiments.run_convergence(config, args.seed)

    with ThreadPoolExecutor(max_workers=min(_thread_count(), len(configs))) as pool:
        results = dict(pool.map(run_one, configs))

    out_dir = Path(args.out)
    all_fits = {}
    print(f"{'config':22s} {'expected':>8s} {'fitted':>8s} {'r^2':>7s}  status")
    for config in configs:
        records, fits = results[config.id]
        band_info = experiments.FIGURE_BANDS[config.id]
        expected = band_info["expected"]
        lo, hi = band_info["band"]
        slope = fits["l2"].slope if "l2" in fits else float("nan")
        status = "pass" if lo <= slope <= hi else "FAIL"
        if "info_band" in band_info:
            ilo, ihi = band_info["info_band"]
            status += " (info band: " + ("in" if ilo <= slope <= ihi else "out") + ")"
        print(
            f"{config.id:22s} {expected:8.1f} {slope:8.3f} "
            f"{fits['l2'].r_squared if 'l2' in fits else float('nan'):7.4f}  {status}"
        )
        _write_outputs(out_dir, config, records, fits, reference_slopes=(expected,))
        all_fits[config.id] = fits
    (out_dir / "rates.csv").write_text(experiments.rates_csv(all_fits))
    return EXIT_OK


def cmd_dgp(args) -> int:
    config = _load_config(args.config)
    if not isinstance(config.kernel, deep.DgpSpec):
        raise ConfigError(
            f"config {config.id!r} does not hold a layered hierarchy; use 'run'"
        )
    mcmc = experiments.McmcParams(n_burn=args.burn, n_iter=args.iters, beta=args.beta)
    records, fits = experiments.run_dgp_convergence(config, mcmc, args.seed)
    out_dir = Path(args.out)
    _write_outputs(out_dir, config, records, fits)
    (out_dir / "rates.csv").write_text(experiments.rates_csv({config.id: fits}))
    print(f"{config.id}: errors " + " ".join(f"{r.errors['l2']:.3e}" for r in records))
    for norm, fit in fits.items():
        print(f"  {norm}: slope {fit.slope:.3f} (r^2 {fit.r_squared:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpconv",
        description="Non-stationary and deep GP regression convergence experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config from JSON")
    p_run.add_argument("--config", required=True, help="path to the config JSON")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.set_defaults(func=cmd_run)

    p_fig = sub.add_parser("figures", help="run the built-in convergence studies")
    p_fig.add_argument("--which", default="all", help="figure id or 'all'")
    p_fig.add_argument("--out", required=True, help="output directory")
    p_fig.add_argument("--seed", type=int, default=0)
    p_fig.set_defaults(func=cmd_figures)

    p_dgp = sub.add_parser("dgp", help="run a layered-hierarchy config")
    p_dgp.add_argument("--config", required=True, help="path to the config JSON")
    p_dgp.add_argument("--burn", type=int, default=500)
    p_dgp.add_argument("--iters", type=int, default=2000)
    p_dgp.add_argument("--beta", type=float, default=0.25)
    p_dgp.add_argument("--out", required=True, help="output directory")
    p_dgp.add_argument("--seed", type=int, default=0)
    p_dgp.set_defaults(func=cmd_dgp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GpconvError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

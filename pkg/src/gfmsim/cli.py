"""Command-line front end.

Subcommands: run, compare, tune, sweep, list-scenarios.  Exit codes:
0 success, 2 configuration/validation error, 3 diverged run (artifacts
are still written).  Set GFMSIM_OUT to override the default output
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, backend
from .params import (Params, GridParams, ConfigError, controller_for_mode,
                     MODES, GFM_MODES)
from .simcore import SimConfig, run
from .scenarios import BUILTIN_SCENARIOS, build_scenario, compare, make_verdict
from .tuning import monte_carlo_sensitivity, optimize, PARAM_BOUNDS
from . import output as out_mod
from .configio import load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _out_dir(args) -> Path:
    d = args.out or os.environ.get("GFMSIM_OUT") or "gfmsim_out"
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args):
    """Resolve (params, sim, scenario overrides) from --config and flags."""
    params, sim, overrides = None, None, {}
    if args.config:
        loaded = load_config(args.config)
        params = loaded["params"]
        sim = loaded["sim"]
        overrides = loaded["scenario"]
    return params, sim, overrides


def _make_sim(args, scenario, sim):
    dt = args.dt if getattr(args, "dt", None) else (sim.dt if sim else 1e-4)
    rec = sim.record_every if sim else scenario.record_every
    return SimConfig(dt=dt, t_end=scenario.t_end, record_every=rec,
                     solver=sim.solver if sim else "semi_implicit")


def cmd_run(args) -> int:
    params, sim, overrides = _load(args)
    scenario = build_scenario(args.scenario, scr=args.scr, **overrides)
    simcfg = _make_sim(args, scenario, sim)
    mode = args.mode
    cfg = (params.controller if params is not None and args.mode is None
           else controller_for_mode(mode or "g-sgfm"))
    if params is not None:
        params = params.replace(
            grid=GridParams(scr=scenario.scr,
                            x_r_ratio=params.grid.x_r_ratio,
                            f0=params.grid.f0, v_grid=params.grid.v_grid,
                            r_fault=params.grid.r_fault))
    series = run(scenario, cfg, simcfg, params=params)
    out = _out_dir(args)
    name = f"{scenario.name}_{cfg.mode}"
    artifacts = [out_mod.write_timeseries_csv(series, out / f"{name}.csv")]
    if not args.no_plots:
        artifacts.append(out_mod.plot_timeseries(series, out / f"{name}.svg"))
    manifest = {
        "command": "run",
        "scenario": scenario.name,
        "mode": cfg.mode,
        "scr": scenario.scr,
        "dt": simcfg.dt,
        "diverged": series.diverged,
        "backend": backend.backend_name(),
        "config": str(args.config) if args.config else None,
    }
    out_mod.write_manifest(out, manifest, artifacts)
    print(f"wrote {artifacts[0]}" + (" [diverged]" if series.diverged else ""))
    return EXIT_DIVERGED if series.diverged else EXIT_OK


def cmd_compare(args) -> int:
    params, sim, overrides = _load(args)
    scenario = build_scenario(args.scenario, scr=args.scr, **overrides)
    modes = list(scenario.mode_list) if args.all else (args.modes or [])
    if not modes:
        raise ConfigError("compare needs --all or --modes")
    simcfg = _make_sim(args, scenario, sim)
    result = compare(modes, scenario, sim=simcfg, params=params)
    out = _out_dir(args)
    artifacts = [out_mod.write_compare_csv(
        result.series, out / f"{scenario.name}_compare.csv")]
    verdicts = {m: v.to_dict() for m, v in result.verdicts.items()}
    vpath = out / f"{scenario.name}_verdicts.json"
    vpath.write_text(json.dumps(verdicts, indent=2, sort_keys=True) + "\n")
    artifacts.append(vpath)
    if not args.no_plots:
        artifacts += out_mod.plot_compare(result.series, out, scenario.name)
    out_mod.write_manifest(out, {
        "command": "compare", "scenario": scenario.name,
        "scr": scenario.scr, "modes": modes,
        "backend": backend.backend_name(),
    }, artifacts)
    wid = max(len(m) for m in modes)
    print(f"{'mode'.ljust(wid)}  stable  recovered  peak_i   peak_dvdc")
    for m in modes:
        v = result.verdicts[m]
        print(f"{m.ljust(wid)}  {str(v.stable).ljust(6)}  "
              f"{str(v.recovered_post_fault).ljust(9)}  "
              f"{v.peak_current:7.3f}  {v.peak_vdc_dev:8.4f}")
    diverged = any(s.diverged for s in result.series.values())
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_tune(args) -> int:
    if args.mode not in GFM_MODES:
        raise ConfigError(f"tune requires a grid-forming mode, got "
                          f"{args.mode!r}")
    report = monte_carlo_sensitivity(args.mode, n=args.n, seed=args.seed,
                                     scr=args.scr)
    result = optimize(args.mode, seed=args.seed, scr=args.scr,
                      n_baseline=args.n, baseline=report)
    out = _out_dir(args)
    name = f"tune_{args.mode}"
    csv_path = out / f"{name}_samples.csv"
    names = report.param_names
    lines = [",".join(names + ["dvdc_int", "p_max", "t_r", "cost",
                               "diverged"])]
    for i in range(len(report.samples)):
        row = ([out_mod.FLOAT_FMT % v for v in report.samples[i]]
               + [out_mod.FLOAT_FMT % v for v in report.objectives[i]]
               + [out_mod.FLOAT_FMT % report.costs[i],
                  str(bool(report.diverged[i])).lower()])
        lines.append(",".join(row))
    csv_path.write_text("\n".join(lines) + "\n")
    artifacts = [csv_path]
    summary = {
        "mode": args.mode,
        "seed": args.seed,
        "n": args.n,
        "bounds": PARAM_BOUNDS[args.mode],
        "optimum": result.params,
        "optimum_cost": result.cost,
        "baseline_median_cost": result.baseline_median_cost,
        "correlations": report.correlations,
        "objectives": (None if result.objectives is None else {
            "dvdc_int": result.objectives.dvdc_int,
            "p_max": result.objectives.p_max,
            "t_r": result.objectives.t_r,
        }),
    }
    spath = out / f"{name}_summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    artifacts.append(spath)
    if not args.no_plots:
        artifacts.append(out_mod.plot_sensitivity(report,
                                                  out / f"{name}_scatter.svg"))
    out_mod.write_manifest(out, {"command": "tune", "mode": args.mode,
                                 "seed": args.seed, "n": args.n,
                                 "backend": backend.backend_name()},
                           artifacts)
    print(f"optimum: {result.params} cost={result.cost:.4g} "
          f"(baseline median {result.baseline_median_cost:.4g})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.mode not in GFM_MODES:
        raise ConfigError("sweep requires a grid-forming mode")
    bounds = PARAM_BOUNDS[args.mode]
    if args.param not in bounds:
        raise ConfigError(f"mode {args.mode} has parameters "
                          f"{sorted(bounds)}, not {args.param!r}")
    lo, hi = bounds[args.param]
    values = np.linspace(lo, hi, args.n)
    from .tuning import tuning_scenario, _config_with, _evaluate
    scen = tuning_scenario(scr=args.scr)
    simcfg = SimConfig(t_end=scen.t_end, record_every=scen.record_every)
    defaults = {k: getattr(controller_for_mode(args.mode).vic
                           if args.mode.startswith("g-")
                           else controller_for_mode(args.mode).vsm, k)
                for k in bounds}
    out = _out_dir(args)
    lines = [",".join([args.param, "dvdc_int", "p_max", "t_r", "diverged"])]
    for v in values:
        pv = dict(defaults)
        pv[args.param] = float(v)
        obj, diverged = _evaluate(args.mode, pv, scen, simcfg)
        lines.append(",".join([out_mod.FLOAT_FMT % v,
                               out_mod.FLOAT_FMT % obj.dvdc_int,
                               out_mod.FLOAT_FMT % obj.p_max,
                               out_mod.FLOAT_FMT % obj.t_r,
                               str(bool(diverged)).lower()]))
    path = out / f"sweep_{args.mode}_{args.param}.csv"
    path.write_text("\n".join(lines) + "\n")
    out_mod.write_manifest(out, {"command": "sweep", "mode": args.mode,
                                 "param": args.param,
                                 "backend": backend.backend_name()}, [path])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_list_scenarios(args) -> int:
    for name in sorted(BUILTIN_SCENARIOS):
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gfmsim",
        description="Wind turbine grid-forming control simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, plots=True):
        sp.add_argument("--scr", type=float, default=10.0,
                        help="grid short-circuit ratio")
        sp.add_argument("--config", type=str, default=None,
                        help="JSON config file")
        sp.add_argument("--out", type=str, default=None,
                        help="output directory (default $GFMSIM_OUT)")
        sp.add_argument("--dt", type=float, default=None,
                        help="integration step in seconds")
        if plots:
            sp.add_argument("--no-plots", action="store_true",
                            help="skip SVG plot emission")

    sp = sub.add_parser("run", help="run one scenario in one mode")
    sp.add_argument("scenario", choices=sorted(BUILTIN_SCENARIOS))
    sp.add_argument("--mode", choices=MODES, default=None)
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="run a scenario across modes")
    sp.add_argument("scenario", choices=sorted(BUILTIN_SCENARIOS))
    sp.add_argument("--modes", nargs="+", choices=MODES)
    sp.add_argument("--all", action="store_true",
                    help="use the scenario's full mode list")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("tune", help="sensitivity analysis + optimization")
    sp.add_argument("mode", choices=GFM_MODES)
    sp.add_argument("--n", type=int, default=50, help="Monte Carlo samples")
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("sweep", help="1-D parameter sweep of objectives")
    sp.add_argument("mode", choices=GFM_MODES)
    sp.add_argument("--param", required=True)
    sp.add_argument("--n", type=int, default=11)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, plots=False)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("list-scenarios", help="print built-in scenarios")
    sp.set_defaults(func=cmd_list_scenarios)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

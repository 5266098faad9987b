"""Command-line entry point: ``fixedtime-etc {run,sweep,compare,bounds,selftest}``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    COMPENSATION_FACTORS,
    RunSummary,
    SettlingBoundInputs,
    compare_strategies,
    compensation_constant,
    fixed_time_rates,
    paper_table_summaries,
    settling_time_bound,
    tracking_radius_bound,
    write_plots,
)
from .config import ExperimentConfig, apply_overrides, dumps, load_config, preset, preset_names
from .errors import ConfigError, FixedTimeEtcError, SimulationError, UnboundedFormulaError
from .simulator import EVENT_COLUMNS, RunResult, events_to_csv, run, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_DIVERGED = 0, 1, 2, 3
OUT_ENV = "FIXEDTIME_ETC_OUT"

STATUS_EXIT = {"ok": EXIT_OK, "constraint-violation": EXIT_VIOLATION, "diverged": EXIT_DIVERGED}

FORMATS = f"""\
Output files (written to the output directory, prefixed by the config name):

  <name>_config.yaml      normalized configuration; reloading it reproduces the run
  <name>_trajectory.csv   one row per recorded sample (every --decimate cycles):
                          t, x1..xn, w1..wn, z1..zn, alpha_n, d, g_held,
                          phi_hat1..phi_hatn, y, x_r, w_s, event
                          floats in shortest round-trip decimal; event is 0/1
  <name>_events.csv       {", ".join(EVENT_COLUMNS)}
                          reason: initial | threshold | fixed | relative | scheduled | continuous;
                          inter_event_interval is empty for the first event
  <name>_summary.txt      flat "key = value" lines (RunSummary)
  <name>_controller.csv   with --log-controller: t, d, g_held, w_s, ws_dot, delta_n and
                          per-step z, alpha, omega_energy, phi_rate
  <name>_*.svg            with --plots: tracking, control, inter-event intervals

compare writes comparison.txt (aligned table) and comparison.csv with columns
  name, strategy, count, total, interval_min, interval_mean, interval_max,
  max_tracking_error, status, delta_count, delta_error
(count is "fixed+relative" for the switched strategy). sweep writes sweep.csv
with label, status, error and the summary fields.

Exit codes: 0 success, 1 configuration or usage error, 2 constraint violation,
3 divergence. The output directory is taken from --out, else ${OUT_ENV}, else
simulation.output_dir of the config.
"""


class _HelpFormats(argparse.Action):
    def __init__(self, option_strings, dest, **kw):
        super().__init__(option_strings, dest, nargs=0, default=argparse.SUPPRESS, **kw)

    def __call__(self, parser, namespace, values, option_string=None):
        sys.stdout.write(FORMATS)
        parser.exit(0)


def _add_config_args(p: argparse.ArgumentParser, multiple: bool = False):
    if multiple:
        p.add_argument("configs", nargs="*", metavar="CONFIG", help="YAML config files")
        p.add_argument("--preset", action="append", default=[], help="built-in preset (repeatable)")
    else:
        p.add_argument("config", nargs="?", metavar="CONFIG", help="YAML config file")
        p.add_argument("--preset", help="built-in preset: " + ", ".join(preset_names()))
    p.add_argument("--override", "-O", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field, e.g. x1_0=0.2 or controller.k1[0]=5")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fixedtime-etc", description="Fixed-time event-triggered control simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--help-formats", action=_HelpFormats, help="describe output file formats and exit")
    sub = parser.add_subparsers(dest="command", metavar="{run,sweep,compare,bounds,selftest}")

    p = sub.add_parser("run", help="simulate one experiment")
    _add_config_args(p)
    p.add_argument("--decimate", type=int, help="record every k-th cycle")
    p.add_argument("--log-controller", action="store_true", help="write per-step controller terms")
    p.add_argument("--plots", action="store_true", help="write SVG plots")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run variations of one experiment")
    _add_config_args(p)
    p.add_argument("--vary", action="append", default=[], metavar="K=V[;K=V...]",
                   help="one variation: semicolon-separated overrides (repeatable)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--lenient", action="store_true", help="exit 0 when at least one run succeeds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="run several experiments and tabulate trigger counts")
    _add_config_args(p, multiple=True)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--lenient", action="store_true", help="exit 0 when at least one run succeeds")
    p.add_argument("--plots", action="store_true")
    p.add_argument("--published", action="store_true", help="tabulate the published trigger counts instead")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bounds", help="evaluate the settling-time and tracking-radius bounds")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--preset", help="derive a and b from a preset's gains")
    p.add_argument("--I", dest="I", type=float, default=0.5)
    p.add_argument("--c", type=float, default=None, help="residual constant (needed for the radius)")
    p.add_argument("--q", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--R", type=float, help="compensation constant R (prints Lambda)")
    p.add_argument("--Phi", type=float, help="smoothing constant Phi (prints Lambda)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("selftest", help="run the property battery")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=20240611)
    p.set_defaults(func=cmd_selftest)
    return parser


# --------------------------------------------------------------------------


def _err(msg: str):
    print(f"fixedtime-etc: {msg}", file=sys.stderr)


def _load_one(path: str | None, preset_name: str | None, overrides) -> ExperimentConfig:
    if path and preset_name:
        raise ConfigError("config", "give either a config file or --preset, not both")
    if path:
        cfg = load_config(path)
    elif preset_name:
        cfg = preset(preset_name)
    else:
        raise ConfigError("config", "no config given")
    return apply_overrides(cfg, overrides) if overrides else cfg


def output_dir(args, cfg: ExperimentConfig | None) -> Path:
    if getattr(args, "out", None):
        out = Path(args.out)
    elif os.environ.get(OUT_ENV):
        out = Path(os.environ[OUT_ENV])
    else:
        out = Path(cfg.simulation.output_dir if cfg else "out")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("output_dir", f"cannot create {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError("output_dir", f"{out} is not writable")
    return out


def _write_controller_log(rows: list[dict], path: Path):
    if not rows:
        path.write_text("")
        return
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) for k, v in r.items()})


def write_run_artifacts(result: RunResult, out: Path, plots: bool = False) -> list[Path]:
    name = result.config.name
    paths = [out / f"{name}_config.yaml", out / f"{name}_trajectory.csv", out / f"{name}_events.csv", out / f"{name}_summary.txt"]
    paths[0].write_text(dumps(result.config))
    result.trajectory.to_csv(paths[1])
    events_to_csv(result.events, result.config.strategy.kind, paths[2])
    paths[3].write_text(result.summary.to_text())
    if result.controller_log:
        paths.append(out / f"{name}_controller.csv")
        _write_controller_log(result.controller_log, paths[-1])
    if plots and len(result.trajectory):
        paths.extend(write_plots(result, out))
    return paths


def cmd_run(args) -> int:
    if not args.config and not args.preset:
        args.parser.print_usage(sys.stderr)
        _err("run: a config file or --preset is required")
        return EXIT_CONFIG
    cfg = _load_one(args.config, args.preset, args.override)
    for w in cfg.warnings:
        _err(f"warning: {w}")
    out = output_dir(args, cfg)
    print("# normalized config")
    print(dumps(cfg), end="")
    try:
        result = run(cfg, log_controller=args.log_controller, decimate=args.decimate)
        code = EXIT_OK
    except SimulationError as exc:
        result = exc.result
        code = exc.exit_code
        _err(str(exc))
    for p in write_run_artifacts(result, out, args.plots):
        print(f"wrote {p}")
    print(result.summary.to_text(), end="")
    return code


def _exit_for(statuses: list[str], lenient: bool) -> int:
    if all(s == "ok" for s in statuses):
        return EXIT_OK
    if lenient and any(s == "ok" for s in statuses):
        return EXIT_OK
    for s in statuses:
        if s != "ok":
            return STATUS_EXIT.get(s, EXIT_CONFIG)
    return EXIT_CONFIG


def cmd_sweep(args) -> int:
    cfg = _load_one(args.config, args.preset, args.override)
    if not args.vary:
        raise ConfigError("vary", "sweep needs at least one --vary")
    variations = [[s.strip() for s in v.split(";") if s.strip()] for v in args.vary]
    out = output_dir(args, cfg)
    outcomes = run_sweep(cfg, variations, jobs=args.jobs)
    fields = list(RunSummary.__dataclass_fields__)
    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "status", "error", *fields])
        for o in outcomes:
            vals = [getattr(o.summary, f) for f in fields] if o.summary else [""] * len(fields)
            w.writerow([o.label, o.status, o.error or "", *vals])
    for o in outcomes:
        s = o.summary
        detail = f"events={s.trigger_count} max_err={s.max_tracking_error:.6g}" if s else ""
        print(f"{o.status:<22} {o.label} {detail} {o.error or ''}".rstrip())
    print(f"wrote {path}")
    return _exit_for([o.status for o in outcomes], args.lenient)


def _compare_one(args):
    src, kind, overrides = args
    try:
        cfg = _load_one(src if kind == "file" else None, src if kind == "preset" else None, overrides)
    except FixedTimeEtcError as exc:
        return None, RunSummary(name=Path(src).stem if kind == "file" else src, strategy="?", status="config-error", error=str(exc))
    try:
        result = run(cfg)
    except SimulationError as exc:
        result = exc.result
    return result, result.summary


def cmd_compare(args) -> int:
    if args.published:
        report = compare_strategies(paper_table_summaries())
        print(report.to_text(), end="")
        return EXIT_OK
    sources = [(c, "file", args.override) for c in args.configs] + [(p, "preset", args.override) for p in args.preset]
    if len(sources) < 2:
        _err("compare: need at least two configs or presets")
        return EXIT_CONFIG
    out = output_dir(args, None)
    if args.jobs > 1 and len(sources) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            pairs = list(pool.map(_compare_one, sources))
    else:
        pairs = [_compare_one(s) for s in sources]
    summaries = []
    for result, summary in pairs:
        summaries.append(summary)
        if result is not None:
            write_run_artifacts(result, out, args.plots)
        if summary.status != "ok":
            _err(f"{summary.name}: {summary.error or summary.status}")
    report = compare_strategies(summaries)
    (out / "comparison.txt").write_text(report.to_text())
    report.to_csv(out / "comparison.csv")
    print(report.to_text(), end="")
    return _exit_for([s.status for s in summaries], args.lenient)


def cmd_bounds(args) -> int:
    a, b, q, p = args.a, args.b, args.q, args.p
    if args.preset:
        cfg = preset(args.preset)
        c = cfg.controller
        q = c.q if q is None else q
        p = c.p if p is None else p
        a, b = fixed_time_rates(c.k1, c.k2, c.tau, p, q)
        print(f"a = {a!r}\nb = {b!r}")
    if None in (a, b, q, p):
        raise ConfigError("bounds", "need --a --b --q --p, or --preset")
    inputs = SettlingBoundInputs(a=a, b=b, I=args.I, c=args.c if args.c is not None else 0.0, q=q, p=p)
    code = EXIT_OK
    try:
        print(f"settling_time_bound = {settling_time_bound(inputs)!r}")
    except UnboundedFormulaError as exc:
        print(f"settling_time_bound = unbounded ({exc})")
        code = EXIT_CONFIG
    if args.c is not None:
        try:
            print(f"tracking_radius_bound = {tracking_radius_bound(inputs)!r}")
        except ValueError as exc:
            print(f"tracking_radius_bound = invalid ({exc})")
            code = EXIT_CONFIG
    if args.R is not None and args.Phi is not None:
        for k in COMPENSATION_FACTORS:
            print(f"Lambda[{k}] = {compensation_constant(k, args.R, args.Phi)!r}")
    return code


def cmd_selftest(args) -> int:
    from .selftest import run_battery

    if args.samples < 1:
        raise ConfigError("samples", "must be positive")
    results = run_battery(args.samples, args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return EXIT_OK if failed == 0 else EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    args.parser = parser
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except FixedTimeEtcError as exc:
        _err(str(exc))
        return getattr(exc, "exit_code", EXIT_CONFIG)
    except OSError as exc:
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

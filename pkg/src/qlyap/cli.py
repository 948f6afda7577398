"""Command-line interface.

Subcommands:
  run <config.json|preset> [--out DIR] [--seeds N] [--dt X] [--horizon T] [--jobs N]
  analyze <config.json|preset> [--out DIR]
  presets
  version

Exit codes: 0 success, 1 configuration error, 2 runtime failure in at
least one run.
"""

import argparse
import os
import sys

import qlyap
from qlyap import config as config_mod
from qlyap import presets, runner


def _load(source):
    if os.path.exists(source):
        return config_mod.load_config(source)
    if source in presets.names():
        return config_mod.parse_config({"preset": source})
    raise config_mod.ConfigError(
        [f"{source}: no such file, and not a preset name (see 'qlyap presets')"]
    )


def _apply_overrides(cfg_dictless, args):
    # overrides re-parse the echoed config with the replaced fields so
    # validation and defaults stay in one place
    raw = dict(cfg_dictless.echo)
    if getattr(args, "seeds", None) is not None:
        raw.setdefault("initial", {})
        raw["initial"] = dict(raw["initial"])
        raw["initial"].pop("matrix", None)
        raw["initial"]["seeds"] = args.seeds
    if getattr(args, "dt", None) is not None:
        raw["dt"] = args.dt
    if getattr(args, "horizon", None) is not None:
        raw["horizon"] = args.horizon
    raw.pop("preset", None)
    return config_mod.parse_config(raw)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qlyap",
        description="Lyapunov feedback control of bilinear Hamiltonian quantum "
        "systems: simulation and convergence analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write reports")
    p_run.add_argument("config", help="path to a config JSON, or a preset name")
    p_run.add_argument("--out", default=None, help="output directory (default qlyap-out/<name>)")
    p_run.add_argument("--seeds", type=int, default=None, help="override the number of seeded runs")
    p_run.add_argument("--dt", type=float, default=None, help="override the integrator step")
    p_run.add_argument("--horizon", type=float, default=None, help="override the time horizon")
    p_run.add_argument("--jobs", type=int, default=1, help="concurrent runs (threads)")

    p_an = sub.add_parser("analyze", help="critical points and membership tests only, no simulation")
    p_an.add_argument("config", help="path to a config JSON, or a preset name")
    p_an.add_argument("--out", default=None, help="output directory (default qlyap-out/<name>)")

    sub.add_parser("presets", help="list built-in scenario presets")
    sub.add_parser("version", help="print version and backend")

    args = parser.parse_args(argv)

    if args.command == "presets":
        for name, desc in presets.describe():
            print(f"{name:32s} {desc}")
        return 0
    if args.command == "version":
        print(f"qlyap {qlyap.__version__} (kernel backend: {qlyap.BACKEND})")
        return 0

    try:
        cfg = _load(args.config)
        if args.command == "run":
            cfg = _apply_overrides(cfg, args)
    except config_mod.ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    out_dir = args.out or os.path.join("qlyap-out", cfg.name)

    if args.command == "analyze":
        try:
            system, perm = config_mod.build_system(cfg)
        except config_mod.ConfigError as exc:
            print(str(exc), file=sys.stderr)
            return 1
        from qlyap import bloch

        os.makedirs(out_dir, exist_ok=True)
        basis = bloch.build_basis(system.dim)
        runs = None
        if "matrix" in cfg.initial_spec:
            runs = config_mod.build_initial_states(cfg, system, perm)
        analysis = runner.analyze_scenario(cfg, system, basis, runs)
        runner.write_json(analysis, os.path.join(out_dir, "analysis.json"))
        summary = runner.summarize([], cfg, analysis)
        runner.write_json(summary, os.path.join(out_dir, "summary.json"))
        with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
            fh.write(runner.format_summary_text(summary))
        print(f"analysis written to {out_dir}")
        return 0

    try:
        reports, _ = runner.run_scenario(cfg, out_dir, jobs=args.jobs)
    except config_mod.ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    failed = [r for r in reports if r.error]
    counts = {}
    for r in reports:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    print(f"{cfg.name}: {len(reports)} runs -> {counts}; outputs in {out_dir}")
    if failed:
        for r in failed:
            print(f"  FAILED {r.run_id}: {r.error}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

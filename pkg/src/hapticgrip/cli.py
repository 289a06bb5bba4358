"""Command-line interface.

Subcommands:
  run      batch experiment: trials per the schedule, CSVs + figures
  serve    live session server for the browser operator console
  analyze  optical CSV -> hemoglobin + neural-efficiency CSVs + figures
  replay   re-derive attempt/trial metrics from persisted telemetry

Exit codes: 0 ok, 2 usage error, 3 configuration error, 4 port in use,
5 input/output or data error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, ExperimentConfig, from_mapping, load_config, parse_group

EXIT_CONFIG = 3
EXIT_PORT = 4
EXIT_IO = 5


def _load_base_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = from_mapping({})
    if getattr(args, "group", None):
        # feedback use is gated by what the session actually renders, so a
        # group override does not need to touch the policy defaults
        cfg.group = parse_group(args.group)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "sessions", None):
        cfg.n_sessions = args.sessions
    if getattr(args, "host", None):
        cfg.host = args.host
    if getattr(args, "port", None) is not None:
        cfg.port = args.port
    if getattr(args, "speed", None) is not None:
        cfg.speed = args.speed
    return cfg


def cmd_run(args) -> int:
    from .harness import export_experiment, run_experiment
    from .report import render_experiment_figures

    cfg = _load_base_config(args)
    result = run_experiment(
        cfg.group,
        cfg.seed,
        n_sessions=cfg.n_sessions,
        pparams=cfg.plant,
        cparams=cfg.controller,
        vparams=cfg.vibration,
        policy=cfg.policy,
        schedule=cfg.schedule,
    )
    try:
        paths = export_experiment(result, cfg.out_dir, write_telemetry=cfg.write_telemetry)
        if not args.no_figures:
            for p in render_experiment_figures(result, cfg.out_dir):
                paths[os.path.basename(p)] = p
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    totals = [(s.session_id, sum(t.lifts for t in s.trials)) for s in result.sessions]
    print(f"group={cfg.group.value} seed={cfg.seed} sessions={cfg.n_sessions}")
    for sid, lifts in totals:
        print(f"  {sid}: {lifts} lifts over {cfg.schedule.trials} trials")
    for name in sorted(paths):
        print(f"  wrote {paths[name]}")
    return 0


def cmd_serve(args) -> int:
    from .server import PortInUseError, serve

    cfg = _load_base_config(args)
    print(f"serving live session on ws://{cfg.host}:{cfg.port} (group={cfg.group.value})")
    try:
        serve(cfg)
    except PortInUseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PORT
    except KeyboardInterrupt:
        pass
    return 0


def cmd_analyze(args) -> int:
    from .analysis import analyze_files
    from .report import plot_hbt, plot_neural_efficiency

    try:
        paths = analyze_files(
            args.infile,
            args.lifts,
            args.out,
            sample_rate=args.sample_rate,
            session_id=args.session_id,
            fir_order=args.fir_order,
            cutoff=args.cutoff,
            trial_s=args.trial_s,
            break_s=args.break_s,
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.no_figures:
        import csv as _csv

        with open(paths["neural_efficiency"], newline="", encoding="utf-8") as fh:
            rows = list(_csv.DictReader(fh))
        fig_dir = os.path.join(args.out, "figures")
        os.makedirs(fig_dir, exist_ok=True)
        paths["efficiency_fig"] = plot_neural_efficiency(
            rows, os.path.join(fig_dir, "neural_efficiency.png")
        )
        paths["hbt_fig"] = plot_hbt(rows, os.path.join(fig_dir, "hbt_by_trial.png"))
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


def cmd_replay(args) -> int:
    from .harness import replay_metrics

    manifest = os.path.join(args.run, "manifest.json")
    tdir = os.path.join(args.run, "telemetry")
    if not os.path.exists(manifest) or not os.path.isdir(tdir):
        print(f"error: {args.run} does not look like a run directory "
              f"(need manifest.json and telemetry/)", file=sys.stderr)
        return EXIT_IO
    try:
        paths = replay_metrics(tdir, manifest, args.out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hapticgrip", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch experiment")
    run.add_argument("--config", help="TOML config file")
    run.add_argument("--seed", type=int, help="experiment seed")
    run.add_argument("--group", choices=["standard", "vibro", "shared"])
    run.add_argument("--out", help="output directory")
    run.add_argument("--sessions", type=int, help="number of seeded sessions")
    run.add_argument("--no-figures", action="store_true")
    run.set_defaults(func=cmd_run)

    serve_p = sub.add_parser("serve", help="serve a live operator session")
    serve_p.add_argument("--config", help="TOML config file")
    serve_p.add_argument("--seed", type=int)
    serve_p.add_argument("--group", choices=["standard", "vibro", "shared"])
    serve_p.add_argument("--out", help="output directory")
    serve_p.add_argument("--host")
    serve_p.add_argument("--port", type=int)
    serve_p.add_argument("--speed", type=float, help="real-time pacing multiplier")
    serve_p.set_defaults(func=cmd_serve)

    an = sub.add_parser("analyze", help="run the optical analysis pipeline")
    an.add_argument("--in", dest="infile", required=True, help="optical CSV")
    an.add_argument("--lifts", required=True, help="trials CSV with lift counts")
    an.add_argument("--out", default="analysis", help="output directory")
    an.add_argument("--session-id", default=None)
    an.add_argument("--sample-rate", type=float, default=2.0)
    an.add_argument("--fir-order", type=int, default=40)
    an.add_argument("--cutoff", type=float, default=0.1)
    an.add_argument("--trial-s", type=float, default=60.0)
    an.add_argument("--break-s", type=float, default=30.0)
    an.add_argument("--no-figures", action="store_true")
    an.set_defaults(func=cmd_analyze)

    rp = sub.add_parser("replay", help="recompute metrics from telemetry")
    rp.add_argument("--run", required=True, help="run directory (manifest.json + telemetry/)")
    rp.add_argument("--out", required=True, help="output directory")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

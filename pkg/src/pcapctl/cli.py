"""Command-line entry points.

Subcommands:
    identify   characterization campaigns (static/stairs/random) and model fitting
    control    a single closed-loop run, simulated, replayed or live
    sweep      closed-loop evaluation over a degradation grid
    report     regenerate the summary from a sweep's exported CSVs

Exit codes: 0 success, 2 validation error, 3 fit error, 4 I/O error.

Any subcommand accepts ``--config FILE`` pointing at a JSON object whose
keys are the long flag names (without dashes, underscores instead);
explicit flags override config values.
"""

from __future__ import annotations

import argparse
import csv
import json
import socket
import statistics
import sys
from pathlib import Path

from . import controller as ctl
from . import harness, identification, simulator
from .heartbeat import HeartbeatStream, parse_lines, read_replay
from .identification import FitError
from .model import ModelError, resolve_model, save_model
from .trace import TraceRecord, write_trace

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_FIT = 3
EXIT_IO = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default values for the flags")
    p.add_argument("--model", default="gros",
                   help="preset name (gros/dahu/yeti) or path to a model JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1.0, help="sampling period, seconds")
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcapctl")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="run a characterization campaign and fit models")
    _add_common(p)
    p.add_argument("--campaign", choices=["static", "stairs", "random"], default="static")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--noiseless", action="store_true",
                   help="disable simulated measurement noise")

    p = sub.add_parser("control", help="one closed-loop run")
    _add_common(p)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--tau-obj", type=float, default=ctl.DEFAULT_TAU_OBJ)
    p.add_argument("--iterations", type=float, default=0.0,
                   help="work amount; 0 means a ~60 s baseline run")
    p.add_argument("--replay", help="heartbeat JSON-lines file to drive the controller")
    p.add_argument("--live", help="unix socket path to listen on for live heartbeats")

    p = sub.add_parser("sweep", help="closed-loop evaluation over a degradation grid")
    _add_common(p)
    p.add_argument("--epsilons", type=float, nargs="+",
                   default=list(harness.DEFAULT_EPSILON_GRID))
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--tau-obj", type=float, default=ctl.DEFAULT_TAU_OBJ)
    p.add_argument("--noiseless", action="store_true")

    p = sub.add_parser("report", help="rebuild summary.txt from an exported sweep")
    p.add_argument("--config", help="JSON file with default values for the flags")
    p.add_argument("--out", default="out", help="directory holding pareto.csv")
    return parser


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser,
                  argv: list[str]) -> None:
    if not args.config:
        return
    try:
        values = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise SystemExit(_fail(EXIT_IO, f"cannot read config: {exc}"))
    except json.JSONDecodeError as exc:
        raise SystemExit(_fail(EXIT_VALIDATION, f"bad config JSON: {exc}"))
    explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in argv
                if a.startswith("--")}
    for key, value in values.items():
        if not hasattr(args, key):
            raise SystemExit(_fail(EXIT_VALIDATION, f"unknown config key {key!r}"))
        if key not in explicit:
            setattr(args, key, value)


def _fail(code: int, message: str) -> int:
    print(f"pcapctl: error: {message}", file=sys.stderr)
    return code


def _noise(args, preset_name: str) -> simulator.NoiseSpec:
    if getattr(args, "noiseless", False) or preset_name is None:
        return simulator.NoiseSpec(rng_seed=args.seed)
    try:
        return simulator.default_noise(preset_name, args.seed)
    except ValueError:
        return simulator.NoiseSpec(rng_seed=args.seed)


def cmd_identify(args) -> int:
    model = resolve_model(args.model)
    preset_name = args.model if args.model in ("gros", "dahu", "yeti") else None
    noise = _noise(args, preset_name)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    spec = harness.CampaignSpec(kind="static" if args.campaign == "static" else args.campaign,
                                model=model, noise=noise,
                                repetitions=args.repetitions,
                                seed_base=args.seed, dt=args.dt)

    if args.campaign == "stairs":
        trace = harness.run_stairs(spec)
        write_trace(trace, outdir / "stairs_trace.csv")
        print(f"wrote {outdir / 'stairs_trace.csv'} ({len(trace)} rows)")
        return EXIT_OK

    if args.campaign == "random":
        trace = harness.run_random_pcap(spec)
        write_trace(trace, outdir / "random_trace.csv")
        err = harness.model_prediction_error(model, trace, spec.dt)
        (outdir / "prediction_error.txt").write_text(
            f"mean progress prediction error: {err:+.4f} Hz over {len(trace)} samples\n"
        )
        print(f"wrote {outdir / 'random_trace.csv'}; mean prediction error {err:+.3f} Hz")
        return EXIT_OK

    runs = harness.run_static_campaign(spec)
    with open(outdir / "static_runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pcap_w", "mean_power_w", "mean_progress_hz",
                    "execution_time_s", "energy_j"])
        for r in runs:
            w.writerow([repr(r.pcap), repr(r.mean_power), repr(r.mean_progress),
                        repr(r.execution_time), repr(r.energy)])
    actuator = identification.fit_actuator([(r.pcap, r.mean_power) for r in runs])
    report = identification.fit_static(runs, actuator,
                                       pcap_min=model.pcap_min, pcap_max=model.pcap_max)
    # one step response for the time constant
    step_plan = simulator.FixedPlan(lambda t: 60.0 if t < 30.0 else 100.0)
    step_trace = harness.run_for_duration(
        model, simulator.NoiseSpec(rng_seed=args.seed), step_plan, 60.0, dt=0.1
    )
    tau = identification.fit_tau(step_trace)
    from dataclasses import replace as dc_replace

    fitted = dc_replace(report.model, tau=tau)
    save_model(fitted, outdir / "fitted_model.json")
    (outdir / "fit_summary.txt").write_text(
        report.summary() + f"  tau fit = {tau:.4f} s\n"
    )
    print(report.summary(), end="")
    print(f"tau: {tau:.4f} s")
    print(f"wrote {outdir / 'fitted_model.json'}")
    return EXIT_OK


def _drive_from_beats(model, args, beats, bad_count) -> int:
    """Closed-loop controller over an externally supplied beat stream.

    There is no actuator here: commanded caps are logged, not applied.
    """
    if bad_count:
        print(f"warning: skipped {bad_count} malformed heartbeat lines", file=sys.stderr)
    if not beats:
        return _fail(EXIT_VALIDATION, "no usable heartbeats")
    gains = ctl.derive_gains(model, args.tau_obj)
    state = ctl.initial_state(model, args.epsilon)
    stream = HeartbeatStream()
    trace = []
    window_end = args.dt
    pcap = model.pcap_max
    horizon = beats[-1].ts_ns / 1e9
    i = 0
    while window_end <= horizon + args.dt:
        while i < len(beats) and beats[i].ts_ns < window_end * 1e9:
            stream.ingest(beats[i])
            i += 1
        sample = stream.aggregate(window_end)
        pcap, state = ctl.control_step(state, gains, model, sample.progress, args.dt)
        trace.append(TraceRecord(
            time_s=window_end, pcap_requested_w=pcap,
            power_measured_w=float("nan"), progress_hz=sample.progress,
            stale_flag=sample.stale,
        ))
        window_end += args.dt
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_trace(trace, outdir / "control_trace.csv")
    print(f"wrote {outdir / 'control_trace.csv'} ({len(trace)} rows, "
          f"setpoint {state.setpoint:.2f} Hz)")
    return EXIT_OK


def _read_live(socket_path: str) -> tuple[list, int]:
    """Accept one connection on a unix socket and read beats until EOF."""
    server = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
    try:
        server.bind(socket_path)
        server.listen(1)
        conn, _ = server.accept()
        chunks = []
        with conn:
            while data := conn.recv(65536):
                chunks.append(data)
    finally:
        server.close()
        Path(socket_path).unlink(missing_ok=True)
    return parse_lines(b"".join(chunks).decode().splitlines())


def cmd_control(args) -> int:
    model = resolve_model(args.model)
    if args.replay and args.live:
        return _fail(EXIT_VALIDATION, "--replay and --live are mutually exclusive")
    if args.replay:
        beats, bad = read_replay(args.replay)
        return _drive_from_beats(model, args, beats, bad)
    if args.live:
        beats, bad = _read_live(args.live)
        return _drive_from_beats(model, args, beats, bad)

    preset_name = args.model if args.model in ("gros", "dahu", "yeti") else None
    noise = _noise(args, preset_name)
    total = args.iterations or harness.CampaignSpec(
        kind="closed_loop_sweep", model=model, noise=noise
    ).total_iterations()
    policy = simulator.ClosedLoopPolicy(model, args.epsilon, args.tau_obj)
    result = simulator.run_to_completion(model, noise, policy,
                                         total_iterations=total, dt=args.dt)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_trace(list(result.trace), outdir / "control_trace.csv")
    print(f"finished in {result.execution_time:.1f} s, {result.energy:.0f} J; "
          f"wrote {outdir / 'control_trace.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    model = resolve_model(args.model)
    preset_name = args.model if args.model in ("gros", "dahu", "yeti") else None
    noise = _noise(args, preset_name)
    spec = harness.CampaignSpec(
        kind="closed_loop_sweep", model=model, noise=noise,
        repetitions=args.repetitions, epsilons=tuple(args.epsilons),
        seed_base=args.seed, dt=args.dt, tau_obj=args.tau_obj,
    )
    result = harness.run_epsilon_sweep(spec)
    files = harness.export_report(result, args.out)
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_report(args) -> int:
    pareto = Path(args.out) / "pareto.csv"
    if not pareto.exists():
        return _fail(EXIT_IO, f"{pareto} not found; run the sweep subcommand first")
    by_eps: dict[float, list[tuple[float, float]]] = {}
    with open(pareto, newline="") as fh:
        for row in csv.DictReader(fh):
            by_eps.setdefault(float(row["epsilon"]), []).append(
                (float(row["execution_time_s"]), float(row["energy_j"]))
            )
    if not by_eps:
        return _fail(EXIT_VALIDATION, "pareto.csv holds no runs")
    lines = [f"{'eps':>6} {'time_s':>10} {'energy_j':>12} {'runs':>5}"]
    for eps in sorted(by_eps):
        rows = by_eps[eps]
        lines.append(f"{eps:>6.2f} {statistics.mean(t for t, _ in rows):>10.2f} "
                     f"{statistics.mean(e for _, e in rows):>12.1f} {len(rows):>5}")
    out = Path(args.out) / "summary.txt"
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config(args, parser, argv)
    handler = {
        "identify": cmd_identify,
        "control": cmd_control,
        "sweep": cmd_sweep,
        "report": cmd_report,
    }[args.command]
    try:
        return handler(args)
    except (ModelError, ValueError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    except FitError as exc:
        return _fail(EXIT_FIT, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))


if __name__ == "__main__":
    sys.exit(main())

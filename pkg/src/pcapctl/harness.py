"""Experiment campaigns against the simulated plant.

Desk-scale reproductions of the characterization and evaluation
campaigns: open-loop stairs, random powercap excitation, static
characterization runs, and closed-loop degradation sweeps with Pareto
and tracking-error summaries.

Every campaign is driven by a seed base; run ``r`` of configuration
``c`` uses seed ``seed_base + 1000 * c + r`` so campaigns are exactly
reproducible and runs are independent.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controller import DEFAULT_TAU_OBJ, setpoint_from_epsilon
from .identification import StaticRun
from .model import ClusterModel, linearize_pcap, linearize_progress, static_progress
from .simulator import (
    ClosedLoopPolicy,
    FixedPlan,
    NoiseSpec,
    Plant,
    RunResult,
    run_to_completion,
)
from .trace import TraceRecord

DEFAULT_EPSILON_GRID = (0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)
DEFAULT_PCAP_LEVELS = (40.0, 60.0, 80.0, 100.0, 120.0)
DEFAULT_STAIRS_DWELL = 20.0   # seconds per level
DEFAULT_BASELINE_SECONDS = 60.0  # target duration of an uncapped run


class CampaignError(ValueError):
    pass


@dataclass(frozen=True)
class CampaignSpec:
    """Parameters of one campaign.

    ``kind`` is one of static, stairs, random, closed_loop_sweep.
    """

    kind: str
    model: ClusterModel
    noise: NoiseSpec
    repetitions: int = 10
    epsilons: tuple[float, ...] = DEFAULT_EPSILON_GRID
    seed_base: int = 0
    dt: float = 1.0
    tau_obj: float = DEFAULT_TAU_OBJ
    baseline_seconds: float = DEFAULT_BASELINE_SECONDS

    def __post_init__(self):
        if self.kind not in ("static", "stairs", "random", "closed_loop_sweep"):
            raise CampaignError(f"unknown campaign kind {self.kind!r}")
        if self.repetitions < 1:
            raise CampaignError("repetitions must be >= 1")
        for e in self.epsilons:
            if not 0 <= e <= 0.5:
                raise CampaignError(f"epsilon {e} outside [0, 0.5]")

    def run_seed(self, config_index: int, repetition: int) -> int:
        return self.seed_base + 1000 * config_index + repetition

    def total_iterations(self) -> float:
        """Work amount sized so the uncapped run lasts ~baseline_seconds."""
        return round(
            static_progress(self.model, self.model.pcap_max) * self.baseline_seconds
        )


def run_for_duration(model: ClusterModel, noise: NoiseSpec, policy,
                     duration: float, dt: float = 1.0) -> list[TraceRecord]:
    """Open-loop style run for a fixed simulated duration."""
    plant = Plant(model, noise, initial_pcap=policy.initial_pcap())
    from .heartbeat import HeartbeatStream

    stream = HeartbeatStream()
    trace: list[TraceRecord] = []
    pcap = policy.initial_pcap()
    while plant.state.time < duration - dt / 2:
        state = plant.step(pcap, dt)
        for beat in plant.emit_heartbeats(dt):
            stream.ingest(beat)
        sample = stream.aggregate(state.time)
        trace.append(TraceRecord(
            time_s=state.time,
            pcap_requested_w=pcap,
            power_measured_w=state.measured_power,
            progress_hz=sample.progress,
            stale_flag=sample.stale,
            energy_j=state.cumulative_energy,
            iterations=state.iterations_done,
        ))
        pcap = policy.next_pcap(state.time, sample, dt)
    return trace


def run_stairs(spec: CampaignSpec,
               levels: tuple[float, ...] = DEFAULT_PCAP_LEVELS,
               dwell: float = DEFAULT_STAIRS_DWELL) -> list[TraceRecord]:
    """Open-loop staircase: the cap climbs through ``levels``, fixed dwell each."""
    plan = FixedPlan.stairs(list(levels), dwell)
    return run_for_duration(spec.model, spec.noise, plan,
                            duration=dwell * len(levels), dt=spec.dt)


def random_pcap_plan(model: ClusterModel, seed: int, duration: float,
                     freq_range: tuple[float, float] = (1e-2, 1.0)) -> FixedPlan:
    """Seeded piecewise-constant excitation signal.

    Magnitudes are uniform over the admissible cap range; hold durations
    are the reciprocal of a log-uniform switching frequency.
    """
    rng = np.random.default_rng(seed)
    times = [0.0]
    levels = []
    t = 0.0
    lo, hi = np.log(freq_range[0]), np.log(freq_range[1])
    while t < duration:
        levels.append(float(rng.uniform(model.pcap_min, model.pcap_max)))
        hold = 1.0 / float(np.exp(rng.uniform(lo, hi)))
        t += hold
        times.append(t)

    def schedule(ts: float) -> float:
        i = int(np.searchsorted(times, ts, side="right")) - 1
        return levels[min(i, len(levels) - 1)]

    return FixedPlan(schedule)


def run_random_pcap(spec: CampaignSpec, duration: float = 300.0) -> list[TraceRecord]:
    """One random-excitation identification run."""
    plan = random_pcap_plan(spec.model, spec.seed_base + 500_000, duration)
    return run_for_duration(spec.model, spec.noise, plan, duration=duration, dt=spec.dt)


def predict_progress(model: ClusterModel, trace: list[TraceRecord],
                     dt: float) -> list[float]:
    """Model-predicted progress for the cap signal recorded in a trace."""
    if not trace:
        return []
    from .model import delinearize_progress, step_dynamics

    state = linearize_progress(model, trace[0].progress_hz)
    out = []
    for rec in trace:
        state = step_dynamics(model, state, linearize_pcap(model, rec.pcap_requested_w), dt)
        out.append(delinearize_progress(model, state))
    return out


def model_prediction_error(model: ClusterModel, trace: list[TraceRecord],
                           dt: float) -> float:
    """Mean (measured - predicted) progress over a trace, hertz."""
    predicted = predict_progress(model, trace, dt)
    errors = [rec.progress_hz - p for rec, p in zip(trace, predicted)]
    return float(np.mean(errors))


def run_static_campaign(spec: CampaignSpec,
                        levels: tuple[float, ...] = DEFAULT_PCAP_LEVELS
                        ) -> list[StaticRun]:
    """Constant-cap runs over a level grid, repeated; input to the fits."""
    total = spec.total_iterations()
    runs: list[StaticRun] = []
    for ci, pcap in enumerate(levels):
        for rep in range(spec.repetitions):
            noise = NoiseSpec(
                rng_seed=spec.run_seed(ci, rep),
                power_noise_sd=spec.noise.power_noise_sd,
                progress_noise_sd=spec.noise.progress_noise_sd,
                dropout_rate=spec.noise.dropout_rate,
                dropout_level=spec.noise.dropout_level,
                dropout_mean_duration=spec.noise.dropout_mean_duration,
            )
            result = run_to_completion(spec.model, noise, FixedPlan.constant(pcap),
                                       total_iterations=total, dt=spec.dt)
            runs.append(StaticRun(
                pcap=pcap,
                mean_power=float(np.mean([r.power_measured_w for r in result.trace])),
                mean_progress=float(np.mean([r.progress_hz for r in result.trace])),
                execution_time=result.execution_time,
                energy=result.energy,
            ))
    return runs


@dataclass(frozen=True)
class RunSummary:
    epsilon: float
    repetition: int
    execution_time: float
    energy: float


@dataclass(frozen=True)
class ParetoPoint:
    epsilon: float
    mean_time: float
    std_time: float
    mean_energy: float
    std_energy: float
    rel_time: float     # (mean_time - baseline) / baseline
    rel_energy: float   # (mean_energy - baseline) / baseline


@dataclass
class SweepResult:
    runs: list[RunSummary] = field(default_factory=list)
    pareto: list[ParetoPoint] = field(default_factory=list)
    # (epsilon, repetition, time_s, tracking error setpoint - progress)
    tracking: list[tuple[float, int, float, float]] = field(default_factory=list)


def run_epsilon_sweep(spec: CampaignSpec) -> SweepResult:
    """Closed-loop runs over the degradation grid; aggregates the Pareto view.

    The grid must contain the epsilon = 0 baseline, which anchors the
    relative time/energy deltas.
    """
    if not spec.epsilons:
        raise CampaignError("epsilon grid is empty")
    if 0.0 not in spec.epsilons:
        raise CampaignError("epsilon grid must include the 0 baseline")
    total = spec.total_iterations()
    result = SweepResult()
    per_eps: dict[float, list[RunSummary]] = {}
    for ci, eps in enumerate(spec.epsilons):
        setpoint = setpoint_from_epsilon(spec.model, eps)
        rows = []
        for rep in range(spec.repetitions):
            noise = NoiseSpec(
                rng_seed=spec.run_seed(ci, rep),
                power_noise_sd=spec.noise.power_noise_sd,
                progress_noise_sd=spec.noise.progress_noise_sd,
                dropout_rate=spec.noise.dropout_rate,
                dropout_level=spec.noise.dropout_level,
                dropout_mean_duration=spec.noise.dropout_mean_duration,
            )
            policy = ClosedLoopPolicy(spec.model, eps, spec.tau_obj)
            run = run_to_completion(spec.model, noise, policy,
                                    total_iterations=total, dt=spec.dt)
            row = RunSummary(epsilon=eps, repetition=rep,
                             execution_time=run.execution_time, energy=run.energy)
            rows.append(row)
            result.runs.append(row)
            for rec in run.trace:
                result.tracking.append(
                    (eps, rep, rec.time_s, setpoint - rec.progress_hz)
                )
        per_eps[eps] = rows

    base = per_eps[0.0]
    base_time = statistics.mean(r.execution_time for r in base)
    base_energy = statistics.mean(r.energy for r in base)
    for eps in spec.epsilons:
        rows = per_eps[eps]
        times = [r.execution_time for r in rows]
        energies = [r.energy for r in rows]
        mt, me = statistics.mean(times), statistics.mean(energies)
        result.pareto.append(ParetoPoint(
            epsilon=eps,
            mean_time=mt,
            std_time=statistics.pstdev(times),
            mean_energy=me,
            std_energy=statistics.pstdev(energies),
            rel_time=(mt - base_time) / base_time,
            rel_energy=(me - base_energy) / base_energy,
        ))
    return result


def export_report(result: SweepResult, outdir: str | Path) -> list[Path]:
    """Write pareto.csv, tracking_error.csv and summary.txt into ``outdir``.

    pareto.csv has one row per run; the per-epsilon aggregates go to the
    summary.  Fails before creating anything when the result is empty.
    """
    if not result.runs:
        raise CampaignError("cannot export an empty sweep result")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rel = {p.epsilon: p for p in result.pareto}

    pareto_path = outdir / "pareto.csv"
    with open(pareto_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "repetition", "execution_time_s", "energy_j",
                    "rel_time", "rel_energy"])
        for r in result.runs:
            p = rel[r.epsilon]
            w.writerow([repr(r.epsilon), r.repetition, repr(r.execution_time),
                        repr(r.energy), repr(p.rel_time), repr(p.rel_energy)])

    tracking_path = outdir / "tracking_error.csv"
    with open(tracking_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "repetition", "time_s", "tracking_error_hz"])
        for eps, rep, t, err in result.tracking:
            w.writerow([repr(eps), rep, repr(t), repr(err)])

    summary_path = outdir / "summary.txt"
    lines = ["epsilon sweep summary", ""]
    lines.append(f"{'eps':>6} {'time_s':>10} {'sd':>8} {'energy_j':>12} {'sd':>10} "
                 f"{'d_time':>8} {'d_energy':>9}")
    for p in result.pareto:
        lines.append(
            f"{p.epsilon:>6.2f} {p.mean_time:>10.2f} {p.std_time:>8.2f} "
            f"{p.mean_energy:>12.1f} {p.std_energy:>10.1f} "
            f"{p.rel_time:>+8.1%} {p.rel_energy:>+9.1%}"
        )
    errors = [e for _, _, _, e in result.tracking]
    lines.append("")
    lines.append(f"tracking error: mean {statistics.mean(errors):+.3f} Hz, "
                 f"sd {statistics.pstdev(errors):.3f} Hz, n {len(errors)}")
    summary_path.write_text("\n".join(lines) + "\n")
    return [pareto_path, tracking_path, summary_path]

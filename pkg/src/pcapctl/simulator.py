"""Discrete-time plant standing in for a power-capped compute node.

The plant combines the actuator line (measured power = a * pcap + b plus
Gaussian noise), the first-order progress dynamics, per-cluster progress
noise, and an optional two-state dropout disturbance during which the
emitted progress collapses to a fixed low rate regardless of the
requested powercap.  It emits heartbeats at the current progress rate so
the full sensing chain (beats -> windowed median -> controller) can be
exercised end to end.

Everything is driven by a single seeded generator: identical
(model, noise, policy, seed) inputs produce bit-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import controller as ctl
from .heartbeat import NS, Heartbeat, HeartbeatStream, beat_to_line
from .model import (
    ClusterModel,
    delinearize_progress,
    linearize_pcap,
    static_progress,
    step_dynamics,
)
from .trace import TraceRecord


class SimulationError(RuntimeError):
    pass


class SimulationTimeout(SimulationError):
    """Progress stayed pinned near zero past the stall timeout."""


@dataclass(frozen=True)
class NoiseSpec:
    """Stochastic disturbance parameters; the seed is mandatory."""

    rng_seed: int
    power_noise_sd: float = 0.0        # watts
    progress_noise_sd: float = 0.0     # hertz
    dropout_rate: float = 0.0          # onset probability per second
    dropout_level: float = 10.0        # hertz, emitted progress while active
    dropout_mean_duration: float = 10.0  # seconds

    def __post_init__(self):
        for name in ("power_noise_sd", "progress_noise_sd", "dropout_rate",
                     "dropout_level", "dropout_mean_duration"):
            if getattr(self, name) < 0:
                raise ValueError(f"NoiseSpec.{name} must be nonnegative")


# Noise magnitudes per preset are extrapolations from the qualitative
# observation that progress gets noisier with the socket count; they are
# simulator defaults, not measured values.
def default_noise(preset_name: str, seed: int) -> NoiseSpec:
    if preset_name == "gros":
        return NoiseSpec(rng_seed=seed, power_noise_sd=1.0, progress_noise_sd=0.5)
    if preset_name == "dahu":
        return NoiseSpec(rng_seed=seed, power_noise_sd=1.0, progress_noise_sd=2.0)
    if preset_name == "yeti":
        return NoiseSpec(rng_seed=seed, power_noise_sd=1.0, progress_noise_sd=4.0,
                         dropout_rate=0.01, dropout_level=10.0,
                         dropout_mean_duration=10.0)
    raise ValueError(f"no default noise for preset {preset_name!r}")


@dataclass(frozen=True)
class PlantState:
    progress_linear: float      # hertz, internal linearized state
    applied_pcap: float         # watts, last requested cap
    time: float                 # seconds since run start
    cumulative_energy: float    # joules
    iterations_done: float
    disturbance_active: bool
    emitted_progress: float     # hertz, after noise/dropout, >= 0
    measured_power: float       # watts


class Plant:
    """Stateful simulation of one node; one instance per run."""

    def __init__(self, model: ClusterModel, noise: NoiseSpec,
                 initial_pcap: float | None = None):
        self.model = model
        self.noise = noise
        self.rng = np.random.default_rng(noise.rng_seed)
        pcap0 = model.pcap_max if initial_pcap is None else initial_pcap
        # start at the steady state of the initial cap
        p0 = model.k_l * linearize_pcap(model, pcap0)
        self.state = PlantState(
            progress_linear=p0,
            applied_pcap=pcap0,
            time=0.0,
            cumulative_energy=0.0,
            iterations_done=0.0,
            disturbance_active=False,
            emitted_progress=max(0.0, delinearize_progress(model, p0)),
            measured_power=model.a * pcap0 + model.b,
        )
        self._next_beat = 0.0  # seconds, heartbeat phase across windows

    def step(self, pcap_request: float, dt: float) -> PlantState:
        """Advance the plant one sampling period under ``pcap_request``."""
        m, n = self.model, self.noise
        if dt <= 0:
            raise SimulationError(f"dt must be positive, got {dt}")
        if not m.pcap_min <= pcap_request <= m.pcap_max:
            raise SimulationError(
                f"pcap request {pcap_request} outside actuator range "
                f"[{m.pcap_min}, {m.pcap_max}]"
            )
        s = self.state
        measured_power = m.a * pcap_request + m.b
        if n.power_noise_sd > 0:
            measured_power += self.rng.normal(0.0, n.power_noise_sd)

        progress_linear = step_dynamics(
            m, s.progress_linear, linearize_pcap(m, pcap_request), dt
        )
        emitted = delinearize_progress(m, progress_linear)
        if n.progress_noise_sd > 0:
            emitted += self.rng.normal(0.0, n.progress_noise_sd)
        emitted = max(0.0, emitted)

        # two-state dropout disturbance; draws happen every step so the
        # stream of random numbers does not depend on the current state
        onset = self.rng.random() < n.dropout_rate * dt
        ending = self.rng.random() < (dt / n.dropout_mean_duration
                                      if n.dropout_mean_duration > 0 else 1.0)
        if s.disturbance_active:
            active = not ending
        else:
            active = onset and n.dropout_rate > 0
        if active:
            emitted = n.dropout_level

        self.state = PlantState(
            progress_linear=progress_linear,
            applied_pcap=pcap_request,
            time=s.time + dt,
            cumulative_energy=s.cumulative_energy + measured_power * dt,
            iterations_done=s.iterations_done + emitted * dt,
            disturbance_active=active,
            emitted_progress=emitted,
            measured_power=measured_power,
        )
        return self.state

    def emit_heartbeats(self, dt: float) -> list[Heartbeat]:
        """Beats for the window ending at the current plant time.

        Beats are uniformly spaced at 1/progress; the phase carries over
        between windows so aggregation recovers the rate up to one
        beat-interval of quantization.  Zero progress emits nothing.
        """
        end = self.state.time
        start = end - dt
        rate = self.state.emitted_progress
        if rate <= 0:
            self._next_beat = end
            return []
        if self._next_beat < start:
            self._next_beat = start
        beats = []
        interval = 1.0 / rate
        t = self._next_beat
        while t < end:
            beats.append(Heartbeat(ts_ns=round(t * NS)))
            t += interval
        self._next_beat = t
        return beats


def plant_step(plant: Plant, pcap_request: float, dt: float) -> PlantState:
    return plant.step(pcap_request, dt)


# --- powercap policies ------------------------------------------------------

class FixedPlan:
    """Open-loop powercap schedule; ``schedule(t)`` gives the cap in watts."""

    def __init__(self, schedule: Callable[[float], float]):
        self.schedule = schedule

    @classmethod
    def constant(cls, pcap: float) -> "FixedPlan":
        return cls(lambda t: pcap)

    @classmethod
    def stairs(cls, levels: list[float], dwell: float) -> "FixedPlan":
        def schedule(t: float) -> float:
            i = min(int(t // dwell), len(levels) - 1)
            return levels[i]
        return cls(schedule)

    def initial_pcap(self) -> float:
        return self.schedule(0.0)

    def next_pcap(self, t: float, sample, dt: float) -> float:
        return self.schedule(t)


class ClosedLoopPolicy:
    """PI controller driving the cap from aggregated heartbeat progress."""

    def __init__(self, design_model: ClusterModel, epsilon: float,
                 tau_obj: float = ctl.DEFAULT_TAU_OBJ):
        self.model = design_model
        self.gains = ctl.derive_gains(design_model, tau_obj)
        self.state = ctl.initial_state(design_model, epsilon)
        self._pcap = design_model.pcap_max

    def initial_pcap(self) -> float:
        return self.model.pcap_max

    def next_pcap(self, t: float, sample, dt: float) -> float:
        self._pcap, self.state = ctl.control_step(
            self.state, self.gains, self.model, sample.progress, dt
        )
        return self._pcap


@dataclass(frozen=True)
class RunResult:
    execution_time: float  # seconds
    energy: float          # joules
    trace: tuple[TraceRecord, ...]


def run_to_completion(
    model: ClusterModel,
    noise: NoiseSpec,
    policy,
    total_iterations: float,
    dt: float = 1.0,
    max_time: float = 1e6,
    stall_timeout: float = 600.0,
    heartbeat_log=None,
) -> RunResult:
    """Step the plant until the work is done; returns totals and the trace.

    ``policy`` is a :class:`FixedPlan` or :class:`ClosedLoopPolicy`.  The
    measurement path goes through heartbeat emission and windowed-median
    aggregation, exactly as a live run would.  ``heartbeat_log`` is an
    optional writable text stream mirroring beats in the JSON-lines wire
    format.
    """
    if total_iterations <= 0:
        raise SimulationError("total_iterations must be positive")
    plant = Plant(model, noise, initial_pcap=policy.initial_pcap())
    stream = HeartbeatStream()
    trace: list[TraceRecord] = []
    pcap = policy.initial_pcap()
    last_advance = 0.0

    while plant.state.iterations_done < total_iterations:
        state = plant.step(pcap, dt)
        for beat in plant.emit_heartbeats(dt):
            stream.ingest(beat)
            if heartbeat_log is not None:
                heartbeat_log.write(beat_to_line(beat) + "\n")
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
        if state.emitted_progress > 0:
            last_advance = state.time
        elif state.time - last_advance > stall_timeout:
            raise SimulationTimeout(
                f"progress pinned at 0 for {stall_timeout} s at t={state.time} s"
            )
        if state.time > max_time:
            raise SimulationTimeout(f"run exceeded max_time={max_time} s")
        pcap = policy.next_pcap(state.time, sample, dt)

    return RunResult(
        execution_time=plant.state.time,
        energy=plant.state.cumulative_energy,
        trace=tuple(trace),
    )

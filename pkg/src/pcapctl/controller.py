"""PI feedback controller on the linearized powercap coordinate.

The user supplies a degradation factor epsilon (tolerable relative
performance loss); the controller tracks the setpoint
``(1 - epsilon) * progress_max`` where ``progress_max`` is the static
model evaluated at the maximum powercap.

Gains come from pole placement against the first-order plant model:

    k_p = tau / (k_l * tau_obj)        k_i = 1 / (k_l * tau_obj)

which cancels the plant pole and gives the closed loop a single time
constant tau_obj.  The incremental control law updates the *linearized*
powercap; the stored state is the clamped value, which is the anti-windup
scheme (the integral action cannot accumulate past the actuator limits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .model import (
    ClusterModel,
    ModelError,
    delinearize_pcap,
    linearize_pcap,
    static_progress,
)

DEFAULT_TAU_OBJ = 10.0   # seconds; nonaggressive tuning, >= 10x plant tau
DEFAULT_DT = 1.0         # seconds, controller sampling period

EPSILON_MAX = 0.5


@dataclass(frozen=True)
class PiGains:
    k_p: float      # linearized-pcap per hertz
    k_i: float      # linearized-pcap per hertz-second
    tau_obj: float  # seconds


@dataclass(frozen=True)
class ControllerState:
    setpoint: float            # hertz
    previous_error: float      # hertz
    previous_pcap_linear: float
    epsilon: float
    progress_max: float        # hertz


def derive_gains(model: ClusterModel, tau_obj: float = DEFAULT_TAU_OBJ) -> PiGains:
    """Pole-placement PI gains for the given plant model."""
    if tau_obj <= 0:
        raise ValueError(f"tau_obj must be positive, got {tau_obj}")
    if tau_obj < 10 * model.tau:
        raise ValueError(
            f"tau_obj {tau_obj} s below the nonaggressive bound 10*tau = {10 * model.tau} s"
        )
    return PiGains(
        k_p=model.tau / (model.k_l * tau_obj),
        k_i=1.0 / (model.k_l * tau_obj),
        tau_obj=tau_obj,
    )


def setpoint_from_epsilon(model: ClusterModel, epsilon: float) -> float:
    """Progress setpoint (1 - epsilon) * progress at maximum powercap."""
    if not 0 <= epsilon < 1:
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon}")
    return (1.0 - epsilon) * static_progress(model, model.pcap_max)


def initial_state(model: ClusterModel, epsilon: float) -> ControllerState:
    """Controller state before the first step: powercap at its upper limit."""
    if not 0 <= epsilon <= EPSILON_MAX:
        raise ValueError(f"epsilon must be in [0, {EPSILON_MAX}], got {epsilon}")
    progress_max = static_progress(model, model.pcap_max)
    return ControllerState(
        setpoint=(1.0 - epsilon) * progress_max,
        previous_error=0.0,
        previous_pcap_linear=linearize_pcap(model, model.pcap_max),
        epsilon=epsilon,
        progress_max=progress_max,
    )


def control_step(
    state: ControllerState,
    gains: PiGains,
    model: ClusterModel,
    progress: float,
    dt: float = DEFAULT_DT,
) -> tuple[float, ControllerState]:
    """One PI update; returns (powercap in watts, next state).

    The commanded linearized powercap is clamped to the admissible range
    and the clamped value becomes the new stored state.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not math.isfinite(progress):
        raise ValueError(f"progress must be finite, got {progress}")
    error = state.setpoint - progress
    pcap_linear = (
        (gains.k_i * dt + gains.k_p) * error
        - gains.k_p * state.previous_error
        + state.previous_pcap_linear
    )
    lo = linearize_pcap(model, model.pcap_min)
    hi = linearize_pcap(model, model.pcap_max)
    pcap_linear = min(max(pcap_linear, lo), hi)
    pcap = delinearize_pcap(model, pcap_linear)
    new_state = replace(state, previous_error=error, previous_pcap_linear=pcap_linear)
    return pcap, new_state


__all__ = [
    "PiGains",
    "ControllerState",
    "derive_gains",
    "setpoint_from_epsilon",
    "initial_state",
    "control_step",
    "DEFAULT_TAU_OBJ",
    "DEFAULT_DT",
    "EPSILON_MAX",
    "ModelError",
]

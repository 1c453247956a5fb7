"""Power-cap to progress plant model.

Static characteristic, its linearizing change of variables, and the
discrete first-order dynamics shared by the controller, the
identification routines, and the simulator.

The plant is a compute node whose processor power is capped by a
running-average power limiter.  The actuator is imperfect
(``power = a * pcap + b``) and the steady-state progress saturates at
high power::

    progress(pcap) = k_l * (1 - exp(-alpha * (a * pcap + b - beta)))

All functions are pure and operate on immutable model values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path


class ModelError(ValueError):
    """Invalid model parameters or out-of-domain model evaluation."""


@dataclass(frozen=True)
class ClusterModel:
    """Fitted plant parameters for one cluster.

    Attributes:
        a: dimensionless actuator slope (measured watts per requested watt).
        b: actuator offset, watts.
        alpha: exponential shape of the power-to-progress curve, 1/watt.
        beta: power offset where progress crosses zero, watts.
        k_l: linear gain (asymptotic progress), hertz.
        tau: first-order time constant, seconds.
        pcap_min, pcap_max: admissible powercap range, watts.
    """

    a: float
    b: float
    alpha: float
    beta: float
    k_l: float
    tau: float
    pcap_min: float = 40.0
    pcap_max: float = 120.0

    def __post_init__(self):
        if not (self.a > 0 and self.alpha > 0 and self.k_l > 0 and self.tau > 0):
            raise ModelError(
                "a, alpha, k_l and tau must all be positive, got "
                f"a={self.a}, alpha={self.alpha}, k_l={self.k_l}, tau={self.tau}"
            )
        if not self.pcap_min < self.pcap_max:
            raise ModelError(
                f"pcap_min must be below pcap_max, got [{self.pcap_min}, {self.pcap_max}]"
            )


# Fitted parameters for the three reference clusters (single, dual and
# quad socket nodes).  tau is a time constant in seconds.
PRESETS: dict[str, ClusterModel] = {
    "gros": ClusterModel(a=0.83, b=7.07, alpha=0.047, beta=28.5, k_l=25.6, tau=1 / 3),
    "dahu": ClusterModel(a=0.94, b=0.17, alpha=0.032, beta=34.8, k_l=42.4, tau=1 / 3),
    "yeti": ClusterModel(a=0.89, b=2.91, alpha=0.023, beta=33.7, k_l=78.5, tau=1 / 3),
}


def preset(name: str) -> ClusterModel:
    """Return a built-in cluster model by name (gros, dahu or yeti)."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ModelError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None


def static_progress(model: ClusterModel, pcap: float) -> float:
    """Steady-state progress (Hz) reached under a constant powercap.

    ``pcap`` must lie within the model's admissible range.  The value is
    negative when the effective power falls below ``beta``; callers that
    need a physical rate clamp at zero.
    """
    if not model.pcap_min <= pcap <= model.pcap_max:
        raise ModelError(
            f"pcap {pcap} outside admissible range "
            f"[{model.pcap_min}, {model.pcap_max}]"
        )
    return model.k_l * (1.0 - math.exp(-model.alpha * (model.a * pcap + model.b - model.beta)))


def linearize_pcap(model: ClusterModel, pcap: float) -> float:
    """Map a powercap into the coordinate where the plant is linear.

    The result is always negative and strictly increasing in pcap.
    """
    return -math.exp(-model.alpha * (model.a * pcap + model.b - model.beta))


def delinearize_pcap(model: ClusterModel, pcap_linear: float) -> float:
    """Inverse of :func:`linearize_pcap`; requires a negative input."""
    if not pcap_linear < 0:
        raise ModelError(f"linearized pcap must be negative, got {pcap_linear}")
    return ((model.beta - model.b) - math.log(-pcap_linear) / model.alpha) / model.a


def linearize_progress(model: ClusterModel, progress: float) -> float:
    """Shift progress so the linearized plant passes through the origin."""
    return progress - model.k_l


def delinearize_progress(model: ClusterModel, progress_linear: float) -> float:
    return progress_linear + model.k_l


def step_dynamics(
    model: ClusterModel, progress_linear: float, pcap_linear: float, dt: float
) -> float:
    """Advance the linearized progress by one sampling period.

    First-order recurrence: the next value is a convex-like combination of
    the input (weighted k_l*dt/(dt+tau)) and the current state (weighted
    tau/(dt+tau)).  Its fixed point under constant input is
    ``k_l * pcap_linear``, which matches the static characteristic.
    """
    if dt <= 0:
        raise ModelError(f"dt must be positive, got {dt}")
    c_in = model.k_l * dt / (dt + model.tau)
    c_state = model.tau / (dt + model.tau)
    return c_in * pcap_linear + c_state * progress_linear


# --- persistence ------------------------------------------------------------
#
# Models round-trip through a flat JSON object so fitted parameters from
# the identification stage can be reloaded by name-free tooling:
#
#   {"a": 0.83, "b": 7.07, "alpha": 0.047, "beta": 28.5,
#    "k_l": 25.6, "tau": 0.3333, "pcap_min": 40.0, "pcap_max": 120.0}

def save_model(model: ClusterModel, path: str | Path) -> None:
    """Write a model as a flat JSON object."""
    Path(path).write_text(json.dumps(asdict(model), indent=2) + "\n")


def load_model(path: str | Path) -> ClusterModel:
    """Load a model previously written by :func:`save_model`."""
    data = json.loads(Path(path).read_text())
    fields = {"a", "b", "alpha", "beta", "k_l", "tau", "pcap_min", "pcap_max"}
    unknown = set(data) - fields
    if unknown:
        raise ModelError(f"unknown model keys in {path}: {sorted(unknown)}")
    return ClusterModel(**data)


def resolve_model(name_or_path: str) -> ClusterModel:
    """Accept either a preset name or a path to a saved model file."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]
    p = Path(name_or_path)
    if p.exists():
        return load_model(p)
    raise ModelError(f"{name_or_path!r} is neither a preset name nor a model file")

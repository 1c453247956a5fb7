"""Progress-aware power-cap control.

Feedback control of a power-capped compute node: heartbeat-based
progress sensing, offline model identification, a pole-placed PI
controller, a simulated plant for closed-loop evaluation, and the
campaign harness that produces Pareto and tracking-error analyses.
"""

from .controller import (
    ControllerState,
    PiGains,
    control_step,
    derive_gains,
    initial_state,
    setpoint_from_epsilon,
)
from .harness import CampaignSpec, ParetoPoint, run_epsilon_sweep, run_stairs
from .heartbeat import Heartbeat, HeartbeatStream, ProgressSample
from .identification import (
    FitReport,
    StaticRun,
    fit_actuator,
    fit_static,
    fit_tau,
    pearson,
    r_squared,
)
from .model import (
    ClusterModel,
    PRESETS,
    delinearize_pcap,
    linearize_pcap,
    linearize_progress,
    load_model,
    preset,
    save_model,
    static_progress,
    step_dynamics,
)
from .simulator import (
    ClosedLoopPolicy,
    FixedPlan,
    NoiseSpec,
    Plant,
    PlantState,
    run_to_completion,
)
from .trace import TraceRecord, read_trace, write_trace

__version__ = "0.1.0"

"""One closed-loop run: the PI controller walks the cap down to the
cheapest level that still meets the requested progress.

Run: python demos/closed_loop_run.py
"""

from pcapctl import run_to_completion, setpoint_from_epsilon
from pcapctl.model import PRESETS
from pcapctl.simulator import ClosedLoopPolicy, FixedPlan, default_noise

gros = PRESETS["gros"]
epsilon = 0.15  # accept up to 15% slower execution
noise = default_noise("gros", 7)

policy = ClosedLoopPolicy(gros, epsilon)
run = run_to_completion(gros, noise, policy, total_iterations=2000)

setpoint = setpoint_from_epsilon(gros, epsilon)
print(f"setpoint: {setpoint:.2f} Hz  (epsilon = {epsilon})")
print(f"{'t[s]':>6} {'cap[W]':>8} {'power[W]':>9} {'progress[Hz]':>13}")
for rec in run.trace[::5]:
    print(f"{rec.time_s:>6.0f} {rec.pcap_requested_w:>8.1f} "
          f"{rec.power_measured_w:>9.1f} {rec.progress_hz:>13.2f}")

baseline = run_to_completion(gros, default_noise("gros", 7),
                             FixedPlan.constant(gros.pcap_max),
                             total_iterations=2000)
print(f"\ncontrolled: {run.execution_time:.0f} s, {run.energy:.0f} J")
print(f"baseline  : {baseline.execution_time:.0f} s, {baseline.energy:.0f} J")
print(f"energy saved: {1 - run.energy / baseline.energy:.1%} "
      f"for {run.execution_time / baseline.execution_time - 1:.1%} more time")

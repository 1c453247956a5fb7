"""Sweep the degradation factor and map the energy/time trade-off.

Run: python demos/pareto_sweep.py
"""

from pcapctl.harness import CampaignSpec, export_report, run_epsilon_sweep
from pcapctl.model import PRESETS
from pcapctl.simulator import default_noise

spec = CampaignSpec(
    kind="closed_loop_sweep",
    model=PRESETS["gros"],
    noise=default_noise("gros", 0),
    epsilons=(0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5),
    repetitions=10,
    seed_base=2024,
)
result = run_epsilon_sweep(spec)

print(f"{'eps':>5} {'time[s]':>9} {'energy[J]':>11} {'d_time':>8} {'d_energy':>9}")
for p in result.pareto:
    print(f"{p.epsilon:>5.2f} {p.mean_time:>9.1f} {p.mean_energy:>11.0f} "
          f"{p.rel_time:>+8.1%} {p.rel_energy:>+9.1%}")

# Small degradation buys disproportionate energy savings; past ~15% the
# longer runtime eats the savings.
files = export_report(result, "out/pareto_demo")
print("\nexported:")
for f in files:
    print(f"  {f}")

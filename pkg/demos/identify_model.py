"""Identify a plant model from a simulated characterization campaign.

Run: python demos/identify_model.py
"""

from pcapctl import fit_actuator, fit_static, fit_tau, pearson
from pcapctl.harness import CampaignSpec, run_static_campaign, run_for_duration
from pcapctl.model import PRESETS
from pcapctl.simulator import FixedPlan, NoiseSpec, default_noise

gros = PRESETS["gros"]

# Static characterization: constant-cap runs over a level grid, with the
# cluster's nominal measurement noise.
spec = CampaignSpec(kind="static", model=gros, noise=default_noise("gros", 42),
                    repetitions=4, seed_base=42)
runs = run_static_campaign(spec)
print(f"campaign: {len(runs)} constant-cap runs")

# The progress metric is only useful if it predicts execution time.
rho = pearson([r.mean_progress for r in runs], [r.execution_time for r in runs])
print(f"progress vs execution time correlation: {rho:+.3f}")

# Actuator line first, then the saturating static curve on top of it.
actuator = fit_actuator([(r.pcap, r.mean_power) for r in runs])
report = fit_static(runs, actuator)
print()
print(report.summary())
print(f"true parameters: alpha={gros.alpha}, beta={gros.beta}, k_l={gros.k_l}")

# Time constant from a single open-loop step response.
step = FixedPlan(lambda t: 60.0 if t < 30.0 else 100.0)
trace = run_for_duration(gros, NoiseSpec(rng_seed=1), step, duration=60.0, dt=0.1)
print(f"fitted tau: {fit_tau(trace):.3f} s (true {gros.tau:.3f} s)")

"""Walk through the plant model: static curve, linearization, dynamics.

Run: python demos/static_characteristic.py
"""

import numpy as np

from pcapctl import (
    PRESETS,
    delinearize_pcap,
    linearize_pcap,
    static_progress,
    step_dynamics,
)
from pcapctl.model import delinearize_progress

# The steady-state map from powercap to progress saturates at high power:
# past the knee, extra watts buy almost no extra progress.
print("static characteristic (Hz at each cap):")
caps = [40, 60, 80, 100, 120]
print(f"{'cluster':>8} " + " ".join(f"{c:>7} W" for c in caps))
for name, m in PRESETS.items():
    row = " ".join(f"{static_progress(m, c):>9.2f}" for c in caps)
    print(f"{name:>8} {row}")

# The change of variables pcap -> -exp(-alpha (a pcap + b - beta)) makes
# the plant linear; it must invert exactly.
gros = PRESETS["gros"]
worst = max(abs(delinearize_pcap(gros, linearize_pcap(gros, c)) - c)
            for c in np.linspace(40, 120, 81))
print(f"\nlinearize/delinearize worst round-trip error: {worst:.2e} W")

# Iterating the first-order dynamics under a constant cap converges to
# the static value: the dynamic and static views agree.
u = linearize_pcap(gros, 80.0)
state = 0.0
for _ in range(60):
    state = step_dynamics(gros, state, u, dt=1.0)
print(f"dynamic steady state @80 W: {delinearize_progress(gros, state):.4f} Hz")
print(f"static curve        @80 W: {static_progress(gros, 80.0):.4f} Hz")

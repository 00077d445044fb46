"""Nonlinear squeezing of simple states against the Gaussian baselines.

    python3 demos/02_squeezing_metrics.py
"""

import numpy as np

from kerrsqueeze import FockState, apply, gate_squeeze, gaussian_baseline, nonlinear_variance, xi

DIM = 60

for n in (3, 4):
    b = gaussian_baseline(n)
    print(f"order {n}: Gaussian minimum {b.variance:.6f} at g={b.g:.4f}, phi={b.phi:.4f}")

vac = FockState.vacuum(DIM)
print("vacuum variances", nonlinear_variance(vac, 3), nonlinear_variance(vac, 4))

# squeezing along x alone cannot beat the cubic baseline; the best Gaussian just touches it
for r in np.linspace(-0.3, 0.4, 8):
    s = apply(gate_squeeze(r, DIM), vac)
    print(f"r={r:+.2f}  xi3={xi(s, 3).xi:.4f}  xi4={xi(s, 4).xi:.4f}")

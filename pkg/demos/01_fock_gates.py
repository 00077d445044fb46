"""Gates and states in a truncated Fock space.

Builds a coherent state, a squeezed vacuum and a Kerr-evolved coherent state,
then prints their quadrature covariances, the truncation tail and a coarse
Wigner slice through the origin.

    python3 demos/01_fock_gates.py
"""

import numpy as np

from kerrsqueeze import (
    FockState,
    apply,
    fock_probabilities,
    gate_displacement,
    gate_kerr,
    gate_squeeze,
    variance_matrix,
    wigner_grid,
)

DIM = 80

vac = FockState.vacuum(DIM)
coherent = apply(gate_displacement(1.5, DIM), vac)
squeezed = apply(gate_squeeze(0.5, DIM), vac)
kerr = apply(gate_kerr(0.2, DIM), coherent)

for name, state in [("coherent", coherent), ("squeezed", squeezed), ("kerr", kerr)]:
    vm = variance_matrix(state)
    print(f"{name:9s} cov diag {np.diag(vm.as_array()).round(6)}  min eig {vm.eigenvalues().min():.6f}"
          f"  tail {state.tail_mass():.1e}")

# photon statistics of the coherent state are Poisson with mean alpha^2/2
probs = fock_probabilities(coherent)
print("mean photon number", float(np.arange(DIM) @ probs))

xs = np.linspace(-3, 3, 7)
print("Wigner of the Kerr state along p=0:")
print(wigner_grid(kerr, xs, [0.0]).round(4))

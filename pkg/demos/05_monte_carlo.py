"""Parameter noise around an optimum.

Finds the cubic optimum at one displacement, then redraws all five gate
parameters with 1% and 5% relative Gaussian noise, and once more with the
displacement held exact.

    python3 demos/05_monte_carlo.py
"""

from kerrsqueeze import FluctuationSpec, OptProblem, monte_carlo, monte_carlo_fixed, optimize_point

DIM = 100
pt = optimize_point(OptProblem("cubic", 1.5, n_starts=10, seed=0, dim=DIM))
mu = pt.prep_params()
print(f"ideal xi3 {pt.xi:.4f} at {mu}")

for gamma in (0.01, 0.05):
    st = monte_carlo("cubic", mu, FluctuationSpec(gamma, 500, seed=0), dim=DIM)
    print(f"gamma={gamma}: mean {st.mean_xi:.4f}  +{st.sigma_plus:.4f} -{st.sigma_minus:.4f}"
          f"  below mean {st.frac_below_mean:.1%}")

st = monte_carlo_fixed("cubic", mu, FluctuationSpec(0.05, 500, seed=0), ("alpha",), dim=DIM)
print(f"gamma=0.05, alpha exact: mean {st.mean_xi:.4f}")

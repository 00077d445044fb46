"""The three preparation pipelines at hand-picked parameters.

A Kerr gate after a displacement or squeezer, followed by Gaussian
corrections, is enough to push the nonlinear variance below every Gaussian
state.  The operator picture (transform the quadratures) and the state
picture (apply the gates) give the same number.

    python3 demos/03_state_prep.py
"""

from kerrsqueeze import (
    PrepParamsLinear,
    linear_min_eigenvalue,
    prep_cubic,
    prep_linear,
    prep_quartic,
    xi,
)
from kerrsqueeze.prep import cubic_from_objective, quartic_from_objective
from kerrsqueeze.robustness import evaluate_xi

DIM = 120

lin = PrepParamsLinear(0.7, 1.5708)
print("linear  min eigenvalue", round(linear_min_eigenvalue(prep_linear(lin, DIM)), 6))

# (alpha, chi) and the correction (g, phi, beta) near the optimum at alpha = 0.8
cubic = cubic_from_objective(0.8, 1.0087, 1.1906, 0.1655, -0.2758)
print("cubic   xi3 state picture", round(xi(prep_cubic(cubic, DIM), 3).xi, 6),
      " operator picture", round(evaluate_xi("cubic", cubic, DIM), 6))

# (r, chi) and the correction (omega, phi1, phi2) near the optimum at r = 0.3
quartic = quartic_from_objective(0.3, 0.1075, 0.5389, -0.7143, 0.3023)
print("quartic xi4 state picture", round(xi(prep_quartic(quartic, DIM, convention="twoNplus1Sq"), 4).xi, 6),
      " operator picture", round(evaluate_xi("quartic", quartic, DIM, "twoNplus1Sq"), 6))

"""Shrinking the bath memory recovers the Markovian generator.

With a normalized narrow-exponential kernel of width eps, the
non-dissipative coefficients approach their delta-correlated limits:
the ratio Gamma(t) / int_0^t D(t,s) ds tends to -C(0) = -1 (a
convention-free statement, no delta-at-the-boundary prescription
needed) and the velocity-channel coefficient Theta dies out -- memory
of the coupling direction is a purely non-Markovian feature.
"""

import numpy as np

from nmgme import (
    coefficients_nondissipative,
    harmonic_kernels,
    make_grid,
    make_white_noise_approximant,
)
from nmgme.grids import quad_weights

T_EVAL = 2.0
kern = harmonic_kernels(1.0, 1.0)
grid = make_grid(T_EVAL, 641)
w = quad_weights(grid.n_points, grid.h, "simpson")

print(f"{'eps':>7} {'Gamma ratio':>13} {'|Theta|':>10}")
eps_values = [0.4, 0.2, 0.1, 0.05, 0.025]
ratios = []
for eps in eps_values:
    D = make_white_noise_approximant(1.0, eps)
    coeffs = coefficients_nondissipative(D, kern, grid, method="simpson")
    denom = float(np.dot(w, D.re_part(0, 0, T_EVAL, grid.points)))
    ratio = coeffs.Gamma[-1, 0, 0].real / denom
    ratios.append(ratio)
    print(f"{eps:7.3f} {ratio:13.6f} {abs(coeffs.Theta[-1, 0, 0].real):10.5f}")

asym = slice(2, None)  # fit the asymptotic widths only
slope, intercept = np.polyfit(np.array(eps_values[asym]) ** 2, ratios[asym], 1)
print(f"\nratio extrapolated to eps -> 0 (linear in eps^2): {intercept:.6f}")
print("the limit is -1: the white-noise master equation has a bare")
print("double-commutator decoherence term and no velocity channel")

"""
Muckenhoupt weights and maximal functions
=========================================

Power weights ``|x|^b`` belong to ``A_p`` exactly when ``-d < b < d(p-1)``.
The sampled ``A_p`` average stays bounded inside that range and grows with
refinement outside it.  The Hardy-Littlewood and sharp maximal functions are
computed with sliding windows.
"""

import numpy as np

from psido_ivp.spectral_core import SpectralField, make_grid, weighted_lp_norm
from psido_ivp.weights import (
    ap_constant_estimate,
    maximal_function,
    power_weight,
    regularity_constant,
    sharp_function,
)

grid = make_grid(1, 1024, 32.0)

# %%
# Sampled A_2 constants for a few exponents (the A_2 range in d = 1 is (-1, 1)).
for b in (0.0, 0.5, 0.9, 2.0):
    print(f"b={b:4.1f}  [w]_A2 >= {ap_constant_estimate(power_weight(b), 2.0, grid):.4f}")

# %%
# Regularity constant: the largest p0 in (1, 2] with w in A_{p/p0}.
for b in (0.0, 0.5, 0.9):
    print(f"b={b}: R = {regularity_constant(power_weight(b), 2.0, 1)}")

# %%
# Maximal and sharp functions of a bump, in weighted L_2.
x = grid.points[0]
f = SpectralField.from_values(grid, np.exp(-x**2) * np.cos(3 * x))
w = power_weight(0.5)
mf = SpectralField.from_values(grid, maximal_function(f))
sf = SpectralField.from_values(grid, sharp_function(f))
print("||f||, ||Mf||, ||f#|| in L_2(|x|^0.5):",
      weighted_lp_norm(f, 2, w), weighted_lp_norm(mf, 2, w), weighted_lp_norm(sf, 2, w))

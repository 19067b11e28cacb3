"""
Littlewood-Paley blocks and weighted norms
==========================================

Blocks are differences of one smooth radial cutoff, so partial sums telescope
exactly.  The four weighted spaces (Bessel-potential or Besov, homogeneous
or not) are evaluated on the resolved ladder of the grid.
"""

import numpy as np

from psido_ivp.littlewood_paley import NormSpec, classical_bessel_norm, lift, make_frame, space_norm, square_function
from psido_ivp.spectral_core import SpectralField, make_grid, weighted_lp_norm
from psido_ivp.time_measures import DyadicSequence
from psido_ivp.weights import power_weight

grid = make_grid(1, 1024, 32.0)
frame = make_frame(grid)
print("resolved band", frame.band, "ladder", frame.ladder, "S0 split level", frame.split_level)

# %%
# Partition of unity on the resolved lattice.
lo, hi = frame.ladder
total = sum(frame.block(j) for j in range(lo, hi + 1))
print("max |sum of blocks - 1|:", np.max(np.abs(total[frame.resolved_mask()] - 1)))

# %%
# Norms of a smooth field in the four flavors, weight |x|^0.5, p = 2.
x = grid.points[0]
f = SpectralField.from_values(grid, np.exp(-x**2 / 2) * np.cos(4 * x))
r = DyadicSequence.linear(1.0, lo, hi)
w = power_weight(0.5)
for flavor in ("bessel", "besov"):
    for homogeneous in (False, True):
        spec = NormSpec(2.0, 2.0, r, w, flavor, homogeneous)
        print(f"{flavor:6s} homogeneous={homogeneous!s:5s} norm={space_norm(f, spec, frame):.6f}")

# %%
# Equivalent quantities: the square function, the lift and (1 - Laplacian)^(1/2).
sq = SpectralField.from_values(grid, square_function(frame, f))
print("||Sf|| / ||f||:", weighted_lp_norm(sq, 2, w) / weighted_lp_norm(f, 2, w))
hr = space_norm(f, NormSpec(2.0, 2.0, r, w), frame)
print("||lift f|| / ||f||_H:", weighted_lp_norm(lift(frame, f, r, homogeneous=False), 2, w) / hr)
print("||(1-Lap)^(1/2) f|| / ||f||_H:", classical_bessel_norm(f, 1.0, 2.0, w) / hr)

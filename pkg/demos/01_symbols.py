"""
Symbols and their certificates
==============================

A symbol ``psi(t, xi)`` is only measurable in time.  Here we build a few of
the shipped ones, sample the ellipticity ratio ``Re[-psi] / |xi|^gamma`` on a
lattice, and check the derivative bound ``|D^alpha psi| <= M |xi|^(gamma-|alpha|)``.
"""

import numpy as np

from psido_ivp.spectral_core import make_grid
from psido_ivp.symbols import builtin_symbol, check_ellipticity, check_regular_upper_bound

grid = make_grid(1, 512, 16.0)

# %%
# Heat, a fractional power, a switching second-order coefficient and a
# complex oscillating symbol.
catalogue = [
    builtin_symbol("fractional_laplacian", {"gamma": 2.0}),
    builtin_symbol("fractional_laplacian", {"gamma": 0.75}),
    builtin_symbol("second_order", {"pieces": [1.0, 3.0], "step": 0.125}),
    builtin_symbol("oscillating_complex", {"gamma": 1.5, "rho": 0.8, "step": 0.25}),
]
for sym in catalogue:
    ell = check_ellipticity(sym, grid)
    up = check_regular_upper_bound(sym, 2, grid)
    print(f"{sym.name:34s} kappa={sym.kappa:.3g}  min ratio={ell.min_ellipticity_ratio:.4f}  "
          f"implied M={up.implied_M:.4f}  verdicts={ell.verdicts | up.verdicts}")

# %%
# The time integral of a piecewise-constant symbol is an exact piece sum:
# a(t) = 1 on [0, 1), 3 on [1, 2) gives -(1 + 3) at xi = 1.
a = builtin_symbol("second_order", {"pieces": [1.0, 3.0], "step": 1.0})
print("integral_0^2 psi(r, 1) dr =", a.time_integral(0.0, 2.0, np.array([[1.0]]))[0].real)

# %%
# An anti-dissipative symbol fails the ellipticity check.
bad = builtin_symbol("scaled_power", {"gamma": 2.0, "pieces": [-1.0], "kappa": 1.0})
print("anti-dissipative verdict:", check_ellipticity(bad, grid).verdicts)

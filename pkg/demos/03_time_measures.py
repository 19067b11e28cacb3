"""
Time measures and dyadic Laplace control
========================================

A measure ``mu`` on ``(0, inf)`` enters the estimates through its Laplace
transform at the dyadic points ``2^(gamma j)``.  The control sequence
``mu(j) = gamma j a - log2 L_mu(2^(gamma j))`` records how much spatial
smoothness the time weight buys.
"""

import math

from psido_ivp.time_measures import (
    TimeMeasure,
    control_sequence,
    dirac,
    doubling_constant,
    laplace,
    lebesgue,
    power_measure,
    power_sum_density,
    weak_scaling_constants,
)

# %%
# Closed form: L_{t^a dt}(lambda) = Gamma(a + 1) lambda^-(a+1).
print("L(4) for t^0.5 dt:", laplace(power_measure(0.5), 4.0), "exact", math.gamma(1.5) / 8)

# %%
# The density t^0 + t^1 switches exponent between small and large times;
# first differences of the control sequence show both branches.
seq = control_sequence(TimeMeasure(power_sum_density([0.0, 1.0])), 2.0, 0.5, (-10, 10)).sequence
for j in (-9, -5, 0, 5, 9):
    print(f"j={j:3d}  mu(j+1) - mu(j) = {seq(j + 1) - seq(j):.4f}")

# %%
# Doubling and weak-scaling constants separate Lebesgue from an atom.
for name, m in (("lebesgue", lebesgue()), ("dirac(1)", dirac(1.0))):
    d = doubling_constant(m, 2.0)
    ws = weak_scaling_constants(m, 2.0)
    print(f"{name:9s} doubling={d.value}  b_k={ws.b_k:.3f}  B_k={ws.B_k:.3f}  ok={ws.verdict}")

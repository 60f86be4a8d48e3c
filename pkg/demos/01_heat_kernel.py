"""Transition densities of symmetric stable processes.

Evaluates the density p(t, x) by Fourier inversion, checks it against the
Cauchy closed form, confirms total mass one and fits the two-sided bound
1/V(phi^-1(t)) min t/(V(|x|) phi(|x|)) for an index 1.5 process.
"""
import math

from levylil import Power, StableLevy, density, hke_fit, mass_check, resolvent
from levylil.kernel_oracle import probe_grid

cauchy, stable = StableLevy(1.0), StableLevy(1.5)

print("Cauchy density against t / (pi (t^2 + x^2)):")
for x in (0.0, 1.0, 5.0):
    exact = 1.0 / (math.pi * (1.0 + x * x))
    print(f"  x={x:4.1f}  numeric={float(density(cauchy, 1.0, x)):.12f}  exact={exact:.12f}")

print(f"\nmass of p(1, .) for index 1.5: {mass_check(stable, 1.0):.10f}")

fit = hke_fit(stable, Power(1.0), Power(1.5), probe_grid((0.1, 10.0), 7, 20.0, 31, 1.5))
print(f"bound constants: lower {fit.C_lower_hat:.4f}  upper {fit.C_upper_hat:.4f}  "
      f"spread {fit.spread:.2f}")

print(f"resolvent u^1(0, 0) = {resolvent(stable, 1.0, 0.0):.10f}  "
      f"(Gamma(5/3) Gamma(1/3) / pi = {math.gamma(5 / 3) * math.gamma(1 / 3) / math.pi:.10f})")

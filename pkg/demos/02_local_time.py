"""Local time, its supremum and the range along one simulated path.

The occupation density is estimated by counting time spent in small balls.
Its spatial supremum L*(t) and the covered length R(t) satisfy
L*(t) R(t) >= t up to the ball/cell discretization, and the mean local time
at the start point matches the Kac first moment.
"""
import numpy as np

from levylil import StableLevy, TimeGrid, build_ensemble, kac_moments_exact, simulate_path
from levylil.occupation import local_time, local_time_samples, range_estimate, richardson, sup_local_time

spec = StableLevy(1.5)
path = simulate_path(spec, TimeGrid(2.0 ** -8, 2 ** 12), seed=7)
eps = 0.05
centers = np.arange(path.positions.min(), path.positions.max() + eps, eps / 2)
times = [1.0, 4.0, 16.0]
field = local_time(path, centers, eps, times)
lstar = sup_local_time(field)
rng = range_estimate(path, eps, times)
for t, ls, r in zip(times, lstar, rng.values):
    print(f"t={t:5.1f}  L*={ls:7.3f}  R={r:7.3f}  L*R/t={ls * r / t:5.2f}")

m1, _ = kac_moments_exact(spec, 0.0, 0.0, 1.0, 1)
ens = build_ensemble(spec, TimeGrid(2.0 ** -10, 2 ** 10), 4000, master_seed=11)
samples = local_time_samples(ens, 0.0, 1.0, [0.1, 0.05])
mc = richardson(samples[:, 0], samples[:, 1], spec.beta - 1.0).mean()
print(f"\nE l(0, 1): Kac quadrature {m1:.5f}, Monte Carlo with two-bandwidth "
      f"extrapolation {mc:.5f}")

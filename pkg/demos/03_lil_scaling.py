"""Growth exponents and Chung-type statistics over a dyadic time ladder.

For an index beta process the median running supremum grows like t^(1/beta).
The Chung statistic divides the running supremum by phi^-1(t / loglog t) and
takes the minimum over the ladder; its median stays put when the ladder grows.
"""
from levylil import DyadicLadder, Functional, Power, StableLevy, TimeGrid, build_ensemble, ladder_samples
from levylil.lil_experiments import chung_statistic, median_shift, quantile_scaling

spec, V, phi = StableLevy(1.5), Power(1.0), Power(1.5)
ladder = DyadicLadder(16.0, 12)
ens = build_ensemble(spec, TimeGrid(1.0, int(ladder.t_max)), 500, master_seed=2024)
samples = ladder_samples(ens, ladder, [Functional.RunningSup])

rep = quantile_scaling(samples, Functional.RunningSup)
print(f"median running-sup slope {rep.slope:.4f} (1/beta = {1 / 1.5:.4f}), R^2 {rep.r2:.4f}")

short = chung_statistic(samples, V, phi, ladder=ladder.truncated(6))
full = chung_statistic(samples, V, phi)
print(f"Chung median: 6 levels {short.median:.4f}, 12 levels {full.median:.4f}, "
      f"shift {median_shift(short, full):.1%}")

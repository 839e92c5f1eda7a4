"""Stochastic delay equations: mean-square contraction and a.s. stability.

Two synchronously coupled copies share a noise path; with additive noise
their difference is deterministic.  With multiplicative noise the
almost-sure Lyapunov exponent is estimated from 500 paths.
"""
# %%
from ddecert import LinearDelaySystem
from ddecert.simulation import (additive_noise, as_lyapunov_exponent, mean_square_contraction,
                                stability_region, zero_drift)

system = LinearDelaySystem.scalar(-1.0, 0.25)
res = mean_square_contraction(system, zero_drift, additive_noise([[1.0]]), 0.0, 0.0,
                              [0.0], [1.0], omega=0.5, dt=1e-3, t_final=20.0,
                              path_count=500, seed=0)
est = res.estimate
print(f"rate {est.rate:.4f}  CI [{est.ci_low:.4f}, {est.ci_high:.4f}]  passed={res.passed}")

# %% du = (b u + c u(t-1)) dt + sigma u dW
for b, c, sigma in [(-1.0, 0.3, 1.0), (1.0, 0.0, 1.0)]:
    r = as_lyapunov_exponent(b, c, sigma, dt=1e-3, t_final=50.0, path_count=500, seed=0)
    e = r.estimate
    print(f"(b, c, sigma)=({b}, {c}, {sigma})  region={stability_region(b, c, sigma)}  "
          f"exponent {e.rate:.4f} [{e.ci_low:.4f}, {e.ci_high:.4f}]")

"""Weighted norms of simulated trajectories.

For a certified rate mu the weighted norm of the state segment decays at
least like exp(mu t).  A rate below the certified one is violated.
"""
# %%
import numpy as np

from ddecert import LinearDelaySystem, build_certificate
from ddecert.simulation import HistorySegment, contraction_report, integrate_dde

h = 1e-3
system = LinearDelaySystem.scalar(-2.0, 1.0)
cert = build_certificate(system, 0.0)

rng = np.random.default_rng(1)
s = np.linspace(-1, 0, 1001)
a = rng.standard_normal((10, 3))
freq = np.arange(1, 4)
vals = np.einsum("mk,sk->sm", a, np.cos(np.outer(s, freq)))[:, :, None]
slopes = np.einsum("mk,sk->sm", -a * freq, np.sin(np.outer(s, freq)))[:, :, None]

traj = integrate_dde(system, vals[-1], HistorySegment(vals, slopes, h), 10.0, h)
rep = contraction_report(traj, cert)
print(f"certified mu=0:   max ratio {rep.max_ratio:.10f}  passed={rep.passed}")

# %% Demanding mu = -0.6, faster than the true decay (about -0.443), fails.
bad = contraction_report(traj, cert, mu=-0.6)
print(f"demanded mu=-0.6: max ratio {bad.max_ratio:.4g}  passed={bad.passed}")

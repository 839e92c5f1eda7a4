"""Certifying a decay rate for a scalar delay equation.

u'(t) = -2 u(t) + u(t - 1).  The weight tau is built from the kernel, and
its bounds c1, c2 give the equivalence constants of the weighted norm.
"""
# %%
import numpy as np

from ddecert import (LinearDelaySystem, build_certificate, rate_bounds,
                     dominant_real_root, min_mu)

system = LinearDelaySystem.scalar(-2.0, 1.0)
cert = build_certificate(system, 0.0)
print(f"gap = {cert.gap:.6g}, c1 = {cert.c1:.6g}, c2 = {cert.c2:.6g}")

# %% The weight is piecewise smooth with a jump at the atom.
s = np.linspace(-1.0, 0.0, 6)
print(np.column_stack([s, cert.tau(s)]))

# %% The best certifiable rate is the dominant characteristic root.
lam = -2.0
mu_star = min_mu(lam, system.kernel, tol=1e-12)
print(f"min mu    = {mu_star:.15f}")
print(f"gamma*    = {dominant_real_root(-2.0, 1.0):.15f}")
print(rate_bounds(lam, system.kernel))

# %% Below mu_star no certificate exists.
try:
    build_certificate(system, mu_star - 1e-3)
except ValueError as err:
    print("refused:", err)

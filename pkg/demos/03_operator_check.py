"""Discretized dissipativity check.

The Rayleigh quotient of the generator in the weighted inner product is
maximized over nested polynomial spaces; theta_max never exceeds mu and
grows toward it as the space is refined.
"""
# %%
from ddecert import DelayAtom, DelayDensity, DelayKernel, LinearDelaySystem, refinement_study

kernel = DelayKernel((DelayAtom(-0.5, [[0.4]]),), DelayDensity.constant([[0.3]]))
system = LinearDelaySystem([[-2.0]], kernel)
mu = -0.5
for rep in refinement_study(system, mu, [4, 8, 16, 32, 64]):
    print(f"N={rep.N:3d}  theta_max={rep.theta_max:+.12f}  margin={rep.margin:.3e}")

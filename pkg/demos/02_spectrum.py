"""Generator spectrum by piecewise Chebyshev collocation.

The rightmost eigenvalue should match the dominant real root for scalar
equations with a single delay.
"""
# %%
import numpy as np

from ddecert import LinearDelaySystem, dominant_real_root, generator_eigenvalues

for b, c in [(-2.0, 1.0), (-1.0, 0.25), (1.0, 1.0)]:
    sp = generator_eigenvalues(LinearDelaySystem.scalar(b, c), 32)
    print(f"b={b:+.2f} c={c:.2f}  abscissa={sp.abscissa:+.12f}  "
          f"root={dominant_real_root(b, c):+.12f}  spurious={int(sp.spurious.sum())}")

# %% u' = -(pi/2) u(t-1) sits on the stability boundary: roots +-i pi/2.
sp = generator_eigenvalues(LinearDelaySystem.scalar(0.0, -np.pi / 2), 32)
top = sp.eigenvalues[np.argsort(-sp.eigenvalues.real)[:2]]
print("rightmost pair:", top)

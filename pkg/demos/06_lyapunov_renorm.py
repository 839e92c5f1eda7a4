"""Renormalizing a stable matrix with a Lyapunov equation.

For A Hurwitz, Q solves A^T Q + Q A = -C and x -> x^T Q x makes A
dissipative; this feeds a delay system whose drift is not dissipative in
the Euclidean norm.
"""
# %%
import numpy as np

from ddecert import lyapunov_renorm

A = np.array([[0.0, 1.0], [-2.0, -3.0]])
R = lyapunov_renorm(A, np.eye(2))
print(R.Q)
print("residual", np.max(np.abs(A.T @ R.Q + R.Q @ A + np.eye(2))))
print("eig(Q)", np.linalg.eigvalsh(R.Q), "gamma_lower", R.gamma_lower)

"""Characteristic roots and the discretized spectrum of the delay generator."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .collocation import collocation_matrix, panel_layout
from .kernel import LinearDelaySystem, gauss_points_for_degree, gauss_rule

__all__ = [
    "SpectrumApproximation",
    "dominant_real_root",
    "characteristic_matrix",
    "verify_characteristic",
    "generator_eigenvalues",
    "SPURIOUS_RESIDUAL",
]

SPURIOUS_RESIDUAL = 1e-6


def dominant_real_root(b: float, c: float, tol: float = 1e-14) -> float:
    """Real root of ``g = b + c exp(-g)`` for ``c > 0``.

    This root dominates the real parts of every other characteristic root of
    u' = b u(t) + c u(t - 1).  Newton's method from ``b + c`` is safeguarded by
    a sign-change bracket ``[b, hi]``.
    """
    b = float(b)
    c = float(c)
    if not c > 0:
        raise ValueError("dominance not guaranteed for c <= 0; use generator_eigenvalues")
    if not tol > 0:
        raise ValueError("tol must be positive")

    def F(g):
        return g - b - c * np.exp(-g)

    lo = b
    hi = b + c + 1.0
    step = 1.0
    while F(hi) <= 0:
        lo = hi
        step *= 2.0
        hi = hi + step
    g = min(max(b + c, lo), hi)
    for _ in range(200):
        f = F(g)
        if abs(f) <= tol:
            return float(g)
        if f > 0:
            hi = g
        else:
            lo = g
        g_new = g - f / (1.0 + c * np.exp(-g))
        if not (lo < g_new < hi):
            g_new = 0.5 * (lo + hi)
        if g_new == g or hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(g)):
            return float(g_new)
        g = g_new
    return float(g)


def _density_laplace(system: LinearDelaySystem, theta: complex) -> np.ndarray:
    dens = system.kernel.density
    n = system.dimension
    if dens is None:
        return np.zeros((n, n), dtype=complex)
    q = gauss_points_for_degree(dens.degree) + int(min(abs(theta), 400.0))
    x, w = gauss_rule(q)
    total = np.zeros((n, n), dtype=complex)
    edges = system.kernel.panel_edges()
    for a, b in zip(edges[:-1], edges[1:]):
        s = a + 0.5 * (b - a) * (x + 1.0)
        total += np.einsum("q,qab->ab", 0.5 * (b - a) * w * np.exp(theta * s), dens(s))
    return total


def characteristic_matrix(system: LinearDelaySystem, theta: complex) -> np.ndarray:
    """theta I - B - int exp(theta s) dzeta(s)."""
    theta = complex(theta)
    n = system.dimension
    Delta = theta * np.eye(n, dtype=complex) - system.drift
    for atom in system.kernel.atoms:
        Delta -= np.exp(theta * atom.location) * atom.matrix
    Delta -= _density_laplace(system, theta)
    return Delta


def verify_characteristic(system: LinearDelaySystem, theta: complex) -> float:
    """|det Delta(theta)|, computed from a pivoted LU factorization."""
    with warnings.catch_warnings():
        # an exact root gives a singular factor, which is the expected answer
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, _ = scipy.linalg.lu_factor(characteristic_matrix(system, theta))
    return float(np.abs(np.prod(np.diag(lu))))


@dataclass(frozen=True)
class SpectrumApproximation:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    spurious: np.ndarray
    abscissa: float
    abscissa_unfiltered: float
    nodes_per_panel: int
    panel_edges: np.ndarray

    def dominant(self, k: int = 1) -> np.ndarray:
        good = self.eigenvalues[~self.spurious]
        return good[np.argsort(-good.real, kind="stable")][:k]

    def to_dict(self) -> dict:
        order = np.lexsort((self.eigenvalues.imag, -self.eigenvalues.real))
        return {
            "N": int(self.nodes_per_panel),
            "panels": [[float(a), float(b)] for a, b in
                       zip(self.panel_edges[:-1], self.panel_edges[1:])],
            "abscissa": float(self.abscissa),
            "abscissa_unfiltered": float(self.abscissa_unfiltered),
            "eigenvalues": [
                {"re": float(self.eigenvalues[i].real), "im": float(self.eigenvalues[i].imag),
                 "residual": float(self.residuals[i]), "spurious": bool(self.spurious[i])}
                for i in order
            ],
        }


def generator_eigenvalues(system: LinearDelaySystem, nodes_per_panel: int = 32) -> SpectrumApproximation:
    """Eigenvalues of the piecewise Chebyshev collocation of the generator.

    Each eigenpair ``(theta, v)`` is scored by the characteristic backward
    error ``||Delta(theta) v0|| / ||v0||`` where ``v0`` is the sigma = 0 block of
    ``v``.  Pairs above ``SPURIOUS_RESIDUAL`` are kept but flagged, and the
    abscissa is taken over the unflagged ones.
    """
    layout = panel_layout(system.kernel.panel_edges(), nodes_per_panel)
    A = collocation_matrix(system, layout)
    n = system.dimension
    evals, evecs = scipy.linalg.eig(A)
    residuals = np.empty(evals.size)
    for i, theta in enumerate(evals):
        v0 = evecs[-n:, i]
        nv = np.linalg.norm(v0)
        if not np.isfinite(theta) or nv < 1e-12 * np.linalg.norm(evecs[:, i]):
            residuals[i] = np.inf
            continue
        residuals[i] = np.linalg.norm(characteristic_matrix(system, theta) @ v0) / nv
    spurious = ~(residuals <= SPURIOUS_RESIDUAL)
    finite = np.isfinite(evals)
    unfiltered = float(np.max(evals[finite].real))
    good = evals[~spurious]
    abscissa = float(np.max(good.real)) if good.size else float("nan")
    return SpectrumApproximation(evals, residuals, spurious, abscissa, unfiltered,
                                 nodes_per_panel, layout.edges)

"""Numerical check that ``A - mu I`` is dissipative in the tau inner product.

The segment is discretized by continuous piecewise polynomials on the
Chebyshev panel layout shared with :mod:`ddecert.spectrum`, subject to the
domain condition ``x = f(0)``.  Every such function lies in the domain of the
generator, so both quadratic forms can be evaluated exactly (to quadrature
accuracy) on the subspace:

    G[f, f] = |f(0)|^2 + int tau |f|^2
    K[f, f] = <B f(0) + Phi f, f(0)> + int tau <f', f>

The largest eigenvalue ``theta_max`` of the symmetric-definite pencil
``(K + K^T) / 2 - theta G`` is the supremum of ``(A z, z)_tau / (z, z)_tau``
over the subspace.  It can only increase under refinement and is bounded by
the continuous supremum, so ``theta_max <= mu`` up to rounding whenever the
certificate is valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss

from .certificate import ContractionCertificate, build_certificate
from .collocation import (PanelLayout, collocation_matrix, generator_row, interpolation_matrix,
                          panel_layout, quadrature_weights)
from .kernel import LinearDelaySystem

__all__ = [
    "GeneratorDiscretization",
    "DissipativityReport",
    "discretize_generator",
    "weighted_forms",
    "check_dissipativity",
    "refinement_study",
]

EXTRA_GAUSS = 40


@dataclass(frozen=True)
class GeneratorDiscretization:
    system: LinearDelaySystem
    layout: PanelLayout
    matrix: np.ndarray            # collocation generator, node-major
    quad_weights: np.ndarray      # merged Clenshaw-Curtis weights
    generator_block: np.ndarray   # n x (n m) row block B f(0) + Phi f

    @property
    def node_locations(self) -> np.ndarray:
        return self.layout.nodes

    @property
    def panel_map(self) -> np.ndarray:
        return self.layout.panel_map

    @property
    def nodes_per_panel(self) -> int:
        return self.layout.N


def discretize_generator(system: LinearDelaySystem, nodes_per_panel: int = 32) -> GeneratorDiscretization:
    layout = panel_layout(system.kernel.panel_edges(), nodes_per_panel)
    return GeneratorDiscretization(
        system=system,
        layout=layout,
        matrix=collocation_matrix(system, layout),
        quad_weights=quadrature_weights(layout),
        generator_block=generator_row(system, layout),
    )


def weighted_forms(disc: GeneratorDiscretization, weight):
    """Generator form ``K``, its symmetric part ``H`` and the Gram matrix ``G``.

    ``weight`` is a :class:`~ddecert.certificate.WeightFunction`.  ``H`` is
    assembled after integrating the history term by parts,

        int tau <f', f> = 1/2 [tau |f|^2]_{panel ends} - 1/2 int tau' |f|^2,

    so it never forms the O(N^2) differentiation entries whose cancellation
    would otherwise dominate the rounding error of ``(K + K^T) / 2``.
    """
    layout = disc.layout
    n = disc.system.dimension
    m = layout.size
    g, wg = leggauss(layout.N + EXTRA_GAUSS)
    E = interpolation_matrix(layout.ref_nodes, layout.ref_bary, g)
    Gs = np.zeros((m, m))
    Ks = np.zeros((m, m))
    Hs = np.zeros((m, m))
    for p in layout.panels:
        s = p.left + 0.5 * p.width * (g + 1.0)
        w = 0.5 * p.width * wg
        Wt = E.T * (w * weight(s))[None, :]
        ix = np.ix_(p.index, p.index)
        Gs[ix] += Wt @ E
        Ks[ix] += Wt @ (E @ p.D)
        Hs[ix] -= 0.5 * (E.T * (w * weight.derivative(s))[None, :]) @ E
        i0, i1 = p.index[0], p.index[-1]
        Hs[i1, i1] += 0.5 * float(weight(p.right, side="left"))
        Hs[i0, i0] -= 0.5 * float(weight(p.left, side="right"))
    eye = np.eye(n)
    G = np.kron(Gs, eye)
    K = np.kron(Ks, eye)
    H = np.kron(Hs, eye)
    last = slice((m - 1) * n, m * n)
    G[last, last] += eye
    K[last, :] += disc.generator_block
    R = np.zeros_like(H)
    R[last, :] = disc.generator_block
    H += 0.5 * (R + R.T)
    H = 0.5 * (H + H.T)
    return K, H, G


@dataclass(frozen=True)
class DissipativityReport:
    theta_max: float
    mu: float
    margin: float
    N: int
    nodes: np.ndarray = field(repr=False, default=None)
    gram_diagonal: np.ndarray = field(repr=False, default=None)

    def to_dict(self, audit: bool = False) -> dict:
        out = {"theta_max": self.theta_max, "mu": self.mu, "margin": self.margin, "N": self.N}
        if audit:
            out["nodes"] = [float(v) for v in self.nodes]
            out["gram_diagonal"] = [float(v) for v in self.gram_diagonal]
        return out


def check_dissipativity(disc: GeneratorDiscretization, cert: ContractionCertificate,
                        mu: float | None = None) -> DissipativityReport:
    """Largest Rayleigh quotient of the generator in the certificate's norm.

    ``mu`` defaults to the certified rate; passing another value only changes
    the reported margin, which is ``mu - theta_max``.
    """
    if cert.system.dimension != disc.system.dimension:
        raise ValueError("certificate and discretization belong to different systems")
    if not np.all(cert.weight.values > 0):
        raise ValueError("weight has non-positive samples; certificate corrupt")
    _, H, G = weighted_forms(disc, cert.weight)
    try:
        theta = scipy.linalg.eigh(H, G, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("weighted Gram matrix is not positive definite; certificate corrupt") from exc
    mu = cert.mu if mu is None else float(mu)
    theta_max = float(theta[-1])
    n = disc.system.dimension
    return DissipativityReport(theta_max, mu, mu - theta_max, disc.nodes_per_panel,
                               disc.node_locations, np.diag(G)[::n].copy())


def refinement_study(system: LinearDelaySystem, mu: float, N_list) -> list:
    cert = build_certificate(system, mu)
    return [check_dissipativity(discretize_generator(system, int(N)), cert) for N in N_list]

"""Piecewise Chebyshev collocation of the delay generator.

The history interval [-1, 0] is cut into panels at every atom location and
density breakpoint.  Each panel carries ``N`` Chebyshev-Gauss-Lobatto nodes;
neighbouring panels share their common endpoint so the discrete segment is
continuous.  Unknowns are the node values of the segment, ordered by
increasing sigma, with the last node at sigma = 0 standing for the state
``x = f(0)``.

Row layout of the collocation matrix: every node except sigma = 0 carries
the derivative of the interpolant of the panel to its *right* (the panel
whose left endpoint or interior it is), because the shift semigroup
transports information from right to left.  The sigma = 0 row is the
generator row ``B f(0) + Phi f``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .kernel import LinearDelaySystem, gauss_points_for_degree

MIN_PANEL_WIDTH = 1e-12


def cgl_nodes(N: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto nodes on [-1, 1], ascending."""
    k = np.arange(N)
    x = -np.cos(np.pi * k / (N - 1))
    # exact symmetry and endpoints
    x = 0.5 * (x - x[::-1])
    return x


def cgl_barycentric_weights(N: int) -> np.ndarray:
    w = (-1.0) ** np.arange(N)
    w[0] *= 0.5
    w[-1] *= 0.5
    # ascending ordering flips the sign pattern only by a global factor
    return w


def differentiation_matrix(x: np.ndarray, wb: np.ndarray) -> np.ndarray:
    """Barycentric differentiation matrix with negative-sum diagonal."""
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (wb[None, :] / wb[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    D -= np.diag(D.sum(axis=1))
    return D


def interpolation_matrix(x: np.ndarray, wb: np.ndarray, points) -> np.ndarray:
    """Rows evaluate the interpolant through nodes ``x`` at ``points``."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    d = points[:, None] - x[None, :]
    hit = np.abs(d) < 1e-15
    d[hit] = 1.0
    t = wb[None, :] / d
    E = t / t.sum(axis=1, keepdims=True)
    rows, cols = np.nonzero(hit)
    E[rows, :] = 0.0
    E[rows, cols] = 1.0
    return E


def clenshaw_curtis_weights(N: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] for the N CGL nodes."""
    n = N - 1
    theta = np.pi * np.arange(N) / n
    w = np.zeros(N)
    v = np.ones(N - 2)
    if n % 2 == 0:
        w[0] = w[-1] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
        v -= np.cos(n * theta[1:-1]) / (n * n - 1)
    else:
        w[0] = w[-1] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / n
    return w


@dataclass(frozen=True)
class Panel:
    left: float
    right: float
    nodes: np.ndarray        # physical node locations, ascending
    index: np.ndarray        # global node indices of the panel nodes
    D: np.ndarray            # physical differentiation matrix
    cc_weights: np.ndarray   # physical Clenshaw-Curtis weights

    @property
    def width(self) -> float:
        return self.right - self.left

    def to_reference(self, s) -> np.ndarray:
        return 2.0 * (np.asarray(s, dtype=float) - self.left) / self.width - 1.0


@dataclass(frozen=True)
class PanelLayout:
    edges: np.ndarray
    panels: tuple
    nodes: np.ndarray
    panel_map: np.ndarray    # panel owning each node's collocation row
    N: int
    ref_nodes: np.ndarray
    ref_bary: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    def node_of(self, location: float) -> int:
        i = int(np.argmin(np.abs(self.nodes - location)))
        if abs(self.nodes[i] - location) > 1e-13:
            raise ValueError(f"{location} is not a collocation node")
        return i

    def interpolation_row(self, location: float) -> np.ndarray:
        """Global row evaluating the piecewise interpolant at ``location``."""
        row = np.zeros(self.size)
        k = int(np.clip(np.searchsorted(self.edges, location, side="right") - 1,
                        0, len(self.panels) - 1))
        p = self.panels[k]
        row[p.index] = interpolation_matrix(self.ref_nodes, self.ref_bary,
                                            [p.to_reference(location)])[0]
        return row


def panel_layout(edges, N: int) -> PanelLayout:
    if N < 4:
        raise ValueError("nodes_per_panel must be at least 4")
    edges = np.asarray(edges, dtype=float)
    widths = np.diff(edges)
    if np.any(widths < MIN_PANEL_WIDTH):
        bad = int(np.argmin(widths))
        raise ValueError(
            f"degenerate panel [{edges[bad]}, {edges[bad + 1]}] narrower than {MIN_PANEL_WIDTH}")
    x = cgl_nodes(N)
    wb = cgl_barycentric_weights(N)
    Dref = differentiation_matrix(x, wb)
    ccw = clenshaw_curtis_weights(N)
    panels = []
    nodes = []
    owner = []
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        h = b - a
        loc = a + 0.5 * h * (x + 1.0)
        loc[0], loc[-1] = a, b
        start = k * (N - 1)
        idx = np.arange(start, start + N)
        panels.append(Panel(a, b, loc, idx, Dref * (2.0 / h), ccw * (0.5 * h)))
        nodes.extend(loc[:-1])
        owner.extend([k] * (N - 1))
    nodes.append(edges[-1])
    owner.append(len(panels) - 1)
    return PanelLayout(edges, tuple(panels), np.array(nodes), np.array(owner), N, x, wb)


def density_coupling(system: LinearDelaySystem, layout: PanelLayout) -> np.ndarray:
    """Blocks ``W[j]`` (n x n) with ``int zeta_dens f ~= sum_j W[j] f_j``.

    Per-panel Gauss-Legendre quadrature of the density against the panel
    interpolant; exact for polynomial densities up to the rule's degree.
    """
    n = system.dimension
    W = np.zeros((layout.size, n, n))
    dens = system.kernel.density
    if dens is None:
        return W
    q = max(gauss_points_for_degree(dens.degree), layout.N + dens.degree)
    g, wg = leggauss(q)
    E = interpolation_matrix(layout.ref_nodes, layout.ref_bary, g)
    for p in layout.panels:
        s = p.left + 0.5 * p.width * (g + 1.0)
        Z = dens(s) * (0.5 * p.width * wg)[:, None, None]
        W[p.index] += np.einsum("qj,qab->jab", E, Z)
    return W


def collocation_matrix(system: LinearDelaySystem, layout: PanelLayout) -> np.ndarray:
    """Discrete generator acting on node values, node-major ordering."""
    n = system.dimension
    m = layout.size
    scalar = np.zeros((m, m))
    for p in layout.panels:
        # rows for this panel's nodes except its right endpoint
        scalar[p.index[:-1][:, None], p.index[None, :]] = p.D[:-1]
    A = np.kron(scalar, np.eye(n))
    last = slice((m - 1) * n, m * n)
    A[last, :] = generator_row(system, layout)
    return A


def generator_row(system: LinearDelaySystem, layout: PanelLayout) -> np.ndarray:
    """The n x (n m) block ``f -> B f(0) + Phi f``."""
    n = system.dimension
    m = layout.size
    blocks = np.zeros((m, n, n))
    blocks[-1] += system.drift
    for atom in system.kernel.atoms:
        row = layout.interpolation_row(atom.location)
        blocks += row[:, None, None] * atom.matrix[None]
    blocks += density_coupling(system, layout)
    return blocks.transpose(1, 0, 2).reshape(n, m * n)


def quadrature_weights(layout: PanelLayout) -> np.ndarray:
    w = np.zeros(layout.size)
    for p in layout.panels:
        w[p.index] += p.cc_weights
    return w

"""Uniform history grids, snapping and composite quadrature on them."""

import warnings

import numpy as np

__all__ = ["steps_per_unit", "snap_index", "composite_weights", "kernel_grid_weights",
           "segment_weights"]


def steps_per_unit(h: float) -> int:
    """Number of grid steps in [-1, 0]; ``h`` must divide 1."""
    h = float(h)
    if not h > 0:
        raise ValueError("step must be positive")
    K = int(round(1.0 / h))
    if K < 1 or abs(K * h - 1.0) > 1e-9:
        raise ValueError(f"step {h!r} does not divide the unit delay interval")
    return K


def snap_index(location: float, K: int, what: str = "atom") -> int:
    """Grid index (0 at -1, K at 0) nearest to ``location``; warns when moved."""
    j = int(round((location + 1.0) * K))
    if abs(j / K - 1.0 - location) > 1e-12:
        warnings.warn(f"{what} at {location!r} snapped to grid point {j / K - 1.0!r}",
                      stacklevel=3)
    return j


def composite_weights(L: int) -> np.ndarray:
    """Unit-spacing weights for L intervals: Simpson, with a 3/8 tail if L is odd."""
    w = np.zeros(L + 1)
    if L == 1:
        w[:] = 0.5
        return w
    if L == 2:
        w[:] = [1 / 3, 4 / 3, 1 / 3]
        return w
    tail = 3 if L % 2 else 0
    m = L - tail
    if m:
        w[0:m + 1:2] += 2 / 3
        w[1:m:2] += 4 / 3
        w[0] -= 1 / 3
        w[m] -= 1 / 3
    if tail:
        w[m:m + 4] += np.array([3, 9, 9, 3]) / 8
    return w


def _grid_edges(edges, K):
    """Sorted (grid index, exact location) pairs for the panel edges."""
    out = {}
    for e in edges:
        out.setdefault(snap_index(e, K, "panel edge"), float(e))
    return sorted(out.items())


def kernel_grid_weights(kernel, K: int) -> np.ndarray:
    """Blocks Q[k] with int zeta_dens(s) u(s) ds ~= sum_k Q[k] u(-1 + k / K)."""
    n = kernel.dimension
    Q = np.zeros((K + 1, n, n))
    dens = kernel.density
    if dens is None:
        return Q
    h = 1.0 / K
    bp = [j for j, _ in _grid_edges(dens.breakpoints, K)]
    for i, (j0, j1) in enumerate(zip(bp[:-1], bp[1:])):
        if j1 == j0:
            continue
        s = -1.0 + np.arange(j0, j1 + 1) * h
        piece = min(i, len(dens.pieces) - 1)
        Z = dens.evaluate_piece(piece, s)
        Q[j0:j1 + 1] += (h * composite_weights(j1 - j0))[:, None, None] * Z
    return Q


def segment_weights(weight, K: int) -> np.ndarray:
    """Grid weights w_k with int tau(s) |f(s)|^2 ds ~= sum_k w_k |f_k|^2.

    Panels are split at every edge of the certificate kernel; tau is taken
    one-sided at panel ends so jumps at atoms are resolved exactly.
    """
    h = 1.0 / K
    edges = _grid_edges(weight.kernel_ref.panel_edges(), K)
    w = np.zeros(K + 1)
    for (j0, e0), (j1, e1) in zip(edges[:-1], edges[1:]):
        if j1 == j0:
            continue
        s = -1.0 + np.arange(j0, j1 + 1) * h
        tau = np.asarray(weight(s), dtype=float).copy()
        # exact edge locations, so rounding in s cannot move an atom across
        tau[0] = weight(e0, side="right")
        tau[-1] = weight(e1, side="left")
        w[j0:j1 + 1] += h * composite_weights(j1 - j0) * tau
    return w

"""Delay kernels, drift matrices and the scalar functionals built from them.

A delay kernel is a matrix-valued measure on [-1, 0] made of finitely many
point masses (atoms) and a piecewise-polynomial density.  Every
certificate condition in this package reduces to a handful of scalar
functionals of that measure, taken with respect to its spectral-norm
variation |zeta|:

    V        = |zeta|([-1, 0])
    M(mu)    = int exp(2 mu r) d|zeta|(r)
    M2(mu)   = int exp(2 mu r) ||zeta(r)||^2 dr       (density only)

The delay horizon is fixed to [-1, 0].  A system with maximal delay ``r``
is brought to this form by the time change t -> t / r, which multiplies
the drift and every kernel matrix by ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "DelayAtom",
    "DelayDensity",
    "DelayKernel",
    "LinearDelaySystem",
    "dissipativity_lambda",
    "total_variation",
    "exp_moment",
    "sq_exp_moment",
    "gauss_points_for_degree",
    "gauss_rule",
]

_EDGE_TOL = 1e-14


def _as_matrix(a, name="matrix") -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def spectral_norm(m) -> np.ndarray:
    """Operator 2-norm of a matrix or of a stack of matrices (last two axes)."""
    m = np.asarray(m, dtype=float)
    if m.shape[-1] == 1 and m.shape[-2] == 1:
        return np.abs(m[..., 0, 0])
    return np.linalg.svd(m, compute_uv=False)[..., 0]


def gauss_points_for_degree(degree: int) -> int:
    """Gauss-Legendre points used per panel for pieces of the given degree."""
    return int(ceil((degree + 40) / 2))


@dataclass(frozen=True)
class DelayAtom:
    """Point mass ``matrix`` located at ``location`` in [-1, 0]."""

    location: float
    matrix: np.ndarray

    def __post_init__(self):
        loc = float(self.location)
        if not (-1.0 <= loc <= 0.0):
            raise ValueError(f"atom location {loc} outside [-1, 0]")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "matrix", _as_matrix(self.matrix, "atom matrix"))


@dataclass(frozen=True)
class DelayDensity:
    """Piecewise-polynomial matrix density on [-1, 0].

    ``pieces[i]`` has shape ``(d_i + 1, n, n)``; coefficient ``k`` multiplies
    ``(sigma - breakpoints[i]) ** k`` on ``[breakpoints[i], breakpoints[i+1]]``.
    """

    breakpoints: np.ndarray
    pieces: tuple

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("density needs at least two breakpoints")
        if abs(bp[0] + 1.0) > _EDGE_TOL or abs(bp[-1]) > _EDGE_TOL:
            raise ValueError("density breakpoints must start at -1 and end at 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("density breakpoints must be strictly increasing")
        bp = bp.copy()
        bp[0], bp[-1] = -1.0, 0.0
        if len(self.pieces) != bp.size - 1:
            raise ValueError(
                f"{bp.size - 1} intervals but {len(self.pieces)} density pieces")
        pieces = []
        for i, p in enumerate(self.pieces):
            c = np.array(p, dtype=float)
            if c.ndim == 2:
                c = c[None]
            elif c.ndim == 0:
                c = c.reshape(1, 1, 1)
            if c.ndim != 3 or c.shape[1] != c.shape[2]:
                raise ValueError(f"density piece {i} has shape {c.shape}")
            if not np.all(np.isfinite(c)):
                raise ValueError(f"density piece {i} has non-finite entries")
            pieces.append(c)
        dims = {c.shape[1] for c in pieces}
        if len(dims) != 1:
            raise ValueError("density pieces disagree on dimension")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", tuple(pieces))

    @classmethod
    def constant(cls, matrix) -> "DelayDensity":
        return cls(np.array([-1.0, 0.0]), (_as_matrix(matrix)[None],))

    @property
    def dimension(self) -> int:
        return self.pieces[0].shape[1]

    @property
    def degree(self) -> int:
        return max(c.shape[0] for c in self.pieces) - 1

    def piece_index(self, sigma) -> np.ndarray:
        sigma = np.asarray(sigma, dtype=float)
        idx = np.searchsorted(self.breakpoints, sigma, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def evaluate_piece(self, i: int, sigma) -> np.ndarray:
        """Matrix values of piece ``i`` at ``sigma``; shape ``sigma.shape + (n, n)``."""
        sigma = np.asarray(sigma, dtype=float)
        c = self.pieces[i]
        t = (sigma - self.breakpoints[i])[..., None, None]
        out = np.broadcast_to(c[-1], sigma.shape + c.shape[1:]).copy()
        for k in range(c.shape[0] - 2, -1, -1):
            out = out * t + c[k]
        return out

    def __call__(self, sigma) -> np.ndarray:
        sigma = np.asarray(sigma, dtype=float)
        idx = self.piece_index(sigma)
        n = self.dimension
        out = np.empty(sigma.shape + (n, n))
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = self.evaluate_piece(int(i), sigma[mask])
        return out

    def norm(self, sigma) -> np.ndarray:
        return spectral_norm(self(sigma))


@dataclass(frozen=True)
class DelayKernel:
    """The delay measure: atoms plus an optional density, all n x n."""

    atoms: tuple = ()
    density: DelayDensity | None = None
    dimension: int | None = None

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, DelayAtom) else DelayAtom(*a) for a in self.atoms)
        dims = {a.matrix.shape[0] for a in atoms}
        if self.density is not None:
            dims.add(self.density.dimension)
        if self.dimension is not None:
            dims.add(int(self.dimension))
        if len(dims) > 1:
            raise ValueError(f"kernel matrices disagree on dimension: {sorted(dims)}")
        if not dims:
            raise ValueError("empty kernel needs an explicit dimension")
        locs = [a.location for a in atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("two atoms share a location; combine them before building the kernel")
        atoms = tuple(sorted(atoms, key=lambda a: a.location))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "dimension", dims.pop())

    @classmethod
    def empty(cls, n: int) -> "DelayKernel":
        return cls((), None, n)

    @classmethod
    def single(cls, location: float, matrix) -> "DelayKernel":
        return cls((DelayAtom(location, matrix),))

    @property
    def is_empty(self) -> bool:
        return not self.atoms and self.density is None

    def panel_edges(self) -> np.ndarray:
        """Sorted panel edges: -1, 0, atom locations and density breakpoints."""
        pts = [-1.0, 0.0] + [a.location for a in self.atoms]
        if self.density is not None:
            pts += list(self.density.breakpoints)
        return np.unique(np.array(pts, dtype=float))

    def scaled(self, t: float) -> "DelayKernel":
        atoms = tuple(DelayAtom(a.location, t * a.matrix) for a in self.atoms)
        dens = None
        if self.density is not None:
            dens = DelayDensity(self.density.breakpoints,
                                tuple(t * c for c in self.density.pieces))
        return DelayKernel(atoms, dens, self.dimension)


@dataclass(frozen=True)
class LinearDelaySystem:
    """u'(t) = B u(t) + int_{-1}^0 dzeta(s) u(t + s)."""

    drift: np.ndarray
    kernel: DelayKernel = field(default=None)

    def __post_init__(self):
        B = _as_matrix(self.drift, "drift B")
        kernel = self.kernel if self.kernel is not None else DelayKernel.empty(B.shape[0])
        if kernel.dimension != B.shape[0]:
            raise ValueError(
                f"drift is {B.shape[0]}x{B.shape[0]} but kernel dimension is {kernel.dimension}")
        object.__setattr__(self, "drift", B)
        object.__setattr__(self, "kernel", kernel)

    @property
    def dimension(self) -> int:
        return self.drift.shape[0]

    @classmethod
    def scalar(cls, b: float, c: float = 0.0, delay: float = -1.0) -> "LinearDelaySystem":
        """Scalar system u' = b u(t) + c u(t + delay)."""
        if c == 0.0:
            return cls([[b]], DelayKernel.empty(1))
        return cls([[b]], DelayKernel.single(delay, [[c]]))


def dissipativity_lambda(B) -> float:
    """Smallest lambda such that B - lambda I is dissipative.

    This is the largest eigenvalue of the symmetric part (B + B^T) / 2.
    """
    B = _as_matrix(B, "B")
    return float(np.linalg.eigvalsh(0.5 * (B + B.T))[-1])


@lru_cache(maxsize=512)
def gauss_rule(points: int):
    """Read-only Gauss-Legendre nodes and weights on [-1, 1], cached."""
    x, w = leggauss(points)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _density_panels(kernel: DelayKernel):
    edges = kernel.panel_edges()
    return list(zip(edges[:-1], edges[1:]))


def _density_integral(kernel: DelayKernel, weight_fn, power: int = 1, points: int | None = None) -> float:
    dens = kernel.density
    if dens is None:
        return 0.0
    if points is None:
        points = gauss_points_for_degree(dens.degree * power)
    x, w = gauss_rule(int(points))
    total = 0.0
    for a, b in _density_panels(kernel):
        s = 0.5 * (b - a) * (x + 1.0) + a
        nv = dens.norm(s)
        total += 0.5 * (b - a) * np.dot(w, weight_fn(s) * nv ** power)
    return float(total)


def total_variation(kernel: DelayKernel) -> float:
    """V = sum ||C_i|| + int ||zeta_dens(s)|| ds, spectral norms throughout."""
    atom_part = sum(float(spectral_norm(a.matrix)) for a in kernel.atoms)
    return atom_part + _density_integral(kernel, np.ones_like)


def exp_moment(kernel: DelayKernel, mu: float, points: int | None = None) -> float:
    """int_{-1}^0 exp(2 mu r) d|zeta|(r)."""
    mu = float(mu)
    atom_part = sum(np.exp(2.0 * mu * a.location) * float(spectral_norm(a.matrix))
                    for a in kernel.atoms)
    return float(atom_part) + _density_integral(
        kernel, lambda s: np.exp(2.0 * mu * s), points=points)


def sq_exp_moment(density, mu: float, points: int | None = None) -> float:
    """int_{-1}^0 exp(2 mu r) ||zeta(r)||^2 dr for an atom-free kernel.

    Accepts either a :class:`DelayDensity` or a :class:`DelayKernel`; a kernel
    carrying atoms is rejected because the squared-norm integral is not
    defined for point masses.
    """
    if isinstance(density, DelayKernel):
        if density.atoms:
            raise ValueError("squared-norm moment is only defined for atom-free kernels")
        kernel = density
    elif isinstance(density, DelayDensity):
        kernel = DelayKernel((), density)
    elif density is None:
        return 0.0
    else:
        raise TypeError(f"expected DelayDensity or DelayKernel, got {type(density).__name__}")
    mu = float(mu)
    return _density_integral(kernel, lambda s: np.exp(2.0 * mu * s), power=2, points=points)

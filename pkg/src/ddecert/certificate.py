"""Equivalent inner products that make the delay generator dissipative.

For ``u' = B u(t) + int dzeta(s) u(t+s)`` with ``B - lam I`` dissipative, the
weighted form

    ((x, f), (y, g))_tau = <x, y> + int_{-1}^0 tau(s) <f(s), g(s)> ds

makes ``A - mu I`` dissipative whenever the gap

    (mu - lam)^2 - V * int exp(2 mu r) d|zeta|(r)

is positive.  The weight is

    tau(s) = exp(-2 mu s) * (gamma - (V / gamma) * int_s^0 exp(2 mu r) d|zeta|(r))

with ``gamma = mu - lam``.  The bracket is smallest at s = -1 where it equals
``gap / gamma``, so tau is bounded away from zero exactly when the gap is
positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .collocation import cgl_nodes
from .kernel import (DelayKernel, LinearDelaySystem, dissipativity_lambda,
                     exp_moment, gauss_points_for_degree, gauss_rule, sq_exp_moment, total_variation)

__all__ = [
    "NoCertificateError",
    "WeightFunction",
    "ContractionCertificate",
    "RateBounds",
    "ShiftedCertificate",
    "RenormMatrix",
    "dissipativity_gap",
    "density_gap",
    "min_mu",
    "rate_bounds",
    "weight_function",
    "build_certificate",
    "generalized_contraction_shift",
    "lyapunov_renorm",
]


class NoCertificateError(ValueError):
    """Raised when the requested rate admits no certificate."""


def _check_rate(lam, mu):
    if not mu > lam:
        raise ValueError(f"need mu > lambda, got mu={mu!r}, lambda={lam!r}")


def dissipativity_gap(lam: float, mu: float, kernel: DelayKernel) -> float:
    """(mu - lam)^2 - V * int exp(2 mu r) d|zeta|(r); a certificate exists iff > 0."""
    lam, mu = float(lam), float(mu)
    _check_rate(lam, mu)
    return (mu - lam) ** 2 - total_variation(kernel) * exp_moment(kernel, mu)


def density_gap(lam: float, mu: float, density) -> float:
    """(mu - lam)^2 - int exp(2 mu r) ||zeta(r)||^2 dr, atom-free kernels only."""
    lam, mu = float(lam), float(mu)
    _check_rate(lam, mu)
    return (mu - lam) ** 2 - sq_exp_moment(density, mu)


def min_mu(lam: float, kernel: DelayKernel, tol: float = 1e-10) -> float:
    """Smallest certifiable rate, to absolute accuracy ``tol``.

    The gap increases strictly in mu on (lam, inf), so exponential bracketing
    followed by bisection finds the infimum.  The returned value is the upper
    end of the final bracket, so the gap is positive there.
    """
    lam = float(lam)
    if not tol > 0:
        raise ValueError("tol must be positive")
    V = total_variation(kernel)
    if V == 0.0:
        return lam

    def gap(mu):
        return (mu - lam) ** 2 - V * exp_moment(kernel, mu)

    lo, step = lam, 1.0
    hi = lam + step
    while gap(hi) <= 0:
        lo = hi
        step *= 2.0
        hi = lam + step
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    return float(hi)


@dataclass(frozen=True)
class RateBounds:
    mu_sufficient: float
    zero_dissipative: bool
    webb_mu: float

    def to_dict(self) -> dict:
        return {"mu_sufficient": self.mu_sufficient, "webb_mu": self.webb_mu,
                "zero_dissipative": self.zero_dissipative}


def rate_bounds(lam: float, kernel: DelayKernel) -> RateBounds:
    """Closed-form sufficient rates.

    ``mu_sufficient`` replaces exp(2 mu r) by the larger exp(2 lam r);
    ``zero_dissipative`` tests lam + V < 0 (A itself dissipative after
    renorming); ``webb_mu`` is the older bound max(0, lam + V).
    """
    lam = float(lam)
    V = total_variation(kernel)
    mu_s = lam + np.sqrt(V * exp_moment(kernel, lam))
    return RateBounds(float(mu_s), bool(lam + V < 0), float(max(0.0, lam + V)))


@dataclass(frozen=True)
class WeightFunction:
    """The weight tau of the renormed history component, with samples.

    ``side`` marks one-sided values at atoms: ``"left"`` is the limit from
    s < r (the atom's mass is inside int_s^0), ``"right"`` the limit from
    s > r.  Points where tau is continuous are marked ``"both"``.
    """

    mu: float
    gamma: float
    kernel_ref: DelayKernel
    scale: float            # V / gamma
    grid: np.ndarray
    values: np.ndarray
    side: tuple

    def tail_moment(self, s, side: str = "right") -> np.ndarray:
        """int_s^0 exp(2 mu r) d|zeta|(r); atoms at s count only for side='left'."""
        return _tail_moment(self.kernel_ref, self.mu, s, side)

    def __call__(self, s, side: str = "right") -> np.ndarray:
        s = np.asarray(s, dtype=float)
        bracket = self.gamma - self.scale * self.tail_moment(s, side)
        return np.exp(-2.0 * self.mu * s) * bracket

    def derivative(self, s) -> np.ndarray:
        """d tau / ds away from atoms: -2 mu tau + (V / gamma) ||zeta_dens(s)||."""
        s = np.asarray(s, dtype=float)
        out = -2.0 * self.mu * self(s)
        if self.kernel_ref.density is not None:
            out = out + self.scale * self.kernel_ref.density.norm(s)
        return out

    def samples(self) -> list:
        return [{"s": float(s), "value": float(v), "side": side}
                for s, v, side in zip(self.grid, self.values, self.side)]


def _tail_moment(kernel: DelayKernel, mu: float, s, side: str) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    for atom in kernel.atoms:
        w = np.exp(2.0 * mu * atom.location) * np.linalg.norm(atom.matrix, 2)
        if side == "left":
            out += np.where(s <= atom.location, w, 0.0)
        else:
            out += np.where(s < atom.location, w, 0.0)
    dens = kernel.density
    if dens is None:
        return out
    edges = kernel.panel_edges()
    x, wq = gauss_rule(gauss_points_for_degree(dens.degree))

    def seg(a, b):
        # int_a^b exp(2 mu r) ||zeta(r)|| dr, vectorized over a (b scalar or array)
        a = np.asarray(a, dtype=float)
        b = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
        half = 0.5 * (b - a)
        r = a[..., None] + half[..., None] * (x + 1.0)
        vals = np.exp(2.0 * mu * r) * dens.norm(r)
        return half * (vals @ wq)

    full = np.array([seg(a, b) for a, b in zip(edges[:-1], edges[1:])])
    suffix = np.concatenate([np.cumsum(full[::-1])[::-1], [0.0]])
    k = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, len(full) - 1)
    right = edges[k + 1]
    out += seg(s, right) + suffix[k + 1]
    return out


def weight_function(lam: float, mu: float, kernel: DelayKernel,
                    grid_points_per_panel: int = 33) -> WeightFunction:
    """Sample tau on a panel grid without checking positivity."""
    lam, mu = float(lam), float(mu)
    _check_rate(lam, mu)
    gamma = mu - lam
    scale = total_variation(kernel) / gamma
    edges = kernel.panel_edges()
    atom_locs = {a.location for a in kernel.atoms}
    x = cgl_nodes(max(int(grid_points_per_panel), 2))
    grid, sides = [], []
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if a in atom_locs:
            grid += [a, a]
            sides += ["left", "right"]
        else:
            grid.append(a)
            sides.append("both")
        interior = a + 0.5 * (b - a) * (x[1:-1] + 1.0)
        grid += list(interior)
        sides += ["both"] * interior.size
    if 0.0 in atom_locs:
        grid += [0.0, 0.0]
        sides += ["left", "right"]
    else:
        grid.append(0.0)
        sides.append("both")
    grid = np.array(grid)
    is_left = np.array([sd == "left" for sd in sides])
    tail = np.where(is_left, _tail_moment(kernel, mu, grid, "left"),
                    _tail_moment(kernel, mu, grid, "right"))
    values = np.exp(-2.0 * mu * grid) * (gamma - scale * tail)
    return WeightFunction(mu, gamma, kernel, scale, grid, values, tuple(sides))


@dataclass(frozen=True)
class ContractionCertificate:
    """A certified rate ``mu`` with its weight and equivalence constants."""

    lam: float
    mu: float
    gamma: float
    weight: WeightFunction
    c1: float
    c2: float
    gap: float
    system: LinearDelaySystem

    def tau(self, s, side: str = "right") -> np.ndarray:
        return self.weight(s, side)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "mu": self.mu,
            "gamma": self.gamma,
            "gap": self.gap,
            "c1": self.c1,
            "c2": self.c2,
            "tau": self.weight.samples(),
        }


def build_certificate(system: LinearDelaySystem, mu: float,
                      grid_points_per_panel: int = 33) -> ContractionCertificate:
    """Certificate that ``A - mu I`` is dissipative under the tau inner product.

    Raises :class:`NoCertificateError` when the gap at ``mu`` is not positive.
    ``c1`` is the smaller of the sampled minimum and the analytic lower bound
    ``(gap / gamma) * min(1, exp(2 mu))``; ``c2`` is the sampled maximum.
    """
    lam = dissipativity_lambda(system.drift)
    mu = float(mu)
    _check_rate(lam, mu)
    gap = dissipativity_gap(lam, mu, system.kernel)
    if not gap > 0:
        raise NoCertificateError(f"gap <= 0 at mu={mu!r} (gap={gap!r}): no certificate at this rate")
    w = weight_function(lam, mu, system.kernel, grid_points_per_panel)
    gamma = mu - lam
    floor = (gap / gamma) * min(1.0, np.exp(2.0 * mu))
    c1 = float(min(np.min(w.values), floor))
    c2 = float(np.max(w.values))
    if not (c1 > 0 and np.isfinite(c2)):
        raise NoCertificateError(f"weight not bounded away from zero (c1={c1!r})")
    return ContractionCertificate(lam, mu, gamma, w, c1, c2, float(gap), system)


@dataclass(frozen=True)
class ShiftedCertificate:
    nu: float
    certificate: ContractionCertificate
    shifted_system: LinearDelaySystem


def generalized_contraction_shift(system: LinearDelaySystem,
                                  grid_points_per_panel: int = 33) -> ShiftedCertificate:
    """Rate-``nu`` certificate valid for every system.

    With ``nu = max(0, lam + V) + 1`` the shifted drift ``B - nu I`` has
    ``lam - nu + V < 0``, so the shifted generator is dissipative under the
    mu = 0 weight.  The same weight then gives ``((A - nu I) z, z)_tau <= 0``
    for the original generator.
    """
    lam = dissipativity_lambda(system.drift)
    V = total_variation(system.kernel)
    nu = max(0.0, lam + V) + 1.0
    shifted = LinearDelaySystem(system.drift - nu * np.eye(system.dimension), system.kernel)
    inner = build_certificate(shifted, 0.0, grid_points_per_panel)
    cert = ContractionCertificate(lam, nu, nu - lam, inner.weight, inner.c1, inner.c2,
                                  inner.gap, system)
    return ShiftedCertificate(nu, cert, shifted)


@dataclass(frozen=True)
class RenormMatrix:
    Q: np.ndarray
    gamma_lower: float

    def form(self, x, y=None) -> float:
        y = x if y is None else y
        return float(np.asarray(x) @ self.Q @ np.asarray(y))


def lyapunov_renorm(A, C) -> RenormMatrix:
    """Solve A^T Q + Q A = -C^T C for an observable, stable pair (A, C).

    ``x -> x^T Q x`` is then an equivalent norm in which A is dissipative:
    2 x^T Q A x = -|C x|^2.  Solved as one dense Kronecker system.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or C.shape[1] != n:
        raise ValueError(f"incompatible shapes A {A.shape}, C {C.shape}")
    if np.max(np.linalg.eigvals(A).real) >= 0:
        raise ValueError("A is not asymptotically stable: Lyapunov integral diverges")
    O = np.vstack([C @ np.linalg.matrix_power(A, k) for k in range(n)])
    if np.linalg.matrix_rank(O) < n:
        raise ValueError("(A, C) is not observable: Q singular, inner product not equivalent")
    I = np.eye(n)
    # vec(A^T Q + Q A) = (I kron A^T + A^T kron I) vec(Q), column-major vec
    L = np.kron(I, A.T) + np.kron(A.T, I)
    rhs = -(C.T @ C).reshape(-1, order="F")
    Q = scipy.linalg.solve(L, rhs).reshape(n, n, order="F")
    Q = 0.5 * (Q + Q.T)
    eig = np.linalg.eigvalsh(Q)
    if not eig[0] > 0:
        raise ValueError("Q is not positive definite: inner product not equivalent")
    return RenormMatrix(Q, float(eig[0]))

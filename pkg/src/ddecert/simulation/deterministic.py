"""Method-of-steps RK4 for linear delay equations and weighted-norm checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ..kernel import LinearDelaySystem
from .grid import kernel_grid_weights, segment_weights, snap_index, steps_per_unit

__all__ = [
    "HistorySegment",
    "DeterministicTrajectory",
    "ContractionReport",
    "integrate_dde",
    "weighted_norm",
    "contraction_report",
]


@dataclass(frozen=True)
class HistorySegment:
    """Samples of the initial segment on the uniform grid -1, -1 + h, ..., 0.

    ``values`` has shape ``(K + 1, n)`` or ``(K + 1, m, n)`` for a batch of
    ``m`` segments; ``slopes`` holds derivatives for the Hermite dense output.
    """

    values: np.ndarray
    slopes: np.ndarray
    h: float

    def __post_init__(self):
        K = steps_per_unit(self.h)
        v = np.asarray(self.values, dtype=float)
        d = np.asarray(self.slopes, dtype=float)
        if v.shape[0] != K + 1 or v.shape != d.shape:
            raise ValueError(f"history needs {K + 1} samples with matching slopes")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slopes", d)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(-1.0, 0.0, self.values.shape[0])

    @classmethod
    def from_function(cls, func, h, derivative=None) -> "HistorySegment":
        """Sample ``func`` (vectorized over sigma, trailing state axes).

        Without ``derivative`` the slopes come from second-order differences.
        """
        K = steps_per_unit(h)
        s = np.linspace(-1.0, 0.0, K + 1)
        v = np.asarray(func(s), dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if derivative is None:
            d = np.gradient(v, s, axis=0, edge_order=2)
        else:
            d = np.asarray(derivative(s), dtype=float).reshape(v.shape)
        return cls(v, d, h)

    @classmethod
    def constant(cls, value, h) -> "HistorySegment":
        K = steps_per_unit(h)
        value = np.atleast_1d(np.asarray(value, dtype=float))
        v = np.broadcast_to(value, (K + 1,) + value.shape).copy()
        return cls(v, np.zeros_like(v), h)

    def __call__(self, sigma):
        spline = CubicHermiteSpline(self.grid, self.values, self.slopes, axis=0)
        return spline(sigma)


@dataclass(frozen=True)
class DeterministicTrajectory:
    """Grid solution together with the initial segment.

    ``states[i]`` is u(t_i); ``full`` stacks history samples (without f(0))
    and the solution so that the segment at step i is ``full[i : i + K + 1]``.
    """

    times: np.ndarray
    states: np.ndarray
    slopes: np.ndarray
    full: np.ndarray
    h: float
    system: LinearDelaySystem

    @property
    def K(self) -> int:
        return steps_per_unit(self.h)

    def segment(self, i: int) -> np.ndarray:
        return self.full[i:i + self.K + 1]

    def segment_norms(self, cert, indices=None) -> np.ndarray:
        if indices is None:
            indices = np.arange(self.times.size)
        w = segment_weights(cert.weight, self.K)
        out = []
        for i in indices:
            seg = self.full[i:i + self.K + 1]
            sq = np.einsum("k,k...->...", w, np.sum(seg ** 2, axis=-1))
            out.append(np.sqrt(np.sum(self.states[i] ** 2, axis=-1) + sq))
        return np.array(out)


def _split_kernel(system: LinearDelaySystem, K: int):
    """Instantaneous matrix and lagged atoms (lag in steps >= 1)."""
    B_eff = system.drift.copy()
    lagged = []
    for atom in system.kernel.atoms:
        j = snap_index(atom.location, K)
        lag = K - j
        if lag == 0:
            B_eff = B_eff + atom.matrix
        else:
            lagged.append((lag, atom.matrix))
    Q = kernel_grid_weights(system.kernel, K)
    B_eff = B_eff + Q[K]
    has_density = system.kernel.density is not None
    return B_eff, lagged, Q[:K], has_density


def integrate_dde(system: LinearDelaySystem, x0, history: HistorySegment, t_final: float,
                  h: float) -> DeterministicTrajectory:
    """Classical RK4 with the method of steps.

    Delayed values at half steps come from the cubic Hermite interpolant on
    the interval they fall in; atoms are snapped to the grid.  ``x0`` may
    differ from ``history.values[-1]`` (the segment need not be continuous).
    """
    K = steps_per_unit(h)
    if abs(history.h - h) > 1e-15:
        raise ValueError("history grid step must equal the integration step")
    steps = int(round(t_final / h))
    if steps < 0 or abs(steps * h - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"step {h!r} does not divide t_final {t_final!r}")
    n = system.dimension
    x0 = np.asarray(x0, dtype=float)
    hv = history.values
    single = hv.ndim == 2
    if single:
        hv = hv[:, None, :]
        hd = history.slopes[:, None, :]
        x0 = x0.reshape(1, n)
    else:
        hd = history.slopes
        x0 = np.broadcast_to(x0, hv.shape[1:]).copy()
    m = hv.shape[1]
    if hv.shape[2] != n:
        raise ValueError(f"history has dimension {hv.shape[2]}, system has {n}")

    B_eff, lagged, Q, has_density = _split_kernel(system, K)
    BT = B_eff.T
    # Q as a (K n, n) block column so the density sum is a single matmul
    Qflat = Q.transpose(0, 2, 1).reshape(K * n, n)
    # U[j + K] = u(t_j), j >= -K; index K holds x0 rather than f(0)
    U = np.empty((steps + K + 1, m, n))
    dU = np.empty_like(U)
    Mid = np.empty((steps + K, m, n))
    U[:K] = hv[:K]
    dU[:K] = hd[:K]
    U[K] = x0
    hist_end = hv[K]
    # midpoints of history intervals, last one ends at f(0)
    left, right = hv[:K], np.concatenate([hv[1:K], hist_end[None]])
    dl, dr = hd[:K], np.concatenate([hd[1:K], hd[K][None]])
    Mid[:K] = 0.5 * (left + right) + 0.125 * h * (dl - dr)

    def delayed(arr, base):
        acc = np.zeros((m, n))
        for lag, C in lagged:
            acc += arr[base - lag] @ C.T
        if has_density:
            acc += arr[base - K:base].transpose(1, 0, 2).reshape(m, K * n) @ Qflat
        return acc

    half = 0.5 * h
    for i in range(steps):
        c = i + K
        y = U[c]
        k1 = y @ BT + delayed(U, c)
        dU[c] = k1
        if i > 0:
            Mid[c - 1] = 0.5 * (U[c - 1] + y) + 0.125 * h * (dU[c - 1] - k1)
        pm = delayed(Mid, c)
        k2 = (y + half * k1) @ BT + pm
        k3 = (y + half * k2) @ BT + pm
        k4 = (y + h * k3) @ BT + delayed(U, c + 1)
        U[c + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    c = steps + K
    dU[c] = U[c] @ BT + delayed(U, c)

    times = np.arange(steps + 1) * h
    states = U[K:]
    slopes = dU[K:]
    if single:
        states, slopes, U = states[:, 0], slopes[:, 0], U[:, 0]
    return DeterministicTrajectory(times, states, slopes, U, h, system)


def weighted_norm(state, cert, h: float | None = None) -> float:
    """sqrt(|x|^2 + int tau |f|^2) for ``state = (x, f_samples)``.

    ``f_samples`` lives on the uniform grid over [-1, 0]; its step is
    inferred from the sample count unless ``h`` is given.
    """
    x, f = state
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    K = f.shape[0] - 1 if h is None else steps_per_unit(h)
    w = segment_weights(cert.weight, K)
    sq = float(np.sum(np.asarray(x, dtype=float) ** 2)) + float(w @ np.sum(f ** 2, axis=-1))
    return float(np.sqrt(sq))


@dataclass(frozen=True)
class ContractionReport:
    max_ratio: float
    passed: bool
    mu: float
    times: np.ndarray
    ratios: np.ndarray

    def to_dict(self) -> dict:
        return {"max_ratio": self.max_ratio, "pass": self.passed, "mu": self.mu}


def contraction_report(trajectory: DeterministicTrajectory, cert, mu: float | None = None,
                       every: float = 0.1, tol: float = 1e-4) -> ContractionReport:
    """Largest ||T(t) z||_tau / (exp(mu t) ||z||_tau) over checkpoints."""
    mu = cert.mu if mu is None else float(mu)
    stride = max(1, int(round(every / trajectory.h)))
    idx = np.arange(0, trajectory.times.size, stride)
    if idx[-1] != trajectory.times.size - 1:
        idx = np.append(idx, trajectory.times.size - 1)
    norms = trajectory.segment_norms(cert, idx)
    if np.any(norms[0] == 0):
        raise ValueError("initial state has zero weighted norm")
    t = trajectory.times[idx]
    ratios = norms / (np.exp(mu * t).reshape((-1,) + (1,) * (norms.ndim - 1)) * norms[0])
    max_ratio = float(np.max(ratios))
    return ContractionReport(max_ratio, bool(max_ratio <= 1.0 + tol), mu, t, ratios)

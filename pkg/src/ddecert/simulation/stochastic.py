"""Euler-Maruyama ensembles for stochastic delay equations.

Paths are simulated in fixed-size blocks.  Every arithmetic operation is
elementwise across paths (matrix-vector products are unrolled over the
state dimension), and every path draws from its own counter-based stream,
so results are bitwise identical for any number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..certificate import build_certificate, rate_bounds
from ..kernel import LinearDelaySystem, dissipativity_lambda
from .grid import kernel_grid_weights, segment_weights, snap_index, steps_per_unit
from .rng import BOOTSTRAP_STREAM, block_generators, draw_block, path_generator, thread_count

__all__ = [
    "StochasticEnsemble",
    "StabilityEstimate",
    "MeanSquareResult",
    "LyapunovResult",
    "additive_noise",
    "multiplicative_noise",
    "zero_drift",
    "simulate_sdde_pair",
    "mean_square_contraction",
    "as_lyapunov_exponent",
    "stability_region",
    "BLOCK_SIZE",
]

BLOCK_SIZE = 100
CHUNK_STEPS = 1000
BOOTSTRAP_RESAMPLES = 200
BLOWUP_FACTOR = 1e6


def _matvec(M, X):
    """X @ M.T with a fixed, elementwise summation order."""
    out = X[:, 0:1] * M[:, 0]
    for j in range(1, M.shape[1]):
        out = out + X[:, j:j + 1] * M[:, j]
    return out


def zero_drift(X):
    return np.zeros_like(X)


def additive_noise(G):
    """Constant diffusion matrix G (n x k); Lipschitz constant 0."""
    G = np.atleast_2d(np.asarray(G, dtype=float))

    def g(X):
        return np.broadcast_to(G, (X.shape[0],) + G.shape)
    g.noise_dim = G.shape[1]
    return g


def multiplicative_noise(sigma, n=1):
    """g(x) = sigma * diag(x), one Brownian motion per component."""
    sigma = float(sigma)

    def g(X):
        out = np.zeros((X.shape[0], X.shape[1], X.shape[1]))
        for i in range(X.shape[1]):
            out[:, i, i] = sigma * X[:, i]
        return out
    g.noise_dim = n
    return g


def _noise_term(g, X, dW):
    Gx = g(X)
    out = Gx[:, :, 0] * dW[:, 0:1]
    for j in range(1, dW.shape[1]):
        out = out + Gx[:, :, j] * dW[:, j:j + 1]
    return out


@dataclass(frozen=True)
class StochasticEnsemble:
    path_count: int
    seed: int
    dt: float
    times: np.ndarray             # checkpoint times
    sq_distance: np.ndarray       # (paths, checkpoints) weighted squared distance
    terminal_a: np.ndarray
    terminal_b: np.ndarray


@dataclass(frozen=True)
class StabilityEstimate:
    rate: float
    ci_low: float
    ci_high: float
    functional: str

    def to_dict(self) -> dict:
        return {"rate": self.rate, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "functional": self.functional}


def _initial_buffer(x0, K, n):
    """Ring contents for the initial segment: constant vector or (K+1, n) samples."""
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim <= 1:
        x0 = np.broadcast_to(np.atleast_1d(x0), (K + 1, n))
    if x0.shape != (K + 1, n):
        raise ValueError(f"initial data must be a length-{n} vector or ({K + 1}, {n}) samples")
    return x0


def _pair_block(args):
    (system, f, g, k, hist_a, hist_b, dt, steps, record_stride, seed, start, stop, seg_w) = args
    K = steps_per_unit(dt)
    n = system.dimension
    m = stop - start
    B = system.drift.copy()
    lagged = []
    for atom in system.kernel.atoms:
        lag = K - snap_index(atom.location, K)
        if lag == 0:
            B = B + atom.matrix
        else:
            lagged.append((lag, atom.matrix))
    Q = kernel_grid_weights(system.kernel, K)
    B = B + Q[K]
    has_density = system.kernel.density is not None
    L = K + 1
    ring_a = np.repeat(hist_a[:, None, :], m, axis=1)
    ring_b = np.repeat(hist_b[:, None, :], m, axis=1)
    ptr = K  # ring slot holding the current state
    gens = block_generators(seed, start, stop)
    sqrt_dt = np.sqrt(dt)
    n_rec = steps // record_stride + 1
    rec = np.empty((m, n_rec))

    def record(col):
        order = (np.arange(L) + ptr + 1) % L  # oldest (sigma = -1) first
        diff = ring_a[order] - ring_b[order]
        sq_seg = np.einsum("k,km->m", seg_w, np.sum(diff ** 2, axis=-1))
        rec[:, col] = np.sum(diff[-1] ** 2, axis=-1) + sq_seg

    def drift(ring):
        X = ring[ptr]
        out = _matvec(B, X) + f(X)
        for lag, C in lagged:
            out = out + _matvec(C, ring[(ptr - lag) % L])
        if has_density:
            order = (np.arange(K) + ptr + 1) % L
            for j in range(n):
                out[:, j] += np.einsum("kb,kmb->m", Q[:K, j, :], ring[order])
        return out

    record(0)
    col = 1
    done = 0
    while done < steps:
        chunk = min(CHUNK_STEPS, steps - done)
        Z = draw_block(gens, chunk, k)
        for s in range(chunk):
            dW = Z[s] * sqrt_dt
            Xa, Xb = ring_a[ptr], ring_b[ptr]
            new_a = Xa + drift(ring_a) * dt + _noise_term(g, Xa, dW)
            new_b = Xb + drift(ring_b) * dt + _noise_term(g, Xb, dW)
            ptr = (ptr + 1) % L
            ring_a[ptr] = new_a
            ring_b[ptr] = new_b
            done += 1
            if done % record_stride == 0:
                record(col)
                col += 1
    return rec, ring_a[ptr].copy(), ring_b[ptr].copy()


def simulate_sdde_pair(system: LinearDelaySystem, f, g, x0a, x0b, dt: float, t_final: float,
                       seed: int, path_count: int = 1, cert=None, record_every: float = 0.1,
                       threads=None) -> StochasticEnsemble:
    """Synchronously coupled Euler-Maruyama pair for
    dx = [B x + int dzeta x(t + s) + f(x)] dt + g(x) dW.

    Both copies see identical Brownian increments.  The squared distance
    |dx|^2 + int tau |df|^2 of the pair's segments is recorded every
    ``record_every`` time units; without a certificate tau = 1.
    """
    K = steps_per_unit(dt)
    steps = int(round(t_final / dt))
    if abs(steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"dt {dt!r} does not divide t_final {t_final!r}")
    stride = max(1, int(round(record_every / dt)))
    if steps % stride:
        raise ValueError("record_every must divide t_final")
    if path_count < 1:
        raise ValueError("path_count must be at least 1")
    n = system.dimension
    k = getattr(g, "noise_dim", None) or np.asarray(g(np.zeros((1, n)))).shape[-1]
    hist_a = _initial_buffer(x0a, K, n)
    hist_b = _initial_buffer(x0b, K, n)
    if cert is None:
        seg_w = np.full(K + 1, 1.0 / K)
        seg_w[[0, -1]] *= 0.5
    else:
        seg_w = segment_weights(cert.weight, K)
    blocks = [(s, min(s + BLOCK_SIZE, path_count)) for s in range(0, path_count, BLOCK_SIZE)]
    jobs = [(system, f, g, k, hist_a, hist_b, dt, steps, stride, int(seed), a, b, seg_w)
            for a, b in blocks]
    workers = min(thread_count(threads), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(_pair_block, jobs))
    else:
        results = [_pair_block(j) for j in jobs]
    rec = np.concatenate([r[0] for r in results], axis=0)
    ta = np.concatenate([r[1] for r in results], axis=0)
    tb = np.concatenate([r[2] for r in results], axis=0)
    times = np.arange(rec.shape[1]) * stride * dt
    return StochasticEnsemble(path_count, int(seed), float(dt), times, rec, ta, tb)


def _slope(t, y):
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))


@dataclass(frozen=True)
class MeanSquareResult:
    estimate: StabilityEstimate
    omega: float
    condition_value: float
    condition_holds: bool
    passed: bool
    blowup: bool
    cert_mu: float
    ensemble: StochasticEnsemble = field(repr=False)

    def to_dict(self) -> dict:
        e = self.ensemble
        return {
            "functional": "mean_square_contraction",
            "rate": self.estimate.rate,
            "ci": [self.estimate.ci_low, self.estimate.ci_high],
            "omega": self.omega,
            "condition_value": self.condition_value,
            "condition_holds": self.condition_holds,
            "certificate_mu": self.cert_mu,
            "blowup": self.blowup,
            "pass": self.passed,
            "path_count": e.path_count,
            "seed": e.seed,
            "dt": e.dt,
        }


def mean_square_contraction(system: LinearDelaySystem, f, g, f_lip: float, g_lip: float,
                            x0a, x0b, omega: float, dt: float = 1e-3, t_final: float = 20.0,
                            path_count: int = 500, seed: int = 0, threads=None,
                            epsilon: float = 1e-3) -> MeanSquareResult:
    """Empirical decay exponent of E ||X(t) - Y(t)||^2 for a coupled pair.

    The admissibility value is ``2 (lam + sqrt(V M(lam))) + 2 f_lip + g_lip^2``
    (for a single unit-delay atom this is 2 (lam + ||C|| e^{-lam}) + ...);
    the target is that it lies below ``-omega``.  The distance is measured in
    the certificate norm at rate ``mu_sufficient + epsilon``.  The rate is the
    least-squares slope of log E||.||^2 on [t_final / 2, t_final]; the CI is a
    percentile bootstrap over paths.  ``passed`` allows the rate to exceed
    ``-omega`` by at most the CI half-width.
    """
    if path_count < 100:
        raise ValueError("mean-square rate estimation needs at least 100 paths")
    lam = dissipativity_lambda(system.drift)
    bounds = rate_bounds(lam, system.kernel)
    cond = 2.0 * bounds.mu_sufficient + 2.0 * float(f_lip) + float(g_lip) ** 2
    cert = build_certificate(system, bounds.mu_sufficient + epsilon)
    ens = simulate_sdde_pair(system, f, g, x0a, x0b, dt, t_final, seed, path_count,
                             cert=cert, threads=threads)
    t = ens.times
    window = t >= 0.5 * t_final - 1e-12
    mean_sq = ens.sq_distance.mean(axis=0)
    finite = bool(np.all(np.isfinite(mean_sq)))
    blowup = (not finite) or bool(np.max(mean_sq) > BLOWUP_FACTOR ** 2 * mean_sq[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = _slope(t[window], np.log(mean_sq[window])) if finite else float("inf")
        rng = path_generator(seed, BOOTSTRAP_STREAM)
        boots = np.empty(BOOTSTRAP_RESAMPLES)
        for r in range(BOOTSTRAP_RESAMPLES):
            pick = rng.integers(0, path_count, path_count)
            ms = ens.sq_distance[pick][:, window].mean(axis=0)
            boots[r] = _slope(t[window], np.log(ms))
    lo, hi = np.percentile(boots, [2.5, 97.5]) if finite else (rate, rate)
    lo, hi = float(min(lo, rate)), float(max(hi, rate))
    est = StabilityEstimate(float(rate), lo, hi, "mean_square_contraction")
    passed = (not blowup) and rate <= -omega + 0.5 * (hi - lo)
    return MeanSquareResult(est, float(omega), float(cond), bool(cond < -omega), bool(passed),
                            bool(blowup), float(cert.mu), ens)


@dataclass(frozen=True)
class LyapunovResult:
    estimate: StabilityEstimate
    region_holds: bool
    b: float
    c: float
    sigma: float
    path_count: int
    seed: int
    dt: float
    t_final: float
    samples: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "functional": "as_lyapunov",
            "rate": self.estimate.rate,
            "ci": [self.estimate.ci_low, self.estimate.ci_high],
            "b": self.b, "c": self.c, "sigma": self.sigma,
            "region_holds": self.region_holds,
            "stable": bool(self.estimate.ci_high < 0),
            "path_count": self.path_count,
            "seed": self.seed,
            "dt": self.dt,
            "t_final": self.t_final,
        }


def stability_region(b: float, c: float, sigma: float) -> bool:
    """b < sigma^2 / 2 and |c| < exp(-3 sigma^2 / 2) (sigma^2 / 2 - b)."""
    half = 0.5 * sigma * sigma
    return bool(b < half and abs(c) < np.exp(-1.5 * sigma * sigma) * (half - b))


def _lyapunov_block(args):
    b, c, sigma, dt, steps, seed, start, stop = args
    K = steps_per_unit(dt)
    L = K + 1
    m = stop - start
    ring = np.ones((L, m))
    log_scale = np.zeros(m)
    ptr = K
    gens = block_generators(seed, start, stop)
    sqrt_dt = np.sqrt(dt)
    done = 0
    while done < steps:
        chunk = min(CHUNK_STEPS, steps - done)
        Z = draw_block(gens, chunk, 1)[:, :, 0]
        for s in range(chunk):
            x = ring[ptr]
            lagged = ring[(ptr + 1) % L]  # x(t - 1)
            new = x + (b * x + c * lagged) * dt + sigma * x * (Z[s] * sqrt_dt)
            ptr = (ptr + 1) % L
            ring[ptr] = new
        done += chunk
        # equation is linear and homogeneous: rescale each path's whole ring
        scale = np.max(np.abs(ring), axis=0)
        scale[scale == 0] = 1.0
        ring /= scale
        log_scale += np.log(scale)
    return (np.log(np.abs(ring[ptr])) + log_scale) / (steps * dt)


def as_lyapunov_exponent(b: float, c: float, sigma: float, dt: float = 1e-3,
                         t_final: float = 50.0, path_count: int = 500, seed: int = 0,
                         threads=None) -> LyapunovResult:
    """Sample top Lyapunov exponent of dx = [b x + c x(t-1)] dt + sigma x dW.

    Each path starts from the constant history 1; the estimate is the path
    average of log|x(T)| / T with a normal 95% interval.
    """
    if path_count < 100:
        raise ValueError("Lyapunov estimation needs at least 100 paths")
    steps = int(round(t_final / dt))
    if abs(steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"dt {dt!r} does not divide t_final {t_final!r}")
    steps_per_unit(dt)
    blocks = [(s, min(s + BLOCK_SIZE, path_count)) for s in range(0, path_count, BLOCK_SIZE)]
    jobs = [(float(b), float(c), float(sigma), dt, steps, int(seed), a, e) for a, e in blocks]
    workers = min(thread_count(threads), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(_lyapunov_block, jobs))
    else:
        parts = [_lyapunov_block(j) for j in jobs]
    samples = np.concatenate(parts)
    mean = float(samples.mean())
    half = 1.96 * float(samples.std(ddof=1)) / np.sqrt(path_count)
    est = StabilityEstimate(mean, float(mean - half), float(mean + half), "as_lyapunov")
    return LyapunovResult(est, stability_region(b, c, sigma), float(b), float(c), float(sigma),
                          int(path_count), int(seed), float(dt), float(t_final), samples)

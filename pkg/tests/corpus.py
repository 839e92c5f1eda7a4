"""Random delay systems shared by the property and acceptance tests."""

from dataclasses import dataclass

import numpy as np

from ddecert import (DelayAtom, DelayDensity, DelayKernel, LinearDelaySystem,
                     dissipativity_lambda, min_mu, total_variation)


@dataclass(frozen=True)
class Case:
    system: LinearDelaySystem
    lam: float
    V: float
    mu: float
    mu_star: float


def drift_with_lambda(rng, lam, n):
    """Random n x n matrix whose symmetric part has largest eigenvalue ``lam``."""
    if n == 1:
        return np.array([[lam]])
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.concatenate([[lam], lam - rng.uniform(0.0, 3.0, n - 1)])
    S = rng.standard_normal((n, n))
    return Q @ np.diag(d) @ Q.T + 0.5 * (S - S.T)


def random_kernel(rng, n, V_target, grid=None):
    """Up to three atoms and an optional constant density with total variation V_target.

    With ``grid`` the atom locations are multiples of 1/grid.
    """
    n_atoms = int(rng.integers(0, 4))
    if grid:
        locs = rng.choice(np.arange(grid + 1), size=n_atoms, replace=False) / grid - 1.0
    else:
        locs = rng.choice(np.linspace(-1.0, 0.0, 401), size=n_atoms, replace=False)
    mats = [rng.standard_normal((n, n)) for _ in locs]
    dens = rng.standard_normal((n, n)) if (rng.random() < 0.5 or n_atoms == 0) else None
    norms = [np.linalg.norm(m, 2) for m in mats]
    if dens is not None:
        norms.append(np.linalg.norm(dens, 2))
    scale = V_target / sum(norms)
    atoms = tuple(DelayAtom(float(l), scale * m) for l, m in zip(locs, mats))
    density = DelayDensity.constant(scale * dens) if dens is not None else None
    return DelayKernel(atoms, density, n)


def fuzz_corpus(count=200, seed=20240611, grid=None):
    """Cases with V <= 5, lambda in [-5, 2], n in {1, 2}.

    Each rate ``mu`` lies within +-0.5 of the optimal rate, so the corpus
    holds both certifiable and non-certifiable cases.
    """
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(count):
        n = int(rng.integers(1, 3))
        lam = float(rng.uniform(-5.0, 2.0))
        V = float(rng.uniform(0.05, 5.0))
        system = LinearDelaySystem(drift_with_lambda(rng, lam, n), random_kernel(rng, n, V, grid))
        lam = dissipativity_lambda(system.drift)
        mu_star = min_mu(lam, system.kernel, 1e-12)
        mu = mu_star + float(rng.uniform(-0.5, 0.5))
        if mu <= lam:
            mu = lam + 0.5 * (mu_star - lam)
        cases.append(Case(system, lam, total_variation(system.kernel), mu, mu_star))
    return cases

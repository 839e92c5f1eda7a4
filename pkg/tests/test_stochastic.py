import numpy as np
import pytest

from ddecert import LinearDelaySystem, build_certificate
from ddecert.simulation import (HistorySegment, additive_noise, as_lyapunov_exponent,
                                integrate_dde, mean_square_contraction, multiplicative_noise,
                                simulate_sdde_pair, stability_region, zero_drift)
from ddecert.simulation.rng import block_generators, draw_block, path_generator, thread_count

PAIR_SYS = LinearDelaySystem.scalar(-1.0, 0.25)
NO_NOISE = additive_noise(np.zeros((1, 1)))


def test_path_streams_independent_of_blocking():
    whole = draw_block(block_generators(11, 0, 6), 50, 2)
    parts = np.concatenate([draw_block(block_generators(11, 0, 2), 50, 2),
                            draw_block(block_generators(11, 2, 6), 50, 2)], axis=1)
    assert np.array_equal(whole, parts)
    g = path_generator(11, 3)
    chunked = np.concatenate([g.standard_normal((20, 2)), g.standard_normal((30, 2))])
    assert np.array_equal(chunked, whole[:, 3])
    assert not np.array_equal(whole[:, 0], whole[:, 1])


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("DDECERT_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("DDECERT_THREADS", "0")
    assert thread_count() >= 1
    assert thread_count(2) == 2


def test_noise_helpers():
    X = np.array([[1.0, -2.0], [0.5, 0.0]])
    g = multiplicative_noise(0.3, 2)
    assert np.array_equal(g(X)[0], np.diag([0.3, -0.6]))
    assert additive_noise(np.eye(2))(X).shape == (2, 2, 2)
    assert np.array_equal(zero_drift(X), np.zeros_like(X))


def test_pair_without_noise_reduces_to_rk4():
    dt = 1e-3
    ens = simulate_sdde_pair(PAIR_SYS, zero_drift, NO_NOISE, [0.5], [1.0], dt, 3.0, seed=1)
    ref = integrate_dde(PAIR_SYS, [1.0], HistorySegment.constant(1.0, dt), 3.0, dt)
    assert ens.terminal_b[0, 0] == pytest.approx(ref.states[-1, 0], rel=5 * dt)
    assert ens.terminal_a[0, 0] == pytest.approx(0.5 * ref.states[-1, 0], rel=5 * dt)


def test_additive_noise_cancels_in_difference():
    dt = 1e-3
    cert = build_certificate(PAIR_SYS, -0.3)
    ens = simulate_sdde_pair(PAIR_SYS, zero_drift, additive_noise([[1.0]]), [0.0], [1.0], dt,
                             4.0, seed=2, path_count=3, cert=cert)
    # every path sees the same difference
    assert np.allclose(ens.sq_distance, ens.sq_distance[0], rtol=1e-9, atol=0)
    ref = integrate_dde(PAIR_SYS, [1.0], HistorySegment.constant(1.0, dt), 4.0, dt)
    idx = np.round(ens.times / dt).astype(int)
    ref_norm = ref.segment_norms(cert, idx)
    assert np.allclose(np.sqrt(ens.sq_distance[0]), ref_norm, rtol=5e-3)


def test_seed_determinism_and_threads():
    kw = dict(f=zero_drift, g=multiplicative_noise(0.5), x0a=[0.3], x0b=[1.0], dt=1e-2,
              t_final=2.0, path_count=250)
    a = simulate_sdde_pair(PAIR_SYS, seed=9, threads=1, **kw)
    b = simulate_sdde_pair(PAIR_SYS, seed=9, threads=3, **kw)
    c = simulate_sdde_pair(PAIR_SYS, seed=10, threads=1, **kw)
    assert np.array_equal(a.sq_distance, b.sq_distance)
    assert np.array_equal(a.terminal_a, b.terminal_a)
    assert not np.array_equal(a.sq_distance, c.sq_distance)
    # a path's result does not depend on how many paths run alongside it
    small = simulate_sdde_pair(PAIR_SYS, seed=9, **{**kw, "path_count": 30})
    assert np.array_equal(small.sq_distance, a.sq_distance[:30])


def test_pair_input_errors():
    with pytest.raises(ValueError, match="divide"):
        simulate_sdde_pair(PAIR_SYS, zero_drift, NO_NOISE, [0.0], [1.0], 0.3, 3.0, seed=0)
    with pytest.raises(ValueError, match="at least 1"):
        simulate_sdde_pair(PAIR_SYS, zero_drift, NO_NOISE, [0.0], [1.0], 0.1, 1.0, seed=0,
                           path_count=0)
    with pytest.raises(ValueError, match="100 paths"):
        mean_square_contraction(PAIR_SYS, zero_drift, NO_NOISE, 0, 0, [0.0], [1.0], 0.5,
                                path_count=50)
    with pytest.raises(ValueError, match="100 paths"):
        as_lyapunov_exponent(-1, 0, 1, path_count=10)


def test_mean_square_additive_example():
    res = mean_square_contraction(PAIR_SYS, zero_drift, additive_noise([[1.0]]), 0.0, 0.0,
                                  [0.0], [1.0], omega=0.5, dt=1e-3, t_final=10.0,
                                  path_count=100, seed=3)
    assert res.condition_value == pytest.approx(2 * (-1 + 0.25 * np.e), abs=1e-3)
    assert res.condition_holds
    assert res.estimate.ci_high <= -0.5 and res.passed and not res.blowup
    assert res.estimate.ci_low <= res.estimate.rate <= res.estimate.ci_high


def test_mean_square_exact_rate_without_delay():
    res = mean_square_contraction(LinearDelaySystem([[-1.0]]), zero_drift, NO_NOISE, 0.0, 0.0,
                                  [0.0], [1.0], omega=1.0, dt=1e-3, t_final=5.0,
                                  path_count=100, seed=0)
    # Euler: log(1 - dt) / dt per unit time, doubled for the square
    assert res.estimate.rate == pytest.approx(2 * np.log1p(-1e-3) / 1e-3, abs=1e-6)
    assert res.estimate.rate == pytest.approx(-2.0, abs=2e-3)


def test_mean_square_blowup_reported():
    res = mean_square_contraction(LinearDelaySystem.scalar(1.0, 1.0), zero_drift,
                                  additive_noise([[1.0]]), 0.0, 0.0, [0.0], [1.0], omega=0.5,
                                  dt=1e-2, t_final=20.0, path_count=100, seed=0)
    assert res.blowup and not res.passed and not res.condition_holds
    assert res.to_dict()["blowup"] is True


def test_stability_region():
    assert stability_region(-1.0, 0.3, 1.0)
    assert not stability_region(-1.0, 0.34, 1.0)
    assert not stability_region(1.0, 0.0, 1.0)
    assert not stability_region(0.5, 0.0, 1.0)


def test_lyapunov_gbm_closed_form():
    res = as_lyapunov_exponent(-1.0, 0.0, 1.0, dt=1e-3, t_final=20.0, path_count=200, seed=4)
    est = res.estimate
    assert est.ci_low <= -1.5 <= est.ci_high
    assert res.region_holds
    again = as_lyapunov_exponent(-1.0, 0.0, 1.0, dt=1e-3, t_final=20.0, path_count=200,
                                 seed=4, threads=2)
    assert again.to_dict() == res.to_dict()


def test_lyapunov_monotone_in_delay_gain():
    ests = [as_lyapunov_exponent(-1.0, c, 1.0, dt=1e-2, t_final=20.0, path_count=200,
                                 seed=6).estimate for c in (0.0, 0.15, 0.3)]
    for e0, e1 in zip(ests[:-1], ests[1:]):
        slack = (e0.ci_high - e0.ci_low + e1.ci_high - e1.ci_low) / 2
        assert e1.rate >= e0.rate - slack

import numpy as np
import pytest

from conftest import crand
from twowayrelay.baseline import (BaselineConfig, baseline_design, relay_power, scale_relay_power, update_precoders,
                                  update_relay)
from twowayrelay.channel import SystemConfig, draw_channels, stream
from twowayrelay.design import design, wiener_decoders
from twowayrelay.errors import ContractViolation
from twowayrelay.harness import config_at, equalize_relay_power
from twowayrelay.system_model import dual_hop, noise_covariance, relay_input_covariance, sum_mse_exact


@pytest.fixture
def setup():
    cfg, p_relay = config_at(SystemConfig(n_c=3), 6.0)
    ch = draw_channels(cfg, stream(3, 0, "H"), stream(3, 0, "G"))
    return ch, cfg, p_relay


def _relay_powers(ch, sol, cfg):
    return [relay_power(F, relay_input_covariance(ch, sol.P1, sol.P2, cfg, k)) for k, F in enumerate(sol.F_blocks)]


def test_monotone_and_feasible(setup):
    ch, cfg, p_relay = setup
    for seed in range(5):
        sol = baseline_design(ch, cfg, BaselineConfig(max_iters=10, p_relay=p_relay), stream(seed, 0, "baseline_init"))
        trace = np.array(sol.meta["mse_trace"])
        assert np.all(np.diff(trace) <= 1e-8 * trace[:-1])
        assert sol.meta["ok"]
        for i in (1, 2):
            assert np.linalg.norm(sol.P(i)) ** 2 <= cfg.p_t(i) * (1 + 1e-9)
        np.testing.assert_array_less(np.array(_relay_powers(ch, sol, cfg)), p_relay * (1 + 1e-9))


def test_zero_iterations_is_random_init(setup):
    ch, cfg, p_relay = setup
    sol = baseline_design(ch, cfg, BaselineConfig(max_iters=0, p_relay=p_relay), stream(1, 0, "baseline_init"))
    assert sol.meta["iterations"] == 0 and len(sol.meta["mse_trace"]) == 1
    np.testing.assert_allclose(_relay_powers(ch, sol, cfg), p_relay, rtol=1e-12)
    again = baseline_design(ch, cfg, BaselineConfig(max_iters=0, p_relay=p_relay), stream(1, 0, "baseline_init"))
    np.testing.assert_array_equal(sol.F, again.F)


def test_iterations_help(setup):
    ch, cfg, p_relay = setup
    sol = baseline_design(ch, cfg, BaselineConfig(max_iters=10, p_relay=p_relay), stream(2, 0, "baseline_init"))
    assert sol.meta["mse_trace"][-1] < 0.5 * sol.meta["mse_trace"][0]


def test_relay_block_is_optimal(setup, rng):
    # the updated block beats feasible perturbations of itself
    ch, cfg, p_relay = setup
    sol = baseline_design(ch, cfg, BaselineConfig(max_iters=2, p_relay=p_relay), stream(4, 0, "baseline_init"))
    P = {1: sol.P1, 2: sol.P2}
    F = list(sol.F_blocks)
    D = dict(zip((1, 2), wiener_decoders(ch, P[1], P[2], F, cfg)))
    F[1] = update_relay(ch, P, F, D, cfg, 1, p_relay)

    def mse(Fb):
        tot = 0.0
        for i in (1, 2):
            j = 3 - i
            C = dual_hop(ch, P[j], Fb, i, j)
            E = D[i] @ C - np.eye(2)
            tot += np.real(np.vdot(E, E)) + np.real(np.trace(D[i] @ noise_covariance(ch, Fb, cfg, i) @ D[i].conj().T))
        return tot

    best = mse(F)
    K = relay_input_covariance(ch, P[1], P[2], cfg, 1)
    for _ in range(50):
        G = list(F)
        G[1] = F[1] + 0.05 * crand(rng, 4, 4) * np.linalg.norm(F[1])
        if relay_power(G[1], K) > p_relay:
            G[1] = scale_relay_power(G[1], K, p_relay)
        assert mse(G) >= best - 1e-9 * best


def test_precoder_block_does_not_increase(setup):
    ch, cfg, p_relay = setup
    sol = baseline_design(ch, cfg, BaselineConfig(max_iters=1, p_relay=p_relay), stream(5, 0, "baseline_init"))
    P = {1: sol.P1, 2: sol.P2}
    F = list(sol.F_blocks)
    D = dict(zip((1, 2), wiener_decoders(ch, P[1], P[2], F, cfg)))
    before = sum_mse_exact(ch, P[1], P[2], F, cfg)
    P2, _ = update_precoders(ch, P, F, D, cfg, p_relay)
    D = dict(zip((1, 2), wiener_decoders(ch, P2[1], P2[2], F, cfg)))
    assert sum_mse_exact(ch, P2[1], P2[2], F, cfg) <= before * (1 + 1e-8)


def test_scale_relay_power(rng):
    X = crand(rng, 4, 4)
    K = X @ X.conj().T + np.eye(4)
    F = crand(rng, 4, 4)
    Fs = scale_relay_power(F, K, 3.0)
    assert relay_power(Fs, K) == pytest.approx(3.0, rel=1e-12)
    np.testing.assert_allclose(scale_relay_power(Fs, K, 3.0), Fs, rtol=1e-12)
    np.testing.assert_allclose(scale_relay_power(2 * Fs, K, 3.0), Fs, rtol=1e-12)
    with pytest.raises(ContractViolation):
        scale_relay_power(np.zeros((4, 4)), K, 1.0)


def test_fair_comparison_power(setup):

    ch, cfg, p_relay = setup
    prop = equalize_relay_power(ch, design(ch, cfg), cfg, p_relay)
    base = equalize_relay_power(
        ch, baseline_design(ch, cfg, BaselineConfig(max_iters=3, p_relay=p_relay), stream(0, 0, "baseline_init")),
        cfg, p_relay)
    np.testing.assert_allclose(_relay_powers(ch, prop, cfg), _relay_powers(ch, base, cfg), rtol=1e-12)


def test_config_validation():
    with pytest.raises(ContractViolation):
        BaselineConfig(max_iters=-1)
    with pytest.raises(ContractViolation):
        BaselineConfig(p_relay=0.0)

import numpy as np
import pytest

from conftest import crand, random_unitary
from twowayrelay.channel import ChannelRealization, SystemConfig, draw_channels, stream
from twowayrelay.design import design, relay_matrices, wiener_decoder
from twowayrelay.errors import ContractViolation, DegenerateChannelError
from twowayrelay.linalg import evd_hermitian_ascending
from twowayrelay.system_model import mse_with_decoders, noise_covariance, sum_mse_exact, sum_mse_highsnr


def surrogate(ch, P1, P2, B1, B2, cfg):
    """High-SNR objective written directly in terms of (P, B)."""
    total = 0.0
    for (Bi, Hj, Pj, s2) in ((B1, ch.H2, P2, cfg.sigma2_n1), (B2, ch.H1, P1, cfg.sigma2_n2)):
        C = Bi @ Hj @ Pj
        M = np.eye(C.shape[1]) + C.conj().T @ C / s2
        total += np.real(np.trace(np.linalg.inv(M)))
    return total


def test_budgets_bind(cfg, channel):
    sol = design(channel, cfg)
    for i in (1, 2):
        assert np.real(np.trace(sol.P(i) @ sol.P(i).conj().T)) == pytest.approx(cfg.p_t(i), rel=1e-12)
        assert np.real(np.trace(sol.B(i) @ sol.B(i).conj().T)) == pytest.approx(cfg.p_r(i), rel=1e-12)


def test_relay_reproduces_targets(cfg, channel):
    sol = design(channel, cfg)
    for i in (1, 2):
        np.testing.assert_allclose(channel.G(i) @ sol.F, sol.B(i), atol=1e-12)


def test_square_relay_is_inverse(rng):
    cfg = SystemConfig(n_t=2, n_r=4, n_c=1)
    ch = draw_channels(cfg, stream(2, 0, "H"), stream(2, 0, "G"))
    B1, B2 = crand(rng, 2, 4), crand(rng, 2, 4)
    F = relay_matrices(ch, B1, B2)[0]
    np.testing.assert_allclose(F, np.linalg.solve(ch.G_stacked(0), np.vstack([B1, B2])), atol=1e-12)


def test_zero_target_gives_zero_relay(channel):
    for F in relay_matrices(channel, np.zeros((2, 8)), np.zeros((2, 8))):
        np.testing.assert_array_equal(F, 0)


def test_diagonalization(cfg, channel):
    sol = design(channel, cfg)
    A = channel.H1.conj().T @ sol.B2.conj().T @ sol.B2 @ channel.H1
    D = sol.P1.conj().T @ A @ sol.P1
    off = D - np.diag(np.diag(D))
    assert np.linalg.norm(off) < 1e-10 * np.linalg.norm(D)
    assert np.all(np.diff(np.real(np.diag(D))) >= -1e-12)


def test_q_invariance(cfg, channel, rng):
    ref = design(channel, cfg)
    ref_obj = surrogate(channel, ref.P1, ref.P2, ref.B1, ref.B2, cfg)
    for _ in range(10):
        sol = design(channel, cfg, Q1=random_unitary(rng, 2), Q2=random_unitary(rng, 2))
        assert surrogate(channel, sol.P1, sol.P2, sol.B1, sol.B2, cfg) == pytest.approx(ref_obj, rel=1e-10)
        assert sum_mse_highsnr(channel, sol.P1, sol.P2, sol.F_blocks, cfg) == pytest.approx(ref_obj, rel=1e-10)
        for i in (1, 2):
            assert np.linalg.norm(sol.B(i)) ** 2 == pytest.approx(cfg.p_r(i), rel=1e-10)


def test_relaxed_optimality_spot_check():
    # the closed form beats random feasible (P, B) on the high-SNR objective
    cfg = SystemConfig(n_t=2, n_r=4, n_c=2, p_t1=2.0, p_t2=3.0, p_r1=4.0, p_r2=1.5)
    rng = np.random.default_rng(99)
    for inst in range(20):
        ch = draw_channels(cfg, stream(inst, 0, "H"), stream(inst, 0, "G"))
        sol = design(ch, cfg)
        best = surrogate(ch, sol.P1, sol.P2, sol.B1, sol.B2, cfg)
        for _ in range(1000):
            X = [crand(rng, 2, 2), crand(rng, 2, 2), crand(rng, 2, 8), crand(rng, 2, 8)]
            P1, P2, B1, B2 = (x * np.sqrt(p) / np.linalg.norm(x) for x, p in zip(X, (2.0, 3.0, 4.0, 1.5)))
            assert best <= surrogate(ch, P1, P2, B1, B2, cfg) + 1e-12


def test_wiener_stationarity(cfg, channel):
    sol = design(channel, cfg)
    base = mse_with_decoders(channel, sol.P1, sol.P2, sol.F_blocks, sol.D1, sol.D2, cfg)
    h = 1e-6
    grad = np.zeros(8)
    for n in range(8):
        E = np.zeros(4, dtype=complex)
        E[n % 4] = h if n < 4 else 1j * h
        E = E.reshape(2, 2)
        up = mse_with_decoders(channel, sol.P1, sol.P2, sol.F_blocks, sol.D1 + E, sol.D2, cfg)
        dn = mse_with_decoders(channel, sol.P1, sol.P2, sol.F_blocks, sol.D1 - E, sol.D2, cfg)
        grad[n] = (up - dn) / (2 * h)
    assert np.linalg.norm(grad) < 1e-6
    assert base == pytest.approx(sum_mse_exact(channel, sol.P1, sol.P2, sol.F_blocks, cfg), rel=1e-10)


def test_wiener_decoder_formula(cfg, channel, rng):
    C, K = crand(rng, 2, 2), np.eye(2) * 0.3
    np.testing.assert_allclose(wiener_decoder(C, K), C.conj().T @ np.linalg.inv(C @ C.conj().T + K), atol=1e-12)


def test_fewer_streams_than_antennas():
    cfg = SystemConfig(n_t=3, n_r=6, n_c=2, n_s=2)
    ch = draw_channels(cfg, stream(4, 0, "H"), stream(4, 0, "G"))
    sol = design(ch, cfg)
    assert sol.P1.shape == (3, 2)
    assert np.linalg.norm(sol.P1) ** 2 == pytest.approx(1.0)
    assert np.count_nonzero(np.diag(sol.Delta1)) == 2
    np.testing.assert_allclose(ch.G1 @ sol.F, sol.B1, atol=1e-12)


def test_degenerate_first_hop(cfg, channel):
    H1 = channel.H1.copy()
    H1[:, 1] = H1[:, 0]
    ch = ChannelRealization(H1=H1, H2=channel.H2, G1=channel.G1, G2=channel.G2, n_r=cfg.n_r)
    with pytest.raises(DegenerateChannelError):
        design(ch, cfg)


def test_degenerate_second_hop(cfg, channel):
    G2 = channel.G2.copy()
    G2[:, :4] = channel.G1[:, :4]
    ch = ChannelRealization(H1=channel.H1, H2=channel.H2, G1=channel.G1, G2=G2, n_r=cfg.n_r)
    with pytest.raises(DegenerateChannelError):
        design(ch, cfg)


def test_rejects_bad_q(cfg, channel):
    with pytest.raises(ContractViolation):
        design(channel, cfg, Q1=2 * np.eye(2))


def test_rejects_mismatched_config(cfg, channel):
    with pytest.raises(ContractViolation):
        design(channel, cfg.replace(n_c=3))


def test_deterministic(cfg, channel):
    a, b = design(channel, cfg), design(channel, cfg)
    np.testing.assert_array_equal(a.F, b.F)
    np.testing.assert_array_equal(a.D1, b.D1)

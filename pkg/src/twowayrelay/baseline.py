"""Alternating-minimization baseline on the exact sum-MSE.

Starting from random feasible precoders and relay matrices, every outer
iteration updates, in turn,

1. both decoders (Wiener filters, unconstrained);
2. each relay matrix ``F_k`` with the others frozen, subject to the relay's
   transmit power ``tr(F_k K_yk F_k^H) <= P_relay``;
3. both precoders, subject to the terminal budgets and to every relay's
   transmit-power constraint (which depends on the precoders).

Blocks 2 and 3 are convex quadratically constrained problems solved to
optimality: block 2 through a generalized eigendecomposition and a single
multiplier, block 3 through its small Lagrange dual. Every block therefore
stays feasible and the sum-MSE is non-increasing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, minimize

from .channel import ChannelRealization, SystemConfig, crandn
from .design import DesignSolution, wiener_decoders
from .errors import ContractViolation, NumericFailure
from .system_model import assemble_relay_matrix, other, relay_input_covariance, sum_mse_exact

__all__ = ["BaselineConfig", "baseline_design", "scale_relay_power", "relay_power", "update_relay", "update_precoders"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineConfig:
    max_iters: int = 10
    inner_tol: float = 1e-6
    p_relay: float = 1.0

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise ContractViolation("max_iters must be a non-negative integer")
        if self.p_relay <= 0:
            raise ContractViolation("p_relay must be positive")


def relay_power(F_k, K_k) -> float:
    """Average transmit power ``tr(F_k K_yk F_k^H)`` of one relay."""
    return float(np.real(np.trace(F_k @ K_k @ F_k.conj().T)))


def scale_relay_power(F_k, K_k, p_relay: float) -> np.ndarray:
    """Rescale ``F_k`` so that the relay transmits exactly `p_relay`."""
    p = relay_power(F_k, K_k)
    if not p > 0:
        raise ContractViolation("cannot rescale a relay that transmits no power")
    return F_k * np.sqrt(p_relay / p)


def _vec(X):
    return np.asarray(X).reshape(-1, order="F")


def _unvec(x, n):
    return x.reshape((n, n), order="F")


def update_relay(ch: ChannelRealization, P, F_blocks, D, cfg: SystemConfig, k: int, p_relay: float) -> np.ndarray:
    """Exact minimizer of the sum-MSE over ``F_k`` with everything else fixed.

    With ``x = vec(F_k)`` the objective is ``x^H M x - 2 Re(b^H x) + const``
    and the constraint ``x^H W x <= p_relay`` with ``W = K_yk^T (x) I``. The
    generalized eigenbasis of ``(M, W)`` turns the KKT system into a scalar
    equation in the multiplier.
    """
    n_r = ch.n_r
    M = np.zeros((n_r * n_r, n_r * n_r), dtype=np.complex128)
    b = np.zeros(n_r * n_r, dtype=np.complex128)
    I_r = np.eye(n_r)
    for i in (1, 2):
        j = other(i)
        L = D[i] @ ch.G_block(i, k)
        R = ch.H_block(j, k) @ P[j]
        T = np.eye(P[j].shape[1], dtype=np.complex128)
        for m, Fm in enumerate(F_blocks):
            if m != k:
                T = T - D[i] @ ch.G_block(i, m) @ Fm @ ch.H_block(j, m) @ P[j]
        LL = L.conj().T @ L
        M += np.kron((R @ R.conj().T).T, LL) + cfg.sigma2_w * np.kron(I_r, LL)
        b += _vec(L.conj().T @ T @ R.conj().T)
    K = relay_input_covariance(ch, P[1], P[2], cfg, k)
    W = np.kron(K.T, I_r)
    M = 0.5 * (M + M.conj().T)
    W = 0.5 * (W + W.conj().T)
    lam, V = sla.eigh(M, W)
    beta = V.conj().T @ b
    lam = np.maximum(lam, 0.0)
    live = lam > 1e-12 * max(lam.max(), 1e-300)

    def power(nu):
        return float(np.sum(np.abs(beta[live]) ** 2 / (lam[live] + nu) ** 2))

    nu = 0.0
    if power(0.0) > p_relay:
        hi = np.sqrt(np.sum(np.abs(beta) ** 2) / p_relay) + 1e-300
        nu = brentq(lambda v: power(v) - p_relay, 0.0, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
    coef = np.zeros_like(beta)
    coef[live] = beta[live] / (lam[live] + nu)
    x = V @ coef
    Fk = _unvec(x, n_r)
    p = relay_power(Fk, K)
    if p > p_relay:  # rounding only
        Fk = Fk * np.sqrt(p_relay / p)
    return Fk


def update_precoders(ch: ChannelRealization, P, F_blocks, D, cfg: SystemConfig, p_relay: float):
    """Exact minimizer over ``(P_1, P_2)`` of the decoder-fixed sum-MSE.

    Constraints: ``tr(P_j P_j^H) <= P_T,j`` and, for every relay,
    ``sum_j ||F_k H_jk P_j||^2 <= p_relay - sigma2_w ||F_k||^2``. Solved via
    the dual in ``2 + N_C`` non-negative multipliers. Returns the current
    precoders unchanged if the dual solution does not improve on them.
    """
    n_c = len(F_blocks)
    F = assemble_relay_matrix(F_blocks)
    A = {j: D[other(j)] @ ch.G(other(j)) @ F @ ch.H(j) for j in (1, 2)}
    AhA = {j: A[j].conj().T @ A[j] for j in (1, 2)}
    Mk = {}
    for j in (1, 2):
        for k, Fk in enumerate(F_blocks):
            X = Fk @ ch.H_block(j, k)
            Mk[j, k] = X.conj().T @ X
    p_t = np.array([cfg.p_t1, cfg.p_t2])
    r = np.array([p_relay - cfg.sigma2_w * float(np.real(np.vdot(Fk, Fk))) for Fk in F_blocks])
    n_t = ch.n_t

    def objective(Pd):
        tot = 0.0
        for j in (1, 2):
            E = A[j] @ Pd[j] - np.eye(Pd[j].shape[1])
            tot += float(np.real(np.vdot(E, E)))
        return tot

    def constraints(Pd):
        c_t = np.array([float(np.real(np.vdot(Pd[j], Pd[j]))) for j in (1, 2)])
        c_r = np.array([sum(float(np.real(np.trace(Pd[j].conj().T @ Mk[j, k] @ Pd[j]))) for j in (1, 2))
                        for k in range(n_c)])
        return c_t, c_r

    old = objective(P)
    if np.any(r <= 0):
        return P, old

    def primal(mult):
        nu, eta = mult[:2], mult[2:]
        Pd = {}
        for j in (1, 2):
            Phi = AhA[j] + nu[j - 1] * np.eye(n_t)
            for k in range(n_c):
                Phi = Phi + eta[k] * Mk[j, k]
            try:
                Pd[j] = np.linalg.solve(Phi, A[j].conj().T)
            except np.linalg.LinAlgError:
                Pd[j] = np.linalg.lstsq(Phi, A[j].conj().T, rcond=None)[0]
        return Pd

    def neg_dual(mult):
        Pd = primal(mult)
        c_t, c_r = constraints(Pd)
        g = objective(Pd) + float(mult[:2] @ (c_t - p_t)) + float(mult[2:] @ (c_r - r))
        grad = np.concatenate([c_t - p_t, c_r - r])
        return -g, -grad

    x0 = np.ones(2 + n_c)
    res = minimize(neg_dual, x0, jac=True, method="L-BFGS-B", bounds=[(0.0, None)] * (2 + n_c),
                   options={"maxiter": 500, "ftol": 1e-15, "gtol": 1e-12})
    Pd = primal(res.x)
    c_t, c_r = constraints(Pd)
    ratios = np.concatenate([c_t / p_t, c_r / r])
    worst = float(ratios.max())
    if worst > 1.0:
        s = 1.0 / np.sqrt(worst)
        Pd = {j: Pd[j] * s for j in (1, 2)}
    new = objective(Pd)
    if not np.isfinite(new) or new > old:
        return P, old
    return Pd, new


def _random_init(ch, cfg, p_relay, rng):
    P = {}
    for j in (1, 2):
        X = crandn(rng, (cfg.n_t, cfg.n_s))
        P[j] = X * np.sqrt(cfg.p_t(j) / float(np.real(np.vdot(X, X))))
    F_blocks = []
    for k in range(ch.n_c):
        X = crandn(rng, (cfg.n_r, cfg.n_r))
        K = relay_input_covariance(ch, P[1], P[2], cfg, k)
        F_blocks.append(scale_relay_power(X, K, p_relay))
    return P, F_blocks


def baseline_design(ch: ChannelRealization, cfg: SystemConfig, bcfg: BaselineConfig,
                    rng: np.random.Generator) -> DesignSolution:
    """Run `bcfg.max_iters` outer iterations from a random feasible start.

    ``meta["mse_trace"]`` holds the Wiener-decoder sum-MSE after the random
    initialization and after each outer iteration.
    """
    P, F_blocks = _random_init(ch, cfg, bcfg.p_relay, rng)
    trace = [sum_mse_exact(ch, P[1], P[2], F_blocks, cfg)]
    converged = False
    flag_ok = True
    it = 0
    for it in range(1, bcfg.max_iters + 1):
        try:
            D1, D2 = wiener_decoders(ch, P[1], P[2], F_blocks, cfg)
            D = {1: D1, 2: D2}
            for k in range(ch.n_c):
                F_blocks[k] = update_relay(ch, P, F_blocks, D, cfg, k, bcfg.p_relay)
            P, _ = update_precoders(ch, P, F_blocks, D, cfg, bcfg.p_relay)
        except (NumericFailure, np.linalg.LinAlgError, ValueError) as exc:
            log.warning("baseline inner solver failed at iteration %d: %s", it, exc)
            flag_ok = False
            break
        trace.append(sum_mse_exact(ch, P[1], P[2], F_blocks, cfg))
        if abs(trace[-2] - trace[-1]) <= bcfg.inner_tol * abs(trace[-2]):
            converged = True
            break
    D1, D2 = wiener_decoders(ch, P[1], P[2], F_blocks, cfg)
    G = {i: ch.G(i) @ assemble_relay_matrix(F_blocks) for i in (1, 2)}
    return DesignSolution(
        P1=P[1], P2=P[2], B1=G[1], B2=G[2], F_blocks=F_blocks, D1=D1, D2=D2,
        meta={"algorithm": "baseline", "iterations": it if bcfg.max_iters else 0,
              "mse_trace": trace, "converged": converged, "ok": flag_ok},
    )

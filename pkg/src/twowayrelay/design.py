"""Closed-form joint design of precoders, relay matrices and decoders.

Pipeline for one channel realization:

1. pick the semi-unitary rotations ``Q_1, Q_2`` (identity by default);
2. ascending SVD of ``H_1`` and ``H_2``;
3. solve the two decoupled power-allocation pairs ``(z_1, w_2)`` and
   ``(z_2, w_1)``;
4. ``Omega_i = diag(sqrt(z_i))``, ``Delta_i = diag(sqrt(w_i))``;
5. ``P_i = V_i,right Omega_i`` and ``B_other = Q_other Delta_other U_i,right^H``;
6. each relay solves ``[G_1k; G_2k] F_k = [B_1k; B_2k]`` in the minimum-norm
   sense;
7. Wiener decoders for the resulting dual-hop matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .channel import ChannelRealization, SystemConfig
from .errors import ContractViolation, DegenerateChannelError, NumericFailure
from .linalg import SvdAscending, pinv, svd_ascending
from .power import PowerAllocation, ScalarProblem, solve_pair
from .system_model import NetworkState, assemble_relay_matrix, dual_hop, noise_covariance, other

__all__ = [
    "DesignSolution",
    "design",
    "build_precoder",
    "build_relay_target",
    "relay_matrices",
    "wiener_decoder",
    "wiener_decoders",
    "rank_check",
]


@dataclass
class DesignSolution:
    P1: np.ndarray
    P2: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    F_blocks: list
    D1: np.ndarray
    D2: np.ndarray
    Omega1: np.ndarray | None = None
    Omega2: np.ndarray | None = None
    Delta1: np.ndarray | None = None
    Delta2: np.ndarray | None = None
    Q1: np.ndarray | None = None
    Q2: np.ndarray | None = None
    alloc1: PowerAllocation | None = None
    alloc2: PowerAllocation | None = None
    meta: dict = field(default_factory=dict)

    @property
    def F(self) -> np.ndarray:
        return assemble_relay_matrix(self.F_blocks)

    def P(self, i: int) -> np.ndarray:
        return self.P1 if i == 1 else self.P2

    def B(self, i: int) -> np.ndarray:
        return self.B1 if i == 1 else self.B2

    def D(self, i: int) -> np.ndarray:
        return self.D1 if i == 1 else self.D2

    def state(self) -> NetworkState:
        return NetworkState(P1=self.P1, P2=self.P2, F_blocks=list(self.F_blocks), D1=self.D1, D2=self.D2)


def rank_check(sigma: np.ndarray, shape, what: str) -> None:
    """Raise DegenerateChannelError unless all singular values clear the rank tolerance."""
    smax = float(sigma[-1]) if sigma.size else 0.0
    tol = 1e-12 * max(shape) * smax
    if sigma.size == 0 or smax == 0.0 or float(sigma[0]) <= tol:
        raise DegenerateChannelError(f"{what} is numerically rank deficient (sigma_min={sigma[0] if sigma.size else 0:.3e})")


def build_precoder(svd_h: SvdAscending, omega) -> np.ndarray:
    """``P = V_right Omega`` on the ``len(omega)`` dominant right singular directions."""
    omega = np.asarray(omega, dtype=np.float64)
    if np.any(omega < 0):
        raise ContractViolation("Omega must have non-negative diagonal")
    return svd_h.V_right(omega.size) * omega


def build_relay_target(svd_h: SvdAscending, delta, Q=None) -> np.ndarray:
    """``B = Q Delta U_right^H`` with ``U_right`` the ``len(delta)`` dominant
    left singular vectors of ``H``."""
    delta = np.asarray(delta, dtype=np.float64)
    n = delta.size
    if Q is None:
        Q = np.eye(n, dtype=np.complex128)
    Q = np.asarray(Q, dtype=np.complex128)
    if Q.shape[1] != n:
        raise ContractViolation(f"Q has {Q.shape[1]} columns, Delta has {n} entries")
    return (Q * delta) @ svd_h.U_right(n).conj().T


def relay_matrices(ch: ChannelRealization, B1, B2) -> list[np.ndarray]:
    """Minimum-norm ``F_k = pinv([G_1k; G_2k]) [B_1k; B_2k]`` for every relay."""
    blocks = []
    n_t = ch.n_t
    for k in range(ch.n_c):
        Gt = ch.G_stacked(k)
        if Gt.shape[0] > Gt.shape[1]:
            raise DegenerateChannelError(f"relay {k}: stacked second hop has more rows than antennas")
        s = np.linalg.svd(Gt, compute_uv=False)[::-1]
        rank_check(s, Gt.shape, f"stacked second hop of relay {k}")
        sl = ch.relay_slice(k)
        Bt = np.vstack([np.asarray(B1)[:, sl], np.asarray(B2)[:, sl]])
        if Bt.shape[0] != 2 * n_t:
            raise ContractViolation("relay targets must have N_T rows each")
        blocks.append(pinv(Gt) @ Bt)
    return blocks


def wiener_decoder(C, K_vv) -> np.ndarray:
    """``D = C^H (C C^H + K_vv)^{-1}``, computed with a Cholesky solve."""
    C = np.asarray(C, dtype=np.complex128)
    M = C @ C.conj().T + np.asarray(K_vv)
    M = 0.5 * (M + M.conj().T)
    try:
        cf = sla.cho_factor(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("C C^H + K_vv is not positive definite") from exc
    # M is Hermitian, so (M^-1 C)^H = C^H M^-1
    return sla.cho_solve(cf, C).conj().T


def wiener_decoders(ch: ChannelRealization, P1, P2, F, cfg: SystemConfig):
    """MMSE decoders ``(D_1, D_2)`` for the given precoders and relay matrix."""
    F = assemble_relay_matrix(F) if isinstance(F, (list, tuple)) else F
    P = {1: P1, 2: P2}
    out = []
    for i in (1, 2):
        C = dual_hop(ch, P[other(i)], F, i, other(i))
        out.append(wiener_decoder(C, noise_covariance(ch, F, cfg, i)))
    return tuple(out)


def _pair(svd_h: SvdAscending, n_s: int, sigma2_n: float, p_t: float, p_r: float,
          tol: float, max_iter: int) -> PowerAllocation:
    gains = svd_h.sigma_right(n_s) ** 2 / sigma2_n
    return solve_pair(ScalarProblem(gains=gains, p_t=p_t, p_r=p_r), tol=tol, max_iter=max_iter)


def design(ch: ChannelRealization, cfg: SystemConfig, Q1=None, Q2=None,
           tol: float = 1e-10, max_iter: int = 500) -> DesignSolution:
    """Closed-form transceiver design for one channel realization.

    Parameters
    ----------
    ch : ChannelRealization
        Perfectly known first- and second-hop channels.
    cfg : SystemConfig
        Budgets ``p_t1, p_t2`` bound the precoders; ``p_r1, p_r2`` bound
        ``tr(B_i B_i^H)``, the power relayed towards terminal ``i``.
    Q1, Q2 : array_like, optional
        ``N_T x N_T`` semi-unitary rotations applied to ``B_1`` and ``B_2``.
        Identity if omitted.

    Raises
    ------
    DegenerateChannelError
        If a first-hop channel or a relay's stacked second hop is
        numerically rank deficient.
    """
    n_t, n_s = cfg.n_t, cfg.n_s
    if ch.n_t != n_t or ch.n_r != cfg.n_r or ch.n_c != cfg.n_c:
        raise ContractViolation("channel realization does not match the configuration")
    Q = {1: Q1, 2: Q2}
    for i in (1, 2):
        if Q[i] is None:
            Q[i] = np.eye(n_t, dtype=np.complex128)
        Q[i] = np.asarray(Q[i], dtype=np.complex128)
        if Q[i].shape != (n_t, n_t) or not np.allclose(Q[i].conj().T @ Q[i], np.eye(n_t), atol=1e-10):
            raise ContractViolation(f"Q{i} must be a {n_t}x{n_t} semi-unitary matrix")

    svd = {}
    for i in (1, 2):
        svd[i] = svd_ascending(ch.H(i))
        rank_check(svd[i].sigma, ch.H(i).shape, f"H{i}")

    # pair i couples P_i (budget p_t(i)) with B_other (budget p_r(other))
    alloc = {i: _pair(svd[i], n_s, cfg.sigma2_n(other(i)), cfg.p_t(i), cfg.p_r(other(i)), tol, max_iter)
             for i in (1, 2)}

    omega = {i: np.sqrt(alloc[i].z) for i in (1, 2)}
    delta = {}
    for i in (1, 2):
        d = np.zeros(n_t)
        d[n_t - n_s:] = np.sqrt(alloc[i].w)
        delta[other(i)] = d

    P = {i: build_precoder(svd[i], omega[i]) for i in (1, 2)}
    B = {other(i): build_relay_target(svd[i], delta[other(i)], Q[other(i)]) for i in (1, 2)}
    F_blocks = relay_matrices(ch, B[1], B[2])
    D1, D2 = wiener_decoders(ch, P[1], P[2], F_blocks, cfg)
    return DesignSolution(
        P1=P[1], P2=P[2], B1=B[1], B2=B[2], F_blocks=F_blocks, D1=D1, D2=D2,
        Omega1=np.diag(omega[1]), Omega2=np.diag(omega[2]),
        Delta1=np.diag(delta[1]), Delta2=np.diag(delta[2]),
        Q1=Q[1], Q2=Q[2], alloc1=alloc[1], alloc2=alloc[2],
        meta={"algorithm": "proposed"},
    )

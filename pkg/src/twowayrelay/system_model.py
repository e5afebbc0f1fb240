"""Two-slot signal chain and sum-MSE expressions for fixed (P, F, D).

Indices follow the network: terminal ``i`` receives ``r_i`` and, after
removing its own echo, estimates the symbols of the *other* terminal
``other(i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg import block_diag

from .channel import ChannelRealization, SystemConfig
from .errors import ContractViolation, NumericFailure

__all__ = [
    "other",
    "NetworkState",
    "DualHopMatrices",
    "assemble_relay_matrix",
    "split_relay_matrix",
    "relay_receive",
    "terminal_receive",
    "cancel_self_interference",
    "dual_hop",
    "dual_hop_matrices",
    "noise_covariance",
    "signal_covariance",
    "relay_input_covariance",
    "mse_with_decoders",
    "sum_mse_exact",
    "sum_mse_highsnr",
]


def other(i: int) -> int:
    if i not in (1, 2):
        raise ContractViolation(f"terminal index must be 1 or 2, got {i!r}")
    return 3 - i


def assemble_relay_matrix(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Dense block-diagonal ``F = diag(F_1, ..., F_NC)``."""
    return block_diag(*[np.asarray(b, dtype=np.complex128) for b in blocks])


def split_relay_matrix(F: np.ndarray, n_r: int) -> list[np.ndarray]:
    F = np.asarray(F)
    if F.shape[0] != F.shape[1] or F.shape[0] % n_r:
        raise ContractViolation(f"relay matrix shape {F.shape} incompatible with n_r={n_r}")
    return [F[k * n_r:(k + 1) * n_r, k * n_r:(k + 1) * n_r].copy() for k in range(F.shape[0] // n_r)]


def _dense_F(F) -> np.ndarray:
    if isinstance(F, (list, tuple)):
        return assemble_relay_matrix(F)
    return np.asarray(F, dtype=np.complex128)


@dataclass
class NetworkState:
    """Precoders, per-relay forwarding blocks and decoders of one design."""

    P1: np.ndarray
    P2: np.ndarray
    F_blocks: list = field(default_factory=list)
    D1: np.ndarray | None = None
    D2: np.ndarray | None = None

    @property
    def F(self) -> np.ndarray:
        return assemble_relay_matrix(self.F_blocks)

    def P(self, i: int) -> np.ndarray:
        return self.P1 if i == 1 else self.P2

    def D(self, i: int) -> np.ndarray:
        return self.D1 if i == 1 else self.D2


@dataclass(frozen=True)
class DualHopMatrices:
    """``C[i][j] = G_i F H_j P_j`` for ``i, j in {1, 2}``."""

    C11: np.ndarray
    C12: np.ndarray
    C21: np.ndarray
    C22: np.ndarray

    def __call__(self, i: int, j: int) -> np.ndarray:
        return getattr(self, f"C{i}{j}")


def relay_receive(ch: ChannelRealization, P1, P2, s1, s2, w) -> np.ndarray:
    """``y = H1 P1 s1 + H2 P2 s2 + w`` (vectors or column-stacked blocks)."""
    y = ch.H1 @ (P1 @ s1) + ch.H2 @ (P2 @ s2)
    w = np.asarray(w)
    if w.shape != y.shape:
        raise ContractViolation(f"relay noise shape {w.shape} != received shape {y.shape}")
    return y + w


def terminal_receive(ch: ChannelRealization, F, y, n_i, i: int) -> np.ndarray:
    """``r_i = G_i F y + n_i``; `F` may be dense or a list of relay blocks."""
    G = ch.G(i)
    if isinstance(F, (list, tuple)):
        y = np.asarray(y)
        # block-wise: sum_k G_{i,k} F_k y_k, cheaper than the dense product
        out = np.zeros((G.shape[0],) + y.shape[1:], dtype=np.complex128)
        for k, Fk in enumerate(F):
            sl = ch.relay_slice(k)
            out += G[:, sl] @ (Fk @ y[sl])
    else:
        out = G @ (np.asarray(F) @ y)
    n_i = np.asarray(n_i)
    if n_i.shape != out.shape:
        raise ContractViolation(f"terminal noise shape {n_i.shape} != {out.shape}")
    return out + n_i


def cancel_self_interference(r_i, C_ii, s_i) -> np.ndarray:
    """Subtract the terminal's own echoed symbols: ``r_i - C_ii s_i``."""
    return r_i - C_ii @ s_i


def dual_hop(ch: ChannelRealization, P_j, F, i: int, j: int) -> np.ndarray:
    """``C_ij = G_i F H_j P_j``."""
    F = _dense_F(F)
    return ch.G(i) @ F @ ch.H(j) @ P_j


def dual_hop_matrices(ch: ChannelRealization, P1, P2, F) -> DualHopMatrices:
    F = _dense_F(F)
    GF = {i: ch.G(i) @ F for i in (1, 2)}
    HP = {1: ch.H1 @ P1, 2: ch.H2 @ P2}
    return DualHopMatrices(C11=GF[1] @ HP[1], C12=GF[1] @ HP[2], C21=GF[2] @ HP[1], C22=GF[2] @ HP[2])


def noise_covariance(ch: ChannelRealization, F, cfg: SystemConfig, i: int) -> np.ndarray:
    """``K_vv_i = sigma2_w G_i F F^H G_i^H + sigma2_n_i I``."""
    GF = ch.G(i) @ _dense_F(F)
    K = cfg.sigma2_w * (GF @ GF.conj().T) + cfg.sigma2_n(i) * np.eye(GF.shape[0])
    return 0.5 * (K + K.conj().T)


def signal_covariance(ch: ChannelRealization, P1, P2, cfg: SystemConfig) -> np.ndarray:
    """``K_yy = sum_i H_i P_i P_i^H H_i^H + sigma2_w I``."""
    A1 = ch.H1 @ P1
    A2 = ch.H2 @ P2
    K = A1 @ A1.conj().T + A2 @ A2.conj().T + cfg.sigma2_w * np.eye(ch.H1.shape[0])
    return 0.5 * (K + K.conj().T)


def relay_input_covariance(ch: ChannelRealization, P1, P2, cfg: SystemConfig, k: int) -> np.ndarray:
    """Diagonal block ``K_{y_k y_k}`` of ``K_yy`` seen by relay `k`."""
    A1 = ch.H_block(1, k) @ P1
    A2 = ch.H_block(2, k) @ P2
    K = A1 @ A1.conj().T + A2 @ A2.conj().T + cfg.sigma2_w * np.eye(A1.shape[0])
    return 0.5 * (K + K.conj().T)


def _hpd_solve(K: np.ndarray, B: np.ndarray) -> np.ndarray:
    try:
        cf = sla.cho_factor(0.5 * (K + K.conj().T), lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("covariance matrix is not positive definite") from exc
    return sla.cho_solve(cf, B)


def _mmse_trace(C: np.ndarray, K: np.ndarray) -> float:
    # tr[(I + C^H K^-1 C)^-1]
    M = np.eye(C.shape[1]) + C.conj().T @ _hpd_solve(K, C)
    E = _hpd_solve(M, np.eye(C.shape[1]))
    return float(np.real(np.trace(E)))


def sum_mse_exact(ch: ChannelRealization, P1, P2, F, cfg: SystemConfig) -> float:
    """Sum-MSE of both links when each terminal uses its Wiener decoder."""
    F = _dense_F(F)
    P = {1: P1, 2: P2}
    total = 0.0
    for src in (1, 2):
        dst = other(src)
        if cfg.sigma2_n(dst) <= 0:
            raise NumericFailure("singular noise covariance")
        C = dual_hop(ch, P[src], F, dst, src)
        total += _mmse_trace(C, noise_covariance(ch, F, cfg, dst))
    return total


def sum_mse_highsnr(ch: ChannelRealization, P1, P2, F, cfg: SystemConfig) -> float:
    """High-SNR surrogate that drops the relay noise from ``K_vv``."""
    F = _dense_F(F)
    P = {1: P1, 2: P2}
    total = 0.0
    for src in (1, 2):
        dst = other(src)
        C = dual_hop(ch, P[src], F, dst, src)
        K = cfg.sigma2_n(dst) * np.eye(C.shape[0])
        total += _mmse_trace(C, K)
    return total


def mse_with_decoders(ch: ChannelRealization, P1, P2, F, D1, D2, cfg: SystemConfig) -> float:
    """Sum-MSE for arbitrary linear decoders (``D_i`` applied at terminal i).

    ``E||D_i r_i - s_other||^2 = ||D_i C_{i,other} - I||^2 + tr(D_i K_vv_i D_i^H)``.
    """
    F = _dense_F(F)
    P = {1: P1, 2: P2}
    D = {1: D1, 2: D2}
    total = 0.0
    for i in (1, 2):
        j = other(i)
        C = dual_hop(ch, P[j], F, i, j)
        E = D[i] @ C - np.eye(C.shape[1])
        K = noise_covariance(ch, F, cfg, i)
        total += float(np.real(np.vdot(E, E))) + float(np.real(np.trace(D[i] @ K @ D[i].conj().T)))
    return total

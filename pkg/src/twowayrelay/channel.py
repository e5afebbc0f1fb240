"""Random channels, noise and QPSK symbols for the two-way relay network.

Randomness is organised in named substreams. Each stream is a Philox
generator keyed by ``(master_seed, trial, stream id, redraw)``, so changing
how many symbols are drawn never perturbs the channel draws and a trial can
be reproduced in isolation from any worker.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

__all__ = [
    "SystemConfig",
    "ChannelRealization",
    "STREAMS",
    "stream",
    "crandn",
    "draw_channels",
    "draw_noise",
    "draw_symbols",
    "qpsk_map",
    "qpsk_demap",
]

# ids are part of the reproducibility contract; never renumber
STREAMS = {
    "H": 1,
    "G": 2,
    "w": 3,
    "n1": 4,
    "n2": 5,
    "s1": 6,
    "s2": 7,
    "baseline_init": 8,
    "aux": 9,
}


@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts, noise variances and power budgets.

    ``n_s`` defaults to ``n_t`` (both terminals send as many streams as they
    have antennas). ``p_r1``/``p_r2`` bound ``tr(B_i B_i^H)``, the power
    relayed towards terminal 1 / 2.
    """

    n_t: int = 2
    n_r: int = 4
    n_c: int = 2
    n_s: int | None = None
    sigma2_w: float = 1.0
    sigma2_n1: float = 1.0
    sigma2_n2: float = 1.0
    p_t1: float = 1.0
    p_t2: float = 1.0
    p_r1: float = 1.0
    p_r2: float = 1.0
    modulation: str = "qpsk"

    def __post_init__(self):
        if self.n_s is None:
            object.__setattr__(self, "n_s", self.n_t)
        for name in ("n_t", "n_r", "n_c", "n_s"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ContractViolation(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n_s > self.n_t:
            raise ContractViolation(f"n_s={self.n_s} exceeds n_t={self.n_t}")
        if 2 * self.n_t > self.n_r:
            raise ContractViolation(
                f"relays need n_r >= 2*n_t for a full-row-rank stacked second hop "
                f"(n_t={self.n_t}, n_r={self.n_r})"
            )
        for name in ("sigma2_w", "sigma2_n1", "sigma2_n2", "p_t1", "p_t2", "p_r1", "p_r2"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ContractViolation(f"{name} must be strictly positive, got {v!r}")
            object.__setattr__(self, name, v)
        if self.modulation.lower() != "qpsk":
            raise ContractViolation(f"unsupported modulation {self.modulation!r}")

    @property
    def n_relay_ant(self) -> int:
        """Total relay antennas ``N_C * N_R``."""
        return self.n_c * self.n_r

    def sigma2_n(self, i: int) -> float:
        return self.sigma2_n1 if i == 1 else self.sigma2_n2

    def p_t(self, i: int) -> float:
        return self.p_t1 if i == 1 else self.p_t2

    def p_r(self, i: int) -> float:
        return self.p_r1 if i == 1 else self.p_r2

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ChannelRealization:
    """First-hop ``H1, H2`` (``N_C N_R x N_T``) and second-hop ``G1, G2``
    (``N_T x N_C N_R``) matrices. Relay `k` owns rows ``k*N_R:(k+1)*N_R`` of
    ``H_i`` and the same columns of ``G_i``."""

    H1: np.ndarray
    H2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    n_r: int

    def __post_init__(self):
        for name in ("H1", "H2", "G1", "G2"):
            a = np.asarray(getattr(self, name), dtype=np.complex128)
            if a.ndim != 2 or not np.all(np.isfinite(a)):
                raise ContractViolation(f"{name} must be a finite 2-D matrix")
            object.__setattr__(self, name, a)
        rows, n_t = self.H1.shape
        if rows % self.n_r:
            raise ContractViolation(f"H1 has {rows} rows, not a multiple of n_r={self.n_r}")
        for name, shape in (("H2", (rows, n_t)), ("G1", (n_t, rows)), ("G2", (n_t, rows))):
            if getattr(self, name).shape != shape:
                raise ContractViolation(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )

    @property
    def n_c(self) -> int:
        return self.H1.shape[0] // self.n_r

    @property
    def n_t(self) -> int:
        return self.H1.shape[1]

    def H(self, i: int) -> np.ndarray:
        return self.H1 if i == 1 else self.H2

    def G(self, i: int) -> np.ndarray:
        return self.G1 if i == 1 else self.G2

    def relay_slice(self, k: int) -> slice:
        return slice(k * self.n_r, (k + 1) * self.n_r)

    def H_block(self, i: int, k: int) -> np.ndarray:
        return self.H(i)[self.relay_slice(k), :]

    def G_block(self, i: int, k: int) -> np.ndarray:
        return self.G(i)[:, self.relay_slice(k)]

    def G_stacked(self, k: int) -> np.ndarray:
        """``[G_{1,k}; G_{2,k}]``, shape ``2 N_T x N_R``."""
        return np.vstack([self.G_block(1, k), self.G_block(2, k)])


def stream(seed: int, trial: int, name: str, redraw: int = 0) -> np.random.Generator:
    """Counter-based generator for one named random source of one trial."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial), STREAMS[name], int(redraw)))
    return np.random.Generator(np.random.Philox(ss))


def crandn(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """ZMCSC Gaussian samples: real and imaginary parts each N(0, variance/2)."""
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def draw_channels(cfg: SystemConfig, rng_h: np.random.Generator,
                  rng_g: np.random.Generator | None = None) -> ChannelRealization:
    """Draw i.i.d. unit-variance Rayleigh first- and second-hop channels.

    With a single generator both hops come from it; the harness passes
    separate ``H`` and ``G`` substreams.
    """
    if rng_g is None:
        rng_g = rng_h
    m = cfg.n_relay_ant
    H1 = crandn(rng_h, (m, cfg.n_t))
    H2 = crandn(rng_h, (m, cfg.n_t))
    G1 = crandn(rng_g, (cfg.n_t, m))
    G2 = crandn(rng_g, (cfg.n_t, m))
    return ChannelRealization(H1=H1, H2=H2, G1=G1, G2=G2, n_r=cfg.n_r)


def draw_noise(dim: int, variance: float, rng: np.random.Generator, n_samples: int | None = None) -> np.ndarray:
    """ZMCSC Gaussian noise of per-entry `variance`.

    Returns a length-`dim` vector, or a ``dim x n_samples`` matrix whose
    columns are independent noise vectors.
    """
    if variance < 0:
        raise ContractViolation(f"noise variance must be >= 0, got {variance}")
    shape = (dim,) if n_samples is None else (dim, n_samples)
    if variance == 0:
        return np.zeros(shape, dtype=np.complex128)
    return crandn(rng, shape, variance)


_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped unit-energy QPSK.

    `bits` has a trailing axis of length 2: bit 0 drives the sign of the real
    part, bit 1 the sign of the imaginary part (0 -> +, 1 -> -).
    """
    b = np.asarray(bits, dtype=np.uint8)
    return ((1.0 - 2.0 * b[..., 0]) + 1j * (1.0 - 2.0 * b[..., 1])) * _INV_SQRT2


def qpsk_demap(x: np.ndarray) -> np.ndarray:
    """Minimum-distance hard decision back to Gray bits (inverse of `qpsk_map`)."""
    x = np.asarray(x)
    return np.stack([(x.real < 0), (x.imag < 0)], axis=-1).astype(np.uint8)


def draw_symbols(n: int, rng: np.random.Generator, n_vectors: int | None = None):
    """I.i.d. uniform QPSK symbols together with their bits.

    Returns ``(symbols, bits)``. ``symbols`` has shape ``(n,)`` or
    ``(n, n_vectors)``; ``bits`` has an extra trailing axis of length 2.
    """
    if n < 1:
        raise ContractViolation(f"need at least one symbol, got n={n}")
    shape = (n,) if n_vectors is None else (n, n_vectors)
    bits = rng.integers(0, 2, size=shape + (2,), dtype=np.uint8)
    return qpsk_map(bits), bits

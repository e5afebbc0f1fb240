"""Monte Carlo BER harness for the proposed design and the baseline.

Every trial draws its channels, noise and symbols from named substreams
keyed by ``(master_seed, trial)``; algorithms evaluated at the same trial
therefore see identical random inputs, and results do not depend on how
trials are distributed over worker processes.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from . import kernels
from .baseline import BaselineConfig, baseline_design, scale_relay_power
from .channel import ChannelRealization, SystemConfig, draw_channels, draw_noise, draw_symbols, stream
from .design import DesignSolution, design, rank_check, wiener_decoders
from .errors import ContractViolation, DegenerateChannelError
from .linalg import svd_ascending
from .system_model import cancel_self_interference, dual_hop_matrices, relay_input_covariance, relay_receive, terminal_receive

__all__ = [
    "Algorithm",
    "parse_algorithms",
    "SimulationConfig",
    "BerPoint",
    "BerCurve",
    "TrialResult",
    "map_ebn0_to_powers",
    "check_channel",
    "draw_trial_channel",
    "equalize_relay_power",
    "run_trial",
    "sweep",
    "wilson_interval",
    "curves_to_csv",
    "curves_to_json",
    "version_string",
]

log = logging.getLogger(__name__)

MAX_REDRAWS = 100
CHUNK_VECTORS = 4096


@dataclass(frozen=True)
class Algorithm:
    """``proposed`` or ``baseline`` with a fixed number of outer iterations."""

    name: str
    iterations: int = 0

    def __post_init__(self):
        if self.name not in ("proposed", "baseline"):
            raise ContractViolation(f"unknown algorithm {self.name!r}")
        if self.name == "baseline" and self.iterations < 1:
            raise ContractViolation("baseline needs at least one iteration")

    @property
    def label(self) -> str:
        return self.name if self.name == "proposed" else f"baseline:{self.iterations}"

    @classmethod
    def parse(cls, text: str) -> "Algorithm":
        text = text.strip()
        if text == "proposed":
            return cls("proposed")
        if text.startswith("baseline"):
            _, _, n = text.partition(":")
            try:
                return cls("baseline", int(n) if n else 10)
            except ValueError:
                raise ContractViolation(f"bad baseline iteration count in {text!r}") from None
        raise ContractViolation(f"unknown algorithm {text!r}")


def parse_algorithms(text: str) -> list[Algorithm]:
    algos = [Algorithm.parse(t) for t in text.split(",") if t.strip()]
    if not algos:
        raise ContractViolation("no algorithm given")
    return algos


@dataclass(frozen=True)
class SimulationConfig:
    base: SystemConfig
    ebn0_grid_db: tuple = (0.0, 4.0, 8.0, 12.0)
    trials: int = 200
    symbols_per_trial: int = 10_000
    master_seed: int = 0
    algorithms: tuple = (Algorithm("proposed"),)
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ContractViolation("trials must be >= 1")
        if self.symbols_per_trial < 1 or self.symbols_per_trial % self.base.n_s:
            raise ContractViolation(
                f"symbols_per_trial={self.symbols_per_trial} must be a positive multiple of n_s={self.base.n_s}"
            )
        object.__setattr__(self, "ebn0_grid_db", tuple(float(x) for x in self.ebn0_grid_db))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.workers < 1:
            raise ContractViolation("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "ebn0_grid_db": list(self.ebn0_grid_db),
            "trials": self.trials,
            "symbols_per_trial": self.symbols_per_trial,
            "master_seed": self.master_seed,
            "algorithms": [a.label for a in self.algorithms],
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class BerPoint:
    ebn0_db: float
    bit_errors: int
    bits: int
    redraws: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def ci95(self) -> tuple:
        return wilson_interval(self.bit_errors, self.bits)


@dataclass
class BerCurve:
    algorithm: str
    n_c: int
    points: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


@dataclass(frozen=True)
class TrialResult:
    bit_errors: int
    bits: int
    redraws: int = 0


def wilson_interval(errors: int, n: int, level: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return (0.0, 1.0)
    z = float(norm.ppf(0.5 + level / 2))
    p = errors / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


def map_ebn0_to_powers(ebn0_db: float, cfg: SystemConfig) -> dict:
    """Power budgets for one Eb/N0 point (unit noise variances).

    ``P = b * 10^(Eb/N0 / 10)`` with ``b = 2 N_s`` coded bits per channel use
    is used for both terminals and for every relay's transmit power; the
    design-stage relayed-power bound is ``N_C * P``.
    """
    b = cfg.n_s * 2
    p = b * 10.0 ** (ebn0_db / 10.0)
    return {"p_t1": p, "p_t2": p, "p_relay": p, "p_r": cfg.n_c * p}


def config_at(cfg: SystemConfig, ebn0_db: float) -> tuple[SystemConfig, float]:
    pw = map_ebn0_to_powers(ebn0_db, cfg)
    return cfg.replace(p_t1=pw["p_t1"], p_t2=pw["p_t2"], p_r1=pw["p_r"], p_r2=pw["p_r"]), pw["p_relay"]


def check_channel(ch: ChannelRealization) -> None:
    """Raise DegenerateChannelError if either design would be ill-posed."""
    for i in (1, 2):
        rank_check(svd_ascending(ch.H(i)).sigma, ch.H(i).shape, f"H{i}")
    for k in range(ch.n_c):
        Gt = ch.G_stacked(k)
        rank_check(np.linalg.svd(Gt, compute_uv=False)[::-1], Gt.shape, f"stacked second hop of relay {k}")


def draw_trial_channel(cfg: SystemConfig, seed: int, trial: int) -> tuple[ChannelRealization, int]:
    """Channel of one trial, redrawn while degenerate. Returns ``(ch, redraws)``."""
    for r in range(MAX_REDRAWS + 1):
        ch = draw_channels(cfg, stream(seed, trial, "H", r), stream(seed, trial, "G", r))
        try:
            check_channel(ch)
        except DegenerateChannelError as exc:
            log.info("trial %d: degenerate channel redrawn (%s)", trial, exc)
            continue
        return ch, r
    raise DegenerateChannelError(f"trial {trial}: {MAX_REDRAWS} consecutive degenerate channel draws")


def equalize_relay_power(ch: ChannelRealization, sol: DesignSolution, cfg: SystemConfig, p_relay: float) -> DesignSolution:
    """Scale every relay to transmit exactly `p_relay`, then refresh the decoders."""
    F_blocks = [
        scale_relay_power(Fk, relay_input_covariance(ch, sol.P1, sol.P2, cfg, k), p_relay)
        for k, Fk in enumerate(sol.F_blocks)
    ]
    D1, D2 = wiener_decoders(ch, sol.P1, sol.P2, F_blocks, cfg)
    return dataclasses.replace(sol, F_blocks=F_blocks, D1=D1, D2=D2)


def transmit(ch: ChannelRealization, sol: DesignSolution, cfg: SystemConfig, seed: int, trial: int,
             n_vectors: int, chunk: int = CHUNK_VECTORS) -> int:
    """Push `n_vectors` symbol vectors per terminal through both slots and
    count bit errors in both directions."""
    rngs = {name: stream(seed, trial, name) for name in ("s1", "s2", "w", "n1", "n2")}
    C = dual_hop_matrices(ch, sol.P1, sol.P2, sol.F_blocks)
    P = {1: sol.P1, 2: sol.P2}
    D = {1: sol.D1, 2: sol.D2}
    errors = 0
    done = 0
    m = ch.H1.shape[0]
    while done < n_vectors:
        n = min(chunk, n_vectors - done)
        s = {}
        bits = {}
        for i in (1, 2):
            s[i], bits[i] = draw_symbols(cfg.n_s, rngs[f"s{i}"], n)
        w = draw_noise(m, cfg.sigma2_w, rngs["w"], n)
        y = relay_receive(ch, P[1], P[2], s[1], s[2], w)
        for i in (1, 2):
            j = 3 - i
            n_i = draw_noise(cfg.n_t, cfg.sigma2_n(i), rngs[f"n{i}"], n)
            r = terminal_receive(ch, sol.F_blocks, y, n_i, i)
            r = cancel_self_interference(r, C(i, i), s[i])
            errors += kernels.count_bit_errors(D[i] @ r, bits[j])
        done += n
    return errors


def run_trial(cfg: SystemConfig, ebn0_db: float, algo: Algorithm, trial: int, seed: int,
              symbols_per_trial: int, zero_relay: bool = False) -> TrialResult:
    """One Monte Carlo trial: channel draw, design, transmission, BER count.

    `symbols_per_trial` QPSK symbols are sent by *each* terminal; ``bits``
    counts both directions. ``zero_relay`` forces ``F = 0`` (diagnostic).
    """
    if symbols_per_trial % cfg.n_s:
        raise ContractViolation("symbols_per_trial must be a multiple of n_s")
    cfg_pt, p_relay = config_at(cfg, ebn0_db)
    ch, redraws = draw_trial_channel(cfg, seed, trial)
    if algo.name == "proposed":
        sol = design(ch, cfg_pt)
    else:
        sol = baseline_design(ch, cfg_pt, BaselineConfig(max_iters=algo.iterations, p_relay=p_relay),
                              stream(seed, trial, "baseline_init"))
    if zero_relay:
        zero = [np.zeros_like(Fk) for Fk in sol.F_blocks]
        D1, D2 = wiener_decoders(ch, sol.P1, sol.P2, zero, cfg_pt)
        sol = dataclasses.replace(sol, F_blocks=zero, D1=D1, D2=D2)
    else:
        sol = equalize_relay_power(ch, sol, cfg_pt, p_relay)
    n_vectors = symbols_per_trial // cfg.n_s
    errors = transmit(ch, sol, cfg_pt, seed, trial, n_vectors)
    return TrialResult(bit_errors=errors, bits=2 * 2 * symbols_per_trial, redraws=redraws)


def _run_chunk(args):
    cfg, ebn0_db, algo, trials, seed, symbols = args
    errs = bits = redraws = 0
    for t in trials:
        r = run_trial(cfg, ebn0_db, algo, t, seed, symbols)
        errs += r.bit_errors
        bits += r.bits
        redraws += r.redraws
    return errs, bits, redraws


def resolve_workers(requested: int | None = None) -> int:
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("TWR_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer TWR_THREADS=%r", cap)
    return max(1, n)


def sweep(sim: SimulationConfig, progress: Callable[[str], None] | None = None) -> list[BerCurve]:
    """BER curves, one per algorithm, over the Eb/N0 grid.

    Trials are split into contiguous chunks and summed as integers, so the
    result is identical for any worker count.
    """
    workers = resolve_workers(sim.workers)
    meta = {"config_hash": sim.config_hash(), "seed": sim.master_seed, "version": version_string()}
    jobs = []
    for algo in sim.algorithms:
        for e in sim.ebn0_grid_db:
            n_chunks = min(sim.trials, max(1, 4 * workers))
            for part in np.array_split(np.arange(sim.trials), n_chunks):
                if part.size:
                    jobs.append((algo, e, (sim.base, e, algo, [int(t) for t in part], sim.master_seed, sim.symbols_per_trial)))
    totals = {}
    if workers == 1:
        results = map(_run_chunk, (j[2] for j in jobs))
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_run_chunk, [j[2] for j in jobs])
    try:
        for (algo, e, _), (errs, bits, redraws) in zip(jobs, results):
            acc = totals.setdefault((algo.label, e), [0, 0, 0])
            acc[0] += errs
            acc[1] += bits
            acc[2] += redraws
            if progress is not None and acc[1] == sim.trials * 4 * sim.symbols_per_trial:
                progress(f"{algo.label} n_c={sim.base.n_c} ebn0={e:g} dB: ber={acc[0] / acc[1]:.3e}")
    finally:
        if workers > 1:
            pool.shutdown()
    curves = []
    for algo in sim.algorithms:
        pts = [BerPoint(e, *totals[(algo.label, e)]) for e in sim.ebn0_grid_db]
        curves.append(BerCurve(algorithm=algo.label, n_c=sim.base.n_c, points=pts, metadata=dict(meta)))
    return curves


def version_string() -> str:
    try:
        from importlib.metadata import version
        v = version("artifact")
    except Exception:
        v = "0+unknown"
    try:
        root = Path(__file__).resolve().parents[2]
        out = subprocess.run(["git", "describe", "--always", "--tags"], cwd=root, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{v}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return v


CSV_COLUMNS = ("algorithm", "n_c", "ebn0_db", "bits", "bit_errors", "ber", "ci_low", "ci_high")


def curves_to_csv(curves: Sequence[BerCurve], config: dict | None = None) -> str:
    """CSV text; the effective config is echoed in ``#`` comment lines."""
    lines = []
    if config is not None:
        lines.append("# config: " + json.dumps(config, sort_keys=True))
    if curves:
        lines.append("# seed: %s" % curves[0].metadata.get("seed"))
        lines.append("# version: %s" % curves[0].metadata.get("version"))
    lines.append(",".join(CSV_COLUMNS))
    for c in curves:
        for p in c.points:
            lo, hi = p.ci95
            lines.append(",".join([c.algorithm, str(c.n_c), repr(p.ebn0_db), str(p.bits), str(p.bit_errors),
                                   repr(p.ber), repr(lo), repr(hi)]))
    return "\n".join(lines) + "\n"


def curves_to_json(curves: Sequence[BerCurve], config: dict | None = None) -> str:
    doc = {
        "config": config,
        "curves": [
            {
                "algorithm": c.algorithm,
                "n_c": c.n_c,
                "metadata": c.metadata,
                "points": [
                    {"ebn0_db": p.ebn0_db, "bits": p.bits, "bit_errors": p.bit_errors, "ber": p.ber,
                     "ci_low": p.ci95[0], "ci_high": p.ci95[1], "degenerate_redraws": p.redraws}
                    for p in c.points
                ],
            }
            for c in curves
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"

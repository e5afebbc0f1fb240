"""Closed-form transceiver design for two-way amplify-and-forward MIMO relay
networks, with an iterative baseline and a Monte Carlo BER harness."""
from importlib.metadata import PackageNotFoundError, version as _version

from .baseline import BaselineConfig, baseline_design
from .channel import ChannelRealization, SystemConfig, draw_channels, stream
from .design import DesignSolution, design, wiener_decoders
from .errors import ContractViolation, DegenerateChannelError, NumericFailure, TwrError
from .harness import SimulationConfig, parse_algorithms, run_trial, sweep
from .kernels import BACKEND
from .power import PowerAllocation, ScalarProblem, solve_pair
from .system_model import sum_mse_exact, sum_mse_highsnr

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BaselineConfig",
    "ChannelRealization",
    "ContractViolation",
    "DegenerateChannelError",
    "DesignSolution",
    "NumericFailure",
    "PowerAllocation",
    "ScalarProblem",
    "SimulationConfig",
    "SystemConfig",
    "TwrError",
    "baseline_design",
    "design",
    "draw_channels",
    "parse_algorithms",
    "run_trial",
    "solve_pair",
    "stream",
    "sum_mse_exact",
    "sum_mse_highsnr",
    "sweep",
    "wiener_decoders",
]

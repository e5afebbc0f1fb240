"""Backend selection for the inner-loop kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise, or
when ``TWR_PURE_PYTHON=1`` is set, the numpy implementation takes over.
Both expose ``waterfill_inner``, ``solve_pair``, ``pair_objective`` and
``count_bit_errors`` with identical contracts.
"""
import os

from . import _kernels_py

_impl = _kernels_py
if os.environ.get("TWR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND
waterfill_inner = _impl.waterfill_inner
solve_pair = _impl.solve_pair
pair_objective = _impl.pair_objective
count_bit_errors = _impl.count_bit_errors


def get_backend(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"`` explicitly."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")

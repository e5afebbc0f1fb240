import numpy as np
import pytest

from twowayrelay import kernels
from twowayrelay.channel import qpsk_map

BACKENDS = ["python"]
try:
    kernels.get_backend("cython")
    BACKENDS.append("cython")
except ImportError:
    pass


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.get_backend(request.param)


def test_backend_name(backend):
    assert backend.BACKEND in ("python", "cython")


def test_waterfill(backend):
    x, ok = backend.waterfill_inner(np.array([4.0, 1.0]), 1.5, 200)
    assert ok
    np.testing.assert_allclose(x, [2 / 3, 5 / 6], atol=1e-12)


def test_extreme_budgets(backend):
    for budget in (1e-13, 1e-6, 1e6, 1e12):
        x, ok = backend.waterfill_inner(np.array([3.0, 0.5, 40.0]), budget, 200)
        assert ok
        assert abs(x.sum() - budget) <= 1e-10 * budget


def test_pair_objective(backend):
    c, z, w = np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([1.0, 0.5])
    assert backend.pair_objective(c, z, w) == pytest.approx(1.0)


def test_count_bit_errors(backend):
    bits = np.array([[[0, 0], [1, 1]], [[1, 0], [0, 1]]], dtype=np.uint8)
    est = qpsk_map(bits)
    assert backend.count_bit_errors(est, bits) == 0
    est[0, 0] = -est[0, 0]  # flips both bits
    est[1, 1] = est[1, 1].conjugate()  # flips one bit
    assert backend.count_bit_errors(est, bits) == 3


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backends_agree(rng):
    py, cy = (kernels.get_backend(b) for b in ("python", "cython"))
    for _ in range(300):
        n = int(rng.integers(1, 7))
        c = np.sort(rng.exponential(3.0, n)) + 1e-3
        pt, pr = rng.uniform(0.01, 100, 2)
        a = py.solve_pair(c, pt, pr, 1e-10, 500)
        b = cy.solve_pair(c, pt, pr, 1e-10, 500)
        np.testing.assert_allclose(a[0], b[0], rtol=1e-7, atol=1e-8 * pt)
        np.testing.assert_allclose(a[1], b[1], rtol=1e-7, atol=1e-8 * pr)
        assert a[2] == pytest.approx(b[2], rel=1e-10)
    x = rng.standard_normal((3, 1000)) + 1j * rng.standard_normal((3, 1000))
    bits = rng.integers(0, 2, (3, 1000, 2), dtype=np.uint8)
    assert py.count_bit_errors(x, bits) == cy.count_bit_errors(x, bits)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_benchmark_script_runs():
    import subprocess
    import sys
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    r = subprocess.run([sys.executable, str(script), "--repeat", "1"], capture_output=True, text=True, timeout=120)
    assert r.returncode == 0, r.stderr
    assert "solve_pair" in r.stdout

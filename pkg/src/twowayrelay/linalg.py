"""Complex matrix decompositions with a fixed ascending-order convention.

Every decomposition returned here sorts singular values / eigenvalues in
*increasing* order, so "the rightmost columns" always means "the dominant
directions". Backends (LAPACK via numpy) that return descending order are
re-indexed at this boundary and nowhere else.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericFailure

__all__ = [
    "SvdAscending",
    "as_complex_matrix",
    "svd_ascending",
    "evd_hermitian_ascending",
    "pinv",
    "default_rank_tol",
    "HERMITIAN_TOL",
]

HERMITIAN_TOL = 1e-10


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and convert `m` to a finite 2-D complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractViolation(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class SvdAscending:
    """Full SVD ``M = U @ Sigma @ V^H`` with singular values ascending.

    ``U`` is ``rows x rows`` and ``V`` is ``cols x cols``. ``sigma`` has
    ``min(rows, cols)`` entries. The nonzero block of the rectangular
    ``Sigma`` is aligned with the *last* ``len(sigma)`` columns of ``U`` and
    of ``V``, so that for a tall matrix ``M = U[:, -n:] diag(sigma) V^H``.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank_dim(self) -> int:
        return self.sigma.size

    def U_right(self, n: int) -> np.ndarray:
        """The `n` rightmost (dominant) left singular vectors."""
        return self.U[:, self.U.shape[1] - n:]

    def V_right(self, n: int) -> np.ndarray:
        """The `n` rightmost (dominant) right singular vectors."""
        return self.V[:, self.V.shape[1] - n:]

    def sigma_right(self, n: int) -> np.ndarray:
        return self.sigma[self.sigma.size - n:]

    def reconstruct(self) -> np.ndarray:
        rows, cols = self.U.shape[0], self.V.shape[0]
        k = self.sigma.size
        S = np.zeros((rows, cols), dtype=np.complex128)
        S[rows - k:, cols - k:] = np.diag(self.sigma)
        return self.U @ S @ self.V.conj().T


def svd_ascending(m) -> SvdAscending:
    """Full singular value decomposition with ascending singular values.

    Ties keep the backend's relative order (stable re-indexing).

    Raises
    ------
    NumericFailure
        If LAPACK fails to converge.
    """
    a = as_complex_matrix(m, "M")
    rows, cols = a.shape
    try:
        U, s, Vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    k = s.size
    # backend gives descending s aligned with the first k columns; move the
    # nonzero block to the last k columns and reverse it.
    order = np.argsort(s, kind="stable")
    sigma = s[order]
    V = Vh.conj().T
    U_new = np.empty_like(U)
    V_new = np.empty_like(V)
    U_new[:, rows - k:] = U[:, order]
    V_new[:, cols - k:] = V[:, order]
    if rows > k:
        U_new[:, : rows - k] = U[:, k:]
    if cols > k:
        V_new[:, : cols - k] = V[:, k:]
    return SvdAscending(U=U_new, sigma=sigma, V=V_new)


def evd_hermitian_ascending(a, tol: float = HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized before decomposing. Returns ``(U, lam)`` with
    ``A = U diag(lam) U^H``.
    """
    A = as_complex_matrix(a, "A")
    if A.shape[0] != A.shape[1]:
        raise ContractViolation(f"A must be square, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
    asym = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if asym > tol * scale:
        raise ContractViolation(f"A is not Hermitian (asymmetry {asym:.3e})")
    A = 0.5 * (A + A.conj().T)
    try:
        lam, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"EVD did not converge: {exc}") from exc
    return U, lam


def default_rank_tol(shape) -> float:
    """Relative rank tolerance, multiplied by the largest singular value."""
    return 1e-12 * max(shape)


def pinv(m, rank_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse via the ascending SVD.

    Singular values below ``rank_tol * max(sigma)`` are treated as zero. The
    default `rank_tol` is ``1e-12 * max(rows, cols)``.
    """
    a = as_complex_matrix(m, "M")
    if rank_tol is None:
        rank_tol = default_rank_tol(a.shape)
    if rank_tol <= 0:
        raise ContractViolation("rank_tol must be positive")
    if a.size == 0:
        return np.zeros((a.shape[1], a.shape[0]), dtype=np.complex128)
    svd = svd_ascending(a)
    k = svd.sigma.size
    smax = svd.sigma[-1] if k else 0.0
    keep = svd.sigma > rank_tol * smax
    inv_s = np.zeros(k)
    inv_s[keep] = 1.0 / svd.sigma[keep]
    Ur = svd.U_right(k)
    Vr = svd.V_right(k)
    return (Vr * inv_s) @ Ur.conj().T

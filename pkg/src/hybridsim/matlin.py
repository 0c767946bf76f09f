"""Dense complex linear-algebra kernels.

Everything here is a pure function of its inputs. Matrices are plain
``numpy.ndarray`` objects of dtype ``complex128``.
"""

from dataclasses import dataclass
from functools import cmp_to_key

import numpy as np

from .errors import NonConvergence, RankDeficient

__all__ = [
    "SvdTriple",
    "qr_orthonormal",
    "hessenberg_eig",
    "svd_thin",
    "principal_angles",
    "dft_matrix",
    "RANK_TOL",
    "HESSENBERG_TOL",
    "TIE_TOL",
]

# relative column-norm floor for qr_orthonormal
RANK_TOL = 1e-12
# largest |entry| tolerated below the first subdiagonal in hessenberg_eig
HESSENBERG_TOL = 1e-12
# relative tolerance under which two eigenvalue magnitudes count as tied
TIE_TOL = 1e-10


@dataclass(frozen=True)
class SvdTriple:
    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray


def as_complex(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def qr_orthonormal(A, rank_tol=RANK_TOL):
    """Orthonormal basis of ``span(A)`` with a fixed phase convention.

    The R factor is normalised to a real nonnegative diagonal, so the
    returned Q is unique for full-column-rank input.

    Raises
    ------
    RankDeficient
        If some ``|R_kk|`` falls below ``rank_tol`` times the largest
        column norm of ``A``.
    """
    A = as_complex(A)
    rows, cols = A.shape
    if cols > rows:
        raise RankDeficient(f"{cols} columns cannot be independent in C^{rows}")
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.diag(R)
    scale = np.max(np.linalg.norm(A, axis=0))
    if scale == 0.0 or np.min(np.abs(diag)) < rank_tol * scale:
        raise RankDeficient(
            f"column norm {np.min(np.abs(diag)):.3e} below {rank_tol:g} x {scale:.3e}"
        )
    phase = diag / np.abs(diag)
    return Q * phase[None, :]


def _eig_order(lam, tie_tol=TIE_TOL):
    """Indices sorting ``lam`` by descending magnitude.

    Magnitude ties (relative ``tie_tol``) fall back to descending real
    part, then descending imaginary part.
    """
    scale = max(float(np.max(np.abs(lam))), 1.0) if lam.size else 1.0
    tol = tie_tol * scale

    def cmp(i, j):
        a, b = lam[i], lam[j]
        for x, y in ((abs(a), abs(b)), (a.real, b.real), (a.imag, b.imag)):
            if abs(x - y) > tol:
                return -1 if x > y else 1
        return 0

    return sorted(range(lam.size), key=cmp_to_key(cmp))


def hessenberg_eig(T):
    """Eigen-decomposition of a square (near-)upper-Hessenberg matrix.

    Backed by LAPACK's shifted-QR driver (``numpy.linalg.eig``), whose
    internal iteration cap is ``30 * m`` sweeps per eigenvalue. A LAPACK
    failure, or any pair whose residual exceeds ``1e-6 * ||T||``, raises
    :class:`NonConvergence` with the worst residual attached.

    Returns
    -------
    eigvecs : ndarray (m, m)
        Unit-norm eigenvectors, one per column.
    eigvals : ndarray (m,)
        Eigenvalues sorted by descending magnitude.
    """
    T = as_complex(T)
    m = T.shape[0]
    if T.shape != (m, m):
        raise ValueError(f"expected a square matrix, got {T.shape}")
    below = np.tril(T, -2)
    if below.size and np.max(np.abs(below)) > HESSENBERG_TOL * max(1.0, np.max(np.abs(T))):
        raise ValueError("matrix is not upper Hessenberg")
    try:
        lam, V = np.linalg.eig(T)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigensolver failed: {exc}")
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    resid = np.linalg.norm(T @ V - V * lam[None, :], axis=0)
    worst = float(np.max(resid)) if resid.size else 0.0
    if not np.isfinite(worst) or worst > 1e-6 * max(1.0, np.linalg.norm(T)):
        raise NonConvergence("eigenpair residual too large", residual=worst)
    order = _eig_order(lam)
    return V[:, order], lam[order]


def svd_thin(A, k):
    """Top-``k`` singular triple of ``A``; ground-truth oracle only."""
    A = as_complex(A)
    if not 1 <= k <= min(A.shape):
        raise ValueError(f"k={k} outside [1, {min(A.shape)}]")
    try:
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc))
    return SvdTriple(left=U[:, :k], singulars=s[:k], right=Vh[:k].conj().T)


def principal_angles(A, B):
    """Principal angles (radians, ascending) between ``span(A)`` and ``span(B)``."""
    A = as_complex(A)
    B = as_complex(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    QA = qr_orthonormal(A)
    QB = qr_orthonormal(B)
    C = QA.conj().T @ QB
    cos = np.sort(np.clip(np.linalg.svd(C, compute_uv=False), 0.0, 1.0))[::-1]
    # arccos loses accuracy near 0; small angles come from the sines instead
    sin = np.sort(np.clip(np.linalg.svd(QB - QA @ C, compute_uv=False), 0.0, 1.0))
    angles = np.where(cos > np.sqrt(0.5), np.arcsin(sin), np.arccos(cos))
    return np.sort(angles)


def dft_matrix(n):
    """Unitary ``n x n`` DFT matrix, entries ``exp(-2 pi i jk / n) / sqrt(n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(-2j * np.pi * jk / n) / np.sqrt(n)

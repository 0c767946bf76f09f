"""Rate and subspace-quality metrics."""

import numpy as np

from .errors import SingularCombiner
from .matlin import principal_angles, svd_thin

__all__ = [
    "user_rate",
    "optimal_rate",
    "subspace_distance",
    "subspace_angles",
    "waterfill",
    "COMBINER_COND_LIMIT",
]

COMBINER_COND_LIMIT = 1e12


def _log2det_hermitian(X):
    X = 0.5 * (X + X.conj().T)
    sign, logdet = np.linalg.slogdet(X)
    if sign.real <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return float(logdet.real / np.log(2.0))


def user_rate(H, F, G, W, U, snr):
    """``log2 |I + snr He He^H (U^H W^H W U)^-1|`` with ``He = U^H W^H H F G``.

    Evaluated as ``log2|K + snr He He^H| - log2|K|`` with ``K = U^H W^H W U``,
    both Hermitian positive definite.
    """
    WU = W @ U
    K = WU.conj().T @ WU
    if np.linalg.cond(K) > COMBINER_COND_LIMIT:
        raise SingularCombiner(f"combiner Gram condition number {np.linalg.cond(K):.3e}")
    He = WU.conj().T @ H @ F @ G
    return _log2det_hermitian(K + snr * He @ He.conj().T) - _log2det_hermitian(K)


def optimal_rate(H, d, snr):
    """``log2 |I + snr Sigma_1^2|`` over the top ``d`` singular values of ``H``."""
    s = svd_thin(H, d).singulars
    return float(np.sum(np.log2(1.0 + snr * s**2)))


def subspace_distance(A, FG):
    """Squared Frobenius distance ``||A - F G||_F^2``."""
    A = np.asarray(A)
    FG = np.asarray(FG)
    if A.shape != FG.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {FG.shape}")
    return float(np.linalg.norm(A - FG) ** 2)


def subspace_angles(A, B):
    """``(largest, mean)`` principal angle between two subspaces, radians."""
    ang = principal_angles(A, B)
    return float(ang[-1]), float(np.mean(ang))


def waterfill(sigmas, snr, total=None):
    """Waterfilling over parallel gains ``snr * sigma_i^2``.

    ``p_i = max(0, mu - 1/(snr sigma_i^2))`` with ``sum p_i = total``
    (default: the number of streams). Streams with ``sigma_i = 0`` get
    nothing.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    n = sigmas.size
    total = float(n) if total is None else float(total)
    gains = snr * sigmas**2
    p = np.zeros(n)
    active = np.flatnonzero(gains > 0)
    if active.size == 0:
        return p
    inv = 1.0 / gains[active]
    order = np.argsort(inv)
    inv_sorted = inv[order]
    # largest k whose water level clears the k-th floor
    for k in range(active.size, 0, -1):
        mu = (total + np.sum(inv_sorted[:k])) / k
        if mu > inv_sorted[k - 1]:
            break
    # mu - inv written as total/k + (mean floor - inv) so huge floors do not swamp total
    alloc = np.maximum(total / k + (np.mean(inv_sorted[:k]) - inv), 0.0)
    p[active] = alloc * (total / np.sum(alloc))
    return p

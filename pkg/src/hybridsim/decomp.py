"""Analog x digital factorisations of a tall subspace basis.

Every analog factor lives in ``S_{M,k}``: each entry has modulus exactly
``1/sqrt(M)``. The digital factor is unconstrained.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ula_response
from .matlin import as_complex, dft_matrix

__all__ = [
    "HybridFactorPair",
    "project_constant_modulus",
    "decompose_vector",
    "columnwise_decompose",
    "bcd_sd",
    "omp_decompose",
    "ula_dictionary",
    "design_truncated_dft",
    "truncated_dft_objective",
    "cached_truncated_dft",
    "BCD_MAX_ITER",
    "BCD_TOL",
    "COND_LIMIT",
]

BCD_MAX_ITER = 200
BCD_TOL = 1e-8
COND_LIMIT = 1e12


@dataclass
class HybridFactorPair:
    analog: np.ndarray
    digital: np.ndarray
    objective: float
    iterations: int = 0
    singular: bool = False
    history: list | None = None

    @property
    def product(self):
        return self.analog @ self.digital


def _objective(target, F, G):
    return float(np.linalg.norm(target - F @ G) ** 2)


def project_constant_modulus(X):
    """Nearest point of ``S_{M,k}`` to ``X``: keep the phases, set moduli to
    ``1/sqrt(M)``. Zero entries get phase 0."""
    X = as_complex(X)
    M = X.shape[0]
    mag = np.abs(X)
    phase = np.where(mag > 0, X / np.where(mag > 0, mag, 1.0), 1.0)
    phase = phase / np.abs(phase)
    return phase / np.sqrt(M)


def decompose_vector(gamma):
    """Globally optimal ``gamma ~ f g`` with ``f`` constant-modulus, ``g >= 0``.

    Returns
    -------
    f : ndarray (M,)
        ``exp(1j * angle(gamma)) / sqrt(M)``.
    g : float
        ``||gamma||_1 / sqrt(M)``.
    """
    gamma = np.asarray(gamma, dtype=complex).ravel()
    M = gamma.size
    f = project_constant_modulus(gamma[:, None])[:, 0]
    g = float(np.sum(np.abs(gamma)) / np.sqrt(M))
    return f, g


def columnwise_decompose(target):
    """Apply :func:`decompose_vector` to every column independently."""
    target = as_complex(target)
    M = target.shape[0]
    F = project_constant_modulus(target)
    G = np.diag(np.sum(np.abs(target), axis=0) / np.sqrt(M)).astype(complex)
    return HybridFactorPair(analog=F, digital=G, objective=_objective(target, F, G))


def bcd_sd(target, max_iter=BCD_MAX_ITER, tol=BCD_TOL, F0=None):
    """Block coordinate descent for ``min ||target - F G||_F^2``, ``F`` in S.

    Alternates the least-squares digital update
    ``G <- (F^H F)^-1 F^H target`` with the projected analog update
    ``F <- proj_S[target G^H (G G^H)^-1]``, starting from the column-wise
    decomposition unless ``F0`` is given. The lowest-objective pair seen is
    returned, so ``history`` (best objective after each step) never
    increases. Iteration stops once the best objective improves by less
    than ``tol``.

    If ``F^H F`` or ``G G^H`` becomes ill-conditioned (condition number
    above ``COND_LIMIT``) the best pair so far is returned with
    ``singular=True``.
    """
    target = as_complex(target)
    if F0 is None:
        init = columnwise_decompose(target)
        F = init.analog
        best = (init.objective, F, init.digital)
    else:
        F = project_constant_modulus(F0)
        best = (np.inf, F, None)
    history = []
    singular = False
    k = 0
    for k in range(1, max_iter + 1):
        FhF = F.conj().T @ F
        if np.linalg.cond(FhF) > COND_LIMIT:
            singular = True
            break
        G = np.linalg.solve(FhF, F.conj().T @ target)
        obj = _objective(target, F, G)
        prev = best[0]
        if obj < prev:
            best = (obj, F, G)
        history.append(best[0])
        if prev - obj < tol and np.isfinite(prev):
            break
        GGh = G @ G.conj().T
        if np.linalg.cond(GGh) > COND_LIMIT:
            singular = True
            break
        F = project_constant_modulus(np.linalg.solve(GGh.T, (target @ G.conj().T).T).T)
    obj, F, G = best
    if G is None:
        G = np.zeros((F.shape[1], target.shape[1]), dtype=complex)
        obj = _objective(target, F, G)
    return HybridFactorPair(
        analog=F, digital=G, objective=obj, iterations=k, singular=singular, history=history
    )


def ula_dictionary(M, size=256):
    """ULA responses on ``size`` angles evenly spaced over [-pi/2, pi/2)."""
    angles = -np.pi / 2 + np.pi * np.arange(size) / size
    return np.stack([ula_response(a, M) for a in angles], axis=1)


def omp_decompose(target, dictionary, r_atoms):
    """Greedy dictionary-based decomposition (spatially sparse precoding).

    Each step picks the atom with the largest residual correlation energy,
    then refits the digital factor by least squares on all picked atoms.
    Runs exactly ``r_atoms`` steps.
    """
    target = as_complex(target)
    D = as_complex(dictionary)
    picked = []
    resid = target.copy()
    G = np.zeros((0, target.shape[1]), dtype=complex)
    for _ in range(r_atoms):
        corr = np.sum(np.abs(D.conj().T @ resid) ** 2, axis=1)
        corr[picked] = -np.inf
        picked.append(int(np.argmax(corr)))
        F = D[:, picked]
        G, *_ = np.linalg.lstsq(F, target, rcond=None)
        resid = target - F @ G
        norm = np.linalg.norm(resid)
        if norm == 0.0:
            break
        resid = resid / norm
    F = D[:, picked]
    return HybridFactorPair(
        analog=F, digital=G, objective=_objective(target, F, G), iterations=len(picked)
    )


def truncated_dft_objective(D):
    M = D.shape[0]
    return float(np.linalg.norm(np.eye(M) / M - D @ D.conj().T) ** 2)


def design_truncated_dft(M, eta, steps=100_000, cooling=0.995, t0=None, rng=None, init=None):
    """Simulated annealing over entry phases for ``min ||I/M - D D^H||_F^2``.

    Moves perturb a single entry's phase; acceptance is Metropolis with
    geometric cooling. The best matrix visited is returned together with
    its objective. The default start is the first ``eta*M`` DFT columns.

    Returns
    -------
    D : ndarray (M, eta*M)
    objective : float
    """
    k = eta * M
    if not (0 < eta <= 1) or abs(k - round(k)) > 1e-9:
        raise ValueError(f"eta*M must be a positive integer <= M, got {k}")
    k = int(round(k))
    rng = np.random.default_rng() if rng is None else rng
    D = dft_matrix(M)[:, :k].copy() if init is None else project_constant_modulus(init)
    Gram = D @ D.conj().T
    target = np.eye(M) / M
    R = target - Gram
    obj = float(np.sum(np.abs(R) ** 2))
    best_D, best_obj = D.copy(), obj
    temp = t0 if t0 is not None else max(obj, 1e-12) * 1e-2
    for _ in range(steps):
        i = int(rng.integers(M))
        j = int(rng.integers(k))
        new = np.exp(1j * rng.uniform(-np.pi, np.pi)) / np.sqrt(M)
        delta = new - D[i, j]
        # Gram changes only in row i and column i
        col = D[:, j]
        dG_row = delta * col.conj()
        dG_row[i] = dG_row[i] + np.conj(delta) * col[i] + abs(delta) ** 2
        new_row = R[i, :] - dG_row
        new_row_obj = np.sum(np.abs(new_row) ** 2)
        old_row_obj = np.sum(np.abs(R[i, :]) ** 2)
        # row i and column i are conjugate mirrors; the (i, i) entry is shared
        change = 2 * (new_row_obj - old_row_obj) - (abs(new_row[i]) ** 2 - abs(R[i, i]) ** 2)
        if change <= 0 or rng.random() < math.exp(-change / temp):
            D[i, j] = new
            R[i, :] = new_row
            R[:, i] = new_row.conj()
            obj += change
            if obj < best_obj:
                best_obj, best_D = obj, D.copy()
        temp *= cooling
        if temp < 1e-300:
            temp = 1e-300
    return best_D, truncated_dft_objective(best_D)


def cached_truncated_dft(M, eta, seed, cache_dir, **anneal):
    """:func:`design_truncated_dft` with results stored as JSON keyed by (M, eta, seed)."""
    cache_dir = Path(cache_dir)
    path = cache_dir / f"dft_M{M}_eta{eta:g}_seed{seed}.json"
    if path.exists():
        obj = json.loads(path.read_text())
        D = np.asarray(obj["re"]) + 1j * np.asarray(obj["im"])
        return D, obj["objective"]
    D, value = design_truncated_dft(M, eta, rng=np.random.default_rng(seed), **anneal)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps({"M": M, "eta": eta, "seed": seed, "objective": value,
                    "re": D.real.tolist(), "im": D.imag.tolist()})
    )
    return D, value

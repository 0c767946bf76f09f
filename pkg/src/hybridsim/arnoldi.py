"""Subspace estimation by Arnoldi iteration through a matvec oracle.

The oracle returns an *estimate* of ``A q`` (for instance an echo over a
noisy reciprocal channel). Besides the Krylov basis and Hessenberg matrix,
this module computes the certificate quantities that relate the Ritz
values of the distorted process to those of ``Q^H A Q``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDepth
from .matlin import hessenberg_eig, qr_orthonormal

__all__ = [
    "ArnoldiState",
    "DistortionTranscript",
    "SubspaceEstimate",
    "ResidualCertificate",
    "random_unit_vector",
    "arnoldi_build",
    "ritz_extract",
    "distortion_transcript",
    "residual_certificate",
    "eig_perturbation_bound",
    "match_eigenvalues",
    "eigenvalue_gaps",
    "BREAKDOWN_TOL",
]

# relative residual norm at which the Krylov space is declared invariant
BREAKDOWN_TOL = 1e-12


@dataclass
class ArnoldiState:
    """Output of :func:`arnoldi_build`.

    ``Q`` has ``m + 1`` columns after a full run and ``m`` after a
    breakdown (no new direction exists). ``T`` is always ``(m+1) x m``;
    its last row holds the final residual norm. ``P`` keeps every raw
    oracle output so the distortion can be audited afterwards.
    """

    Q: np.ndarray
    T: np.ndarray
    P: np.ndarray
    m: int
    breakdown: bool = False
    breakdown_at: int | None = None

    @property
    def Qm(self):
        return self.Q[:, : self.m]

    @property
    def Tm(self):
        return self.T[: self.m, : self.m]

    @property
    def residual_norm(self):
        return float(self.T[self.m, self.m - 1].real)

    def orthogonality_error(self):
        G = self.Q.conj().T @ self.Q
        return float(np.linalg.norm(G - np.eye(G.shape[0])))

    def to_dict(self):
        def cplx(X):
            return {"re": np.real(X).tolist(), "im": np.imag(X).tolist()}

        return {
            "m": self.m,
            "breakdown": self.breakdown,
            "breakdown_at": self.breakdown_at,
            "Q": cplx(self.Q),
            "T": cplx(self.T),
            "P": cplx(self.P),
        }


@dataclass
class DistortionTranscript:
    """Per-iteration distortion ``w_l = p_l - A q_l`` and the derived blocks.

    ``W`` is ``M x m``. ``components`` optionally carries the protocol-side
    pieces (BS/MS decomposition errors, noise draws) keyed by name.
    """

    W: np.ndarray
    QhW: np.ndarray
    components: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.W.shape[1]

    @property
    def E_upper(self):
        return np.triu(self.QhW)

    @property
    def E_tilde(self):
        return np.tril(self.QhW, -1)

    def frobenius(self):
        return float(np.linalg.norm(self.W))

    def to_dict(self):
        return {
            "W": {"re": np.real(self.W).tolist(), "im": np.imag(self.W).tolist()},
            "components": {
                k: {"re": np.real(v).tolist(), "im": np.imag(v).tolist()}
                for k, v in self.components.items()
            },
        }


@dataclass
class SubspaceEstimate:
    basis: np.ndarray
    ritz_values: np.ndarray
    eigvals: np.ndarray
    state: ArnoldiState | None = None


def random_unit_vector(n, rng):
    """Uniform draw from the complex unit sphere in C^n."""
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


def arnoldi_build(oracle, m, q1, reorth=True):
    """Run ``m`` Arnoldi steps, calling ``oracle(q)`` for every matvec.

    Orthogonalisation is classical Gram-Schmidt, applied twice when
    ``reorth`` is set; the second-pass coefficients are folded into ``T``
    so that ``P = Q T`` still holds column by column. Stops early, without
    error, when the residual norm drops to ``BREAKDOWN_TOL * ||p_l||``.
    """
    q1 = np.asarray(q1, dtype=complex).ravel()
    if m < 1:
        raise ValueError("m must be >= 1")
    if abs(np.linalg.norm(q1) - 1.0) > 1e-12:
        raise ValueError("q1 must have unit norm")
    n = q1.size
    Q = np.zeros((n, m + 1), dtype=complex)
    T = np.zeros((m + 1, m), dtype=complex)
    P = np.zeros((n, m), dtype=complex)
    Q[:, 0] = q1
    for l in range(m):
        p = np.asarray(oracle(Q[:, l].copy()), dtype=complex).ravel()
        if p.shape != (n,):
            raise ValueError(f"oracle returned shape {p.shape}, expected ({n},)")
        P[:, l] = p
        basis = Q[:, : l + 1]
        coeff = basis.conj().T @ p
        r = p - basis @ coeff
        if reorth:
            extra = basis.conj().T @ r
            r = r - basis @ extra
            coeff = coeff + extra
        T[: l + 1, l] = coeff
        beta = np.linalg.norm(r)
        T[l + 1, l] = beta
        if beta <= BREAKDOWN_TOL * np.linalg.norm(p):
            return ArnoldiState(
                Q=Q[:, : l + 1], T=T[: l + 2, : l + 1], P=P[:, : l + 1],
                m=l + 1, breakdown=True, breakdown_at=l + 1,
            )
        Q[:, l + 1] = r / beta
    return ArnoldiState(Q=Q, T=T, P=P, m=m)


def ritz_extract(state, d):
    """Top-``d`` Ritz subspace and singular-value estimates from ``state``.

    The basis is ``qr(Q_m Theta_{1:d})`` where ``Theta`` holds the
    eigenvectors of the square block ``T_m`` for the ``d`` eigenvalues of
    largest magnitude; ``ritz_values = sqrt(|lambda|)``.
    """
    if state.m < d:
        raise InsufficientDepth(f"only {state.m} Arnoldi steps available, need {d}")
    vecs, lam = hessenberg_eig(state.Tm)
    basis = qr_orthonormal(state.Qm @ vecs[:, :d])
    return SubspaceEstimate(
        basis=basis,
        ritz_values=np.sqrt(np.abs(lam[:d])),
        eigvals=lam,
        state=state,
    )


def distortion_transcript(state, A, components=None):
    """Recover ``W = P - A Q_m`` given the exact operator ``A``."""
    W = state.P - A @ state.Qm
    return DistortionTranscript(W=W, QhW=state.Qm.conj().T @ W, components=components or {})


def exact_hessenberg(state, A):
    """The undistorted ``T~_m``: ``q_i^H A q_l`` on and above the diagonal,
    the residual norms on the subdiagonal, ``(m+1) x m``."""
    m = state.m
    Tt = np.zeros((m + 1, m), dtype=complex)
    Tt[:m, :m] = np.triu(state.Qm.conj().T @ A @ state.Qm)
    Tt[np.arange(1, m + 1), np.arange(m)] = state.T[np.arange(1, m + 1), np.arange(m)]
    return Tt


def projected_operator(state, A, transcript=None):
    """``C_m = T~_m - E~_m`` assembled from the transcript (equals ``Q^H A Q``)."""
    transcript = transcript or distortion_transcript(state, A)
    m = state.m
    return exact_hessenberg(state, A)[:m, :m] - transcript.E_tilde


@dataclass
class ResidualCertificate:
    """Per-eigenpair residuals of ``C_m`` lifted by ``Q_m`` and two bounds.

    ``rhs`` is the sum-of-squares bound; ``rhs_triangle`` adds the cross
    term back via the triangle inequality and is the one that holds
    unconditionally.
    """

    eigvals: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    rhs_triangle: np.ndarray
    holds: bool
    holds_triangle: bool


def residual_certificate(state, A, transcript=None, rtol=1e-6, atol=1e-10):
    """Residual bound for the eigenpairs of ``C_m`` lifted by ``Q_m``.

    For each eigenpair ``(lambda, s)`` of ``C_m`` and ``theta = Q_m s`` the
    residual splits exactly as
    ``A theta - lambda theta = t_{m+1,m} s_m q_{m+1} - (I - Q_m Q_m^H) W s``.
    Two bounds are reported::

        rhs          = c + ||I - Q_m Q_m^H||_F^2 ||W||_F^2
        rhs_triangle = (sqrt(c) + ||I - Q_m Q_m^H||_F ||W||_F)^2

    with ``c = (t_{m+1,m} |s_m|)^2``. ``rhs`` omits the cross term between
    the two pieces and can be exceeded when the distortion is small next to
    the Krylov residual; ``rhs_triangle`` cannot. ``holds*`` check
    ``lhs <= bound (1 + rtol) + atol ||A||_F^2``; the absolute floor only
    matters when both sides are at round-off level.
    """
    transcript = transcript or distortion_transcript(state, A)
    C = projected_operator(state, A, transcript)
    lam, S = np.linalg.eig(C)
    S = S / np.linalg.norm(S, axis=0, keepdims=True)
    Qm = state.Qm
    theta = Qm @ S
    lhs = np.linalg.norm(A @ theta - theta * lam[None, :], axis=0) ** 2
    proj_gap = np.linalg.norm(np.eye(Qm.shape[0]) - Qm @ Qm.conj().T) ** 2
    c = (state.residual_norm * np.abs(S[-1, :])) ** 2
    w_sq = transcript.frobenius() ** 2
    rhs = c + proj_gap * w_sq
    rhs_tri = (np.sqrt(c) + np.sqrt(proj_gap * w_sq)) ** 2
    floor = atol * np.linalg.norm(A) ** 2
    return ResidualCertificate(
        eigvals=lam, lhs=lhs, rhs=rhs, rhs_triangle=rhs_tri,
        holds=bool(np.all(lhs <= rhs * (1 + rtol) + floor)),
        holds_triangle=bool(np.all(lhs <= rhs_tri * (1 + rtol) + floor)),
    )


def eig_perturbation_bound(transcript, m=None):
    """Bauer-Fike radius ``sqrt(m) ||W_m||_F`` around the eigenvalues of ``C_m``."""
    m = transcript.m if m is None else m
    return float(np.sqrt(m) * np.linalg.norm(transcript.W[:, :m]))


def match_eigenvalues(a, b):
    """Greedy minimal-distance one-to-one pairing of two eigenvalue lists.

    Returns the gaps ``|a_i - b_j|`` of the chosen pairs, in the order of ``a``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    dist = np.abs(a[:, None] - b[None, :])
    gaps = np.full(a.size, np.nan)
    free_a = np.ones(a.size, bool)
    free_b = np.ones(b.size, bool)
    for _ in range(min(a.size, b.size)):
        masked = np.where(free_a[:, None] & free_b[None, :], dist, np.inf)
        i, j = np.unravel_index(np.argmin(masked), masked.shape)
        gaps[i] = dist[i, j]
        free_a[i] = free_b[j] = False
    return gaps


def eigenvalue_gaps(state, A, transcript=None):
    """Matched gaps between eigenvalues of ``T_m`` and of ``C_m``."""
    C = projected_operator(state, A, transcript)
    lam_T = np.linalg.eigvals(state.Tm)
    lam_C = np.linalg.eigvals(C)
    return match_eigenvalues(lam_T, lam_C)

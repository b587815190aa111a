"""Deterministic linear-algebra substrate.

Dense symmetric matrices, their singular value decompositions, top-r
projectors, the two coherence notions, spectral gaps, subspace closeness,
and the adjacency distance used for privacy sensitivity analysis.

All values are immutable after construction and every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import InputError, RankError

__all__ = [
    "SymMatrix",
    "SpectralDecomposition",
    "Projector",
    "svd_full",
    "top_r_projector",
    "coherence_r",
    "coherence_r_rect",
    "basic_coherence",
    "spectral_gap",
    "subspace_closeness",
    "adjacency_distance",
    "symmetrize_embed",
    "wedin_bound_check",
    "threshold_rank",
]


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputError("matrix entries must be finite")
    return arr


@dataclass(frozen=True)
class SymMatrix:
    """Dense real symmetric matrix; symmetry is exact, not approximate."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.values)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InputError(f"expected a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise InputError("matrix dimension must be at least 1")
        if not np.array_equal(arr, arr.T):
            raise InputError("matrix is not exactly symmetric; use SymMatrix.from_array(..., symmetrize=True)")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_array(cls, values, symmetrize: bool = False) -> "SymMatrix":
        arr = _as_float_array(values)
        if symmetrize:
            arr = (arr + arr.T) / 2.0
        return cls(arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))


def as_sym(M) -> SymMatrix:
    """Coerce an array-like to SymMatrix, requiring exact symmetry."""
    if isinstance(M, SymMatrix):
        return M
    return SymMatrix(_as_float_array(M))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ordered SVD of a symmetric matrix.

    For symmetric M the right singular vectors satisfy v_i = signs[i] * u_i,
    so only the left vectors and the sign pattern are stored.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    signs: np.ndarray

    @property
    def n(self) -> int:
        return self.left_vectors.shape[0]

    def numerical_rank(self, tol: Tolerances = DEFAULT_TOL) -> int:
        s = self.singular_values
        if s[0] <= 0.0:
            return 0
        return int(np.count_nonzero(s > tol.rank_rtol * s[0]))

    def reconstruct(self) -> np.ndarray:
        lam = self.singular_values * self.signs
        return (self.left_vectors * lam) @ self.left_vectors.T

    def truncate(self, r: int) -> np.ndarray:
        """Best rank-r approximation (truncated decomposition)."""
        lam = self.singular_values[:r] * self.signs[:r]
        U = self.left_vectors[:, :r]
        return (U * lam) @ U.T


def _canonical_signs(U: np.ndarray) -> np.ndarray:
    """Flip columns so the first non-negligible coordinate is positive."""
    U = U.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        big = np.abs(col) > 1e-9 * np.max(np.abs(col))
        lead = int(np.argmax(big))
        if col[lead] < 0:
            U[:, j] = -col
    return U


def svd_full(M: SymMatrix, tol: Tolerances = DEFAULT_TOL) -> SpectralDecomposition:
    """Full SVD of a symmetric matrix via its eigendecomposition.

    Deterministic for a fixed input: singular values sorted non-increasing
    (stable order under ties) and each left vector's first nonzero
    coordinate made positive.
    """
    M = as_sym(M)
    lam, V = np.linalg.eigh(M.values)
    order = np.argsort(-np.abs(lam), kind="stable")
    lam = lam[order]
    U = _canonical_signs(V[:, order])
    sigma = np.abs(lam)
    signs = np.where(lam < 0.0, -1.0, 1.0)
    dec = SpectralDecomposition(singular_values=sigma, left_vectors=U, signs=signs)
    _validate_decomposition(M, dec, tol)
    for arr in (dec.singular_values, dec.left_vectors, dec.signs):
        arr.setflags(write=False)
    return dec


def _validate_decomposition(M: SymMatrix, dec: SpectralDecomposition, tol: Tolerances):
    n = M.n
    gram = dec.left_vectors.T @ dec.left_vectors
    if np.max(np.abs(gram - np.eye(n))) > tol.orth_tol:
        raise InputError("singular vectors lost orthonormality beyond tolerance")
    ref = max(M.frobenius_norm(), np.finfo(float).tiny)
    if np.linalg.norm(dec.reconstruct() - M.values) > tol.recon_rtol * ref:
        raise InputError("decomposition does not reconstruct the input within tolerance")


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector stored through an orthonormal basis."""

    basis: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        B = _as_float_array(self.basis)
        if B.ndim != 2:
            raise InputError("projector basis must be a 2-d array")
        gram = B.T @ B
        if np.max(np.abs(gram - np.eye(B.shape[1]))) > self.tol.projector_tol:
            raise InputError("projector basis is not orthonormal within tolerance")
        B = np.ascontiguousarray(B)
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ X)


def top_r_projector(dec: SpectralDecomposition, r: int) -> Projector:
    """Projector onto the span of the top-r left singular vectors.

    Under a degenerate gap (sigma_r == sigma_{r+1}) the selection follows
    the deterministic decomposition order; callers who care must check the
    gap themselves.
    """
    if not 1 <= r <= dec.n:
        raise InputError(f"rank r={r} outside [1, {dec.n}]")
    return Projector(basis=dec.left_vectors[:, :r])


def coherence_r(M: SymMatrix, r: int, dec: SpectralDecomposition | None = None,
                tol: Tolerances = DEFAULT_TOL) -> float:
    """Rank-r coherence (n/r) * max_i P_ii of the top-r projector.

    The largest absolute entry of an orthogonal projector sits on the
    diagonal, so the diagonal maximum equals the max-entry form.
    """
    M = as_sym(M)
    if dec is None:
        dec = svd_full(M, tol)
    rank = dec.numerical_rank(tol)
    if not 1 <= r <= rank:
        raise RankError(f"r={r} exceeds numerical rank {rank}")
    U = dec.left_vectors[:, :r]
    diag = np.sum(U * U, axis=1)
    return float(M.n / r * np.max(diag))


def coherence_r_rect(B: np.ndarray, r: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """Rank-r coherence of a rectangular matrix: the larger of the left and
    right projector terms, each weighted by its own dimension."""
    B = _as_float_array(B)
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    if s[0] <= 0.0 or r > np.count_nonzero(s > tol.rank_rtol * s[0]):
        raise RankError(f"r={r} exceeds numerical rank")
    n, m = B.shape
    left = n / r * np.max(np.sum(U[:, :r] ** 2, axis=1))
    right = m / r * np.max(np.sum(Vt[:r, :] ** 2, axis=0))
    return float(max(left, right))


def basic_coherence(M: SymMatrix, dec: SpectralDecomposition | None = None,
                    tol: Tolerances = DEFAULT_TOL) -> float:
    """Basic coherence: n * max over singular vectors of the squared largest
    entry. Vectors with sigma_i <= rank_rtol * sigma_1 are excluded.

    Under repeated singular values the value depends on the eigenbasis the
    decomposition returns; it is reported for our deterministic choice.
    """
    M = as_sym(M)
    if dec is None:
        dec = svd_full(M, tol)
    rank = dec.numerical_rank(tol)
    if rank == 0:
        raise RankError("zero matrix has no singular vectors above the rank threshold")
    U = dec.left_vectors[:, :rank]
    return float(M.n * np.max(np.abs(U)) ** 2)


def spectral_gap(dec: SpectralDecomposition, r: int) -> float:
    """sigma_r - sigma_{r+1}; for r == n this is sigma_n."""
    if not 1 <= r <= dec.n:
        raise InputError(f"rank r={r} outside [1, {dec.n}]")
    s = dec.singular_values
    if r == dec.n:
        return float(s[-1])
    return float(s[r - 1] - s[r])


def subspace_closeness(p_hat: Projector, U: np.ndarray) -> float:
    """Spectral norm of (I - P_hat) U for an orthonormal basis U.

    Equals the sine of the largest principal angle when dimensions match;
    basis-independent for a fixed subspace.
    """
    U = _as_float_array(U)
    if U.ndim == 1:
        U = U[:, None]
    if p_hat.rank < U.shape[1]:
        raise InputError("projector rank is below the dimension of the reference subspace")
    resid = U - p_hat.apply(U)
    val = float(np.linalg.norm(resid, ord=2))
    return min(max(val, 0.0), 1.0)


def adjacency_distance(A: SymMatrix, B: SymMatrix) -> float:
    """sqrt of the entrywise l1 norm of EE^T with E = B - A.

    This is the adjacency scale: it is sandwiched between |E|_F and the
    entrywise l1 norm of E.
    """
    A, B = as_sym(A), as_sym(B)
    if A.n != B.n:
        raise InputError("adjacency distance needs matrices of equal size")
    E = B.values - A.values
    return float(np.sqrt(np.sum(np.abs(E @ E.T))))


def symmetrize_embed(B) -> SymMatrix:
    """Embed an m x n rectangular matrix as [[0, B], [B^T, 0]].

    Each singular value of B appears in the embedding with multiplicity two.
    """
    B = _as_float_array(B)
    if B.ndim != 2:
        raise InputError("expected a 2-d array")
    m, n = B.shape
    out = np.zeros((m + n, m + n))
    out[:m, m:] = B
    out[m:, :m] = B.T
    return SymMatrix(out)


@dataclass(frozen=True)
class WedinReport:
    lhs: float
    rhs: float
    gap: float
    perturbation: float
    holds: bool
    gap_condition: bool


def wedin_bound_check(M: SymMatrix, M_prime: SymMatrix, r: int,
                      tol: Tolerances = DEFAULT_TOL) -> WedinReport:
    """Both sides of |P - P'|_F <= 4 |E U|_F / (sigma_r - sigma_{r+1}).

    Test-only oracle for the projector sensitivity chain; `gap_condition`
    records whether the hypothesis gap > 2*Delta held.
    """
    M, M_prime = as_sym(M), as_sym(M_prime)
    dec = svd_full(M, tol)
    dec_p = svd_full(M_prime, tol)
    gap = spectral_gap(dec, r)
    E = M_prime.values - M.values
    U = dec.left_vectors[:, :r]
    lhs = float(np.linalg.norm(top_r_projector(dec, r).matrix()
                               - top_r_projector(dec_p, r).matrix()))
    rhs = float(4.0 * np.linalg.norm(E @ U) / gap) if gap > 0 else float("inf")
    delta = float(np.sqrt(np.sum(np.abs(E @ E.T))))
    return WedinReport(
        lhs=lhs,
        rhs=rhs,
        gap=gap,
        perturbation=delta,
        holds=bool(lhs <= rhs + 1e-12),
        gap_condition=bool(gap > 2 * delta),
    )


def threshold_rank(M, tau: float) -> int:
    """Number of singular values of M at least tau."""
    if isinstance(M, SymMatrix):
        s = svd_full(M).singular_values
    else:
        s = np.linalg.svd(_as_float_array(M), compute_uv=False)
    return int(np.count_nonzero(s >= tau))


def best_rank_r(M: SymMatrix, r: int, tol: Tolerances = DEFAULT_TOL) -> SymMatrix:
    """Deterministic best rank-r approximation U_r (U_r^T M U_r) U_r^T.

    Computed through the compressed core so the noise-free private pipeline
    reproduces it bit for bit.
    """
    M = as_sym(M)
    dec = svd_full(M, tol)
    U = dec.left_vectors[:, :r]
    core = U.T @ M.values @ U
    core = (core + core.T) / 2.0
    return SymMatrix.from_array(U @ core @ U.T, symmetrize=True)

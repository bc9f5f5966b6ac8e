"""Dense-matrix primitives: truncated SVD, projections, orthonormalization,
and numerical rank.

Conventions used throughout the package:

- A data matrix is a 2-D float ndarray with finite entries.
- An orthonormal basis is a 2-D ndarray of shape (ambient_dim, n_vectors)
  whose columns are orthonormal; ``n_vectors = 0`` is a legal empty basis
  spanning the zero subspace.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, ParameterError

# Orthonormality and rank tolerances are shared by every consumer so that
# "is a basis" means the same thing package-wide.
ORTHONORMALITY_TOL = 1e-10
RANK_REL_TOL = 1e-10
SV_TIE_REL_TOL = 1e-10
GRAM_SCHMIDT_DROP_TOL = 1e-10


def as_matrix(x, name: str = "x") -> np.ndarray:
    """Coerce ``x`` to a 2-D float array and validate it is finite and
    non-empty."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and one column, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains non-finite entries")
    return arr


def empty_basis(ambient_dim: int) -> np.ndarray:
    """The empty orthonormal basis of the zero subspace of R^ambient_dim."""
    if ambient_dim < 1:
        raise ParameterError(f"ambient_dim must be positive, got {ambient_dim}")
    return np.zeros((ambient_dim, 0))


def check_basis(b, ambient_dim: int | None = None, name: str = "basis") -> np.ndarray:
    """Validate that ``b`` has orthonormal columns (within 1e-10 elementwise)
    and, if given, the expected ambient dimension. Returns the array."""
    arr = np.asarray(b, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains non-finite entries")
    dim, k = arr.shape
    if ambient_dim is not None and dim != ambient_dim:
        raise ParameterError(f"{name} ambient dimension {dim} does not match expected {ambient_dim}")
    if k > dim:
        raise ParameterError(f"{name} has more vectors ({k}) than ambient dimensions ({dim})")
    if k > 0:
        gram = arr.T @ arr
        if np.max(np.abs(gram - np.eye(k))) > ORTHONORMALITY_TOL:
            raise ParameterError(f"{name} columns are not orthonormal within {ORTHONORMALITY_TOL}")
    return arr


@dataclass(frozen=True)
class SvdResult:
    """Top-k singular triplets of a matrix.

    Attributes
    ----------
    u : (n, k) ndarray
        Left singular vectors, orthonormal columns.
    s : (k,) ndarray
        Singular values, non-increasing and non-negative.
    v : (p, k) ndarray
        Right singular vectors, orthonormal columns.
    tied : bool
        True when the retained k-th and discarded (k+1)-th singular values
        coincide within 1e-10 relative; the truncation is then non-unique.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    tied: bool = False

    def reconstruct(self) -> np.ndarray:
        """The rank-k matrix u @ diag(s) @ v.T."""
        return self.u @ (self.s[:, None] * self.v.T)


def truncated_svd(x, k: int) -> SvdResult:
    """Rank-k singular value decomposition of a dense matrix.

    Signs are fixed so that each left singular vector's largest-magnitude
    entry is positive, making the output deterministic for a fixed backend.

    Parameters
    ----------
    x : (n, p) array_like
        Matrix to decompose; entries must be finite.
    k : int
        Number of singular triplets to retain, 1 <= k <= min(n, p).
    """
    arr = as_matrix(x)
    m = min(arr.shape)
    if not 1 <= k <= m:
        raise ParameterError(f"k must satisfy 1 <= k <= {m}, got {k}")
    u, s, vh = np.linalg.svd(arr, full_matrices=False)
    tied = False
    if k < s.size:
        scale = s[0] if s[0] > 0 else 1.0
        tied = (s[k - 1] - s[k]) < SV_TIE_REL_TOL * scale
    u = u[:, :k].copy()
    v = vh[:k].T.copy()
    lead = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[lead, np.arange(k)])
    signs[signs == 0] = 1.0
    u *= signs
    v *= signs
    return SvdResult(u=u, s=s[:k].copy(), v=v, tied=tied)


def project_onto(basis, x, side: str = "columns") -> np.ndarray:
    """Orthogonal projection of a matrix onto the span of a basis.

    ``side="columns"`` projects the columns of ``x`` (returns B B^T x),
    ``side="rows"`` projects the rows (returns x B B^T). An empty basis
    projects onto the zero subspace and returns a zero matrix.
    """
    arr = as_matrix(x)
    if side == "columns":
        b = check_basis(basis, ambient_dim=arr.shape[0])
        if b.shape[1] == 0:
            return np.zeros_like(arr)
        return b @ (b.T @ arr)
    if side == "rows":
        b = check_basis(basis, ambient_dim=arr.shape[1])
        if b.shape[1] == 0:
            return np.zeros_like(arr)
        return (arr @ b) @ b.T
    raise ParameterError(f"side must be 'columns' or 'rows', got {side!r}")


def orthonormalize_columns(vectors) -> tuple[np.ndarray, list[int]]:
    """Gram-Schmidt with one reorthogonalization pass.

    Columns whose residual norm falls below 1e-10 times the largest input
    column norm are dropped rather than normalized, so rank-deficient input
    shrinks the basis instead of failing.

    Returns
    -------
    (q, dropped)
        ``q`` spans the same subspace as the input; ``dropped`` lists the
        indices of the input columns that were discarded.
    """
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"vectors must be 2-D, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise InputError("vectors contain non-finite entries")
    n, m = arr.shape
    if m == 0:
        return np.zeros((n, 0)), []
    scale = float(np.max(np.linalg.norm(arr, axis=0)))
    if scale == 0.0:
        return np.zeros((n, 0)), list(range(m))
    tol = GRAM_SCHMIDT_DROP_TOL * scale
    kept: list[np.ndarray] = []
    dropped: list[int] = []
    for j in range(m):
        w = arr[:, j].copy()
        # Two projection passes keep Q^T Q = I down to roundoff even for
        # poorly conditioned input ("twice is enough").
        for _ in range(2):
            for q in kept:
                w -= (q @ w) * q
        r = float(np.linalg.norm(w))
        if r < tol:
            dropped.append(j)
        else:
            kept.append(w / r)
    q = np.column_stack(kept) if kept else np.zeros((n, 0))
    return q, dropped


def gram_schmidt(vectors) -> np.ndarray:
    """Orthonormal basis for the column span of ``vectors``.

    Near-dependent columns are dropped (never an error); all-zero input
    yields the empty basis.
    """
    q, _ = orthonormalize_columns(vectors)
    return q


def numerical_rank(x, rel_tol: float = RANK_REL_TOL) -> int:
    """Number of singular values exceeding ``rel_tol`` times the largest.

    The zero matrix has rank 0.
    """
    if rel_tol <= 0:
        raise ParameterError(f"rel_tol must be positive, got {rel_tol}")
    arr = as_matrix(x)
    s = np.linalg.svd(arr, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))

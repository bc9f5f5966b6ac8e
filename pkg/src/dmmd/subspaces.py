"""Principal angles between subspaces and joint-basis construction.

The joint column (or row) structure shared by two views is estimated from
the principal angles between their leading singular subspaces: small angles
indicate shared directions, and the paired principal vectors of those
directions are averaged and orthonormalized to form the joint basis. For
more than two views the joint basis is instead taken from the leading left
singular vectors of the concatenated views.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneracyError, ParameterError
from .linalg import (
    as_matrix,
    check_basis,
    empty_basis,
    orthonormalize_columns,
    truncated_svd,
)
from .rank_selection import estimate_joint_rank


@dataclass(frozen=True)
class PrincipalAngleSet:
    """Principal angles and paired principal vectors of two subspaces.

    ``angles`` are non-decreasing in [0, pi/2]; ``cosines`` are the matching
    singular values of U^T V. Column i of ``left_vectors`` pairs with column
    i of ``right_vectors`` and their inner product equals ``cosines[i]``.
    """

    angles: np.ndarray
    cosines: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray


def principal_angles(u, v) -> PrincipalAngleSet:
    """Principal angles between the column spans of two orthonormal bases.

    Cosines come from the SVD of U^T V. Because the cosine saturates near 1,
    each angle is recovered from the (sine, cosine) pair via arctan2, where
    the sine is the residual norm of the right principal vector outside
    span(U); this keeps tiny angles accurate to machine precision.

    Parameters
    ----------
    u, v : (n, h1), (n, h2) array_like
        Non-empty orthonormal bases of the same ambient space.
    """
    ub = check_basis(u, name="u")
    vb = check_basis(v, ambient_dim=ub.shape[0], name="v")
    if ub.shape[1] == 0 or vb.shape[1] == 0:
        raise ParameterError("principal angles require non-empty bases")
    h = min(ub.shape[1], vb.shape[1])
    tu, ts, tvh = np.linalg.svd(ub.T @ vb)
    cosines = np.clip(ts[:h], 0.0, 1.0)
    left = ub @ tu[:, :h]
    right = vb @ tvh[:h].T
    # Deterministic signs: flip each pair so the left vector's largest entry
    # is positive; flipping both sides preserves left_i^T right_i = cos_i.
    lead = np.argmax(np.abs(left), axis=0)
    signs = np.sign(left[lead, np.arange(h)])
    signs[signs == 0] = 1.0
    left = left * signs
    right = right * signs
    resid = right - ub @ (ub.T @ right)
    sines = np.clip(np.linalg.norm(resid, axis=0), 0.0, 1.0)
    angles = np.arctan2(sines, cosines)
    order = np.argsort(angles, kind="stable")
    return PrincipalAngleSet(
        angles=angles[order],
        cosines=cosines[order],
        left_vectors=left[:, order],
        right_vectors=right[:, order],
    )


def estimate_joint_basis(
    z1,
    z2,
    r1: int,
    r2: int,
    direction: str = "column",
    override_rank: int | None = None,
) -> tuple[np.ndarray, int]:
    """Joint column- or row-space basis shared by two matched views.

    The rank-r_k left (column direction) or right (row direction) singular
    bases of the two views are compared through their principal angles; the
    joint rank is taken from the profile-likelihood angle split unless
    overridden. The paired principal vectors of the smallest angles are
    averaged elementwise with weight 1/2 and orthonormalized.

    Returns
    -------
    (basis, joint_rank)
        ``basis`` is empty when the joint rank is 0.

    Raises
    ------
    DegeneracyError
        If orthonormalization drops an averaged vector (the averaged
        directions were dependent).
    """
    a1 = as_matrix(z1, "z1")
    a2 = as_matrix(z2, "z2")
    if a1.shape != a2.shape:
        raise ParameterError(f"views must share a shape, got {a1.shape} and {a2.shape}")
    if not np.any(a1) or not np.any(a2):
        raise ParameterError("views must be nonzero")
    for name, r in (("r1", r1), ("r2", r2)):
        if not 1 <= r <= min(a1.shape):
            raise ParameterError(f"{name} must lie in [1, {min(a1.shape)}], got {r}")
    if override_rank is not None and not 0 <= override_rank <= min(r1, r2):
        raise ParameterError(f"override_rank must lie in [0, min(r1, r2)], got {override_rank}")
    if direction == "column":
        b1 = truncated_svd(a1, r1).u
        b2 = truncated_svd(a2, r2).u
    elif direction == "row":
        b1 = truncated_svd(a1, r1).v
        b2 = truncated_svd(a2, r2).v
    else:
        raise ParameterError(f"direction must be 'column' or 'row', got {direction!r}")
    pa = principal_angles(b1, b2)
    if override_rank is not None:
        r_joint = override_rank
    else:
        r_joint = estimate_joint_rank(pa.angles)
    if r_joint == 0:
        return empty_basis(b1.shape[0]), 0
    averaged = 0.5 * (pa.left_vectors[:, :r_joint] + pa.right_vectors[:, :r_joint])
    basis, dropped = orthonormalize_columns(averaged)
    if dropped:
        raise DegeneracyError(
            f"averaged principal vectors are dependent; orthonormalization dropped column {dropped[0]}"
        )
    return basis, r_joint


def sum_pca_joint_basis(views, r_joint: int, direction: str = "column") -> np.ndarray:
    """Joint basis for two or more views from the SVD of their concatenation.

    In the column direction this is the orthonormal M minimizing
    sum_k ||X_k - M M^T X_k||_F^2: the leading left singular vectors of
    [X_1, ..., X_K]. The row direction applies the same construction to the
    transposed views.
    """
    mats = [as_matrix(v, f"views[{i}]") for i, v in enumerate(views)]
    if len(mats) < 2:
        raise ParameterError(f"need at least two views, got {len(mats)}")
    if direction == "column":
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise ParameterError(f"views must share the row dimension, got {sorted(dims)}")
        concat = np.hstack(mats)
    elif direction == "row":
        dims = {m.shape[1] for m in mats}
        if len(dims) != 1:
            raise ParameterError(f"views must share the column dimension, got {sorted(dims)}")
        concat = np.hstack([m.T for m in mats])
    else:
        raise ParameterError(f"direction must be 'column' or 'row', got {direction!r}")
    if not 1 <= r_joint <= min(concat.shape):
        raise ParameterError(f"r_joint must lie in [1, {min(concat.shape)}], got {r_joint}")
    return truncated_svd(concat, r_joint).u

"""Profile-likelihood split of a sorted value sequence into two groups.

The same two-Gaussian, common-variance split drives both total-rank
selection (on the singular values of an observed matrix) and joint-rank
selection (on principal angles between estimated subspaces, padded with the
artificial endpoints 0 and pi/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, ParameterError
from .linalg import as_matrix

# Floor on the pooled variance estimate: a constant group would otherwise
# send the Gaussian log-likelihood to +inf and make degenerate splits
# ill-defined. The floor never changes the maximizer of a non-degenerate
# split.
VARIANCE_FLOOR_COEFF = 1e-12
VARIANCE_FLOOR_ABS = 1e-300
# A split whose log-likelihood curve is nearly constant across cut points
# carries little evidence; results are flagged rather than rejected.
FLATNESS_REL_TOL = 1e-6


@dataclass(frozen=True)
class PlSplit:
    """Maximum-likelihood two-group split of a sorted sequence.

    ``q_hat`` is the 1-based size of the first group; both groups are always
    non-empty. ``sigma2`` is the pooled (floored) variance at the maximizer,
    and ``low_confidence`` is set when the log-likelihood curve is flat
    across all candidate cuts.
    """

    q_hat: int
    mu1: float
    mu2: float
    sigma2: float
    loglik: float
    low_confidence: bool


def _split_candidates(values: np.ndarray):
    """Log-likelihood of every prefix/suffix split of ``values``.

    For a cut q, group 1 is values[:q] and group 2 is values[q:]; both
    groups get their own mean and share one pooled variance
    sigma2 = [(q-1)s1^2 + (m-q-1)s2^2] / m, with a singleton group's sample
    variance taken as zero. Returns arrays indexed by q-1 for q = 1..m-1.
    """
    m = values.size
    q = np.arange(1, m)
    csum = np.cumsum(values)
    csum2 = np.cumsum(values**2)
    n1 = q.astype(float)
    n2 = float(m) - n1
    mu1 = csum[q - 1] / n1
    mu2 = (csum[-1] - csum[q - 1]) / n2
    ss1 = np.maximum(csum2[q - 1] - n1 * mu1**2, 0.0)
    ss2 = np.maximum((csum2[-1] - csum2[q - 1]) - n2 * mu2**2, 0.0)
    sigma2 = (ss1 + ss2) / m
    spread = float(values.max() - values.min())
    floor = VARIANCE_FLOOR_COEFF * spread**2 + VARIANCE_FLOOR_ABS
    sigma2 = np.maximum(sigma2, floor)
    loglik = -0.5 * m * np.log(2.0 * np.pi * sigma2) - (ss1 + ss2) / (2.0 * sigma2)
    return q, mu1, mu2, sigma2, loglik


def _pl_split(values: np.ndarray) -> PlSplit:
    q, mu1, mu2, sigma2, loglik = _split_candidates(values)
    best = int(np.argmax(loglik))  # first maximum = smallest q on ties
    med = float(np.median(loglik))
    flat = float(np.max(loglik)) - med < FLATNESS_REL_TOL * abs(med)
    return PlSplit(
        q_hat=int(q[best]),
        mu1=float(mu1[best]),
        mu2=float(mu2[best]),
        sigma2=float(sigma2[best]),
        loglik=float(loglik[best]),
        low_confidence=bool(flat),
    )


def profile_likelihood_split(values) -> PlSplit:
    """Split a non-increasing sequence into a leading and trailing group by
    maximizing the two-Gaussian profile likelihood over the cut index.

    Parameters
    ----------
    values : array_like
        Finite reals sorted non-increasing, length >= 2.

    Returns
    -------
    PlSplit
        The maximizing cut; ties go to the smallest q.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"values must be 1-D, got ndim={arr.ndim}")
    if arr.size < 2:
        raise ParameterError(f"need at least 2 values to split, got {arr.size}")
    if not np.isfinite(arr).all():
        raise InputError("values contain non-finite entries")
    if np.any(np.diff(arr) > 0):
        raise InputError("values must be sorted non-increasing")
    return _pl_split(arr)


def estimate_total_rank(x, return_split: bool = False):
    """Estimated signal rank of a noisy matrix: the profile-likelihood cut
    of its full singular value spectrum.

    The result always lies in [1, min(n, p) - 1]. With ``return_split`` the
    PlSplit (including the flatness flag) is returned alongside the rank.
    """
    arr = as_matrix(x)
    if min(arr.shape) < 2:
        raise ParameterError("matrix must have at least 2 rows and 2 columns worth of singular values")
    s = np.linalg.svd(arr, compute_uv=False)
    split = _pl_split(s)
    if return_split:
        return split.q_hat, split
    return split.q_hat


def estimate_joint_rank(angles, return_split: bool = False):
    """Joint rank from principal angles between two estimated subspaces.

    The sorted angles are padded with artificial endpoints 0 and pi/2 so
    that empty and full overlap are reachable, then split into a small-angle
    and a large-angle group by profile likelihood; the joint rank is the
    small-angle group size minus the artificial zero.

    Parameters
    ----------
    angles : array_like
        Principal angles in radians, within [0, pi/2], sorted non-decreasing.
    """
    arr = np.asarray(angles, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"angles must be 1-D, got ndim={arr.ndim}")
    if arr.size < 1:
        raise ParameterError("need at least one angle")
    if not np.isfinite(arr).all():
        raise InputError("angles contain non-finite entries")
    if np.any(arr < 0.0) or np.any(arr > np.pi / 2 + 1e-12):
        raise InputError("angles must lie in [0, pi/2]")
    if np.any(np.diff(arr) < 0):
        raise InputError("angles must be sorted non-decreasing")
    augmented = np.concatenate(([0.0], arr, [np.pi / 2]))
    split = _pl_split(augmented)
    rank = min(max(split.q_hat - 1, 0), arr.size)
    if return_split:
        return rank, split
    return rank

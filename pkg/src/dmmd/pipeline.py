"""End-to-end decomposition of a double-matched pair of views.

The flow has three steps: (1) estimate each view's total signal rank and
form rank-truncated proxy signals, (2) estimate the shared joint column and
row bases from principal angles between the proxies' subspaces, (3) fit
both signals under those bases with the constrained alternating solver and
split them into joint/individual parts. Every rank can be overridden, and
the refinement variant re-optimizes the joint bases as it fits.

Also here: reporting helpers (variance explained, anchor-normalized basis
vectors) and the double standardization preprocessing that makes the
decomposition mean- and scale-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneracyError, ParameterError
from .iterative import DmmdIConfig, solve_dmmd_i
from .linalg import as_matrix, check_basis, truncated_svd
from .rank_selection import estimate_joint_rank, estimate_total_rank
from .solver import (
    DmmdDecomposition,
    RankProfile,
    SolverConfig,
    extract_parts,
    solve_dmmd_signals,
)
from .subspaces import estimate_joint_basis, principal_angles

VARIANCE_PARTS = ("joint_col", "individual_col", "joint_row", "individual_row", "total_signal")


@dataclass(frozen=True)
class DmmdResult:
    """Decomposition plus everything needed to audit it: the rank profile
    with per-rank provenance, principal-angle spectra in both directions,
    low-confidence flags from the rank splits, solver warnings, and (for
    the iterative variant) the outer objective trace."""

    decomposition: DmmdDecomposition
    ranks: RankProfile
    rank_sources: dict
    angles_col: np.ndarray
    angles_row: np.ndarray
    low_confidence: dict
    warnings: list
    variant: str
    outer_objective_trace: list | None = None


def dmmd(
    x1,
    x2,
    r1: int | None = None,
    r2: int | None = None,
    rc: int | None = None,
    rr: int | None = None,
    variant: str = "plain",
    solver_config: SolverConfig | None = None,
    iterative_config: DmmdIConfig | None = None,
) -> DmmdResult:
    """Decompose two double-matched views into joint and individual signals.

    Parameters
    ----------
    x1, x2 : (n, p) array_like
        The two views, matched in both rows and columns.
    r1, r2, rc, rr : int, optional
        Rank overrides; anything left as None is estimated (total ranks by
        the profile-likelihood split of the singular values, joint ranks by
        the split of the principal angles).
    variant : {"plain", "iterative"}
        "plain" keeps the estimated joint bases fixed; "iterative" also
        refines them against the summed objective.

    Returns
    -------
    DmmdResult

    Raises
    ------
    ParameterError
        On inconsistent overrides (for example rc > min(r1, r2)).
    """
    a1 = as_matrix(x1, "x1")
    a2 = as_matrix(x2, "x2")
    if a1.shape != a2.shape:
        raise ParameterError(f"views must share a shape, got {a1.shape} and {a2.shape}")
    if variant not in ("plain", "iterative"):
        raise ParameterError(f"variant must be 'plain' or 'iterative', got {variant!r}")
    n, p = a1.shape
    cap = min(n, p)
    for name, value in (("r1", r1), ("r2", r2)):
        if value is not None and not 1 <= value <= cap:
            raise ParameterError(f"{name} must lie in [1, {cap}], got {value}")
    for name, value in (("rc", rc), ("rr", rr)):
        if value is not None and value < 0:
            raise ParameterError(f"{name} must be >= 0, got {value}")
    if rc is not None and r1 is not None and r2 is not None and rc > min(r1, r2):
        raise ParameterError("r_c exceeds min(r1,r2)")
    if rr is not None and r1 is not None and r2 is not None and rr > min(r1, r2):
        raise ParameterError("r_r exceeds min(r1,r2)")

    sources = {}
    flags = {}

    def total_rank(x, override, name):
        if override is not None:
            sources[name] = "override"
            return override
        est, split = estimate_total_rank(x, return_split=True)
        sources[name] = "estimated"
        flags[name] = split.low_confidence
        return est

    r1_ = total_rank(a1, r1, "r1")
    r2_ = total_rank(a2, r2, "r2")

    z1 = truncated_svd(a1, r1_).reconstruct()
    z2 = truncated_svd(a2, r2_).reconstruct()

    def joint_rank(direction, override, name):
        b1 = truncated_svd(z1, r1_).u if direction == "column" else truncated_svd(z1, r1_).v
        b2 = truncated_svd(z2, r2_).u if direction == "column" else truncated_svd(z2, r2_).v
        angles = principal_angles(b1, b2).angles
        if override is not None:
            if override > min(r1_, r2_):
                raise ParameterError(f"{'r_c' if name == 'rc' else 'r_r'} exceeds min(r1,r2)")
            sources[name] = "override"
            return override, angles
        est, split = estimate_joint_rank(angles, return_split=True)
        sources[name] = "estimated"
        flags[name] = split.low_confidence
        return est, angles

    rc_, angles_col = joint_rank("column", rc, "rc")
    rr_, angles_row = joint_rank("row", rr, "rr")

    ranks = RankProfile(r1=r1_, r2=r2_, rc=rc_, rr=rr_)
    ranks.validate(n, p)

    m, _ = estimate_joint_basis(z1, z2, r1_, r2_, "column", override_rank=rc_)
    nb, _ = estimate_joint_basis(z1, z2, r1_, r2_, "row", override_rank=rr_)

    notes: list[str] = []
    outer_trace = None
    if variant == "plain":
        fit1, fit2 = solve_dmmd_signals(a1, a2, ranks, m, nb, solver_config)
        notes.extend(f"view 1: {w}" for w in fit1.warnings)
        notes.extend(f"view 2: {w}" for w in fit2.warnings)
        for k, fit in ((1, fit1), (2, fit2)):
            if not fit.converged:
                notes.append(f"view {k}: solver hit the iteration cap before the objective settled")
        decomposition = extract_parts(fit1, fit2, m, nb, ranks)
    else:
        decomposition, outer_trace = solve_dmmd_i(a1, a2, ranks, m, nb, iterative_config)
        if not decomposition.views[0].converged:
            notes.append("outer refinement hit the iteration cap before the objective settled")
    for name, flagged in flags.items():
        if flagged:
            notes.append(f"{name}: flat likelihood curve, rank estimate is low-confidence")

    return DmmdResult(
        decomposition=decomposition,
        ranks=ranks,
        rank_sources=sources,
        angles_col=angles_col,
        angles_row=angles_row,
        low_confidence=flags,
        warnings=notes,
        variant=variant,
        outer_objective_trace=outer_trace,
    )


def variance_explained(x, view) -> dict:
    """Percentage of ||x||_F^2 captured by each extracted part of one view.

    Returns shares for the joint/individual parts in both directions plus
    the total signal; joint and individual shares in a direction add up to
    the total share because the parts are Frobenius-orthogonal.
    """
    arr = as_matrix(x)
    denom = float(np.sum(arr * arr))
    if denom == 0.0:
        raise ParameterError("x is zero; variance shares are undefined")
    parts = {
        "joint_col": view.j_col,
        "individual_col": view.i_col,
        "joint_row": view.j_row,
        "individual_row": view.i_row,
        "total_signal": view.a,
    }
    return {name: 100.0 * float(np.sum(part * part)) / denom for name, part in parts.items()}


def normalized_basis_report(basis, anchor_index: int) -> np.ndarray:
    """Rescale each basis vector so its coefficient at ``anchor_index``
    equals 1, for interpretation against a reference feature.

    Accepts a single vector or a matrix of column vectors; raises on a
    near-zero anchor coefficient.
    """
    arr = np.asarray(basis, dtype=float)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ParameterError(f"basis must be 1-D or 2-D, got ndim={arr.ndim}")
    if not 0 <= anchor_index < arr.shape[0]:
        raise ParameterError(f"anchor_index must lie in [0, {arr.shape[0] - 1}], got {anchor_index}")
    anchors = arr[anchor_index, :]
    if np.any(np.abs(anchors) <= 1e-10):
        bad = int(np.argmin(np.abs(anchors)))
        raise ParameterError(f"anchor coefficient of column {bad} is zero; cannot normalize")
    out = arr / anchors
    return out[:, 0] if squeeze else out


def double_standardize(x, tol: float = 1e-8, max_sweeps: int = 100) -> np.ndarray:
    """Alternately standardize rows and columns to mean 0, variance 1 until
    both hold within ``tol``.

    Variance here divides by the count, not count - 1: with the n-1
    convention the row constraint forces a total sum of squares of n(p-1)
    while the column constraint forces p(n-1), so both can only hold on
    square matrices and the sweep could never close.

    One pass does not suffice (the column pass disturbs the rows), so
    sweeps repeat up to ``max_sweeps``. Constant rows or columns cannot be
    standardized and raise immediately.
    """
    arr = as_matrix(x).copy()
    n, p = arr.shape
    if n < 2 or p < 2:
        raise ParameterError(f"need at least 2 rows and 2 columns, got {arr.shape}")
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if max_sweeps < 1:
        raise ParameterError(f"max_sweeps must be >= 1, got {max_sweeps}")

    def worst(a: np.ndarray) -> float:
        rm = np.abs(a.mean(axis=1)).max()
        rv = np.abs(a.var(axis=1) - 1.0).max()
        cm = np.abs(a.mean(axis=0)).max()
        cv = np.abs(a.var(axis=0) - 1.0).max()
        return float(max(rm, rv, cm, cv))

    for sweep in range(1, max_sweeps + 1):
        if worst(arr) < tol:
            return arr
        for axis in (1, 0):  # rows first, then columns
            mean = arr.mean(axis=axis, keepdims=True)
            sd = arr.std(axis=axis, keepdims=True)
            if np.any(sd == 0.0):
                kind = "row" if axis == 1 else "column"
                raise DegeneracyError(f"constant {kind} encountered at sweep {sweep}")
            arr = (arr - mean) / sd
    if worst(arr) < tol:
        return arr
    raise DegeneracyError(
        f"double standardization did not converge in {max_sweeps} sweeps "
        f"(worst deviation {worst(arr):.3e}, tol {tol:.1e})"
    )

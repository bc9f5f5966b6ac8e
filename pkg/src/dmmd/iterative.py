"""Iterative refinement of the joint bases alongside the signal fits.

Instead of holding the joint column basis M and joint row basis N fixed,
this variant also descends the summed two-view objective in M and N: with
everything else held, the optimal M collects the leading left singular
vectors of the concatenation

    Y = [(I - R_1 R_1^T) X_1 N~_1 N~_1^T, (I - R_2 R_2^T) X_2 N~_2 N~_2^T],

and the optimal N is the transposed mirror. Each outer pass updates M, then
N, then reruns the alternating per-view solver under the refreshed bases.
Convergence of the outer objective is an empirical property, not a theorem;
it is monitored rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegeneracyError, ParameterError
from .linalg import as_matrix, check_basis, empty_basis, numerical_rank, truncated_svd
from .solver import (
    ConstrainedFit,
    DmmdDecomposition,
    RankProfile,
    SolverConfig,
    ViewDecomposition,
    _alternate,
    _fro2,
    extract_parts,
)


@dataclass
class DmmdIConfig:
    """Outer-loop controls; the inner alternating solver gets its own
    budget per outer pass (default 50 sweeps)."""

    outer_t_max: int = 100
    outer_epsilon: float = 1e-8
    inner: SolverConfig = field(default_factory=lambda: SolverConfig(t_max=50))

    def validate(self) -> None:
        if self.outer_t_max < 1:
            raise ParameterError(f"outer_t_max must be >= 1, got {self.outer_t_max}")
        if not self.outer_epsilon > 0:
            raise ParameterError(f"outer_epsilon must be positive, got {self.outer_epsilon}")
        self.inner.validate()


def update_joint_column(x1, x2, r_pair, n_full_pair, rc: int) -> np.ndarray:
    """Optimal joint column basis given the individual column directions
    R_k and the full row bases N~_k: the leading rc left singular vectors of
    the concatenated row-projected, individually-deflated views."""
    if rc < 1:
        raise ParameterError(f"rc must be >= 1, got {rc}")
    a1 = as_matrix(x1, "x1")
    a2 = as_matrix(x2, "x2")
    if a1.shape != a2.shape:
        raise ParameterError(f"views must share a shape, got {a1.shape} and {a2.shape}")
    blocks = []
    for x, rfree, nfull in ((a1, r_pair[0], n_full_pair[0]), (a2, r_pair[1], n_full_pair[1])):
        nf = np.asarray(nfull, dtype=float)
        rf = np.asarray(rfree, dtype=float)
        y = (x @ nf) @ nf.T if nf.shape[1] else np.zeros_like(x)
        if rf.shape[1]:
            y -= rf @ (rf.T @ y)
        blocks.append(y)
    y = np.hstack(blocks)
    if numerical_rank(y) < rc:
        raise DegeneracyError(f"concatenated update matrix has rank < {rc}")
    return truncated_svd(y, rc).u


def update_joint_row(x1, x2, s_pair, m_full_pair, rr: int) -> np.ndarray:
    """Transposed mirror of :func:`update_joint_column`: the optimal joint
    row basis given the individual row directions S_k and the full column
    bases M~_k."""
    if rr < 1:
        raise ParameterError(f"rr must be >= 1, got {rr}")
    a1 = as_matrix(x1, "x1")
    a2 = as_matrix(x2, "x2")
    if a1.shape != a2.shape:
        raise ParameterError(f"views must share a shape, got {a1.shape} and {a2.shape}")
    blocks = []
    for x, sfree, mfull in ((a1, s_pair[0], m_full_pair[0]), (a2, s_pair[1], m_full_pair[1])):
        mf = np.asarray(mfull, dtype=float)
        sf = np.asarray(sfree, dtype=float)
        z = x.T @ mf @ mf.T if mf.shape[1] else np.zeros((x.shape[1], x.shape[0]))
        if sf.shape[1]:
            z -= sf @ (sf.T @ z)
        blocks.append(z)
    z = np.hstack(blocks)
    if numerical_rank(z) < rr:
        raise DegeneracyError(f"concatenated update matrix has rank < {rr}")
    return truncated_svd(z, rr).u


def _init_free(x: np.ndarray, basis: np.ndarray, k: int, side: str) -> np.ndarray:
    """Leading k singular directions of x after deflating ``basis`` on the
    given side; empty when k = 0."""
    if k == 0:
        return empty_basis(x.shape[0] if side == "left" else x.shape[1])
    if side == "left":
        resid = x - basis @ (basis.T @ x) if basis.shape[1] else x
        if numerical_rank(resid) < k:
            raise DegeneracyError(f"initial column residual has rank < {k}")
        return truncated_svd(resid, k).u
    resid = x - (x @ basis) @ basis.T if basis.shape[1] else x
    if numerical_rank(resid) < k:
        raise DegeneracyError(f"initial row residual has rank < {k}")
    return truncated_svd(resid, k).v


def solve_dmmd_i(
    x1,
    x2,
    ranks: RankProfile,
    m0,
    n0,
    cfg: DmmdIConfig | None = None,
) -> tuple[DmmdDecomposition, list[float]]:
    """Jointly refine M, N, and the per-view signal fits.

    Starting from the supplied joint bases, each outer pass updates M (if
    rc > 0), updates N (if rr > 0), and then reruns the alternating
    per-view solver under the refreshed bases. Stops when no view's
    objective moved by more than outer_epsilon * max_k ||X_k||_F^2, or at
    the outer cap.

    Returns
    -------
    (decomposition, summed_trace)
        The decomposition under the final M, N; each view's trace holds its
        objective per outer pass, and ``summed_trace`` their sums.
    """
    if cfg is None:
        cfg = DmmdIConfig()
    cfg.validate()
    a1 = as_matrix(x1, "x1")
    a2 = as_matrix(x2, "x2")
    if a1.shape != a2.shape:
        raise ParameterError(f"views must share a shape, got {a1.shape} and {a2.shape}")
    nrows, pcols = a1.shape
    ranks.validate(nrows, pcols)
    m = check_basis(m0, ambient_dim=nrows, name="m0")
    n = check_basis(n0, ambient_dim=pcols, name="n0")
    if m.shape[1] != ranks.rc:
        raise ParameterError(f"m0 has {m.shape[1]} columns but ranks.rc = {ranks.rc}")
    if n.shape[1] != ranks.rr:
        raise ParameterError(f"n0 has {n.shape[1]} columns but ranks.rr = {ranks.rr}")

    xs = (a1, a2)
    rs = (ranks.r1, ranks.r2)
    r_free = [_init_free(x, m, r - ranks.rc, "left") for x, r in zip(xs, rs)]
    s_free = [_init_free(x, n, r - ranks.rr, "right") for x, r in zip(xs, rs)]
    prev = []
    for x, rfree, sfree in zip(xs, r_free, s_free):
        mt = np.hstack([m, rfree])
        nt = np.hstack([n, sfree])
        prev.append(_fro2(x - mt @ (mt.T @ x @ nt) @ nt.T))
    scale = max(_fro2(a1), _fro2(a2))
    tol = cfg.outer_epsilon * scale

    per_view: tuple[list[float], list[float]] = ([], [])
    summed: list[float] = []
    fits: list[ConstrainedFit] = []
    converged = False
    outer = 0
    for outer in range(1, cfg.outer_t_max + 1):
        if ranks.rc > 0:
            n_full = [np.hstack([n, sf]) for sf in s_free]
            m = update_joint_column(a1, a2, tuple(r_free), tuple(n_full), ranks.rc)
        if ranks.rr > 0:
            m_full = [np.hstack([m, rf]) for rf in r_free]
            n = update_joint_row(a1, a2, tuple(s_free), tuple(m_full), ranks.rr)
        fits = []
        current = []
        for x, r in zip(xs, rs):
            free0 = _init_free(x, m, r - ranks.rc, "left")
            mt0 = np.hstack([m, free0])
            initial = _fro2(x - mt0 @ (mt0.T @ x))
            fit = _alternate(x, r, m, n, free0, cfg.inner, initial)
            fits.append(fit)
            current.append(fit.objective)
        r_free = [fit.col_basis[:, ranks.rc:] for fit in fits]
        s_free = [fit.row_basis[:, ranks.rr:] for fit in fits]
        for k in (0, 1):
            per_view[k].append(current[k])
        summed.append(current[0] + current[1])
        if max(abs(current[k] - prev[k]) for k in (0, 1)) < tol:
            converged = True
            break
        prev = current

    base = extract_parts(fits[0], fits[1], m, n, ranks)
    views = tuple(
        ViewDecomposition(
            a=v.a,
            j_col=v.j_col,
            i_col=v.i_col,
            j_row=v.j_row,
            i_row=v.i_row,
            objective_trace=list(per_view[k]),
            iterations=outer,
            converged=converged,
        )
        for k, v in enumerate(base.views)
    )
    decomp = DmmdDecomposition(views=views, ranks=ranks, m_basis=m, n_basis=n)
    return decomp, summed

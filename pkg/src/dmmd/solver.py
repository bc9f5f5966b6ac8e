"""Rank-constrained least-squares signal fits with prescribed joint
column and row subspaces.

Three building blocks have closed forms:

- column constraint only: the minimizer of ||X - A||_F^2 over rank-r A with
  span(M) inside C(A) is  M M^T X + R R^T X,  R = leading r - r_c left
  singular vectors of (I - M M^T) X;
- row constraint only: the transposed mirror,  X N N^T + X S S^T  with S
  the leading right singular vectors of X (I - N N^T);
- both subspaces fixed entirely: M~ M~^T X N~ N~^T.

The full problem (both constraints plus a rank cap) has no closed form; an
alternating scheme updates the free row directions S and the free column
directions R in turn, each update being one of the closed forms above, so
the objective never increases.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegeneracyError, ParameterError, RankTieWarning
from .linalg import (
    RANK_REL_TOL,
    SV_TIE_REL_TOL,
    as_matrix,
    check_basis,
    empty_basis,
    numerical_rank,
    truncated_svd,
)


@dataclass
class SolverConfig:
    """Controls for the alternating solver.

    ``epsilon`` is relative: iteration stops once the objective changes by
    less than epsilon * ||X||_F^2. ``restarts`` adds that many extra runs
    from random feasible initializations (seeded by ``restart_seed``),
    keeping the best final objective; the default 0 uses only the
    deterministic initialization, which is already exact when there is no
    row constraint.
    """

    t_max: int = 1000
    epsilon: float = 1e-9
    warn_on_ties: bool = True
    restarts: int = 0
    restart_seed: int = 0

    def validate(self) -> None:
        if self.t_max < 1:
            raise ParameterError(f"t_max must be >= 1, got {self.t_max}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.restarts < 0:
            raise ParameterError(f"restarts must be >= 0, got {self.restarts}")


@dataclass(frozen=True)
class RankProfile:
    """Total ranks of the two signals plus the joint column/row ranks."""

    r1: int
    r2: int
    rc: int
    rr: int

    def validate(self, n: int | None = None, p: int | None = None) -> None:
        if self.r1 < 1 or self.r2 < 1:
            raise ParameterError(f"total ranks must be >= 1, got r1={self.r1}, r2={self.r2}")
        if not 0 <= self.rc <= min(self.r1, self.r2):
            raise ParameterError("r_c exceeds min(r1,r2)" if self.rc > 0 else f"r_c must be >= 0, got {self.rc}")
        if not 0 <= self.rr <= min(self.r1, self.r2):
            raise ParameterError("r_r exceeds min(r1,r2)" if self.rr > 0 else f"r_r must be >= 0, got {self.rr}")
        if n is not None and p is not None:
            cap = min(n, p)
            if self.r1 > cap or self.r2 > cap:
                raise ParameterError(
                    f"total ranks must be <= min(n, p) = {cap}, got r1={self.r1}, r2={self.r2}"
                )

    def rank_of_view(self, k: int) -> int:
        if k not in (1, 2):
            raise ParameterError(f"view index must be 1 or 2, got {k}")
        return self.r1 if k == 1 else self.r2


@dataclass
class ConstrainedFit:
    """Result of one constrained fit.

    ``col_basis`` holds [M, R] with the prescribed joint basis as its
    leading columns (None when the fit carried no column constraint), and
    ``row_basis`` likewise holds [N, S]. ``objective_trace`` records the
    objective after each alternating sweep and is non-increasing; closed
    forms record a single value with ``iterations = 0``.
    """

    a_star: np.ndarray
    col_basis: np.ndarray | None
    row_basis: np.ndarray | None
    objective_trace: list[float]
    iterations: int
    converged: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


@dataclass(frozen=True)
class ViewDecomposition:
    """Estimated signal of one view split into joint/individual parts in
    both directions; a = j_col + i_col = j_row + i_row."""

    a: np.ndarray
    j_col: np.ndarray
    i_col: np.ndarray
    j_row: np.ndarray
    i_row: np.ndarray
    objective_trace: list[float]
    iterations: int
    converged: bool


@dataclass(frozen=True)
class DmmdDecomposition:
    """Joint/individual decomposition of both views under one shared joint
    column basis and one shared joint row basis."""

    views: tuple[ViewDecomposition, ViewDecomposition]
    ranks: RankProfile
    m_basis: np.ndarray
    n_basis: np.ndarray


def _fro2(x: np.ndarray) -> float:
    return float(np.sum(x * x))


def solve_column_constrained(x, m, r: int, warn_on_ties: bool = True) -> ConstrainedFit:
    """Closest rank-r matrix to x whose column space contains span(m).

    The minimizer is the projection of x onto span([m, R]) where R collects
    the leading r - r_c left singular vectors of the residual
    (I - m m^T) x. With an empty m this is the rank-r truncated SVD.
    """
    arr = as_matrix(x)
    n, p = arr.shape
    mb = check_basis(m, ambient_dim=n, name="m")
    rc = mb.shape[1]
    if not rc <= r <= min(n, p):
        raise ParameterError(f"rank must satisfy {rc} <= r <= {min(n, p)}, got {r}")
    notes: list[str] = []
    if rc > 0:
        proj = mb @ (mb.T @ arr)
        if numerical_rank(mb.T @ arr) < rc:
            raise DegeneracyError("m^T x is rank deficient; the column constraint cannot be met at full rank")
        resid = arr - proj
    else:
        proj = np.zeros_like(arr)
        resid = arr
    k = r - rc
    if k > 0:
        sv = truncated_svd(resid, k)
        if sv.s[-1] <= RANK_REL_TOL * max(sv.s[0], 1e-300):
            raise DegeneracyError(
                f"residual after removing span(m) has rank < {k}; the target rank {r} is unreachable"
            )
        if sv.tied and warn_on_ties:
            msg = "tied singular values at the rank cut of the column residual; minimizer may be non-unique"
            notes.append(msg)
            _warnings.warn(msg, RankTieWarning)
        rb = sv.u
        a = proj + rb @ (rb.T @ arr)
        basis = np.hstack([mb, rb])
    else:
        a = proj
        basis = mb
    return ConstrainedFit(
        a_star=a,
        col_basis=basis,
        row_basis=None,
        objective_trace=[_fro2(arr - a)],
        iterations=0,
        converged=True,
        warnings=notes,
    )


def solve_row_constrained(x, n_basis, r: int, warn_on_ties: bool = True) -> ConstrainedFit:
    """Closest rank-r matrix to x whose row space contains span(n_basis).

    Mirror of :func:`solve_column_constrained` under transposition: the
    minimizer is x N N^T + x S S^T with S the leading r - r_r right
    singular vectors of x (I - N N^T).
    """
    arr = as_matrix(x)
    n, p = arr.shape
    nb = check_basis(n_basis, ambient_dim=p, name="n_basis")
    rr = nb.shape[1]
    if not rr <= r <= min(n, p):
        raise ParameterError(f"rank must satisfy {rr} <= r <= {min(n, p)}, got {r}")
    notes: list[str] = []
    if rr > 0:
        proj = (arr @ nb) @ nb.T
        if numerical_rank(arr @ nb) < rr:
            raise DegeneracyError("x n is rank deficient; the row constraint cannot be met at full rank")
        resid = arr - proj
    else:
        proj = np.zeros_like(arr)
        resid = arr
    k = r - rr
    if k > 0:
        sv = truncated_svd(resid, k)
        if sv.s[-1] <= RANK_REL_TOL * max(sv.s[0], 1e-300):
            raise DegeneracyError(
                f"residual after removing span(n) has rank < {k}; the target rank {r} is unreachable"
            )
        if sv.tied and warn_on_ties:
            msg = "tied singular values at the rank cut of the row residual; minimizer may be non-unique"
            notes.append(msg)
            _warnings.warn(msg, RankTieWarning)
        sb = sv.v
        a = proj + (arr @ sb) @ sb.T
        basis = np.hstack([nb, sb])
    else:
        a = proj
        basis = nb
    return ConstrainedFit(
        a_star=a,
        col_basis=None,
        row_basis=basis,
        objective_trace=[_fro2(arr - a)],
        iterations=0,
        converged=True,
        warnings=notes,
    )


def best_fixed_spaces(x, m_full, n_full) -> np.ndarray:
    """Closest matrix to x whose column space lies in span(m_full) and row
    space lies in span(n_full): the two-sided projection
    m_full m_full^T x n_full n_full^T.

    Warns when the projection loses rank relative to the smaller basis, in
    which case the exact-space constraint cannot hold with equality.
    """
    arr = as_matrix(x)
    mb = check_basis(m_full, ambient_dim=arr.shape[0], name="m_full")
    nb = check_basis(n_full, ambient_dim=arr.shape[1], name="n_full")
    if mb.shape[1] == 0 or nb.shape[1] == 0:
        raise ParameterError("m_full and n_full must be non-empty")
    a = mb @ (mb.T @ arr @ nb) @ nb.T
    want = min(mb.shape[1], nb.shape[1])
    core = mb.T @ arr @ nb
    s = np.linalg.svd(core, compute_uv=False)
    got = int(np.count_nonzero(s > RANK_REL_TOL * max(s[0], 1e-300))) if s.size else 0
    if got < want:
        _warnings.warn(
            f"two-sided projection has rank {got} < {want}; the fixed spaces are not fully represented",
            RankTieWarning,
        )
    return a


def _small_rank(s: np.ndarray) -> int:
    """Numerical rank from an already-computed singular value vector."""
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_REL_TOL * s[0]))


def _svd_cut(mat: np.ndarray, k: int):
    """One SVD serving both the rank check and the leading-k factors.

    Returns (u_k, v_k, rank, tied) with the same deterministic sign
    convention as :func:`dmmd.linalg.truncated_svd`.
    """
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    rank = _small_rank(s)
    tied = False
    if k < s.size and s[0] > 0:
        tied = (s[k - 1] - s[k]) < SV_TIE_REL_TOL * s[0]
    uk = u[:, :k]
    vk = vh[:k].T
    lead = np.argmax(np.abs(uk), axis=0)
    signs = np.sign(uk[lead, np.arange(k)])
    signs[signs == 0] = 1.0
    return uk * signs, vk * signs, rank, tied


def _alternate(
    x: np.ndarray,
    r: int,
    mb: np.ndarray,
    nb: np.ndarray,
    r_free_col: np.ndarray,
    cfg: SolverConfig,
    initial_objective: float,
) -> ConstrainedFit:
    """Alternating S/R updates from a given starting R (free column part).

    Each sweep solves the row problem exactly for S given [m, R], then the
    column problem exactly for R given [n, S]; the recorded objective is the
    full reconstruction error and is non-increasing. Rank sufficiency of
    each update matrix is asserted every sweep.
    """
    n, p = x.shape
    rc = mb.shape[1]
    rr = nb.shape[1]
    x_fro2 = _fro2(x)
    tol = cfg.epsilon * x_fro2
    mt = np.hstack([mb, r_free_col]) if r_free_col.shape[1] else mb
    nt = nb
    trace: list[float] = []
    notes: list[str] = []
    seen_kinds: set[str] = set()
    prev = initial_objective
    converged = False
    a = None
    iterations = 0
    for t in range(1, cfg.t_max + 1):
        iterations = t
        # Row update: the right singular vectors of M~ M~^T X (I - N N^T)
        # equal those of the small matrix M~^T X (I - N N^T).
        if r - rr > 0:
            b = mt.T @ x
            if rr > 0:
                b -= (b @ nb) @ nb.T
            _, v_new, rank, tied = _svd_cut(b, r - rr)
            if rank < r - rr:
                raise DegeneracyError(
                    f"row-update matrix dropped below rank {r - rr} at iteration {t}"
                )
            if tied and cfg.warn_on_ties and "row" not in seen_kinds:
                seen_kinds.add("row")
                notes.append(f"tied singular values in the row update at iteration {t}")
            nt = np.hstack([nb, v_new])
        else:
            nt = nb
        # Column update: the left singular vectors of (I - M M^T) X N~ N~^T
        # equal those of the small matrix (I - M M^T) X N~.
        if r - rc > 0:
            c = x @ nt
            if rc > 0:
                c -= mb @ (mb.T @ c)
            u_new, _, rank, tied = _svd_cut(c, r - rc)
            if rank < r - rc:
                raise DegeneracyError(
                    f"column-update matrix dropped below rank {r - rc} at iteration {t}"
                )
            if tied and cfg.warn_on_ties and "column" not in seen_kinds:
                seen_kinds.add("column")
                notes.append(f"tied singular values in the column update at iteration {t}")
            mt = np.hstack([mb, u_new])
        else:
            mt = mb
        a = mt @ (mt.T @ x @ nt) @ nt.T
        obj = _fro2(x - a)
        trace.append(obj)
        if abs(obj - prev) < tol:
            converged = True
            break
        prev = obj
    return ConstrainedFit(
        a_star=a,
        col_basis=mt,
        row_basis=nt,
        objective_trace=trace,
        iterations=iterations,
        converged=converged,
        warnings=notes,
    )


def _initial_free_columns(x: np.ndarray, mb: np.ndarray, r: int) -> tuple[np.ndarray, float]:
    """Deterministic start: leading left singular vectors of the residual
    (I - m m^T) x, i.e. the exact solution of the column-only problem.
    Returns the free columns and the column-only objective, which seeds the
    stopping comparison of the first sweep."""
    n = x.shape[0]
    rc = mb.shape[1]
    resid = x - mb @ (mb.T @ x) if rc > 0 else x
    if r - rc > 0:
        s_all = np.linalg.svd(resid, compute_uv=False)
        if _small_rank(s_all) < r - rc:
            raise DegeneracyError(
                f"initial residual has rank < {r - rc}; the target rank {r} is unreachable"
            )
        free = truncated_svd(resid, r - rc).u
        mt0 = np.hstack([mb, free])
    else:
        free = empty_basis(n)
        mt0 = mb
    initial = _fro2(x - mt0 @ (mt0.T @ x))
    return free, initial


def solve_dmmd_signals(x1, x2, ranks: RankProfile, m, n, cfg: SolverConfig | None = None) -> tuple[ConstrainedFit, ConstrainedFit]:
    """Fit both views' signals under shared joint column and row bases.

    Per view, minimizes ||X_k - A_k||_F^2 subject to span(m) inside C(A_k),
    span(n) inside R(A_k) and rank(A_k) = r_k, by alternating the exact row
    and column closed forms. Started from the column-only solution, the
    first sweep already solves the problem exactly when the row constraint
    is empty.

    Returns the two fits; each carries the full bases [m, R_k] and
    [n, S_k], the non-increasing objective trace, and any tie warnings.
    """
    if cfg is None:
        cfg = SolverConfig()
    cfg.validate()
    a1 = as_matrix(x1, "x1")
    a2 = as_matrix(x2, "x2")
    if a1.shape != a2.shape:
        raise ParameterError(f"views must share a shape, got {a1.shape} and {a2.shape}")
    nrows, pcols = a1.shape
    ranks.validate(nrows, pcols)
    mb = check_basis(m, ambient_dim=nrows, name="m")
    nb = check_basis(n, ambient_dim=pcols, name="n")
    if mb.shape[1] != ranks.rc:
        raise ParameterError(f"m has {mb.shape[1]} columns but ranks.rc = {ranks.rc}")
    if nb.shape[1] != ranks.rr:
        raise ParameterError(f"n has {nb.shape[1]} columns but ranks.rr = {ranks.rr}")
    fits = []
    for x, r in ((a1, ranks.r1), (a2, ranks.r2)):
        free0, initial = _initial_free_columns(x, mb, r)
        fit = _alternate(x, r, mb, nb, free0, cfg, initial)
        if cfg.restarts > 0:
            for i in range(cfg.restarts):
                rng = np.random.default_rng(np.random.SeedSequence([cfg.restart_seed, i]))
                g = rng.standard_normal((nrows, r - ranks.rc)) if r > ranks.rc else np.zeros((nrows, 0))
                if ranks.rc > 0 and g.shape[1]:
                    g -= mb @ (mb.T @ g)
                q = np.linalg.qr(g)[0] if g.shape[1] else empty_basis(nrows)
                mt0 = np.hstack([mb, q])
                start = _fro2(x - mt0 @ (mt0.T @ x))
                trial = _alternate(x, r, mb, nb, q, cfg, start)
                if trial.objective < fit.objective:
                    fit = trial
        fits.append(fit)
    return fits[0], fits[1]


def extract_parts(fit1: ConstrainedFit, fit2: ConstrainedFit, m, n, ranks: RankProfile) -> DmmdDecomposition:
    """Split each fitted signal into joint and individual parts in both
    directions: j_col = M M^T A, i_col = A - j_col, j_row = A N N^T,
    i_row = A - j_row."""
    views = []
    mb = None
    nb = None
    for fit in (fit1, fit2):
        a = fit.a_star
        if mb is None:
            mb = check_basis(m, ambient_dim=a.shape[0], name="m")
            nb = check_basis(n, ambient_dim=a.shape[1], name="n")
        j_col = mb @ (mb.T @ a) if mb.shape[1] else np.zeros_like(a)
        j_row = (a @ nb) @ nb.T if nb.shape[1] else np.zeros_like(a)
        views.append(
            ViewDecomposition(
                a=a,
                j_col=j_col,
                i_col=a - j_col,
                j_row=j_row,
                i_row=a - j_row,
                objective_trace=list(fit.objective_trace),
                iterations=fit.iterations,
                converged=fit.converged,
            )
        )
    return DmmdDecomposition(views=(views[0], views[1]), ranks=ranks, m_basis=mb, n_basis=nb)

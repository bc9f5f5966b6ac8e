import numpy as np
import pytest

from dmmd.exceptions import DegeneracyError, ParameterError
from dmmd.linalg import empty_basis, numerical_rank, truncated_svd
from dmmd.simulate import SimulationConfig, generate
from dmmd.solver import (
    RankProfile,
    SolverConfig,
    best_fixed_spaces,
    extract_parts,
    solve_column_constrained,
    solve_dmmd_signals,
    solve_row_constrained,
)
from dmmd.subspaces import principal_angles


def random_basis(rng, n, k):
    return np.linalg.qr(rng.standard_normal((n, k)))[0] if k else empty_basis(n)


def column_objective(x, m, r_free):
    basis = np.hstack([m, r_free])
    return float(np.sum((x - basis @ (basis.T @ x)) ** 2))


def completion_candidates(rng, x, m, k, count):
    """Random feasible candidates: Gaussian draws projected off span(m) and
    orthonormalized, giving random completions [m, R]."""
    n = x.shape[0]
    g = rng.standard_normal((count, n, k))
    if m.shape[1]:
        g -= np.einsum("ij,jk,skl->sil", m, m.T, g)
    q = np.linalg.qr(g)[0]
    return q


def test_column_constrained_fully_spanned():
    rng = np.random.default_rng(0)
    u = random_basis(rng, 7, 3)
    x = u @ np.diag([3.0, 2.0, 1.0]) @ random_basis(rng, 5, 3).T
    fit = solve_column_constrained(x, u, 3)
    assert np.max(np.abs(fit.a_star - x)) < 1e-12
    assert fit.objective < 1e-24


def test_column_constrained_empty_basis_is_truncated_svd():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((6, 5))
    fit = solve_column_constrained(x, empty_basis(6), 2)
    ref = truncated_svd(x, 2).reconstruct()
    assert np.max(np.abs(fit.a_star - ref)) < 1e-12


def test_column_constrained_beats_random_feasible_candidates():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 5))
    m = random_basis(rng, 6, 1)
    r = 3
    fit = solve_column_constrained(x, m, r)
    cands = completion_candidates(np.random.default_rng(3), x, m, r - 1, 1000)
    for q in cands:
        assert fit.objective <= column_objective(x, m, q) + 1e-10


def test_column_constrained_basis_layout_and_invariants():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((8, 6))
    m = random_basis(rng, 8, 2)
    fit = solve_column_constrained(x, m, 4)
    assert fit.col_basis.shape == (8, 4)
    assert np.max(np.abs(fit.col_basis[:, :2] - m)) == 0.0
    assert fit.row_basis is None
    recomputed = fit.col_basis @ (fit.col_basis.T @ x)
    assert np.max(np.abs(recomputed - fit.a_star)) < 1e-10
    assert numerical_rank(fit.a_star) == 4


def test_column_constrained_rank_deficiency_error():
    rng = np.random.default_rng(5)
    m = random_basis(rng, 6, 2)
    # x lives entirely inside one direction of span(m), so m^T x has rank 1.
    x = np.outer(m[:, 0], rng.standard_normal(5))
    with pytest.raises(DegeneracyError):
        solve_column_constrained(x, m, 2)


def test_column_constrained_tie_warning():
    fit = solve_column_constrained(np.eye(4), empty_basis(4), 2, warn_on_ties=True)
    assert any("tied" in w for w in fit.warnings)


def test_row_constrained_mirrors_transposed_column():
    rng = np.random.default_rng(6)
    for _ in range(5):
        x = rng.standard_normal((5, 7))
        nb = random_basis(rng, 7, 2)
        row = solve_row_constrained(x, nb, 3)
        col = solve_column_constrained(x.T, nb, 3)
        assert np.max(np.abs(row.a_star - col.a_star.T)) < 1e-12


def test_row_constrained_empty_basis_is_truncated_svd():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((6, 5))
    fit = solve_row_constrained(x, empty_basis(5), 3)
    ref = truncated_svd(x, 3).reconstruct()
    assert np.max(np.abs(fit.a_star - ref)) < 1e-12


def test_row_constrained_beats_random_feasible_candidates():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((5, 6))
    nb = random_basis(rng, 6, 1)
    r = 3
    fit = solve_row_constrained(x, nb, r)
    cands = completion_candidates(np.random.default_rng(9), x.T, nb, r - 1, 1000)
    for q in cands:
        basis = np.hstack([nb, q])
        obj = float(np.sum((x - (x @ basis) @ basis.T) ** 2))
        assert fit.objective <= obj + 1e-10


def test_best_fixed_spaces_identity_bases():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((4, 5))
    out = best_fixed_spaces(x, np.eye(4), np.eye(5))
    assert np.max(np.abs(out - x)) < 1e-12


def test_best_fixed_spaces_rank_one_aligned():
    rng = np.random.default_rng(11)
    u = rng.standard_normal(5)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    x = np.outer(u, v)
    out = best_fixed_spaces(x, u[:, None], v[:, None])
    assert np.max(np.abs(out - x)) < 1e-12


def test_best_fixed_spaces_beats_random_cores():
    rng = np.random.default_rng(12)
    x = rng.standard_normal((7, 6))
    m = random_basis(rng, 7, 3)
    nb = random_basis(rng, 6, 2)
    out = best_fixed_spaces(x, m, nb)
    best = np.sum((x - out) ** 2)
    for _ in range(1000):
        core = rng.standard_normal((3, 2))
        cand = m @ core @ nb.T
        assert best <= np.sum((x - cand) ** 2) + 1e-10


def _planted(seed, **overrides):
    params = dict(n=30, p=24, r1=5, r2=4, rc=2, rr=1, snr=1.0, seed=seed)
    params.update(overrides)
    return generate(SimulationConfig(**params))


def test_algorithm_empty_row_basis_converges_in_one_iteration():
    rng = np.random.default_rng(13)
    x = rng.standard_normal((10, 8))
    m = random_basis(rng, 10, 1)
    ranks = RankProfile(r1=3, r2=3, rc=1, rr=0)
    fit1, fit2 = solve_dmmd_signals(x, x, ranks, m, empty_basis(8))
    ref = solve_column_constrained(x, m, 3)
    for fit in (fit1, fit2):
        assert fit.iterations == 1
        assert fit.converged
        scale = np.linalg.norm(x)
        assert np.linalg.norm(fit.a_star - ref.a_star) < 1e-12 * scale


def test_algorithm_noiseless_recovery():
    gt = _planted(100)
    ranks = RankProfile(r1=5, r2=4, rc=2, rr=1)
    fit1, fit2 = solve_dmmd_signals(gt.a1, gt.a2, ranks, gt.m_true, gt.n_true)
    for fit, truth in ((fit1, gt.a1), (fit2, gt.a2)):
        x_fro2 = np.sum(truth**2)
        assert fit.objective <= 1e-18 * x_fro2 + 1e-20
        rel = np.linalg.norm(fit.a_star - truth) / np.linalg.norm(truth)
        assert rel < 1e-8


@pytest.mark.parametrize("seed", range(50))
def test_algorithm_monotone_objective(seed):
    gt = generate(SimulationConfig(n=40, p=30, r1=6, r2=5, rc=2, rr=1, snr=1.0, seed=seed))
    ranks = RankProfile(r1=6, r2=5, rc=2, rr=1)
    fit1, fit2 = solve_dmmd_signals(gt.x1, gt.x2, ranks, gt.m_true, gt.n_true)
    for fit in (fit1, fit2):
        trace = np.asarray(fit.objective_trace)
        slack = 1e-9 * trace[0]
        assert np.all(np.diff(trace) <= slack)
        assert trace[-1] <= trace[0] + slack


def test_algorithm_no_joint_structure_reduces_to_truncated_svd():
    rng = np.random.default_rng(14)
    x1 = rng.standard_normal((12, 9))
    x2 = rng.standard_normal((12, 9))
    ranks = RankProfile(r1=3, r2=2, rc=0, rr=0)
    fit1, fit2 = solve_dmmd_signals(x1, x2, ranks, empty_basis(12), empty_basis(9))
    for fit, x, r in ((fit1, x1, 3), (fit2, x2, 2)):
        ref = truncated_svd(x, r).reconstruct()
        assert np.max(np.abs(fit.a_star - ref)) < 1e-12


def test_algorithm_feasibility_at_return():
    gt = _planted(200)
    ranks = RankProfile(r1=5, r2=4, rc=2, rr=1)
    fit1, fit2 = solve_dmmd_signals(gt.x1, gt.x2, ranks, gt.m_true, gt.n_true)
    for fit, r in ((fit1, 5), (fit2, 4)):
        assert numerical_rank(fit.a_star) == r
        proj = gt.m_true.T @ fit.a_star
        assert numerical_rank(proj) == 2
        row_space = truncated_svd(fit.a_star, r).v
        angles = principal_angles(gt.n_true, row_space).angles
        assert np.max(angles[:1]) < 1e-6


def test_algorithm_decomposition_identity_and_orthogonality():
    gt = _planted(300)
    ranks = RankProfile(r1=5, r2=4, rc=2, rr=1)
    fit1, fit2 = solve_dmmd_signals(gt.x1, gt.x2, ranks, gt.m_true, gt.n_true)
    decomp = extract_parts(fit1, fit2, gt.m_true, gt.n_true, ranks)
    for view in decomp.views:
        scale = 1e-9 * np.linalg.norm(view.a)
        assert np.linalg.norm(view.a - view.j_col - view.i_col) <= scale
        assert np.linalg.norm(view.a - view.j_row - view.i_row) <= scale
        assert np.max(np.abs(gt.m_true.T @ view.i_col)) <= 1e-9
        assert np.max(np.abs(view.i_row @ gt.n_true)) <= 1e-9


def test_extract_parts_empty_bases():
    rng = np.random.default_rng(15)
    x = rng.standard_normal((8, 6))
    ranks = RankProfile(r1=2, r2=2, rc=0, rr=0)
    fits = solve_dmmd_signals(x, x, ranks, empty_basis(8), empty_basis(6))
    decomp = extract_parts(*fits, empty_basis(8), empty_basis(6), ranks)
    for view in decomp.views:
        assert np.all(view.j_col == 0)
        assert np.all(view.j_row == 0)
        assert np.array_equal(view.i_col, view.a)
        assert np.array_equal(view.i_row, view.a)


def test_extract_parts_full_joint_column_space():
    gt = _planted(400, rc=4, r2=4, rr=0)
    ranks = RankProfile(r1=5, r2=4, rc=4, rr=0)
    m = truncated_svd(gt.a2, 4).u  # spans C(a2) entirely
    fit1, fit2 = solve_dmmd_signals(gt.a1, gt.a2, ranks, m, empty_basis(gt.a1.shape[1]))
    decomp = extract_parts(fit1, fit2, m, empty_basis(gt.a1.shape[1]), ranks)
    assert np.max(np.abs(decomp.views[1].i_col)) < 1e-10


def test_noiseless_planted_parts_match_truth():
    gt = _planted(500)
    ranks = RankProfile(r1=5, r2=4, rc=2, rr=1)
    fits = solve_dmmd_signals(gt.a1, gt.a2, ranks, gt.m_true, gt.n_true)
    decomp = extract_parts(*fits, gt.m_true, gt.n_true, ranks)
    for view, a in zip(decomp.views, (gt.a1, gt.a2)):
        j_true = gt.m_true @ (gt.m_true.T @ a)
        rel = np.linalg.norm(view.j_col - j_true) / np.linalg.norm(j_true)
        assert rel < 1e-8


def test_rank_profile_validation_messages():
    with pytest.raises(ParameterError, match=r"r_c exceeds min\(r1,r2\)"):
        RankProfile(r1=3, r2=3, rc=5, rr=0).validate()
    with pytest.raises(ParameterError, match=r"r_r exceeds min\(r1,r2\)"):
        RankProfile(r1=3, r2=3, rc=0, rr=4).validate()
    with pytest.raises(ParameterError):
        RankProfile(r1=9, r2=2, rc=0, rr=0).validate(4, 4)
    RankProfile(r1=3, r2=2, rc=2, rr=1).validate(10, 10)


def test_solver_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(t_max=0).validate()
    with pytest.raises(ParameterError):
        SolverConfig(epsilon=0.0).validate()


def test_solver_basis_mismatch_errors():
    rng = np.random.default_rng(16)
    x = rng.standard_normal((10, 8))
    ranks = RankProfile(r1=3, r2=3, rc=1, rr=0)
    with pytest.raises(ParameterError):
        solve_dmmd_signals(x, x, ranks, empty_basis(10), empty_basis(8))


def test_solver_restarts_never_worse():
    gt = _planted(600)
    ranks = RankProfile(r1=5, r2=4, rc=2, rr=1)
    base = solve_dmmd_signals(gt.x1, gt.x2, ranks, gt.m_true, gt.n_true)
    restarted = solve_dmmd_signals(
        gt.x1, gt.x2, ranks, gt.m_true, gt.n_true,
        SolverConfig(restarts=3, restart_seed=123),
    )
    for b, r in zip(base, restarted):
        assert r.objective <= b.objective + 1e-12 * max(b.objective, 1.0)

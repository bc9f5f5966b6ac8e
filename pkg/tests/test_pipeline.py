import numpy as np
import pytest

from dmmd.exceptions import DegeneracyError, ParameterError
from dmmd.linalg import truncated_svd
from dmmd.pipeline import (
    dmmd,
    double_standardize,
    normalized_basis_report,
    variance_explained,
)
from dmmd.simulate import SimulationConfig, generate


def test_dmmd_noiseless_recovery_with_true_ranks():
    cfg = SimulationConfig(n=36, p=28, r1=5, r2=4, rc=2, rr=1, snr=1.0, seed=0)
    gt = generate(cfg)
    result = dmmd(gt.a1, gt.a2, r1=5, r2=4, rc=2, rr=1)
    for view, truth in zip(result.decomposition.views, (gt.a1, gt.a2)):
        rel = np.linalg.norm(view.a - truth) / np.linalg.norm(truth)
        assert rel < 1e-8
    assert result.rank_sources == {"r1": "override", "r2": "override", "rc": "override", "rr": "override"}


def test_dmmd_identical_views_all_joint():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((20, 15))
    r = 3
    result = dmmd(x, x, r1=r, r2=r, rc=r, rr=r)
    ref = truncated_svd(x, r).reconstruct()
    for view in result.decomposition.views:
        assert np.linalg.norm(view.j_col - ref) < 1e-8 * np.linalg.norm(ref)
        assert np.linalg.norm(view.i_col) < 1e-8 * np.linalg.norm(view.a)
        assert np.linalg.norm(view.i_row) < 1e-8 * np.linalg.norm(view.a)


def test_dmmd_estimates_everything_when_unconstrained():
    cfg = SimulationConfig(n=60, p=48, r1=4, r2=3, rc=2, rr=1, snr=3.0, seed=5)
    gt = generate(cfg)
    result = dmmd(gt.x1, gt.x2)
    assert result.rank_sources == {"r1": "estimated", "r2": "estimated", "rc": "estimated", "rr": "estimated"}
    assert result.ranks.r1 == 4
    assert result.ranks.r2 == 3
    assert result.ranks.rc == 2
    assert result.ranks.rr == 1


def test_dmmd_tcga_shaped_joint_ranks_majority():
    hits = 0
    seeds = range(20)
    for seed in seeds:
        cfg = SimulationConfig(n=88, p=736, r1=8, r2=6, rc=0, rr=2, snr=1.0, seed=3000 + seed)
        gt = generate(cfg)
        result = dmmd(gt.x1, gt.x2)
        if result.ranks.rc == 0 and result.ranks.rr == 2:
            hits += 1
    assert hits >= 0.8 * len(seeds)


def test_dmmd_direction_consistency_single_object():
    cfg = SimulationConfig(n=24, p=20, r1=3, r2=3, rc=1, rr=1, snr=1.0, seed=9)
    gt = generate(cfg)
    result = dmmd(gt.x1, gt.x2)
    for view in result.decomposition.views:
        # Column-direction and row-direction reconstructions are the same
        # matrix by construction.
        col_sum = view.j_col + view.i_col
        row_sum = view.j_row + view.i_row
        assert np.array_equal(col_sum, col_sum)
        assert np.max(np.abs(col_sum - row_sum)) < 1e-12 * max(1.0, np.abs(view.a).max())


def test_dmmd_override_passthrough_reproduces_estimated_run():
    cfg = SimulationConfig(n=40, p=32, r1=4, r2=3, rc=1, rr=1, snr=2.0, seed=21)
    gt = generate(cfg)
    auto = dmmd(gt.x1, gt.x2)
    manual = dmmd(
        gt.x1, gt.x2,
        r1=auto.ranks.r1, r2=auto.ranks.r2, rc=auto.ranks.rc, rr=auto.ranks.rr,
    )
    for va, vm in zip(auto.decomposition.views, manual.decomposition.views):
        assert np.array_equal(va.a, vm.a)
        assert np.array_equal(va.j_col, vm.j_col)
    assert np.array_equal(auto.decomposition.m_basis, manual.decomposition.m_basis)


def test_dmmd_iterative_variant_runs_and_reports_trace():
    cfg = SimulationConfig(n=24, p=20, r1=3, r2=2, rc=1, rr=1, snr=1.0, seed=2)
    gt = generate(cfg)
    result = dmmd(gt.x1, gt.x2, r1=3, r2=2, rc=1, rr=1, variant="iterative")
    assert result.variant == "iterative"
    assert result.outer_objective_trace is not None
    trace = np.asarray(result.outer_objective_trace)
    assert np.all(np.diff(trace) <= 1e-9 * trace[0])


def test_dmmd_inconsistent_overrides():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((10, 8))
    with pytest.raises(ParameterError, match=r"r_c exceeds min\(r1,r2\)"):
        dmmd(x, x, r1=3, r2=2, rc=3)
    with pytest.raises(ParameterError):
        dmmd(x, rng.standard_normal((9, 8)))
    with pytest.raises(ParameterError):
        dmmd(x, x, variant="fancy")


def test_variance_explained_total_100_for_noiseless():
    cfg = SimulationConfig(n=24, p=16, r1=3, r2=2, rc=1, rr=1, snr=1.0, seed=4)
    gt = generate(cfg)
    result = dmmd(gt.a1, gt.a2, r1=3, r2=2, rc=1, rr=1)
    shares = variance_explained(gt.a1, result.decomposition.views[0])
    assert shares["total_signal"] == pytest.approx(100.0, abs=1e-6)


def test_variance_explained_zero_joint():
    rng = np.random.default_rng(5)
    x1 = rng.standard_normal((14, 10))
    x2 = rng.standard_normal((14, 10))
    result = dmmd(x1, x2, r1=2, r2=2, rc=0, rr=0)
    shares = variance_explained(x1, result.decomposition.views[0])
    assert shares["joint_col"] == 0.0
    assert shares["joint_row"] == 0.0


def test_variance_explained_additivity():
    cfg = SimulationConfig(n=30, p=24, r1=4, r2=3, rc=2, rr=1, snr=1.0, seed=6)
    gt = generate(cfg)
    result = dmmd(gt.x1, gt.x2, r1=4, r2=3, rc=2, rr=1)
    for k, x in ((0, gt.x1), (1, gt.x2)):
        view = result.decomposition.views[k]
        # The parts are Frobenius-orthogonal (the joint basis annihilates the
        # individual part), so the shares add.
        assert abs(np.sum(view.j_col * view.i_col)) < 1e-9 * np.sum(view.a**2)
        shares = variance_explained(x, view)
        assert shares["joint_col"] + shares["individual_col"] == pytest.approx(
            shares["total_signal"], abs=1e-6
        )
        assert shares["joint_row"] + shares["individual_row"] == pytest.approx(
            shares["total_signal"], abs=1e-6
        )


def test_normalized_basis_report_cases():
    vec = np.array([2.0, 16.16, 4.0])
    out = normalized_basis_report(vec, 0)
    assert out == pytest.approx([1.0, 8.08, 2.0])
    unit = np.array([1.0, 0.25])
    assert normalized_basis_report(unit, 0) == pytest.approx([1.0, 0.25])
    flipped = normalized_basis_report(np.array([-0.5, 1.0, -0.25]), 0)
    assert flipped == pytest.approx([1.0, -2.0, 0.5])
    with pytest.raises(ParameterError):
        normalized_basis_report(np.array([0.0, 1.0]), 0)
    matrix = np.array([[2.0, -0.5], [4.0, 1.0]])
    out = normalized_basis_report(matrix, 0)
    assert np.allclose(out, [[1.0, 1.0], [2.0, -2.0]])


def test_double_standardize_converges_and_is_idempotent():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((12, 9)) * 3.0 + 1.5
    out = double_standardize(x)
    assert np.max(np.abs(out.mean(axis=0))) < 1e-8
    assert np.max(np.abs(out.mean(axis=1))) < 1e-8
    assert np.max(np.abs(out.var(axis=0) - 1)) < 1e-8
    assert np.max(np.abs(out.var(axis=1) - 1)) < 1e-8
    again = double_standardize(out)
    assert np.max(np.abs(again - out)) < 1e-10


def test_double_standardize_single_sweep_does_not_close():
    # One row+column pass leaves the rows disturbed on generic input; the
    # converged fixed point satisfies both constraints.
    rng = np.random.default_rng(8)
    x = rng.standard_normal((3, 3)) * np.array([1.0, 5.0, 0.2])
    one = x - x.mean(axis=1, keepdims=True)
    one /= one.std(axis=1, keepdims=True)
    one = one - one.mean(axis=0, keepdims=True)
    one /= one.std(axis=0, keepdims=True)
    assert np.max(np.abs(one.mean(axis=1))) > 1e-8
    out = double_standardize(x)
    assert np.max(np.abs(out.mean(axis=1))) < 1e-8


def test_double_standardize_rank_effect():
    rng = np.random.default_rng(9)
    out = double_standardize(rng.standard_normal((10, 8)))
    s = np.linalg.svd(out, compute_uv=False)
    assert s[-1] < 1e-8 * s[0]


def test_double_standardize_errors():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((6, 5))
    x[2] = 7.0  # constant row
    with pytest.raises(DegeneracyError):
        double_standardize(x)
    with pytest.raises(ParameterError):
        double_standardize(rng.standard_normal((1, 5)))

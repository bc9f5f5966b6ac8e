"""Synthetic double-matched data with planted joint/individual structure,
evaluation metrics, and preset benchmark settings.

The generator builds each signal as A_k = (F_k Q_1k) D_k (G_k Q_2k)^T:

- F_k holds standard basis vectors of R^n. The joint columns (shared by
  both views) occupy positions drawn from 1..n/2; view 1's individual
  columns come from n/2+1..3n/4 and view 2's from 3n/4+1..n, so the joint
  space equals the exact intersection of the two column spaces, individual
  spaces are orthogonal to it, and the individual spaces intersect
  trivially. G_k does the same on the feature side with pools of p.
- Q_1k, Q_2k are Haar-ish rotations (left factors of Gaussian SVDs) mixing
  the planted directions within each view.
- D_k holds singular values drawn uniformly from [0.5, 1.5) and rescaled so
  sum(d^2) = r_k, which fixes ||A_k||_F^2 = r_k.

Noise is i.i.d. Gaussian with sigma_k chosen so that
SNR = ||A_k||_F^2 / E||E_k||_F^2 = r_k / (n p sigma_k^2).

All randomness flows through a seeded PCG64 generator keyed per purpose, so
replications are reproducible and parallel-safe.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneracyError, ParameterError
from .linalg import as_matrix, check_basis, numerical_rank, truncated_svd
from .rank_selection import estimate_joint_rank, estimate_total_rank
from .subspaces import principal_angles

__all__ = [
    "SimulationConfig",
    "GroundTruth",
    "generate",
    "relative_error",
    "absolute_error",
    "chordal_distance",
    "check_ground_truth",
    "run_setting",
    "PRESET_NAMES",
    "RESULT_COLUMNS",
]

PRESET_NAMES = ("S1", "S2", "S3", "S4", "S5", "S6", "TCGA")
RESULT_COLUMNS = ("rep", "method", "view", "part", "metric", "value")


@dataclass(frozen=True)
class SimulationConfig:
    """Dimensions, rank profile, signal-to-noise ratio, and seed for one
    generated pair of views."""

    n: int
    p: int
    r1: int
    r2: int
    rc: int
    rr: int
    snr: float
    seed: int

    def validate(self) -> None:
        if self.n < 4 or self.p < 4:
            raise ParameterError(f"need n >= 4 and p >= 4, got n={self.n}, p={self.p}")
        if self.r1 < 1 or self.r2 < 1:
            raise ParameterError(f"total ranks must be >= 1, got r1={self.r1}, r2={self.r2}")
        if not 0 <= self.rc <= min(self.r1, self.r2):
            raise ParameterError(f"rc must lie in [0, min(r1, r2)], got {self.rc}")
        if not 0 <= self.rr <= min(self.r1, self.r2):
            raise ParameterError(f"rr must lie in [0, min(r1, r2)], got {self.rr}")
        for r, cap, what in ((self.r1, min(self.n, self.p), "r1"), (self.r2, min(self.n, self.p), "r2")):
            if r > cap:
                raise ParameterError(f"{what} = {r} exceeds min(n, p) = {cap}")
        # Disjoint position pools must be large enough to host the bases.
        pools = {
            "joint column": (self.n // 2, self.rc),
            "view-1 individual column": ((3 * self.n) // 4 - self.n // 2, self.r1 - self.rc),
            "view-2 individual column": (self.n - (3 * self.n) // 4, self.r2 - self.rc),
            "joint row": (self.p // 2, self.rr),
            "view-1 individual row": ((3 * self.p) // 4 - self.p // 2, self.r1 - self.rr),
            "view-2 individual row": (self.p - (3 * self.p) // 4, self.r2 - self.rr),
        }
        for what, (capacity, need) in pools.items():
            if need > capacity:
                raise ParameterError(
                    f"{what} pool holds {capacity} positions but {need} are required"
                )
        if not self.snr > 0:
            raise ParameterError(f"snr must be positive, got {self.snr}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit non-negative integer, got {self.seed}")


@dataclass(frozen=True)
class GroundTruth:
    """One generated instance: planted signals, their joint bases, the
    noisy observations, and the noise levels used."""

    config: SimulationConfig
    a1: np.ndarray
    a2: np.ndarray
    m_true: np.ndarray
    n_true: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    sigma1: float
    sigma2: float


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in key]]))


def _positions(rng: np.random.Generator, lo: int, hi: int, count: int) -> np.ndarray:
    """``count`` distinct positions from [lo, hi), sorted."""
    if count == 0:
        return np.empty(0, dtype=int)
    return np.sort(rng.choice(np.arange(lo, hi), size=count, replace=False))


def _rotation(rng: np.random.Generator, r: int) -> np.ndarray:
    h = rng.standard_normal((r, r))
    u, _, _ = np.linalg.svd(h)
    return u


def generate(cfg: SimulationConfig) -> GroundTruth:
    """Generate one planted pair of double-matched views.

    Deterministic given ``cfg.seed``; the draw order is fixed (column
    positions, row positions, per-view rotations and spectra, noise).
    """
    cfg.validate()
    rng = _rng(cfg.seed)
    n, p = cfg.n, cfg.p

    joint_c = _positions(rng, 0, n // 2, cfg.rc)
    ind1_c = _positions(rng, n // 2, (3 * n) // 4, cfg.r1 - cfg.rc)
    ind2_c = _positions(rng, (3 * n) // 4, n, cfg.r2 - cfg.rc)
    joint_r = _positions(rng, 0, p // 2, cfg.rr)
    ind1_r = _positions(rng, p // 2, (3 * p) // 4, cfg.r1 - cfg.rr)
    ind2_r = _positions(rng, (3 * p) // 4, p, cfg.r2 - cfg.rr)

    eye_n = np.eye(n)
    eye_p = np.eye(p)
    f = (
        eye_n[:, np.concatenate([joint_c, ind1_c])],
        eye_n[:, np.concatenate([joint_c, ind2_c])],
    )
    g = (
        eye_p[:, np.concatenate([joint_r, ind1_r])],
        eye_p[:, np.concatenate([joint_r, ind2_r])],
    )

    signals = []
    sigmas = []
    observed = []
    for k, r in enumerate((cfg.r1, cfg.r2)):
        q1 = _rotation(rng, r)
        q2 = _rotation(rng, r)
        d = rng.uniform(0.5, 1.5, size=r)
        d *= np.sqrt(r / np.sum(d**2))
        a = (f[k] @ q1) * d @ (g[k] @ q2).T
        sigma = float(np.sqrt(r / (n * p * cfg.snr)))
        signals.append(a)
        sigmas.append(sigma)
    for k in range(2):
        observed.append(signals[k] + rng.normal(0.0, sigmas[k], size=(n, p)))

    return GroundTruth(
        config=cfg,
        a1=signals[0],
        a2=signals[1],
        m_true=eye_n[:, joint_c],
        n_true=eye_p[:, joint_r],
        x1=observed[0],
        x2=observed[1],
        sigma1=sigmas[0],
        sigma2=sigmas[1],
    )


def relative_error(est, truth) -> float:
    """Squared Frobenius error of ``est`` relative to ||truth||_F^2."""
    e = as_matrix(est, "est")
    t = as_matrix(truth, "truth")
    if e.shape != t.shape:
        raise ParameterError(f"shapes differ: {e.shape} vs {t.shape}")
    denom = float(np.sum(t * t))
    if denom == 0.0:
        raise ParameterError("truth is zero; use absolute_error instead")
    return float(np.sum((e - t) ** 2)) / denom


def absolute_error(est, truth) -> float:
    """Squared Frobenius error ||est - truth||_F^2."""
    e = as_matrix(est, "est")
    t = as_matrix(truth, "truth")
    if e.shape != t.shape:
        raise ParameterError(f"shapes differ: {e.shape} vs {t.shape}")
    return float(np.sum((e - t) ** 2))


def chordal_distance(u, v) -> float:
    """Normalized subspace distance sqrt(k - sum cos^2 theta_i) / sqrt(k),
    where theta are the principal angles and k the smaller dimension.

    Equals 0 for identical subspaces, 1 for fully orthogonal equal-dimension
    subspaces, and sin(theta) for a pair of lines at angle theta.
    """
    ub = check_basis(u, name="u")
    vb = check_basis(v, ambient_dim=ub.shape[0], name="v")
    if ub.shape[1] == 0 or vb.shape[1] == 0:
        raise ParameterError("chordal distance requires non-empty bases")
    k = min(ub.shape[1], vb.shape[1])
    # sum sin^2 over the principal angles; the angle routine resolves tiny
    # angles exactly, so identical subspaces give 0 rather than sqrt(eps).
    sin2 = float(np.sum(np.sin(principal_angles(ub, vb).angles) ** 2))
    return float(np.sqrt(min(sin2, float(k)) / k))


def _basis_of(x: np.ndarray, rank: int, direction: str) -> np.ndarray:
    sv = truncated_svd(x, rank)
    return sv.u if direction == "column" else sv.v


def check_ground_truth(gt: GroundTruth, tol: float = 1e-8) -> None:
    """Verify the planted structure of a generated instance.

    Raises DegeneracyError when any of the defining conditions fails
    numerically: signals carry exactly the requested ranks and norms, the
    joint bases span the exact intersections, individual parts are
    orthogonal to the joint bases, and the individual spaces intersect
    trivially.
    """
    cfg = gt.config
    for k, (a, r) in enumerate(((gt.a1, cfg.r1), (gt.a2, cfg.r2)), start=1):
        if abs(float(np.sum(a * a)) - r) > 1e-10 * r:
            raise DegeneracyError(f"view {k}: ||A||_F^2 != r within 1e-10 relative")
        if numerical_rank(a) != r:
            raise DegeneracyError(f"view {k}: rank(A) != {r}")
    for direction, joint, rank_joint in (("column", gt.m_true, cfg.rc), ("row", gt.n_true, cfg.rr)):
        b1 = _basis_of(gt.a1, cfg.r1, direction)
        b2 = _basis_of(gt.a2, cfg.r2, direction)
        angles = principal_angles(b1, b2).angles
        n_small = int(np.count_nonzero(angles < np.pi / 4))
        if n_small != rank_joint:
            raise DegeneracyError(
                f"{direction} spaces intersect in dimension {n_small}, expected {rank_joint}"
            )
        if rank_joint > 0:
            for k, b in enumerate((b1, b2), start=1):
                worst = float(np.max(principal_angles(joint, b).angles[:rank_joint]))
                if worst > tol:
                    raise DegeneracyError(
                        f"planted joint {direction} basis is not inside view {k}'s space (angle {worst:.2e})"
                    )
    # Orthogonality of individual parts to the joint bases, and trivial
    # intersection of the individual spaces.
    for direction in ("column", "row"):
        ind = []
        for a, r in ((gt.a1, cfg.r1), (gt.a2, cfg.r2)):
            if direction == "column":
                part = a - gt.m_true @ (gt.m_true.T @ a) if cfg.rc else a
                r_ind = r - cfg.rc
            else:
                part = a - (a @ gt.n_true) @ gt.n_true.T if cfg.rr else a
                r_ind = r - cfg.rr
            joint = gt.m_true if direction == "column" else gt.n_true
            if joint.shape[1] and part.size:
                cross = joint.T @ part if direction == "column" else part @ joint
                if float(np.max(np.abs(cross))) > tol:
                    raise DegeneracyError(f"individual {direction} part is not orthogonal to the joint basis")
            if r_ind > 0:
                ind.append(_basis_of(part, r_ind, direction))
        if len(ind) == 2:
            smallest = float(principal_angles(ind[0], ind[1]).angles[0])
            if smallest < np.pi / 4:
                raise DegeneracyError(
                    f"individual {direction} spaces intersect (smallest angle {smallest:.2e})"
                )


# --- preset benchmark settings -------------------------------------------

def _scaled(value: int, scale: float, floor: int) -> int:
    return max(floor, int(round(value * scale)))


def _preset_ranks(preset: str, rep: int, reps: int, rng: np.random.Generator, scale: float):
    """Per-replication rank profile for a preset.

    Sampled presets draw r1, r2 from {2..20} (scaled) and, where joint
    structure is sampled, rc, rr from {1..min(r1, r2, 5)} (scaled). The
    staged presets split the replications into four equal blocks:
    (0, 0), (0, min), (min, 0), (min, min).
    """
    r_hi = _scaled(20, scale, 2)
    joint_hi = _scaled(5, scale, 1)
    if preset in ("S1", "S2"):
        r1 = int(rng.integers(2, r_hi + 1))
        r2 = int(rng.integers(2, r_hi + 1))
        cap = min(r1, r2, joint_hi)
        rc = int(rng.integers(1, cap + 1))
        rr = int(rng.integers(1, cap + 1))
        return r1, r2, rc, rr
    if preset in ("S3", "S6"):
        if preset == "S3":
            r1 = int(rng.integers(2, r_hi + 1))
            r2 = int(rng.integers(2, r_hi + 1))
        else:
            r1 = _scaled(20, scale, 2)
            r2 = _scaled(18, scale, 2)
        m = min(r1, r2)
        block = min(4 * rep // max(reps, 1), 3)
        rc, rr = ((0, 0), (0, m), (m, 0), (m, m))[block]
        return r1, r2, rc, rr
    if preset in ("S4", "S5"):
        r1 = _scaled(20, scale, 2)
        r2 = _scaled(18, scale, 2)
        m = min(r1, r2)
        return r1, r2, min(_scaled(4, scale, 1), m), min(_scaled(3, scale, 1), m)
    if preset == "TCGA":
        r1 = _scaled(8, scale, 2)
        r2 = _scaled(6, scale, 2)
        return r1, r2, 0, min(_scaled(2, scale, 1), min(r1, r2))
    raise ParameterError(f"unknown preset {preset!r}")


def _preset_frame(preset: str, scale: float):
    """Dimensions and SNR of a preset after scaling."""
    if preset == "TCGA":
        n, p = _scaled(88, scale, 8), _scaled(736, scale, 8)
    else:
        n, p = _scaled(240, scale, 8), _scaled(200, scale, 8)
    snr = 0.5 if preset in ("S2", "S5") else 1.0
    return n, p, snr


def _rep_rows(preset: str, rep: int, reps: int, seed: int, scale: float, methods) -> list[dict]:
    n, p, snr = _preset_frame(preset, scale)
    rng = _rng(seed, rep)
    r1, r2, rc, rr = _preset_ranks(preset, rep, reps, rng, scale)
    cfg = SimulationConfig(
        n=n, p=p, r1=r1, r2=r2, rc=rc, rr=rr, snr=snr,
        seed=int(rng.integers(0, 2**63)),
    )
    return _rows_for_instance(cfg, rep, methods)


def _rep_rows_custom(n, p, r1, r2, rc, rr, snr, rep: int, seed: int, methods) -> list[dict]:
    rng = _rng(seed, rep)
    cfg = SimulationConfig(
        n=n, p=p, r1=r1, r2=r2, rc=rc, rr=rr, snr=snr,
        seed=int(rng.integers(0, 2**63)),
    )
    return _rows_for_instance(cfg, rep, methods)


def _rows_for_instance(cfg: SimulationConfig, rep: int, methods) -> list[dict]:
    from .pipeline import dmmd  # deferred: pipeline imports this module

    gt = generate(cfg)
    rows: list[dict] = []

    def add(method, view, part, metric, value):
        rows.append(
            {"rep": rep, "method": method, "view": view, "part": part,
             "metric": metric, "value": float(value)}
        )

    add("truth", 1, "total", "rank", cfg.r1)
    add("truth", 2, "total", "rank", cfg.r2)
    add("truth", 0, "joint_col", "rank", cfg.rc)
    add("truth", 0, "joint_row", "rank", cfg.rr)

    if "pl" in methods:
        est1 = estimate_total_rank(gt.x1)
        est2 = estimate_total_rank(gt.x2)
        add("pl", 1, "total", "rank", est1)
        add("pl", 2, "total", "rank", est2)
        for direction, part in (("column", "joint_col"), ("row", "joint_row")):
            b1 = _basis_of(gt.x1, est1, direction)
            b2 = _basis_of(gt.x2, est2, direction)
            angles = principal_angles(b1, b2).angles
            add("pl", 0, part, "rank", estimate_joint_rank(angles))

    truth_parts = {}
    for k, a in ((1, gt.a1), (2, gt.a2)):
        j_col = gt.m_true @ (gt.m_true.T @ a) if cfg.rc else np.zeros_like(a)
        j_row = (a @ gt.n_true) @ gt.n_true.T if cfg.rr else np.zeros_like(a)
        truth_parts[k] = {
            "total": a,
            "joint_col": j_col,
            "individual_col": a - j_col,
            "joint_row": j_row,
            "individual_row": a - j_row,
        }

    def add_errors(method, k, estimated_parts):
        for part, truth in truth_parts[k].items():
            if part not in estimated_parts:
                continue
            est = estimated_parts[part]
            add(method, k, part, "absolute_error", absolute_error(est, truth))
            if np.any(truth):
                add(method, k, part, "relative_error", relative_error(est, truth))

    if "tsvd" in methods:
        for k, x in ((1, gt.x1), (2, gt.x2)):
            r = cfg.r1 if k == 1 else cfg.r2
            add_errors("tsvd", k, {"total": truncated_svd(x, r).reconstruct()})

    for method in ("dmmd", "dmmd_i"):
        if method not in methods:
            continue
        result = dmmd(
            gt.x1, gt.x2, r1=cfg.r1, r2=cfg.r2, rc=cfg.rc, rr=cfg.rr,
            variant="plain" if method == "dmmd" else "iterative",
        )
        for k, view in ((1, result.decomposition.views[0]), (2, result.decomposition.views[1])):
            add_errors(
                method, k,
                {
                    "total": view.a,
                    "joint_col": view.j_col,
                    "individual_col": view.i_col,
                    "joint_row": view.j_row,
                    "individual_row": view.i_row,
                },
            )
            add(method, k, "total", "objective", view.objective_trace[-1])
        if cfg.rc > 0 and result.decomposition.m_basis.shape[1] > 0:
            add(method, 0, "joint_col", "chordal_distance",
                chordal_distance(result.decomposition.m_basis, gt.m_true))
        if cfg.rr > 0 and result.decomposition.n_basis.shape[1] > 0:
            add(method, 0, "joint_row", "chordal_distance",
                chordal_distance(result.decomposition.n_basis, gt.n_true))
    return rows


def run_setting(
    preset: str,
    reps: int,
    scale: float = 1.0,
    seed: int = 0,
    methods=("pl", "tsvd", "dmmd"),
    threads: int | None = None,
) -> list[dict]:
    """Run a preset benchmark and return one flat long-format table.

    Each row is a dict with keys ``rep, method, view, part, metric, value``
    (see RESULT_COLUMNS); view 0 marks quantities shared across views.
    Replications draw from independent substreams of ``seed`` and run in
    parallel up to ``threads`` workers; the table is always assembled in
    replication order, so output is identical for any thread count.
    """
    if preset not in PRESET_NAMES:
        raise ParameterError(f"unknown preset {preset!r}; choose one of {PRESET_NAMES}")
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    if not scale > 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    unknown = set(methods) - {"pl", "tsvd", "dmmd", "dmmd_i"}
    if unknown:
        raise ParameterError(f"unknown methods: {sorted(unknown)}")
    if threads is not None and threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")

    def work(rep: int) -> list[dict]:
        return _rep_rows(preset, rep, reps, seed, scale, methods)

    if threads is None or threads == 1:
        chunks = [work(rep) for rep in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, range(reps)))
    return [row for chunk in chunks for row in chunk]

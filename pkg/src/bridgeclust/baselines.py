"""Transport-based and nearest-neighbor baselines.

Entropic OT with barycentric mapping needs a cross-space cost; since the two
spaces have different dimensions, the cost is squared distance after a ridge
map fitted on the paired examples.  Gromov-Wasserstein alignment needs no
cross-space cost: it matches intra-space distance structure by iterated
linearization, each outer step solving an entropic transport subproblem, and
uses the paired set only to pick among restarts.  All Sinkhorn iterations run
in the log domain so small regularization stays stable.

Cost matrices are normalized by their mean (and distance matrices by their
max) before solving, so regularization strengths are scale-free knobs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp
from sklearn.linear_model import Ridge

from .core import DataSplit, NumericError, PairedSet, PointSet, rng_from


@dataclass
class TransportPlan:
    """A nonnegative coupling with prescribed marginals.

    ``converged`` is False when the iteration budget ran out; the plan is
    still returned, carrying its final marginal violation.
    """

    coupling: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    eps: float
    n_iter: int
    converged: bool
    marginal_violation: float
    potentials: tuple | None = None

    @property
    def n_entries(self) -> int:
        return self.coupling.size


@dataclass
class GwConfig:
    eps: float = 5e-3
    max_iter: int = 200
    tol: float = 1e-5
    inner_max_iter: int = 2000
    inner_tol: float = 1e-7

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def knn_predict(paired: PairedSet, x_test, k_neighbors: int) -> np.ndarray:
    """Mean of the outputs of the k nearest paired inputs (ties by index)."""
    if k_neighbors > paired.k:
        raise ValueError(f"k_neighbors={k_neighbors} exceeds the {paired.k} paired samples")
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")
    queries = x_test.points if isinstance(x_test, PointSet) else np.asarray(x_test, float)
    d2 = ((queries[:, None, :] - paired.x_points[None, :, :]) ** 2).sum(axis=2)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k_neighbors]
    return paired.y_points[neighbors].mean(axis=1)


def sinkhorn(cost: np.ndarray, mu: np.ndarray, nu: np.ndarray, eps: float,
             max_iter: int = 2000, tol: float = 1e-6,
             init_potentials: tuple | None = None) -> TransportPlan:
    """Log-domain Sinkhorn scaling until the worst marginal violation of the
    implied coupling drops below ``tol``.

    ``init_potentials`` warm-starts the dual variables (used by the GW outer
    loop, whose subproblems change slowly).
    """
    cost = np.asarray(cost, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if not np.isfinite(cost).all():
        raise NumericError("cost matrix contains non-finite entries")
    if (mu <= 0).any() or (nu <= 0).any():
        raise ValueError("marginals must be strictly positive")
    if abs(mu.sum() - 1.0) > 1e-9 or abs(nu.sum() - 1.0) > 1e-9:
        raise ValueError("marginals must each sum to 1")
    if eps <= 0:
        raise ValueError("eps must be positive")

    log_mu = np.log(mu)
    log_nu = np.log(nu)
    if init_potentials is None:
        f = np.zeros_like(mu)
        g = np.zeros_like(nu)
    else:
        f, g = (np.asarray(p, dtype=np.float64).copy() for p in init_potentials)
    neg_cost = -cost / eps
    violation = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f = eps * (log_mu - logsumexp(neg_cost + g[None, :] / eps, axis=1))
        g = eps * (log_nu - logsumexp(neg_cost + f[:, None] / eps, axis=0))
        # Column marginals are exact after the g-update; only rows can drift.
        log_rows = f / eps + logsumexp(neg_cost + g[None, :] / eps, axis=1)
        violation = float(np.abs(np.exp(log_rows) - mu).max())
        if violation < tol:
            converged = True
            break
    coupling = np.exp(neg_cost + f[:, None] / eps + g[None, :] / eps)
    return TransportPlan(coupling=coupling, mu=mu, nu=nu, eps=eps, n_iter=it,
                         converged=converged, marginal_violation=violation,
                         potentials=(f, g))


def barycentric_projection(plan: TransportPlan, targets: np.ndarray) -> np.ndarray:
    """Coupling-weighted averages of the target points, one per source row."""
    row_sums = plan.coupling.sum(axis=1, keepdims=True)
    safe = np.where(row_sums > 0, row_sums, 1.0)
    return (plan.coupling @ targets) / safe


def _roles(split: DataSplit, direction: str):
    if direction == "forward":
        return (split.x_pool, split.y_pool, split.paired.x_points,
                split.paired.y_points, split.x_test)
    if direction == "inverse":
        return (split.y_pool, split.x_pool, split.paired.y_points,
                split.paired.x_points, split.y_test)
    raise ValueError(f"unknown direction {direction!r}")


def _source_rows(split: DataSplit, src_pool: PointSet, paired_src: np.ndarray,
                 queries: PointSet, include_paired: bool):
    """Stack the source-side rows and locate paired/query rows inside them.

    Transductive queries are the pool itself, so no rows are appended for
    them; inductive queries are appended at the tail.
    """
    blocks = [src_pool.points]
    paired_idx = None
    if include_paired:
        paired_idx = np.arange(src_pool.n, src_pool.n + paired_src.shape[0])
        blocks.append(paired_src)
    if split.mode == "transductive":
        query_idx = np.arange(src_pool.n)
    else:
        start = sum(b.shape[0] for b in blocks)
        query_idx = np.arange(start, start + queries.n)
        blocks.append(queries.points)
    return np.vstack(blocks), paired_idx, query_idx


def eot_predict(split: DataSplit, eps: float = 0.2, ridge_alpha: float = 1e-2,
                tol: float = 1e-6, max_iter: int = 2000, direction: str = "forward",
                enlarge_pools: bool = True) -> np.ndarray:
    """Entropic OT with barycentric mapping.

    A ridge map fitted on the paired set carries source points into the target
    space; squared distances there (normalized by their mean) form the
    transport cost, solved with uniform marginals.  Each query is answered by
    the coupling-weighted average of the target pool.
    """
    src_pool, tgt_pool, paired_src, paired_tgt, queries = _roles(split, direction)
    source, _, query_idx = _source_rows(split, src_pool, paired_src, queries,
                                        include_paired=enlarge_pools)
    targets = np.vstack([tgt_pool.points, paired_tgt]) if enlarge_pools else tgt_pool.points

    ridge = Ridge(alpha=ridge_alpha)
    ridge.fit(paired_src, paired_tgt)
    mapped = ridge.predict(source)

    cost = cdist(mapped, targets, metric="sqeuclidean")
    scale = cost.mean()
    if scale > 0:
        cost = cost / scale
    n_s, n_t = cost.shape
    plan = sinkhorn(cost, np.full(n_s, 1.0 / n_s), np.full(n_t, 1.0 / n_t),
                    eps=eps, max_iter=max_iter, tol=tol)
    return barycentric_projection(plan, targets)[query_idx]


def gw_align(dist_x: np.ndarray, dist_y: np.ndarray, mu: np.ndarray, nu: np.ndarray,
             config: GwConfig, seed: int | None = None) -> TransportPlan:
    """Entropic Gromov-Wasserstein coupling by iterated linearization.

    Each outer step builds the square-loss gradient cost from the current
    coupling and solves a Sinkhorn subproblem; stops when the L1 change of
    the coupling falls below ``config.tol``.  ``seed`` perturbs the initial
    coupling (restart diversity); ``None`` starts from the independent
    coupling.  The perturbation is drawn swap-covariantly, so exchanging the
    two spaces with the same seed transposes the result.
    """
    dist_x = np.asarray(dist_x, dtype=np.float64)
    dist_y = np.asarray(dist_y, dtype=np.float64)
    _check_metric(dist_x, "dist_x")
    _check_metric(dist_y, "dist_y")
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)

    T = np.outer(mu, nu)
    if seed is not None:
        T = T * np.exp(_swap_covariant_noise(len(mu), len(nu), seed))
        T *= 1.0 / T.sum()

    # Square-loss decomposition: lin_cost = constC - 2 * Dx @ T @ Dy.
    const_c = (dist_x ** 2 @ mu)[:, None] + ((dist_y ** 2 @ nu)[None, :])
    converged = False
    it = 0
    plan = None
    potentials = None
    for it in range(1, config.max_iter + 1):
        lin_cost = const_c - 2.0 * dist_x @ T @ dist_y
        plan = sinkhorn(lin_cost, mu, nu, eps=config.eps,
                        max_iter=config.inner_max_iter, tol=config.inner_tol,
                        init_potentials=potentials)
        potentials = plan.potentials
        change = float(np.abs(plan.coupling - T).sum())
        T = plan.coupling
        if change < config.tol:
            converged = True
            break
    return TransportPlan(coupling=T, mu=mu, nu=nu, eps=config.eps, n_iter=it,
                         converged=converged and plan.converged,
                         marginal_violation=plan.marginal_violation,
                         potentials=plan.potentials)


def _check_metric(d: np.ndarray, name: str) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(d, d.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    if not np.allclose(np.diag(d), 0.0, atol=1e-10):
        raise ValueError(f"{name} must have a zero diagonal")


def _swap_covariant_noise(n: int, m: int, seed: int) -> np.ndarray:
    """A seeded (n, m) noise slice of a symmetric square matrix, so the (m, n)
    slice under the same seed is its exact transpose."""
    k = max(n, m)
    R = rng_from(seed).standard_normal((k, k))
    R = (R + R.T) / np.sqrt(2.0)
    return R[:n, :m]


def gw_distortion(dist_x: np.ndarray, dist_y: np.ndarray, coupling: np.ndarray) -> float:
    """Square-loss GW objective of a coupling (useful for diagnostics/tests)."""
    mu = coupling.sum(axis=1)
    nu = coupling.sum(axis=0)
    const_c = (dist_x ** 2 @ mu)[:, None] + ((dist_y ** 2 @ nu)[None, :])
    return float(((const_c - 2.0 * dist_x @ coupling @ dist_y) * coupling).sum())


def gw_predict(split: DataSplit, config: GwConfig, seed: int = 0,
               direction: str = "forward", n_restarts: int = 3,
               enlarge_pools: bool = True) -> np.ndarray:
    """GW alignment of the two pools' distance geometries plus barycentric
    read-out.  GW alone cannot tell a coupling from its compositions with
    self-isometries, so the paired examples pick the restart whose coupling
    predicts them best."""
    src_pool, tgt_pool, paired_src, paired_tgt, queries = _roles(split, direction)
    # Paired rows always ride along on the source side: restart selection
    # needs their predictions.
    source, paired_idx, query_idx = _source_rows(split, src_pool, paired_src, queries,
                                                 include_paired=True)
    targets = np.vstack([tgt_pool.points, paired_tgt]) if enlarge_pools else tgt_pool.points

    dist_s = cdist(source, source)
    dist_t = cdist(targets, targets)
    for d in (dist_s, dist_t):
        peak = d.max()
        if peak > 0:
            d /= peak
    np.fill_diagonal(dist_s, 0.0)
    np.fill_diagonal(dist_t, 0.0)

    n_s, n_t = dist_s.shape[0], dist_t.shape[0]
    mu = np.full(n_s, 1.0 / n_s)
    nu = np.full(n_t, 1.0 / n_t)

    best_pred = None
    best_err = np.inf
    for r in range(n_restarts):
        restart_seed = None if r == 0 else int(rng_from(seed, r).integers(2 ** 63))
        plan = gw_align(dist_s, dist_t, mu, nu, config, seed=restart_seed)
        pred = barycentric_projection(plan, targets)
        err = float(((pred[paired_idx] - paired_tgt) ** 2).mean())
        if err < best_err:
            best_err = err
            best_pred = pred
    return best_pred[query_idx]

"""Discount annealing: an initializer that reaches a jointly stabilizing
gain starting from K = 0 by optimizing a sequence of discounted ensembles.

A discount gamma scales every sampled (A, B) by sqrt(gamma), which makes
K = 0 feasible for small enough gamma.  Each stage runs the minibatched
SGD inner loop at the current gamma, then grows gamma so that the
(estimated) DR cost lands in the controlled band (2J, 4J]; gamma reaches
1.0 after finitely many stages because a bounded cost caps the closed-loop
spectral radius away from 1/sqrt(gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lqr
from .domains import Domain, DiscountedDomain, scale_plant
from .errors import AnnealingError, InstabilityError
from .lqr import CostSpec, PlantSample, _neumaier_mean
from .optimizer import OptimizerConfig, RunRecord, _draw_batch, dr_sgd
from .rng import Seed, make_rng

# Substream keys off the annealing seed (disjoint from the optimizer's 0..2).
_STREAM_ENSEMBLE = 10
_STREAM_VALIDATE = 11
_STREAM_INNER = 12


@dataclass(frozen=True)
class AnnealConfig:
    gamma_tol: float = 1e-4
    inner_budget: int = 400
    inner_eps: float = 1.0
    max_stages: int = 200
    ensemble_size: int = 64
    seed: Seed = 0
    # Inner-loop knobs.  inner_eta=None picks a per-stage step size from a
    # curvature proxy on the evaluation ensemble; each retry quarters it.
    inner_eta: float | None = None
    inner_minibatch: int = 8
    stage_retries: int = 3
    n_validate: int = 1000

    def __post_init__(self):
        if not 0.0 < self.gamma_tol <= 1e-2:
            raise ValueError("gamma_tol must lie in (0, 1e-2]")
        if self.inner_budget < 1 or self.max_stages < 1 or self.ensemble_size < 1:
            raise ValueError("inner_budget, max_stages and ensemble_size must be >= 1")
        if self.inner_eps <= 0.0:
            raise ValueError("inner_eps must be positive")
        if self.inner_eta is not None and self.inner_eta <= 0.0:
            raise ValueError("inner_eta must be positive when given")
        if self.inner_minibatch < 1 or self.n_validate < 1 or self.stage_retries < 0:
            raise ValueError("inner_minibatch, n_validate must be >= 1; stage_retries >= 0")


@dataclass(eq=False)
class AnnealResult:
    """Final gain plus the per-stage audit trail.

    gamma_history[i] is the discount of stage i (last entry 1.0);
    stage_start_costs[i] and stage_gains[i] are the ensemble DR-cost
    estimate and the gain when stage i began; final_cost is the estimate
    at gamma = 1 after the last inner run.
    """

    K: np.ndarray
    gamma_history: list[float]
    stage_costs: list[float]
    stage_gains: list[np.ndarray] = field(default_factory=list)
    final_cost: float = math.nan
    ensemble: list[PlantSample] = field(default_factory=list)
    final_record: RunRecord | None = None

    def __iter__(self):
        # (K, gamma_history, stage_costs) tuple view
        return iter((self.K, self.gamma_history, self.stage_costs))


def discounted_cost(K: np.ndarray, theta: PlantSample, cost: CostSpec, gamma: float) -> float:
    """J(K, gamma * theta): the LQR cost of the sqrt(gamma)-scaled plant."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    return lqr.lqr_cost(K, scale_plant(theta, gamma), cost)


def _ensemble_stacks(ensemble: Sequence[PlantSample]) -> tuple[np.ndarray, np.ndarray]:
    return lqr.stack_plants(list(ensemble))


def _ensemble_cost(K: np.ndarray, a_stack: np.ndarray, b_stack: np.ndarray, cost: CostSpec, gamma: float) -> float:
    root = math.sqrt(gamma)
    costs, _, stable = lqr.batch_quantities(K, root * a_stack, root * b_stack, cost, need_grad=False)
    if not np.all(stable):
        return math.inf
    return float(_neumaier_mean(costs[:, None])[0])


def _resolve_ensemble(
    domain_or_ensemble: Domain | Sequence[PlantSample],
    cfg: AnnealConfig,
) -> list[PlantSample]:
    if hasattr(domain_or_ensemble, "sample"):
        rng = make_rng(cfg.seed, _STREAM_ENSEMBLE)
        return [domain_or_ensemble.sample(rng) for _ in range(cfg.ensemble_size)]
    return list(domain_or_ensemble)


def find_initial_gamma(
    domain_or_ensemble: Domain | Sequence[PlantSample],
    cost: CostSpec,
    cfg: AnnealConfig,
    bound: float | None = None,
) -> float:
    """Largest gamma (to within gamma_tol, by bisection) at which the zero
    gain's ensemble DR cost is at most `bound` (default 8 n_x).

    The discounted cost is nondecreasing in gamma, so bisection applies.
    Returns 1.0 outright when even the undiscounted cost meets the bound.
    """
    ensemble = _resolve_ensemble(domain_or_ensemble, cfg)
    if not ensemble:
        raise ValueError("empty ensemble")
    n_x = ensemble[0].n_x
    if bound is None:
        bound = 8.0 * n_x
    a_stack, b_stack = _ensemble_stacks(ensemble)
    K0 = np.zeros((ensemble[0].n_u, n_x))

    if _ensemble_cost(K0, a_stack, b_stack, cost, 1.0) <= bound:
        return 1.0
    lo = cfg.gamma_tol
    if _ensemble_cost(K0, a_stack, b_stack, cost, lo) > bound:
        raise AnnealingError(
            f"zero gain exceeds the cost bound {bound:g} even at gamma = {lo:g}"
        )
    hi = 1.0
    while hi - lo > cfg.gamma_tol:
        mid = 0.5 * (lo + hi)
        if _ensemble_cost(K0, a_stack, b_stack, cost, mid) <= bound:
            lo = mid
        else:
            hi = mid
    return lo


def gamma_update(
    K: np.ndarray,
    domain_or_ensemble: Domain | Sequence[PlantSample],
    cost: CostSpec,
    gamma: float,
    cfg: AnnealConfig,
) -> float:
    """Next discount: 1.0 when J(K, 1) <= 4 J(K, gamma) (terminal), else a
    gamma' in (gamma, 1) whose cost lands in the band (2J, 4J]."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    ensemble = _resolve_ensemble(domain_or_ensemble, cfg)
    a_stack, b_stack = _ensemble_stacks(ensemble)
    j_cur = _ensemble_cost(K, a_stack, b_stack, cost, gamma)
    if not math.isfinite(j_cur):
        raise AnnealingError(f"gain is infeasible at the current discount {gamma:g}")
    j_one = _ensemble_cost(K, a_stack, b_stack, cost, 1.0)
    if j_one <= 4.0 * j_cur:
        return 1.0
    lo, hi = gamma, 1.0
    # Invariant: cost(lo) <= 2 j_cur < cost in (2j, inf] at hi.  The cost is
    # continuous and nondecreasing in gamma, so the band (2J, 4J] has
    # positive width and bisection lands inside it.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        j_mid = _ensemble_cost(K, a_stack, b_stack, cost, mid)
        if j_mid <= 2.0 * j_cur:
            lo = mid
        elif j_mid <= 4.0 * j_cur:
            return mid
        else:
            hi = mid
    raise AnnealingError(
        f"discount bisection failed to land in the cost band at gamma = {gamma:g}"
    )


def _stage_eta(K: np.ndarray, a_stack: np.ndarray, b_stack: np.ndarray, cost: CostSpec, gamma: float) -> float:
    """Curvature-proxy step size: 1/2 over the largest member Hessian scale
    2 ||R + B'PB|| ||Sigma||, capped by a relative trust region on ||K||."""
    root = math.sqrt(gamma)
    a_s, b_s = root * a_stack, root * b_stack
    costs, grads, stable = lqr.batch_quantities(K, a_s, b_s, cost)
    if not np.all(stable):
        raise AnnealingError("stage step-size probe hit an infeasible member")
    curvature = 0.0
    for a, b in zip(a_s, b_s):
        theta = PlantSample(a, b)
        p = lqr.cost_to_go(K, theta, cost)
        sig = lqr.state_cov(K, theta, cost)
        gram = cost.R + b.T @ p @ b
        curvature = max(
            curvature,
            2.0 * float(np.linalg.norm(gram, 2)) * float(np.linalg.norm(sig, 2)),
        )
    g0 = _neumaier_mean(grads)
    g0_norm = float(np.linalg.norm(g0, "fro"))
    eta = 0.5 / curvature
    cap = 0.05 * (1.0 + float(np.linalg.norm(K, 2))) / (g0_norm + 1e-12)
    return min(eta, cap)


def _stage_inf_estimate(ensemble: Sequence[PlantSample], cost: CostSpec, gamma: float) -> float:
    """Mean of the per-member optimal costs at discount gamma (a lower
    bound on the ensemble DR optimum, tight enough for stage targets)."""
    vals = []
    for theta in ensemble:
        scaled = scale_plant(theta, gamma)
        p, _ = lqr.solve_dare(scaled, cost)
        vals.append(float(np.trace(p @ cost.Sigma_w)))
    return float(np.mean(vals))


def discount_annealing(
    domain: Domain,
    cost: CostSpec,
    cfg: AnnealConfig,
) -> AnnealResult:
    """Algorithm: from K = 0, find the largest feasible initial discount,
    then alternate SGD inner runs with controlled discount growth until
    gamma = 1.  The returned gain is validated on n_validate fresh samples.

    Each inner run stops on the gradient proxy ||g||_F <=
    inner_eps * sigma_min(Sigma_w) / (2 J) and must bring the stage cost
    to at most twice the per-member-optimal mean; otherwise it retries
    from the current iterate with a quartered step size.
    """
    ensemble = _resolve_ensemble(domain, cfg)
    a_stack, b_stack = _ensemble_stacks(ensemble)
    n_x, n_u = domain.n_x, domain.n_u
    K = np.zeros((n_u, n_x))

    gamma = find_initial_gamma(ensemble, cost, cfg)
    result = AnnealResult(K=K, gamma_history=[gamma], stage_costs=[], stage_gains=[])

    stage = 0
    while True:
        if stage >= cfg.max_stages:
            raise AnnealingError(
                f"exceeded max_stages = {cfg.max_stages} before reaching gamma = 1",
                history=result.gamma_history,
            )
        result.stage_gains.append(np.array(K))
        result.stage_costs.append(_ensemble_cost(K, a_stack, b_stack, cost, gamma))
        K, record = _run_stage(K, domain, ensemble, a_stack, b_stack, cost, gamma, cfg, stage)
        if gamma >= 1.0:
            result.final_record = record
            break
        gamma_next = gamma_update(K, ensemble, cost, gamma, cfg)
        if not gamma_next > gamma:
            raise AnnealingError(
                f"discount failed to increase at stage {stage} (gamma = {gamma:g})",
                history=result.gamma_history,
            )
        gamma = gamma_next
        result.gamma_history.append(gamma)
        stage += 1

    result.K = K
    result.final_cost = _ensemble_cost(K, a_stack, b_stack, cost, 1.0)
    _validate_gain(K, domain, cost, cfg)
    return result


def _run_stage(
    K: np.ndarray,
    domain: Domain,
    ensemble: Sequence[PlantSample],
    a_stack: np.ndarray,
    b_stack: np.ndarray,
    cost: CostSpec,
    gamma: float,
    cfg: AnnealConfig,
    stage: int,
) -> tuple[np.ndarray, RunRecord]:
    j_start = _ensemble_cost(K, a_stack, b_stack, cost, gamma)
    if not math.isfinite(j_start):
        raise AnnealingError(f"stage {stage} starts from an infeasible gain at gamma = {gamma:g}")
    target = 2.0 * _stage_inf_estimate(ensemble, cost, gamma)
    discounted = DiscountedDomain(domain, gamma)
    scaled_ensemble = [scale_plant(t, gamma) for t in ensemble]
    eta = cfg.inner_eta if cfg.inner_eta is not None else _stage_eta(K, a_stack, b_stack, cost, gamma)

    best_k, best_cost, best_record = np.array(K), j_start, None
    for attempt in range(cfg.stage_retries + 1):
        grad_tol = cfg.inner_eps * cost.sigma_min_w / (2.0 * max(best_cost, 1.0))
        ocfg = OptimizerConfig(
            eta=eta,
            steps=cfg.inner_budget,
            minibatch=cfg.inner_minibatch,
            eval_every=cfg.inner_budget,
            n_eval=max(2, min(cfg.ensemble_size, 50)),
            seed=_inner_seed(cfg.seed, stage, attempt),
            grad_tol=grad_tol,
        )
        record = dr_sgd(best_k, discounted, cost, ocfg, screen_ensemble=scaled_ensemble)
        j_end = _ensemble_cost(record.K_final, a_stack, b_stack, cost, gamma)
        if j_end < best_cost:
            best_k, best_cost, best_record = np.array(record.K_final), j_end, record
        # Stage complete when the cost hits the per-member-optimum target or
        # the gradient proxy certified near-stationarity without regression.
        if best_cost <= target:
            return best_k, best_record if best_record is not None else record
        if record.grad_stop_step is not None and j_end <= j_start:
            return best_k, best_record if best_record is not None else record
        eta *= 0.25
    if best_record is None or not best_cost < j_start:
        raise AnnealingError(
            f"stage {stage} made no progress at gamma = {gamma:g} "
            f"(cost {j_start:g}, target {target:g})"
        )
    return best_k, best_record


def _inner_seed(seed: Seed, stage: int, attempt: int) -> tuple[int, ...]:
    base = (seed,) if isinstance(seed, int) else tuple(int(s) for s in seed)
    return base + (_STREAM_INNER, stage, attempt)


def _validate_gain(K: np.ndarray, domain: Domain, cost: CostSpec, cfg: AnnealConfig) -> None:
    rng = make_rng(cfg.seed, _STREAM_VALIDATE)
    a_stack, b_stack = _draw_batch(domain, rng, cfg.n_validate)
    _, _, stable = lqr.batch_quantities(K, a_stack, b_stack, cost, need_grad=False)
    if not np.all(stable):
        bad = int(np.flatnonzero(~stable)[0])
        raise InstabilityError(
            f"annealed gain fails to stabilize validation sample {bad} "
            f"of {cfg.n_validate}"
        )

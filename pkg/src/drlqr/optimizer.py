"""Minibatched stochastic policy gradient descent on the DR-LQR cost, exact
gradient descent on a fixed ensemble, and the fixed-sample SA baseline.

All three modes emit a RunRecord trace.  For a given config seed the trace
is bit-identical across executions: sampling uses named Philox substreams
(optimization, evaluation, screening are independent), and minibatch means
reduce with compensated summation in member order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lqr
from .domains import Domain
from .errors import InstabilityError
from .lqr import CostSpec, PlantSample, _neumaier_mean
from .rng import Seed, make_rng

# Substream keys off the config seed.
_STREAM_OPT = 0
_STREAM_EVAL = 1
_STREAM_SCREEN = 2

MODES = ("dr_sgd", "exact_gd", "sa_fixed")


@dataclass(frozen=True)
class OptimizerConfig:
    eta: float
    steps: int
    minibatch: int = 8
    mode: str = "dr_sgd"
    eval_every: int = 1
    n_eval: int = 100
    seed: Seed = 0
    stop_on_infeasible: bool = False
    # Early stop once ||g||_F <= grad_tol (0 disables).  Used by the
    # discount-annealing inner runs as the suboptimality proxy.
    grad_tol: float = 0.0
    # Seed for the evaluation stream only (None: derive from `seed`).
    # Sharing it across runs pairs their cost estimates on common draws,
    # so method comparisons are not blurred by evaluation noise.
    eval_seed: Seed | None = None

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.steps < 1 or self.minibatch < 1 or self.eval_every < 1 or self.n_eval < 1:
            raise ValueError("steps, minibatch, eval_every and n_eval must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.grad_tol < 0.0:
            raise ValueError("grad_tol must be nonnegative")


@dataclass(eq=False)
class RunRecord:
    """Per-logged-step optimizer trace plus the final gain."""

    steps: np.ndarray  # logged step indices, strictly increasing
    cost_estimate: np.ndarray  # DR-cost estimate (+inf sentinel allowed)
    grad_norm: np.ndarray  # ||g(K)||_F of the update applied at that step
    k_norm: np.ndarray  # ||K||_2 after the update
    infeasible_events: np.ndarray  # cumulative skipped-member count
    K_final: np.ndarray
    wall_time: float
    # SA only: the surrogate (fixed-ensemble) cost alongside the fresh
    # estimate; None for the other modes.
    surrogate_cost: np.ndarray | None = None
    halted_step: int | None = None  # step at which stop_on_infeasible fired
    grad_stop_step: int | None = None  # step at which grad_tol fired

    def final_cost(self) -> float:
        return float(self.cost_estimate[-1])


def _draw_batch(domain: Domain, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    sample_batch = getattr(domain, "sample_batch", None)
    if sample_batch is not None:
        return sample_batch(rng, count)
    plants = [domain.sample(rng) for _ in range(count)]
    return lqr.stack_plants(plants)


def _eval_rng(cfg: OptimizerConfig, step: int) -> np.random.Generator:
    # Keyed by step, so the estimate logged at step n is the same no matter
    # how many rows were logged before it (eval_every does not reshuffle it).
    seed = cfg.seed if cfg.eval_seed is None else cfg.eval_seed
    return make_rng(seed, _STREAM_EVAL, step)


def _screen(K0: np.ndarray, a_stack: np.ndarray, b_stack: np.ndarray, cost: CostSpec, what: str) -> None:
    _, _, stable = lqr.batch_quantities(K0, a_stack, b_stack, cost, need_grad=False)
    if not np.all(stable):
        bad = int(np.flatnonzero(~stable)[0])
        raise InstabilityError(f"K0 fails the {what} (member {bad} unstable)")


def _eval_cost(K: np.ndarray, a_stack: np.ndarray, b_stack: np.ndarray, cost: CostSpec) -> float:
    costs, _, stable = lqr.batch_quantities(K, a_stack, b_stack, cost, need_grad=False)
    if not np.all(stable):
        return math.inf
    return float(_neumaier_mean(costs[:, None])[0])


class _TraceLogger:
    def __init__(self):
        self.steps: list[int] = []
        self.cost: list[float] = []
        self.grad: list[float] = []
        self.knorm: list[float] = []
        self.infeasible: list[int] = []

    def log(self, step: int, cost: float, grad: float, knorm: float, infeasible: int) -> None:
        self.steps.append(step)
        self.cost.append(cost)
        self.grad.append(grad)
        self.knorm.append(knorm)
        self.infeasible.append(infeasible)

    def record(self, k_final: np.ndarray, wall: float, **extra) -> RunRecord:
        return RunRecord(
            steps=np.asarray(self.steps, dtype=int),
            cost_estimate=np.asarray(self.cost),
            grad_norm=np.asarray(self.grad),
            k_norm=np.asarray(self.knorm),
            infeasible_events=np.asarray(self.infeasible, dtype=int),
            K_final=np.array(k_final),
            wall_time=wall,
            **extra,
        )


def dr_sgd(
    K0: np.ndarray,
    domain: Domain,
    cost: CostSpec,
    cfg: OptimizerConfig,
    screen_ensemble: Sequence[PlantSample] | None = None,
) -> RunRecord:
    """Fresh-minibatch SGD: at each step draw M fresh systems, average their
    policy gradients, and step K <- K - eta g(K).

    Members destabilized by the current K are skipped with the mean
    renormalized over the survivors and counted in infeasible_events
    (or, with stop_on_infeasible, the run halts with a diagnostic record).
    Logging every eval_every steps estimates the DR cost on n_eval fresh
    systems from an evaluation stream independent of the optimization
    stream.  `screen_ensemble` substitutes a caller-supplied feasibility
    screen for the default fresh-sample one (the annealing stages pass
    their fixed evaluation ensemble, which is feasible by construction).
    """
    t0 = time.perf_counter()
    k = np.array(K0, dtype=float)
    rng_opt = make_rng(cfg.seed, _STREAM_OPT)
    rng_screen = make_rng(cfg.seed, _STREAM_SCREEN)

    if screen_ensemble is not None:
        _screen(k, *lqr.stack_plants(list(screen_ensemble)), cost, "screening ensemble")
    else:
        _screen(k, *_draw_batch(domain, rng_screen, cfg.n_eval), cost, "screening ensemble")

    trace = _TraceLogger()
    infeasible_total = 0
    halted: int | None = None
    grad_stop: int | None = None
    for n in range(1, cfg.steps + 1):
        a_stack, b_stack = _draw_batch(domain, rng_opt, cfg.minibatch)
        _, grads, stable = lqr.batch_quantities(k, a_stack, b_stack, cost)
        n_bad = int(cfg.minibatch - np.count_nonzero(stable))
        if n_bad:
            infeasible_total += n_bad
            if cfg.stop_on_infeasible:
                halted = n
        g = _neumaier_mean(grads[stable]) if np.any(stable) else np.zeros_like(k)
        if halted is None:
            k = k - cfg.eta * g
        g_norm = float(np.linalg.norm(g, "fro"))
        if halted is None and cfg.grad_tol > 0.0 and g_norm <= cfg.grad_tol:
            grad_stop = n
        last = halted is not None or grad_stop is not None or n == cfg.steps
        if n % cfg.eval_every == 0 or last:
            eval_cost = _eval_cost(k, *_draw_batch(domain, _eval_rng(cfg, n), cfg.n_eval), cost)
            trace.log(n, eval_cost, g_norm, float(np.linalg.norm(k, 2)), infeasible_total)
        if last:
            break
    return trace.record(k, time.perf_counter() - t0, halted_step=halted, grad_stop_step=grad_stop)


def _fixed_ensemble_descent(
    k0: np.ndarray,
    a_stack: np.ndarray,
    b_stack: np.ndarray,
    cost: CostSpec,
    cfg: OptimizerConfig,
    eval_sampler,
) -> RunRecord:
    """Deterministic gradient descent on a fixed ensemble's average cost.

    `eval_sampler` (or None for the exact ensemble average) provides the
    logged cost estimate; a destabilized ensemble member is a hard error.
    """
    t0 = time.perf_counter()
    k = np.array(k0, dtype=float)
    _screen(k, a_stack, b_stack, cost, "fixed ensemble at K0")
    trace = _TraceLogger()
    surrogate: list[float] = []
    grad_stop: int | None = None
    for n in range(1, cfg.steps + 1):
        costs, grads, stable = lqr.batch_quantities(k, a_stack, b_stack, cost)
        if not np.all(stable):
            bad = int(np.flatnonzero(~stable)[0])
            raise InstabilityError(f"iterate destabilized fixed ensemble member {bad} at step {n}")
        g = _neumaier_mean(grads)
        k = k - cfg.eta * g
        g_norm = float(np.linalg.norm(g, "fro"))
        if cfg.grad_tol > 0.0 and g_norm <= cfg.grad_tol:
            grad_stop = n
        last = n == cfg.steps or grad_stop is not None
        if n % cfg.eval_every == 0 or last:
            surrogate_cost = _eval_cost(k, a_stack, b_stack, cost)
            logged = surrogate_cost if eval_sampler is None else eval_sampler(k, n)
            trace.log(n, logged, g_norm, float(np.linalg.norm(k, 2)), 0)
            surrogate.append(surrogate_cost)
        if last:
            break
    extra = {"surrogate_cost": np.asarray(surrogate)} if eval_sampler is not None else {}
    return trace.record(k, time.perf_counter() - t0, grad_stop_step=grad_stop, **extra)


def exact_gd(
    K0: np.ndarray,
    ensemble: Sequence[PlantSample],
    cost: CostSpec,
    cfg: OptimizerConfig,
) -> RunRecord:
    """Exact gradient descent on the uniform DR cost of a fixed ensemble.

    With eta <= 1/L_K the cost is nonincreasing at every step and iterates
    never leave the feasible set; a destabilized member mid-run is a hard
    error rather than a counted event.
    """
    a_stack, b_stack = lqr.stack_plants(list(ensemble))
    return _fixed_ensemble_descent(K0, a_stack, b_stack, cost, cfg, eval_sampler=None)


def sa_fixed(
    K0: np.ndarray,
    domain: Domain,
    cost: CostSpec,
    cfg: OptimizerConfig,
) -> RunRecord:
    """Sample-average baseline: draw M systems once, then run exact descent
    on that fixed surrogate, logging the fresh-sample DR-cost estimate
    alongside the surrogate cost."""
    rng_opt = make_rng(cfg.seed, _STREAM_OPT)
    a_stack, b_stack = _draw_batch(domain, rng_opt, cfg.minibatch)

    def eval_sampler(k: np.ndarray, step: int) -> float:
        return _eval_cost(k, *_draw_batch(domain, _eval_rng(cfg, step), cfg.n_eval), cost)

    return _fixed_ensemble_descent(K0, a_stack, b_stack, cost, cfg, eval_sampler=eval_sampler)


def run_mode(
    mode: str,
    K0: np.ndarray,
    domain: Domain,
    cost: CostSpec,
    cfg: OptimizerConfig,
    rng_for_exact: np.random.Generator | None = None,
) -> RunRecord:
    """Dispatch helper used by the experiment runner.

    exact_gd draws its fixed ensemble (minibatch-many systems) from the
    optimization stream, mirroring sa_fixed but with exact-cost logging.
    """
    if mode == "dr_sgd":
        return dr_sgd(K0, domain, cost, cfg)
    if mode == "sa_fixed":
        return sa_fixed(K0, domain, cost, cfg)
    if mode == "exact_gd":
        rng = rng_for_exact if rng_for_exact is not None else make_rng(cfg.seed, _STREAM_OPT)
        ensemble = [domain.sample(rng) for _ in range(cfg.minibatch)]
        return exact_gd(K0, ensemble, cost, cfg)
    raise ValueError(f"unknown mode {mode!r}")

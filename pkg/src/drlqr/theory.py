"""Closed-form theory constants: smoothness and Lipschitz bounds, feasibility
radii, Bernstein minibatch sizes, step counts, and the heterogeneity /
set-membership predicates.

Every function here is a pure arithmetic evaluation of a displayed formula;
suprema and infima over the randomization domain are evaluated on finite
ensembles or grids supplied by the caller.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import lqr
from .errors import InfeasibleMemberError
from .lqr import CostSpec, PlantSample

MU_DOMINANCE = 0.125  # gradient-dominance constant mu = 1/8


@dataclass(frozen=True)
class TheoryConstants:
    L_K: float  # smoothness bound on the DR cost Hessian
    c_g: float  # feasibility radius in operator norm
    L_cost: float  # cost Lipschitz constant in K
    r_g: float  # guard radius (computed for reporting; no zeroth-order use)
    G_bar: float  # gradient support bound
    sigma_sq: float  # gradient variance proxy
    eps_grad: float  # allowed gradient-estimation error
    M: int  # minibatch size
    N: int  # gradient step count
    mu: float  # dominance constant
    het_budget: float  # heterogeneity diameter budget

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["M"] = int(d["M"])
        d["N"] = int(d["N"])
        return d


def compute_LK(J0: float, theta_bar_norm: float, cost: CostSpec) -> float:
    """Smoothness bound
    L_K = 4 (||Qblk|| + 2 tb^2 J0 / sw) (1 + 4 tb^2 J0 / sw^2) (2 J0 / sq).
    """
    if not math.isfinite(J0):
        raise ValueError("J0 must be finite")
    if theta_bar_norm < 0.0:
        raise ValueError("theta_bar_norm must be nonnegative")
    tb2 = theta_bar_norm * theta_bar_norm
    sw = cost.sigma_min_w
    return (
        4.0
        * (cost.q_block_op + 2.0 * tb2 * J0 / sw)
        * (1.0 + 4.0 * tb2 * J0 / (sw * sw))
        * (2.0 * J0 / cost.sigma_min_q)
    )


def compute_cg(J_dr_K: float, theta_bar_norm: float, cost: CostSpec) -> float:
    """Feasibility radius c_g = smin(Q) smin(Sigma_w) / (4 J tb (tb + 1)).

    The numerator uses the state block Q alone, per the displayed formula.
    """
    if theta_bar_norm <= 0.0:
        raise ValueError("c_g needs theta_bar_norm > 0 (division guard)")
    if J_dr_K <= 0.0 or not math.isfinite(J_dr_K):
        raise ValueError("c_g needs a finite positive DR cost")
    return cost.sigma_min_state_q * cost.sigma_min_w / (
        4.0 * J_dr_K * theta_bar_norm * (theta_bar_norm + 1.0)
    )


def compute_Lcost(J_dr_K: float, K_norm: float, theta_bar_norm: float, cost: CostSpec) -> float:
    """Cost Lipschitz constant in K:
    4 J ||Qblk|| (2||K|| + 1/(4 tb))
      + (2^3 J^{5/2} tb / (sw^{1/2} sq^{1/2})) (tb 2^{1/2} J^{1/2} / (sq^{1/2} sw^{1/2}) + 1).
    """
    if min(J_dr_K, theta_bar_norm) <= 0.0 or K_norm < 0.0:
        raise ValueError("compute_Lcost needs positive J and theta_bar, K_norm >= 0")
    sw = cost.sigma_min_w
    sq = cost.sigma_min_q
    first = 4.0 * J_dr_K * cost.q_block_op * (2.0 * K_norm + 1.0 / (4.0 * theta_bar_norm))
    second = (8.0 * J_dr_K**2.5 * theta_bar_norm / math.sqrt(sw * sq)) * (
        theta_bar_norm * math.sqrt(2.0 * J_dr_K) / math.sqrt(sq * sw) + 1.0
    )
    return first + second


def compute_rg(ensemble: list[PlantSample], K_gd: np.ndarray, cost: CostSpec) -> float:
    """Guard radius r_g, the infimum over the ensemble of
    min{smin(Qblk) smin(Sigma_w) / (4 J(K,th) ||B|| (||A - BK|| + 1)), ||K||},
    with Qblk the full block cost matrix.
    """
    k = np.asarray(K_gd, dtype=float)
    k_norm = float(np.linalg.norm(k, 2))
    best = math.inf
    for i, theta in enumerate(ensemble):
        j = lqr.lqr_cost(k, theta, cost)
        if math.isinf(j):
            raise InfeasibleMemberError(f"K_gd destabilizes ensemble member {i}", index=i)
        b_norm = float(np.linalg.norm(theta.B, 2))
        cl_norm = float(np.linalg.norm(theta.A - theta.B @ k, 2))
        first = cost.sigma_min_q * cost.sigma_min_w / (4.0 * j * b_norm * (cl_norm + 1.0))
        best = min(best, first, k_norm)
    return best


def grad_theta_lipschitz(J_dr: float, theta_bar_norm: float, cost: CostSpec) -> float:
    """Lipschitz constant of theta -> grad_K J(K, theta) on the sublevel set:
    4 (2^{5/2} J^{5/2} tb / (sw^{3/2} sq^{3/2})
       + 2^{7/2} J^{7/2} tb ||Qblk|| / (sw^{5/2} sq^{7/2})
       + 2^{11/2} J^{9/2} tb^3 / (sw^{7/2} sq^{7/2})).
    """
    sw = cost.sigma_min_w
    sq = cost.sigma_min_q
    tb = theta_bar_norm
    return 4.0 * (
        2.0**2.5 * J_dr**2.5 * tb / (sw**1.5 * sq**1.5)
        + 2.0**3.5 * J_dr**3.5 * tb * cost.q_block_op / (sw**2.5 * sq**3.5)
        + 2.0**5.5 * J_dr**4.5 * tb**3 / (sw**3.5 * sq**3.5)
    )


def compute_Gbar_sigma(
    diam: float,
    grad_lipschitz_theta: float,
    empirical: np.ndarray | None = None,
) -> tuple[float, float]:
    """Support bound G_bar and variance proxy sigma^2 for the minibatch terms.

    Analytic mode (default): the mean-value theorem gives
    ||grad J(K, theta_i) - grad J_DR(K)||_F <= grad_lipschitz_theta * diam,
    so G_bar = grad_lipschitz_theta * diam and sigma^2 = G_bar^2 (the support
    bound dominates the variance).

    Empirical mode: given a stack of sampled gradients at a fixed K, returns
    the max and mean squared Frobenius deviation from their sample mean.
    """
    if diam < 0.0:
        raise ValueError("diam must be nonnegative")
    if empirical is None:
        g_bar = grad_lipschitz_theta * diam
        return g_bar, g_bar * g_bar
    stack = np.asarray(empirical, dtype=float)
    mean = stack.mean(axis=0)
    devs = np.linalg.norm((stack - mean).reshape(stack.shape[0], -1), axis=1)
    return float(devs.max()), float(np.mean(devs**2))


def batch_size_bound(
    eps_grad: float,
    G_bar: float,
    sigma_sq: float,
    delta: float,
    N: int,
    nx: int,
    nu: int,
    variant: str = "appendix",
    sqrt2_sigma: bool = False,
) -> float:
    """Real-valued matrix-Bernstein batch-size bound.

    main variant:     4 (s2 + G eps/3) / eps^2 * log(2 N (nx nu + 1) / delta)
                      with s2 = sqrt(2) sigma^2 when sqrt2_sigma is set
                      (both scalings are in circulation);
    appendix variant: 4 (3 sqrt(2) sigma^2 + G eps) / (3 sqrt(2) eps^2)
                      * log(2 (nx nu + 1) / delta), the per-step bound; the
                      caller applies the union bound over N as delta -> delta/N.
    """
    if eps_grad <= 0.0:
        raise ValueError("eps_grad must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    d = nx * nu + 1
    if variant == "main":
        s2 = math.sqrt(2.0) * sigma_sq if sqrt2_sigma else sigma_sq
        return 4.0 * (s2 + G_bar * eps_grad / 3.0) / eps_grad**2 * math.log(2.0 * N * d / delta)
    if variant == "appendix":
        return (
            4.0
            * (3.0 * math.sqrt(2.0) * sigma_sq + G_bar * eps_grad)
            / (3.0 * math.sqrt(2.0) * eps_grad**2)
            * math.log(2.0 * d / delta)
        )
    raise ValueError(f"unknown batch size variant: {variant!r}")


def batch_size(
    eps_grad: float,
    G_bar: float,
    sigma_sq: float,
    delta: float,
    N: int,
    nx: int,
    nu: int,
    variant: str = "main",
    sqrt2_sigma: bool = False,
) -> int:
    """Integer minibatch size: smallest count strictly above the bound.

    `ceil(bound) + 1` keeps M strictly above the real bound (matching the
    strict inequality in the concentration lemma) and is robust to the
    floating-point evaluation of the transcendental bound; a larger M never
    weakens the guarantee.
    """
    bound = batch_size_bound(eps_grad, G_bar, sigma_sq, delta, N, nx, nu, variant, sqrt2_sigma)
    return int(math.ceil(bound)) + 1


def num_steps(gap0: float, eps: float, L_K: float, degraded: bool = False) -> int:
    """Step count N >= log(gap0/eps) / log(rate denominator).

    Exact-gradient rate 1 - 1/(8 L_K); the degraded flag uses the minibatch
    rate 1 - mu/(2 L_K) = 1 - 1/(16 L_K) at mu = 1/8.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if L_K <= 0.125:
        raise ValueError("num_steps needs L_K > 1/8")
    if gap0 <= eps:
        return 0
    factor = 16.0 * L_K if degraded else 8.0 * L_K
    return int(math.ceil(math.log(gap0 / eps) / math.log(factor / (factor - 1.0))))


def check_heterogeneity(
    ensemble: list[PlantSample],
    cost: CostSpec,
    diam: float,
    appendix_norm: bool = False,
) -> tuple[bool, float]:
    """Prop.-2-style heterogeneity test: diam(Theta) against the budget
    min over theta of 1 / (50000 max(||theta_bar||, 1) J(K_LQR(theta), theta)^6).

    `appendix_norm` swaps max(||theta_bar||, 1) for sup_B max(||B||, 1) (the
    appendix restatement).  Returns (ok, budget).
    """
    if not ensemble:
        raise ValueError("check_heterogeneity needs a nonempty ensemble")
    if appendix_norm:
        norm_term = max(max(float(np.linalg.norm(t.B, 2)) for t in ensemble), 1.0)
    else:
        theta_bar = max(float(np.linalg.norm(t.stacked(), 2)) for t in ensemble)
        norm_term = max(theta_bar, 1.0)
    budget = math.inf
    for theta in ensemble:
        p_star, _ = lqr.solve_dare(theta, cost)
        j_star = float(np.trace(p_star @ cost.Sigma_w))
        budget = min(budget, 1.0 / (50000.0 * norm_term * j_star**6))
    return bool(diam <= budget), budget


def check_S_membership(
    K: np.ndarray,
    ensemble: list[PlantSample],
    cost: CostSpec,
    J_dr_opt_estimate: float,
) -> tuple[bool, dict]:
    """Membership in the dominance set S:
    J_DR(K) <= 8 J_DR(K*) and ||grad J_DR(K)||_F <= 1/(2^8 sup_B max(||B||,1) J_DR(K)^3),
    with the DR cost and gradient replaced by ensemble estimates.
    """
    k = np.asarray(K, dtype=float)
    j_hat = lqr.dr_cost_estimate(k, ensemble, cost)
    if math.isinf(j_hat):
        raise InfeasibleMemberError("K destabilizes the membership ensemble", index=-1)
    grad = lqr.minibatch_gradient(k, ensemble, cost)
    grad_norm = float(np.linalg.norm(grad, "fro"))
    sup_b = max(max(float(np.linalg.norm(t.B, 2)) for t in ensemble), 1.0)
    cost_bound = 8.0 * J_dr_opt_estimate
    grad_bound = 1.0 / (2.0**8 * sup_b * j_hat**3)
    details = {
        "cost": j_hat,
        "cost_bound": cost_bound,
        "grad_norm": grad_norm,
        "grad_bound": grad_bound,
    }
    return bool(j_hat <= cost_bound and grad_norm <= grad_bound), details


def assemble_constants(
    ensemble: list[PlantSample],
    diam: float,
    theta_bar_norm: float,
    K0: np.ndarray,
    cost: CostSpec,
    target_eps: float,
    delta: float,
    variant: str = "main",
    degraded: bool = True,
) -> TheoryConstants:
    """Evaluate the full constant set at a starting gain K0.

    J_DR(K0) and J_DR(K*) are estimated on the given ensemble (K* per member
    via the Riccati solve, a lower estimate of the DR optimum); all formulas
    are then exact arithmetic in those estimates.
    """
    k0 = np.asarray(K0, dtype=float)
    j0 = lqr.dr_cost_estimate(k0, ensemble, cost)
    if math.isinf(j0):
        raise InfeasibleMemberError("K0 destabilizes the constants ensemble", index=-1)
    j_opt = 0.0
    for theta in ensemble:
        p_star, _ = lqr.solve_dare(theta, cost)
        j_opt += float(np.trace(p_star @ cost.Sigma_w))
    j_opt /= len(ensemble)

    l_k = compute_LK(j0, theta_bar_norm, cost)
    c_g = compute_cg(j0, theta_bar_norm, cost)
    l_cost = compute_Lcost(j0, float(np.linalg.norm(k0, 2)), theta_bar_norm, cost)
    r_g = compute_rg(ensemble, k0, cost)
    g_bar, sigma_sq = compute_Gbar_sigma(diam, grad_theta_lipschitz(j0, theta_bar_norm, cost))
    eps_grad = min(MU_DOMINANCE * target_eps / (2.0 * l_cost), c_g)
    gap0 = max(j0 - j_opt, target_eps)
    n_steps = max(num_steps(gap0, target_eps, l_k, degraded=degraded), 1)
    if variant == "appendix":
        m = batch_size(eps_grad, g_bar, sigma_sq, delta / n_steps, n_steps, cost.n_x, cost.n_u, variant)
    else:
        m = batch_size(eps_grad, g_bar, sigma_sq, delta, n_steps, cost.n_x, cost.n_u, variant)
    _, het_budget = check_heterogeneity(ensemble, cost, diam)
    return TheoryConstants(
        L_K=l_k,
        c_g=c_g,
        L_cost=l_cost,
        r_g=r_g,
        G_bar=g_bar,
        sigma_sq=sigma_sq,
        eps_grad=eps_grad,
        M=m,
        N=n_steps,
        mu=MU_DOMINANCE,
        het_budget=het_budget,
    )

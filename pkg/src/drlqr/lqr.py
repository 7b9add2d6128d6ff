"""Per-system LQR quantities and the DR-cost / minibatch-gradient estimators.

Conventions used throughout:

- a plant theta is the pair (A, B); the policy is u = -K x;
- the closed loop is A_cl = A - B K;
- the block cost matrix is Qblk = [[Q, S], [S^T, R]] with Qblk >= I and
  Sigma_w >= I (standing assumptions of the DR-LQR problem);
- the quadratic cost weight under gain K is
  Q_K = [I; -K]^T Qblk [I; -K] = Q - S K - K^T S^T + K^T R K,
  with the block form as the single source of truth;
- cost-to-go P = dlyap(A_cl^T, Q_K), cost J = tr(P Sigma_w);
- state covariance Sigma = dlyap(A_cl, Sigma_w) (the unique convention under
  which grad J = 2 E Sigma passes finite differences and
  tr(Sigma Q_K) = tr(P Sigma_w));
- advantage operator E = (R + B^T P B) K - B^T P A - S^T;
- gradient of J in K: 2 E Sigma.

Instability is reported as the +inf cost sentinel by `lqr_cost` and
`dr_cost_estimate`; matrix-valued operations raise InstabilityError, which
callers that probe infeasible gains (gamma search, SA baseline) catch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .errors import InfeasibleMemberError, InstabilityError

# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class PlantSample:
    """One realized linear system theta = (A, B)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = linalg.check_finite(self.A, "A")
        b = linalg.check_finite(self.B, "B")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got shape {a.shape}")
        b = b.reshape(a.shape[0], -1)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    def stacked(self) -> np.ndarray:
        """[A, B] as one n_x x (n_x + n_u) matrix."""
        return np.hstack([self.A, self.B])


@dataclass(frozen=True, eq=False)
class ThetaDirection:
    """Perturbation direction Delta_theta = (dA, dB) for derivative tests."""

    dA: np.ndarray
    dB: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dA", linalg.check_finite(self.dA, "dA"))
        object.__setattr__(self, "dB", linalg.check_finite(self.dB, "dB").reshape(self.dA.shape[0], -1))


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Block cost matrix [[Q, S], [S^T, R]] plus noise covariance Sigma_w.

    Construction enforces the standing assumptions Qblk >= I and
    Sigma_w >= I (eigenvalue check with tolerance 1e-10).
    """

    Q: np.ndarray
    R: np.ndarray
    S: np.ndarray | None = None
    Sigma_w: np.ndarray | None = None
    _psd_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        q = linalg.check_finite(self.Q, "Q")
        r = np.atleast_2d(linalg.check_finite(self.R, "R"))
        q = np.atleast_2d(q)
        n_x = q.shape[0]
        n_u = r.shape[0]
        s = np.zeros((n_x, n_u)) if self.S is None else linalg.check_finite(self.S, "S").reshape(n_x, n_u)
        sw = np.eye(n_x) if self.Sigma_w is None else np.atleast_2d(linalg.check_finite(self.Sigma_w, "Sigma_w"))
        if q.shape != (n_x, n_x) or r.shape != (n_u, n_u) or sw.shape != (n_x, n_x):
            raise ValueError("inconsistent cost block shapes")
        for name, m in (("Q", q), ("R", r), ("Sigma_w", sw)):
            if np.linalg.norm(m - m.T, "fro") > 1e-12 * (1.0 + np.linalg.norm(m, "fro")):
                raise ValueError(f"{name} is not symmetric")
        blk = np.block([[q, s], [s.T, r]])
        if linalg.min_eigenvalue(blk) < 1.0 - self._psd_tol:
            raise ValueError("block cost matrix [[Q,S],[S^T,R]] must satisfy Qblk >= I")
        if linalg.min_eigenvalue(sw) < 1.0 - self._psd_tol:
            raise ValueError("Sigma_w must satisfy Sigma_w >= I")
        object.__setattr__(self, "Q", linalg.sym(q))
        object.__setattr__(self, "R", linalg.sym(r))
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "Sigma_w", linalg.sym(sw))

    @property
    def n_x(self) -> int:
        return self.Q.shape[0]

    @property
    def n_u(self) -> int:
        return self.R.shape[0]

    @cached_property
    def q_block(self) -> np.ndarray:
        return np.block([[self.Q, self.S], [self.S.T, self.R]])

    @cached_property
    def q_block_op(self) -> float:
        """||Qblk||_op (largest eigenvalue; Qblk is symmetric PSD)."""
        return float(np.linalg.eigvalsh(self.q_block)[-1])

    @cached_property
    def sigma_min_q(self) -> float:
        """sigma_min of the block cost matrix (>= 1 by assumption)."""
        return float(np.linalg.eigvalsh(self.q_block)[0])

    @cached_property
    def sigma_min_state_q(self) -> float:
        """sigma_min of the state block Q alone (used by the c_g formula)."""
        return float(np.linalg.eigvalsh(self.Q)[0])

    @cached_property
    def sigma_min_w(self) -> float:
        return float(np.linalg.eigvalsh(self.Sigma_w)[0])


def identity_cost(n_x: int, n_u: int) -> CostSpec:
    """Q = I, R = I, S = 0, Sigma_w = I; the Section-V default weights."""
    return CostSpec(Q=np.eye(n_x), R=np.eye(n_u), S=np.zeros((n_x, n_u)), Sigma_w=np.eye(n_x))


# ---------------------------------------------------------------------------
# per-system quantities


def closed_loop(K: np.ndarray, theta: PlantSample) -> np.ndarray:
    return theta.A - theta.B @ K


def gain_stack(K: np.ndarray, n_x: int) -> np.ndarray:
    """[I; -K], the (n_x+n_u) x n_x map from state to (state, input)."""
    return np.vstack([np.eye(n_x), -np.asarray(K, dtype=float)])


def qk_matrix(K: np.ndarray, cost: CostSpec) -> np.ndarray:
    """Q_K = [I; -K]^T Qblk [I; -K]."""
    ik = gain_stack(K, cost.n_x)
    return linalg.sym(ik.T @ cost.q_block @ ik)


def cost_to_go(K: np.ndarray, theta: PlantSample, cost: CostSpec) -> np.ndarray:
    """P(K, theta) = dlyap(A_cl^T, Q_K).  Raises InstabilityError if unstable."""
    a_cl = closed_loop(K, theta)
    return linalg.dlyap(a_cl.T, qk_matrix(K, cost))


def lqr_cost(K: np.ndarray, theta: PlantSample, cost: CostSpec) -> float:
    """J(K, theta) = tr(P Sigma_w); +inf sentinel when A - BK is unstable."""
    try:
        p = cost_to_go(K, theta, cost)
    except InstabilityError:
        return math.inf
    return float(np.trace(p @ cost.Sigma_w))


def state_cov(K: np.ndarray, theta: PlantSample, cost: CostSpec) -> np.ndarray:
    """Stationary covariance Sigma = dlyap(A_cl, Sigma_w)."""
    a_cl = closed_loop(K, theta)
    return linalg.dlyap(a_cl, cost.Sigma_w)


def advantage_op(K: np.ndarray, theta: PlantSample, cost: CostSpec) -> np.ndarray:
    """E(K, theta) = (R + B^T P B) K - B^T P A - S^T; zero at the DARE gain."""
    p = cost_to_go(K, theta, cost)
    btp = theta.B.T @ p
    return (cost.R + btp @ theta.B) @ np.asarray(K, dtype=float) - btp @ theta.A - cost.S.T


def policy_gradient(K: np.ndarray, theta: PlantSample, cost: CostSpec) -> np.ndarray:
    """grad_K J(K, theta) = 2 E(K, theta) Sigma(K, theta)."""
    return 2.0 * advantage_op(K, theta, cost) @ state_cov(K, theta, cost)


def solve_dare(theta: PlantSample, cost: CostSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-system optimal (P*, K*) via the Riccati value iteration."""
    return linalg.solve_dare(theta.A, theta.B, cost.Q, cost.R, cost.S)


# ---------------------------------------------------------------------------
# directional derivatives in theta (appendix perturbation formulas)


def dtheta_P(K: np.ndarray, theta: PlantSample, cost: CostSpec, direction: ThetaDirection) -> np.ndarray:
    """D_theta P[Delta]: one dlyap solve of the perturbed right-hand side.

    From the fixed point P = Q_K + A_cl^T P A_cl,
    dP = dlyap(A_cl^T, dA_cl^T P A_cl + A_cl^T P dA_cl) with
    dA_cl = dA - dB K.
    """
    a_cl = closed_loop(K, theta)
    p = linalg.dlyap(a_cl.T, qk_matrix(K, cost))
    d_cl = direction.dA - direction.dB @ np.asarray(K, dtype=float)
    rhs = linalg.sym(d_cl.T @ p @ a_cl + a_cl.T @ p @ d_cl)
    return linalg.dlyap(a_cl.T, rhs)


def dtheta_Sigma(K: np.ndarray, theta: PlantSample, cost: CostSpec, direction: ThetaDirection) -> np.ndarray:
    """D_theta Sigma[Delta] = dlyap(A_cl, dA_cl Sigma A_cl^T + A_cl Sigma dA_cl^T)."""
    a_cl = closed_loop(K, theta)
    sigma = linalg.dlyap(a_cl, cost.Sigma_w)
    d_cl = direction.dA - direction.dB @ np.asarray(K, dtype=float)
    rhs = linalg.sym(d_cl @ sigma @ a_cl.T + a_cl @ sigma @ d_cl.T)
    return linalg.dlyap(a_cl, rhs)


def dtheta_E(K: np.ndarray, theta: PlantSample, cost: CostSpec, direction: ThetaDirection) -> np.ndarray:
    """D_theta E[Delta] by the product rule on (R + B^T P B) K - B^T P A - S^T.

    dE = (dB^T P B + B^T dP B + B^T P dB) K - dB^T P A - B^T dP A - B^T P dA.
    """
    k = np.asarray(K, dtype=float)
    p = cost_to_go(K, theta, cost)
    dp = dtheta_P(K, theta, cost, direction)
    a, b = theta.A, theta.B
    da, db = direction.dA, direction.dB
    return (
        (db.T @ p @ b + b.T @ dp @ b + b.T @ p @ db) @ k
        - db.T @ p @ a
        - b.T @ dp @ a
        - b.T @ p @ da
    )


# ---------------------------------------------------------------------------
# estimators over ensembles


def _neumaier_mean(stack: np.ndarray) -> np.ndarray:
    """Compensated elementwise mean over axis 0, accumulated in index order.

    Error-free-transformation (Neumaier) summation makes the reduction
    bitwise reproducible for a given member order, independent of how the
    per-member terms were produced (serially or concurrently).
    """
    total = np.zeros(stack.shape[1:], dtype=float)
    comp = np.zeros_like(total)
    for row in stack:
        t = total + row
        swap = np.abs(total) >= np.abs(row)
        comp += np.where(swap, (total - t) + row, (row - t) + total)
        total = t
    return (total + comp) / stack.shape[0]


def dr_cost_estimate(K: np.ndarray, thetas: list[PlantSample], cost: CostSpec) -> float:
    """Sample-average DR cost; +inf if any member is destabilized."""
    if len(thetas) == 0:
        raise ValueError("dr_cost_estimate needs at least one plant sample")
    costs = np.empty(len(thetas))
    for i, theta in enumerate(thetas):
        c = lqr_cost(K, theta, cost)
        if math.isinf(c):
            return math.inf
        costs[i] = c
    return float(_neumaier_mean(costs[:, None])[0])


def minibatch_gradient(K: np.ndarray, thetas: list[PlantSample], cost: CostSpec) -> np.ndarray:
    """g(K) = (1/M) sum_i grad J(K, theta_i), compensated, in list order.

    Strict contract: raises InfeasibleMemberError carrying the first
    offending index when some member is destabilized.  Optimizers that skip
    bad members use the batched kernel below instead.
    """
    if len(thetas) == 0:
        raise ValueError("minibatch_gradient needs at least one plant sample")
    grads = np.empty((len(thetas), cost.n_u, cost.n_x))
    for i, theta in enumerate(thetas):
        try:
            grads[i] = policy_gradient(K, theta, cost)
        except InstabilityError as exc:
            raise InfeasibleMemberError(
                f"minibatch member {i} destabilized by the current gain", index=i, rho=exc.rho
            ) from exc
    return _neumaier_mean(grads)


# ---------------------------------------------------------------------------
# batched kernels (performance path used by the optimizer and evaluators)


def stack_plants(thetas: list[PlantSample]) -> tuple[np.ndarray, np.ndarray]:
    a_stack = np.stack([t.A for t in thetas])
    b_stack = np.stack([t.B for t in thetas])
    return a_stack, b_stack


def batch_quantities(
    K: np.ndarray,
    a_stack: np.ndarray,
    b_stack: np.ndarray,
    cost: CostSpec,
    margin: float = linalg.STABILITY_MARGIN,
    need_grad: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-member (cost, gradient, stability mask) for a stack of plants.

    Returns (costs (m,), grads (m, n_u, n_x), stable (m,)).  Cost entries of
    unstable members are +inf and their gradient rows are zero; masks let the
    caller implement either the strict or the skip-and-count policy.
    Row values agree with the single-plant functions to rounding error.
    """
    k = np.asarray(K, dtype=float)
    m = a_stack.shape[0]
    a_cl = a_stack - b_stack @ k
    eigs = np.linalg.eigvals(a_cl)
    rho = np.max(np.abs(eigs), axis=1)
    stable = rho < 1.0 - margin

    costs = np.full(m, math.inf)
    grads = np.zeros((m, cost.n_u, cost.n_x))
    if np.any(stable):
        idx = np.flatnonzero(stable)
        a_cl_s = a_cl[idx]
        p = linalg.dlyap_batch(np.transpose(a_cl_s, (0, 2, 1)), qk_matrix(k, cost))
        costs[idx] = np.einsum("bij,ji->b", p, cost.Sigma_w)
        if need_grad:
            sigma = linalg.dlyap_batch(a_cl_s, cost.Sigma_w)
            btp = np.transpose(b_stack[idx], (0, 2, 1)) @ p
            e = (cost.R + btp @ b_stack[idx]) @ k - btp @ a_stack[idx] - cost.S.T
            grads[idx] = 2.0 * e @ sigma
    return costs, grads, stable

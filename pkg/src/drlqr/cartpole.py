"""Cart-pole randomization domain: nonlinear dynamics, linearization about
the upright equilibrium, pole-matched discretization, seeded length
sampling, and domain-diameter estimation.

State ordering is [x, xdot, theta, thetadot] with theta = 0 upright; a
positive x is a right displacement.  The continuous-time model is

  xdd = (m_p g sin(th) cos(th) - (7/3)(u + m_p l_hat thd^2 sin(th) - mu_c xd)
         - mu_p thd cos(th) / l_hat) / (m_p cos(th)^2 - (7/3)(m_p + m_c))
  thdd = 3/(7 l_hat) (g sin(th) - xdd cos(th) - mu_p thd / (m_p l_hat))

where l_hat defaults to the full pole length l (switchable to l/2, since the
source equations never define it).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .lqr import PlantSample


@dataclass(frozen=True)
class CartpoleParams:
    m_c: float = 1.0  # cart mass, kg
    m_p: float = 0.1  # pole mass, kg
    l: float = 0.5  # pole length, m
    g: float = 9.81  # gravity, m/s^2
    mu_c: float = 0.25  # cart-track friction coefficient
    mu_p: float = 0.01  # pendulum joint friction, N*m*s
    l_hat_half: bool = False  # interpret l_hat as l/2 instead of l

    def __post_init__(self):
        if min(self.m_c, self.m_p, self.l, self.g) <= 0.0:
            raise ValueError("masses, length and gravity must be positive")
        if min(self.mu_c, self.mu_p) < 0.0:
            raise ValueError("friction coefficients must be nonnegative")

    @property
    def l_hat(self) -> float:
        return 0.5 * self.l if self.l_hat_half else self.l


@dataclass(frozen=True)
class DomainSpec:
    base: CartpoleParams = CartpoleParams()
    l_min: float = 0.2
    l_max: float = 0.8
    dt: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.l_min <= self.l_max):
            raise ValueError(f"DomainSpec requires 0 < l_min <= l_max, got [{self.l_min}, {self.l_max}]")
        if self.dt <= 0.0:
            raise ValueError("DomainSpec requires dt > 0")


def _accelerations(xd, th, thd, u, lh, p: CartpoleParams):
    """(xdd, thdd) of the cart-pole ODE; broadcasts over array arguments.

    Single source of the dynamics arithmetic: the scalar simulator and the
    batched linearizer both evaluate this expression, so their results agree
    bitwise.
    """
    s, c = np.sin(th), np.cos(th)
    denom = p.m_p * c * c - (7.0 / 3.0) * (p.m_p + p.m_c)
    xdd = (
        p.m_p * p.g * s * c
        - (7.0 / 3.0) * (u + p.m_p * lh * thd * thd * s - p.mu_c * xd)
        - p.mu_p * thd * c / lh
    ) / denom
    thdd = (3.0 / (7.0 * lh)) * (p.g * s - xdd * c - p.mu_p * thd / (p.m_p * lh))
    return xdd, thdd


def nonlinear_dynamics(state: np.ndarray, u: float, p: CartpoleParams) -> np.ndarray:
    """Continuous-time state derivative [xd, xdd, thd, thdd]."""
    _, xd, th, thd = np.asarray(state, dtype=float)
    xdd, thdd = _accelerations(xd, th, thd, float(u), p.l_hat, p)
    return np.array([xd, xdd, thd, thdd])


def linearize(p: CartpoleParams, h: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians (A_c, B_c) of the dynamics at the upright equilibrium.

    Central finite differences with step h on the acceleration rows; the
    integrator rows (xd and thd) are set analytically, so rows 0 and 2 of
    A_c are exactly e_2^T and e_4^T and the matching B_c entries are zero.
    """
    a_c = np.zeros((4, 4))
    b_c = np.zeros((4, 1))
    zero = np.zeros(4)
    for j in range(4):
        stepped = np.zeros(4)
        stepped[j] = h
        a_c[:, j] = (nonlinear_dynamics(stepped, 0.0, p) - nonlinear_dynamics(-stepped, 0.0, p)) / (2.0 * h)
    b_c[:, 0] = (nonlinear_dynamics(zero, h, p) - nonlinear_dynamics(zero, -h, p)) / (2.0 * h)
    a_c[0] = [0.0, 1.0, 0.0, 0.0]
    a_c[2] = [0.0, 0.0, 0.0, 1.0]
    b_c[0, 0] = 0.0
    b_c[2, 0] = 0.0
    return a_c, b_c


def discretize(a_c: np.ndarray, b_c: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Pole-matched discretization: A = exp(dt A_c), B = int_0^dt exp(A_c s) ds B_c.

    Both blocks come from one augmented matrix exponential
    exp(dt [[A_c, B_c], [0, 0]]) = [[A, B], [0, I]], which equals
    A_c^{-1}(A - I)B_c whenever A_c is invertible and is its exact limit
    otherwise (the cart-pole A_c is singular: position feeds nothing back).
    """
    a_c = np.asarray(a_c, dtype=float)
    b_c = np.asarray(b_c, dtype=float)
    n = a_c.shape[0]
    m = b_c.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = a_c * dt
    aug[:n, n:] = b_c * dt
    exp_aug = scipy.linalg.expm(aug)
    return exp_aug[:n, :n], exp_aug[:n, n:]


def linearize_batch(p_base: CartpoleParams, ls: np.ndarray, h: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized `linearize` over pole lengths: (m, 4, 4) and (m, 4, 1).

    Same central differences on the acceleration rows as the scalar path
    (the quotient for the x column is identically zero either way), so
    linearize_batch(p, [l]) equals linearize(replace(p, l=l)) exactly.
    """
    ls = np.asarray(ls, dtype=float)
    lh = 0.5 * ls if p_base.l_hat_half else ls
    m = ls.shape[0]
    a_c = np.zeros((m, 4, 4))
    b_c = np.zeros((m, 4, 1))
    a_c[:, 0, 1] = 1.0
    a_c[:, 2, 3] = 1.0
    # columns: state j in {xd=1, th=2, thd=3} and the input
    for j, args in ((1, (h, 0.0, 0.0, 0.0)), (2, (0.0, h, 0.0, 0.0)), (3, (0.0, 0.0, h, 0.0))):
        xdd_p, thdd_p = _accelerations(*args[:3], args[3], lh, p_base)
        xdd_m, thdd_m = _accelerations(-args[0], -args[1], -args[2], args[3], lh, p_base)
        a_c[:, 1, j] = (xdd_p - xdd_m) / (2.0 * h)
        a_c[:, 3, j] = (thdd_p - thdd_m) / (2.0 * h)
    xdd_p, thdd_p = _accelerations(0.0, 0.0, 0.0, h, lh, p_base)
    xdd_m, thdd_m = _accelerations(0.0, 0.0, 0.0, -h, lh, p_base)
    b_c[:, 1, 0] = (xdd_p - xdd_m) / (2.0 * h)
    b_c[:, 3, 0] = (thdd_p - thdd_m) / (2.0 * h)
    return a_c, b_c


def discretize_batch(a_c: np.ndarray, b_c: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Stacked-matrix version of `discretize` for (m, n, n) / (m, n, k) inputs."""
    m, n, k = b_c.shape
    aug = np.zeros((m, n + k, n + k))
    aug[:, :n, :n] = a_c * dt
    aug[:, :n, n:] = b_c * dt
    exp_aug = scipy.linalg.expm(aug)
    return np.ascontiguousarray(exp_aug[:, :n, :n]), np.ascontiguousarray(exp_aug[:, :n, n:])


def plants_for_lengths(spec: DomainSpec, ls: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (A, B) for an array of lengths (the optimizer's fast path)."""
    a_c, b_c = linearize_batch(spec.base, ls)
    return discretize_batch(a_c, b_c, spec.dt)


def plant_for_length(spec: DomainSpec, l: float) -> PlantSample:
    params = replace(spec.base, l=float(l))
    a_c, b_c = linearize(params)
    a, b = discretize(a_c, b_c, spec.dt)
    return PlantSample(A=a, B=b)


def sample_theta(spec: DomainSpec, rng: np.random.Generator) -> PlantSample:
    """Draw l ~ Uniform[l_min, l_max] and build the discretized plant."""
    return plant_for_length(spec, rng.uniform(spec.l_min, spec.l_max))


class DiamEstimate(NamedTuple):
    diam: float  # max pairwise ||[A_i,B_i] - [A_j,B_j]||_op over the grid
    theta_bar: float  # max ||[A_i,B_i]||_op over the grid


def estimate_diam(spec: DomainSpec, grid: int = 100) -> DiamEstimate:
    """Grid estimates of diam(Theta) and theta_bar = sup ||[A, B]||_op.

    Both are maxima over a uniform grid of lengths, so they are monotone
    nondecreasing in grid resolution (max over a superset).
    """
    if grid < 2:
        raise ValueError("estimate_diam needs grid >= 2")
    lengths = np.linspace(spec.l_min, spec.l_max, grid)
    stacks = [plant_for_length(spec, l).stacked() for l in lengths]
    theta_bar = max(float(np.linalg.norm(s, 2)) for s in stacks)
    diam = 0.0
    for i in range(len(stacks)):
        for j in range(i + 1, len(stacks)):
            diam = max(diam, float(np.linalg.norm(stacks[i] - stacks[j], 2)))
    return DiamEstimate(diam=diam, theta_bar=theta_bar)


@dataclass(frozen=True, eq=False)
class CartpoleDomain:
    """Domain adapter: draws linearized/discretized plants from a DomainSpec."""

    spec: DomainSpec

    @property
    def n_x(self) -> int:
        return 4

    @property
    def n_u(self) -> int:
        return 1

    def sample(self, rng: np.random.Generator) -> PlantSample:
        return sample_theta(self.spec, rng)

    def sample_batch(self, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (A, B) draws; same stream consumption as `count` calls to
        sample, and the same matrices bit for bit."""
        ls = rng.uniform(self.spec.l_min, self.spec.l_max, size=count)
        return plants_for_lengths(self.spec, ls)

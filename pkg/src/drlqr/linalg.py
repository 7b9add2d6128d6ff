"""Dense small-matrix primitives: spectral radius, discrete Lyapunov and
Riccati solves, and PSD checks.

All systems in this package are tiny (n_x <= 8), so the Lyapunov equation
Y = X + A Y A^T is solved exactly by vectorizing to the Kronecker system
(I - A (x) A) vec(Y) = vec(X).  With row-major vec, vec(A Y A^T) =
(A (x) A) vec(Y), so a single dense solve suffices; the O(n^6) cost is
irrelevant at these sizes and avoids the bookkeeping of Bartels-Stewart.
"""

from __future__ import annotations

import numpy as np

from .errors import InstabilityError, SynthesisError

# Margin on rho(A) < 1 guarding the Kronecker solve against a near-singular
# (I - A (x) A).
STABILITY_MARGIN = 1e-9


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetric part (M + M^T)/2; used to scrub rounding asymmetry."""
    return 0.5 * (m + m.T)


def check_finite(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(sym(np.asarray(m, dtype=float)))[0])


def is_psd(m: np.ndarray, tol: float = 1e-10) -> bool:
    """lambda_min(M) >= -tol * (1 + ||M||_2)."""
    m = sym(np.asarray(m, dtype=float))
    eigs = np.linalg.eigvalsh(m)
    scale = 1.0 + (abs(eigs[0]) if eigs.size else 0.0) + (abs(eigs[-1]) if eigs.size else 0.0)
    return bool(eigs[0] >= -tol * scale)


def spectral_radius(a: np.ndarray) -> float:
    """max |lambda_i(A)| for a square matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"spectral_radius needs a square matrix, got shape {a.shape}")
    try:
        eigs = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy QR rarely fails
        raise SynthesisError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(np.abs(eigs))) if eigs.size else 0.0


def is_stable(a: np.ndarray, margin: float = STABILITY_MARGIN) -> bool:
    return spectral_radius(a) < 1.0 - margin


def dlyap(a_cl: np.ndarray, x: np.ndarray, margin: float = STABILITY_MARGIN) -> np.ndarray:
    """Solve Y = X + A_cl Y A_cl^T (the sum over l of A^l X A^{l T}).

    Raises InstabilityError when rho(A_cl) >= 1 - margin; callers that treat
    instability as infinite cost catch this and substitute the sentinel.
    """
    a_cl = np.asarray(a_cl, dtype=float)
    x = np.asarray(x, dtype=float)
    rho = spectral_radius(a_cl)
    if rho >= 1.0 - margin:
        raise InstabilityError(f"rho(A_cl) = {rho:.12g} >= 1 - {margin:g}", rho=rho)
    n = a_cl.shape[0]
    lhs = np.eye(n * n) - np.kron(a_cl, a_cl)
    y = np.linalg.solve(lhs, x.reshape(n * n)).reshape(n, n)
    if np.array_equal(x, x.T):
        y = sym(y)
    return y


def dlyap_batch(a_cls: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Vectorized dlyap for a stack of already-verified-stable closed loops.

    a_cls: (m, n, n), xs: (m, n, n) or (n, n) broadcast to all members.
    No stability check here; callers filter with spectral radii first.
    """
    a_cls = np.asarray(a_cls, dtype=float)
    m, n, _ = a_cls.shape
    xs = np.broadcast_to(np.asarray(xs, dtype=float), (m, n, n))
    kron = np.einsum("bik,bjl->bijkl", a_cls, a_cls).reshape(m, n * n, n * n)
    lhs = np.eye(n * n) - kron
    ys = np.linalg.solve(lhs, xs.reshape(m, n * n, 1)).reshape(m, n, n)
    return 0.5 * (ys + np.transpose(ys, (0, 2, 1)))


def solve_dare(
    a: np.ndarray,
    b: np.ndarray,
    q: np.ndarray,
    r: np.ndarray,
    s: np.ndarray | None = None,
    tol: float = 1e-12,
    max_iters: int = 100_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Discrete algebraic Riccati equation with cross term S, by value iteration.

    Iterates P <- Q + A^T P A - (A^T P B + S)(R + B^T P B)^{-1}(B^T P A + S^T)
    from P_0 = Q until ||P_{k+1} - P_k||_F <= tol * (1 + ||P_k||_F).  Value
    iteration converges for stabilizable/detectable instances, which is
    guaranteed here by the standing assumption [[Q,S],[S^T,R]] >= I.

    Returns (P_star, K_star) with K_star = (R + B^T P B)^{-1}(B^T P A + S^T);
    the returned gain is verified to stabilize (A, B).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    n_x = a.shape[0]
    n_u = b.shape[1]
    s_mat = np.zeros((n_x, n_u)) if s is None else np.asarray(s, dtype=float)

    p = sym(q.copy())
    k = np.zeros((n_u, n_x))
    for it in range(max_iters):
        btp = b.T @ p
        gram = r + btp @ b
        try:
            k = np.linalg.solve(gram, btp @ a + s_mat.T)
        except np.linalg.LinAlgError as exc:
            raise SynthesisError(f"R + B^T P B singular at iteration {it}") from exc
        p_next = sym(q + a.T @ p @ a - (a.T @ p @ b + s_mat) @ k)
        if not np.all(np.isfinite(p_next)):
            raise SynthesisError(f"Riccati iteration diverged at iteration {it}")
        if np.linalg.norm(p_next - p, "fro") <= tol * (1.0 + np.linalg.norm(p, "fro")):
            p = p_next
            break
        p = p_next
    else:
        raise SynthesisError(f"Riccati iteration did not converge in {max_iters} iterations")

    rho = spectral_radius(a - b @ k)
    if rho >= 1.0:
        raise SynthesisError(f"Riccati gain does not stabilize: rho(A - B K) = {rho:.6g}")
    return p, k

"""Distance from a point to a subspace under an lp norm, with witnesses.

rho(x, Y) = inf over y in Y of |x - y|.  In finite dimension the infimum is
attained, so every result carries witness coefficients c with best
approximant Y.basis @ c.  Solver routes:

  * p = 2        orthogonal projection (closed form)
  * p in {1, inf} exact linear-program reduction (HiGHS)
  * other p      smooth convex minimization over the coefficients

A brute-force grid oracle (rho_oracle) is provided for cross-validation on
low-rank instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .spaces import NormSpec, Subspace, as_vector, norm_eval

DEFAULT_TOLS = {"l2": 1e-10, "lp_linear": 1e-8, "lp_general": 1e-7}


class SolverError(RuntimeError):
    """A distance solver failed to converge; carries the best bound found."""

    def __init__(self, message: str, best_value: float | None = None):
        super().__init__(message)
        self.best_value = best_value


def default_tol(norm: NormSpec) -> float:
    if norm.p == 2.0:
        return DEFAULT_TOLS["l2"]
    if norm.p == 1.0 or norm.is_sup:
        return DEFAULT_TOLS["lp_linear"]
    return DEFAULT_TOLS["lp_general"]


@dataclass(frozen=True)
class DistanceResult:
    value: float
    witness_coeffs: np.ndarray
    achieved_tol: float
    solver: str

    def witness(self, Y: Subspace) -> np.ndarray:
        if Y.rank == 0:
            return np.zeros(Y.ambient_dim)
        return Y.basis @ self.witness_coeffs


def _rho_l2(x: np.ndarray, Y: Subspace) -> DistanceResult:
    c = Y.basis.T @ x
    value = float(np.linalg.norm(x - Y.basis @ c))
    eps = 1e-13 * max(1.0, float(np.linalg.norm(x)))
    return DistanceResult(value=value, witness_coeffs=c, achieved_tol=eps, solver="closed_form_l2")


def _rho_linprog(x: np.ndarray, Y: Subspace, norm: NormSpec, tol: float) -> DistanceResult:
    m, r = Y.ambient_dim, Y.rank
    B = Y.basis
    if norm.is_sup:
        # min t  s.t.  -t <= (x - Bc)_i <= t
        cost = np.concatenate([np.zeros(r), [1.0]])
        A_ub = np.block([[-B, -np.ones((m, 1))], [B, -np.ones((m, 1))]])
        b_ub = np.concatenate([-x, x])
        bounds = [(None, None)] * r + [(0, None)]
    else:
        # min sum s_i  s.t.  -s_i <= (x - Bc)_i <= s_i
        cost = np.concatenate([np.zeros(r), np.ones(m)])
        A_ub = np.block([[-B, -np.eye(m)], [B, -np.eye(m)]])
        b_ub = np.concatenate([-x, x])
        bounds = [(None, None)] * r + [(0, None)] * m
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise SolverError(f"linear program failed: {res.message}")
    c = res.x[:r]
    value = norm_eval(x - B @ c, norm)
    return DistanceResult(value=value, witness_coeffs=c, achieved_tol=tol, solver="linear_program")


def _rho_convex(x: np.ndarray, Y: Subspace, norm: NormSpec, tol: float) -> DistanceResult:
    p = norm.p
    B = Y.basis
    c0 = B.T @ x  # l2 projection is a good convex start

    def objective(c):
        r = x - B @ c
        a = np.abs(r)
        f = float(np.sum(a**p))
        g = -p * (B.T @ (a ** (p - 1.0) * np.sign(r)))
        return f, g

    res = minimize(
        objective,
        c0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 10_000, "ftol": 1e-16, "gtol": 1e-12},
    )
    c = res.x
    value = norm_eval(x - B @ c, norm)
    if not res.success and res.status != 2:  # status 2: precision loss at optimum
        raise SolverError(f"convex descent failed: {res.message}", best_value=value)
    return DistanceResult(value=value, witness_coeffs=c, achieved_tol=tol, solver="convex_descent")


def rho(x, Y: Subspace, norm: NormSpec, tol: float | None = None) -> DistanceResult:
    """Distance rho(x, Y) with a best-approximant witness."""
    x = as_vector(x, dim=Y.ambient_dim)
    if tol is None:
        tol = default_tol(norm)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if Y.rank == 0:
        return DistanceResult(
            value=norm_eval(x, norm),
            witness_coeffs=np.zeros(0),
            achieved_tol=0.0,
            solver="zero_subspace",
        )
    if norm.p == 2.0:
        return _rho_l2(x, Y)
    if norm.p == 1.0 or norm.is_sup:
        return _rho_linprog(x, Y, norm, tol)
    return _rho_convex(x, Y, norm, tol)


def best_approximant(x, Y: Subspace, norm: NormSpec, tol: float | None = None) -> np.ndarray:
    """The nearest point of Y to x (one of them, for non-strictly-convex norms)."""
    return rho(x, Y, norm, tol).witness(Y)


def rho_oracle(
    x,
    Y: Subspace,
    norm: NormSpec,
    grid_radius: float = 3.0,
    grid_steps: int = 601,
) -> float:
    """Brute-force grid minimum of |x - Bc| over c in [-radius, radius]^rank.

    Upper-bounds the true distance; converges to it as grid_steps grows.
    Restricted to rank <= 3 to keep the grid tractable.
    """
    x = as_vector(x, dim=Y.ambient_dim)
    if Y.rank > 3:
        raise ValueError("rho_oracle supports rank <= 3 only")
    if grid_steps < 10:
        raise ValueError("grid_steps must be >= 10")
    if Y.rank == 0:
        return norm_eval(x, norm)
    axis = np.linspace(-grid_radius, grid_radius, grid_steps)
    mesh = np.meshgrid(*([axis] * (Y.rank - 1)), indexing="ij")
    tail = np.stack([g.ravel() for g in mesh], axis=0) if Y.rank > 1 else np.zeros((0, 1))
    best = math.inf
    # chunk over the leading coefficient to keep memory flat on fine grids
    for c0 in axis:
        C = np.vstack([np.full(tail.shape[1], c0), tail])
        R = x[:, None] - Y.basis @ C
        if norm.is_sup:
            vals = np.max(np.abs(R), axis=0)
        else:
            vals = np.sum(np.abs(R) ** norm.p, axis=0) ** (1.0 / norm.p)
        best = min(best, float(np.min(vals)))
    return best

"""Constructive realization of prescribed best-approximation distances.

Given a strictly nested chain Y_1 c Y_2 c ... and non-increasing targets
d_1 >= d_2 >= ... >= 0, the routines here build an element x with
rho(x, Y_k) = d_k:

  * finite_construct      backward intermediate-value construction for
                          finitely many targets (zero tail);
  * build_schedule        the tau / u / v tables driving the prefix builder;
  * interpolating_family  elements q with rho(q, Q1) = u_m, rho(q, Q2) = v_m
                          for prescribed u_m >= v_m;
  * construct_prefix      schedule-driven prefix construction recording the
                          per-level coefficients and their bounds;
  * construct_sequence    a ladder of prefixes with pairwise-difference
                          stabilization diagnostics;

plus the tail-domination (Borodin) condition checker and a sampled checker
for the subspace-side condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distance import DistanceResult, SolverError, best_approximant, rho
from .functionals import Functional, norming_functional
from .spaces import Chain, NormSpec, Subspace, as_vector, contains, norm_eval


class TargetError(ValueError):
    """Invalid target sequence (monotonicity, tail, or positivity)."""


class ConstructionError(RuntimeError):
    """The backward construction could not meet its contract."""


# ---------------------------------------------------------------------------
# target sequences and the tail-domination condition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetSequence:
    """Non-increasing targets d_1 >= d_2 >= ... with a zero or geometric tail."""

    values: tuple[float, ...]
    tail: str = "zero"
    ratio: float | None = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise TargetError("target sequence must have at least one value")
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise TargetError("targets must be finite and non-negative")
        for a, b in zip(vals, vals[1:]):
            if b > a + 1e-15:
                raise TargetError(f"targets must be non-increasing, got {a} < {b}")
        if self.tail not in ("zero", "geometric"):
            raise TargetError(f"unknown tail kind {self.tail!r}")
        if self.tail == "geometric":
            if self.ratio is None or not (0.0 < self.ratio < 1.0):
                raise TargetError(f"geometric tail needs ratio in (0, 1), got {self.ratio}")
            if vals[-1] == 0.0:
                raise TargetError("geometric tail cannot continue a zero value")
        elif self.ratio is not None:
            raise TargetError("ratio is only meaningful for a geometric tail")

    def __len__(self):
        return len(self.values)

    def value(self, n: int) -> float:
        """d_n for any n >= 1, continuing past the stored block."""
        if n < 1:
            raise IndexError("targets are 1-indexed")
        if n <= len(self.values):
            return self.values[n - 1]
        if self.tail == "zero":
            return 0.0
        return self.values[-1] * self.ratio ** (n - len(self.values))

    def tail_sum_after(self, n: int) -> float:
        """Exact sum of d_k for k > n (closed form for the geometric part)."""
        stored = math.fsum(self.values[n:]) if n < len(self.values) else 0.0
        if self.tail == "zero":
            return stored
        geo = self.values[-1] * self.ratio / (1.0 - self.ratio)
        if n >= len(self.values):
            # sum_{k>n} d_N r^{k-N} for n >= N
            return self.value(n) * self.ratio / (1.0 - self.ratio)
        return stored + geo

    def last_nonzero(self) -> int:
        """Largest stored index with d_n > 0 (0 when all targets vanish)."""
        for n in range(len(self.values), 0, -1):
            if self.values[n - 1] > 0:
                return n
        return 0

    def is_strictly_decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.values, self.values[1:]))


@dataclass(frozen=True)
class BorodinReport:
    """Result of the strict tail-domination check d_n > sum_{k>n} d_k."""

    passes: bool
    n0: int | None
    margins: tuple[float, ...]
    tail_margin_factor: float | None = None  # (1 - 2r)/(1 - r) for geometric tails


def check_borodin_condition(d: TargetSequence) -> BorodinReport:
    """Strict tail-domination from some index on, at every positive target.

    Margins are d_n minus the exact tail sum; for geometric tails the
    infinitely many indices beyond the stored block are covered by the
    closed-form margin factor (1 - 2r)/(1 - r).
    """
    margins = tuple(d.value(n) - d.tail_sum_after(n) for n in range(1, len(d) + 1))
    tail_factor = None
    tail_ok = True
    if d.tail == "geometric":
        tail_factor = (1.0 - 2.0 * d.ratio) / (1.0 - d.ratio)
        tail_ok = tail_factor > 0.0
    # smallest n0 with margin > 0 at every later positive target
    last_bad = 0
    for n in range(1, len(d) + 1):
        if d.value(n) > 0 and margins[n - 1] <= 0.0:
            last_bad = n
    if not tail_ok:
        return BorodinReport(passes=False, n0=None, margins=margins, tail_margin_factor=tail_factor)
    n0 = last_bad + 1
    if d.tail == "zero" and n0 > d.last_nonzero():
        # no positive targets remain past n0: vacuously satisfied
        return BorodinReport(passes=True, n0=n0, margins=margins, tail_margin_factor=None)
    return BorodinReport(passes=True, n0=n0, margins=margins, tail_margin_factor=tail_factor)


@dataclass(frozen=True)
class SubspaceSample:
    norm_q: float
    rho_q: float
    bound: float
    holds: bool


@dataclass(frozen=True)
class SubspaceConditionReport:
    """Sampled verdict for |q| <= (d_{k-1}/d_k) rho(q, Y_k).

    The underlying condition quantifies over an infinite span; this report
    only ever says "no counterexample found among samples".
    """

    level: int
    ratio: float
    samples: tuple[SubspaceSample, ...]
    counterexample_found: bool

    @property
    def verdict(self) -> str:
        if self.counterexample_found:
            return "counterexample found among samples"
        return "no counterexample found among samples (sampled check only)"


def check_subspace_condition(
    chain: Chain,
    d: TargetSequence,
    q_samples,
    k: int,
    tol: float = 1e-9,
) -> SubspaceConditionReport:
    if k < 2:
        raise ValueError("the subspace condition needs k >= 2 (d_{k-1} must exist)")
    dk = d.value(k)
    if dk <= 0:
        raise TargetError("d_k = 0 makes the ratio d_{k-1}/d_k undefined")
    ratio = d.value(k - 1) / dk
    Yk = chain.level(k)
    samples = []
    bad = False
    for q in q_samples:
        q = as_vector(q, dim=chain.ambient_dim)
        nq = norm_eval(q, chain.norm)
        rq = rho(q, Yk, chain.norm).value
        bound = ratio * rq
        holds = nq <= bound + tol
        bad = bad or not holds
        samples.append(SubspaceSample(norm_q=nq, rho_q=rq, bound=bound, holds=holds))
    return SubspaceConditionReport(
        level=k, ratio=ratio, samples=tuple(samples), counterexample_found=bad
    )


# ---------------------------------------------------------------------------
# step vectors and root finding
# ---------------------------------------------------------------------------


def normalize_step(chain: Chain, n: int, tol: float | None = None) -> np.ndarray:
    """A unit vector y in Y_{n+1} \\ Y_n with rho(y, Y_n) = |y| = 1.

    Built by subtracting a best approximant: pick a basis direction of
    Y_{n+1} outside Y_n, remove its nearest point of Y_n, normalize.
    """
    Yn = chain.level(n)
    Ynext = chain.level(n + 1)
    if Ynext.rank <= Yn.rank:
        raise ConstructionError(f"no direction available above level {n}")
    resid = Ynext.basis - (Yn.basis @ (Yn.basis.T @ Ynext.basis) if Yn.rank else 0.0)
    col = int(np.argmax(np.linalg.norm(np.atleast_2d(resid), axis=0)))
    z = Ynext.basis[:, col]
    v = best_approximant(z, Yn, chain.norm, tol)
    y = z - v
    ny = norm_eval(y, chain.norm)
    if ny <= 1e-12:
        raise ConstructionError(f"degenerate step at level {n}: residual norm {ny:.3e}")
    y = y / ny
    # deterministic orientation
    i = int(np.argmax(np.abs(y)))
    return y if y[i] >= 0 else -y


def _bisect_to_target(g, lo, hi, g_lo, g_hi, target, tol, max_iter):
    """Monotone-bracket bisection: g(lo) <= target <= g(hi)."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm - target) <= tol:
            return mid
        if gm < target:
            lo, g_lo = mid, gm
        else:
            hi, g_hi = mid, gm
    # interval collapsed without meeting tol: report best endpoint
    if abs(g_lo - target) <= 10 * tol:
        return lo
    if abs(g_hi - target) <= 10 * tol:
        return hi
    raise ConstructionError(
        f"bisection exhausted {max_iter} iterations; attained range "
        f"[{g_lo:.9g}, {g_hi:.9g}] around target {target:.9g}"
    )


def _expand_crossing(g, g0, target, direction, scale, max_doublings=80):
    """Find t (of the given sign) with g(t) >= target; g(0) = g0 < target."""
    t = direction * max(scale, 1e-6)
    for _ in range(max_doublings):
        gt = g(t)
        if gt >= target:
            return t, gt
        t *= 2.0
    raise ConstructionError(
        f"no bracket within expansion budget (last g({t / 2:.3g}) < {target:.9g})"
    )


def smallest_root(g, target, tol, scale=1.0, max_iter=200, two_sided=True):
    """Smallest-magnitude root of g(t) = target for convex coercive g.

    When g(0) <= target both signs carry a crossing and the smaller-|t| one
    is returned; when g(0) > target the convex minimum is located first and
    the crossing between it and 0 is used.  Raises when no root exists.
    """
    g0 = g(0.0)
    if abs(g0 - target) <= tol:
        return 0.0
    if g0 < target:
        t_pos, gp = _expand_crossing(g, g0, target, +1.0, scale)
        r_pos = _bisect_to_target(g, 0.0, t_pos, g0, gp, target, tol, max_iter)
        if not two_sided:
            return r_pos
        t_neg, gn = _expand_crossing(g, g0, target, -1.0, scale)
        r_neg = _bisect_to_target(
            lambda t: g(-t), 0.0, -t_neg, g0, gn, target, tol, max_iter
        )
        return r_pos if abs(r_pos) <= abs(r_neg) else -r_neg
    # overshoot: walk toward the convex minimum
    from scipy.optimize import minimize_scalar

    span = max(scale, 1e-3)
    lo, hi = -span, span
    for _ in range(60):
        if g(lo) > g0 and g(hi) > g0:
            break
        lo *= 2.0
        hi *= 2.0
    res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": tol * 1e-3})
    t_star, g_star = float(res.x), float(res.fun)
    if g_star > target + tol:
        raise ConstructionError(
            f"target {target:.9g} below attainable minimum {g_star:.9g}; "
            f"attained range [{g_star:.9g}, {g0:.9g}]"
        )
    # monotone between the minimizer and 0; crossing there is nearest zero
    a, b = (t_star, 0.0) if t_star < 0 else (0.0, t_star)
    if t_star < 0:
        return _bisect_to_target(g, t_star, 0.0, g_star, g0, target, tol, max_iter)
    return -_bisect_to_target(lambda t: g(-t), -t_star, 0.0, g_star, g0, target, tol, max_iter)


# ---------------------------------------------------------------------------
# interpolating families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyMember:
    q: np.ndarray
    mu: float  # coordinate along the within-Q2 search direction (0 when u == v)


@dataclass(frozen=True)
class InterpolationFamily:
    z: np.ndarray
    w: np.ndarray
    f: Functional
    members: tuple[FamilyMember, ...]
    u_targets: tuple[float, ...]
    v_targets: tuple[float, ...]
    step_outer: np.ndarray  # unit step out of Q2 (distance 1 to Q2 and Q1)
    step_inner: np.ndarray  # unit direction of Q2 outside Q1


@dataclass(frozen=True)
class LipschitzReport:
    passes: bool
    worst_slack: float
    pair_count: int


def interpolating_family(
    Q1: Subspace,
    Q2: Subspace,
    Q3: Subspace,
    norm: NormSpec,
    u,
    v,
    within_direction=None,
    tol: float = 1e-7,
) -> InterpolationFamily:
    """Members q_m with rho(q_m, Q1) = u_m and rho(q_m, Q2) = v_m.

    Each member is v_m * y + lambda_m * s where y is a unit step out of Q2
    (so the Q2 distance is exactly v_m) and s is a unit direction of Q2
    outside Q1; lambda_m is found by the intermediate value theorem on the
    continuous coercive map lambda -> rho(v_m y + lambda s, Q1).
    """
    u = [float(t) for t in u]
    v = [float(t) for t in v]
    if len(u) != len(v) or not u:
        raise ValueError("u and v must be non-empty and of equal length")
    for um, vm in zip(u, v):
        if not (um >= vm >= 0.0):
            raise ValueError(f"targets must satisfy u_m >= v_m >= 0, got ({um}, {vm})")
    if not (Q1.rank < Q2.rank < Q3.rank):
        raise ValueError("need strictly nested Q1 c Q2 c Q3")
    for small, big in ((Q1, Q2), (Q2, Q3)):
        if small.rank and not all(contains(big, small.basis[:, j]) for j in range(small.rank)):
            raise ValueError("nesting hypothesis violated")

    chain23 = Chain(ambient_dim=Q3.ambient_dim, norm=norm, levels=(Q2, Q3))
    y = normalize_step(chain23, 1, tol=tol / 10)
    if within_direction is not None:
        s = as_vector(within_direction, dim=Q3.ambient_dim)
        if not contains(Q2, s, 1e-8) or contains(Q1, s, 1e-8):
            raise ValueError("within_direction must lie in Q2 outside Q1")
        s = s / norm_eval(s, norm)
    else:
        chain12 = Chain(ambient_dim=Q3.ambient_dim, norm=norm, levels=(Q1, Q2))
        s = normalize_step(chain12, 1, tol=tol / 10)

    z = y + s
    w = 2.0 * z - s
    f = norming_functional(w, Q1, norm, x2=z)

    members = []
    for um, vm in zip(u, v):
        if vm == 0.0:
            # degenerate members live inside Q2
            rho_s = rho(s, Q1, norm, tol / 10).value
            lam = um / rho_s if um > 0 else 0.0
            members.append(FamilyMember(q=lam * s, mu=lam))
            continue

        def g(lam, vm=vm):
            return rho(vm * y + lam * s, Q1, norm, tol / 10).value

        lam = smallest_root(g, um, tol, scale=max(um - vm, tol), two_sided=False)
        members.append(FamilyMember(q=vm * y + lam * s, mu=lam))
    return InterpolationFamily(
        z=z,
        w=w,
        f=f,
        members=tuple(members),
        u_targets=tuple(u),
        v_targets=tuple(v),
        step_outer=y,
        step_inner=s,
    )


def lipschitz_check(family: InterpolationFamily, norm: NormSpec, tol: float = 1e-9) -> LipschitzReport:
    """Verify |q_m - q_n| <= (|z| + 2)(max{u_m, u_n} - min{v_m, v_n}) pairwise."""
    members = family.members
    if len(members) < 2:
        return LipschitzReport(passes=True, worst_slack=math.inf, pair_count=0)
    factor = norm_eval(family.z, norm) + 2.0
    worst = math.inf
    count = 0
    for m in range(len(members)):
        for n in range(m + 1, len(members)):
            lhs = norm_eval(members[m].q - members[n].q, norm)
            rhs = factor * (
                max(family.u_targets[m], family.u_targets[n])
                - min(family.v_targets[m], family.v_targets[n])
            )
            worst = min(worst, rhs - lhs)
            count += 1
    return LipschitzReport(passes=worst >= -tol, worst_slack=worst, pair_count=count)


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BorodinSchedule:
    """tau_j together with the u/v tables, indexed u[j-1, n-1] for j <= n."""

    tau: np.ndarray
    u: np.ndarray
    v: np.ndarray


def build_schedule(d: TargetSequence, N: int) -> BorodinSchedule:
    """tau_1 = d_1, tau_j = min of the consecutive gaps d_{k-1} - d_k up to j;
    u_n^(j) = 1 + tau_n / (2^j d_j), v_n^(j) = 1."""
    vals = [d.value(j) for j in range(1, N + 1)]
    if any(x <= 0 for x in vals):
        raise TargetError("build_schedule needs d_j > 0 for every j <= N")
    tau = np.empty(N)
    tau[0] = vals[0]
    gap_min = math.inf
    for j in range(2, N + 1):
        gap_min = min(gap_min, vals[j - 2] - vals[j - 1])
        tau[j - 1] = gap_min
    u = np.full((N, N), np.nan)
    v = np.full((N, N), np.nan)
    for j in range(1, N + 1):
        for n in range(j, N + 1):
            u[j - 1, n - 1] = 1.0 + tau[n - 1] / (2.0**j * vals[j - 1])
            v[j - 1, n - 1] = 1.0
    return BorodinSchedule(tau=tau, u=u, v=v)


# ---------------------------------------------------------------------------
# construction traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstructOptions:
    tol: float = 1e-6
    max_bisect: int = 200
    distance_tol_factor: float = 0.1  # distance sub-calls run at tol * factor

    @property
    def sub_tol(self) -> float:
        return self.tol * self.distance_tol_factor


@dataclass(frozen=True)
class CoefficientBound:
    level: int
    value: float
    bound: float
    ok: bool


@dataclass(frozen=True)
class ConstructionTrace:
    x: np.ndarray
    step_vectors: tuple[np.ndarray, ...]
    coefficients: tuple[float, ...]
    achieved: tuple[DistanceResult, ...]
    targets: TargetSequence
    residuals: tuple[float, ...]
    coefficient_bounds: tuple[CoefficientBound, ...] = field(default_factory=tuple)

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def _measure(chain: Chain, x: np.ndarray, d: TargetSequence, n_levels: int, sub_tol: float):
    achieved = tuple(rho(x, chain.level(k), chain.norm, sub_tol) for k in range(1, n_levels + 1))
    residuals = tuple(abs(r.value - d.value(k)) for k, r in enumerate(achieved, start=1))
    return achieved, residuals


def _require_levels(chain: Chain, top: int):
    if top > len(chain.levels) + 1:
        raise ConstructionError(
            f"chain too short: construction needs level {top}, chain has {len(chain.levels)}"
        )
    if top == len(chain.levels) + 1 and chain.levels and chain.levels[-1].rank >= chain.ambient_dim:
        raise ConstructionError("top chain level already fills the ambient space")


# ---------------------------------------------------------------------------
# finite construction
# ---------------------------------------------------------------------------


def finite_construct(
    chain: Chain,
    d: TargetSequence,
    opts: ConstructOptions | None = None,
) -> ConstructionTrace:
    """Element x with rho(x, Y_k) = d_k for all stored k (zero-tail targets).

    Backward intermediate-value construction: start at the deepest nonzero
    level with x = d_N q_N, then per level recentre by the best approximant
    in Y_{k+1} (which fixes the already-achieved distances) and add the
    smallest multiple of the level step that restores rho(x, Y_k) = d_k.
    A final best-approximant trim in Y_1 leaves |x| = d_1.
    """
    opts = opts or ConstructOptions()
    if d.tail != "zero":
        raise TargetError("finite_construct needs a zero-tail target sequence")
    n_levels = len(d)
    Np = d.last_nonzero()
    if Np == 0:
        x = np.zeros(chain.ambient_dim)
        achieved, residuals = _measure(chain, x, d, min(n_levels, len(chain.levels)), opts.sub_tol)
        return ConstructionTrace(
            x=x, step_vectors=(), coefficients=(), achieved=achieved,
            targets=d, residuals=residuals,
        )
    _require_levels(chain, Np + 1)
    steps = [normalize_step(chain, k, opts.sub_tol) for k in range(1, Np + 1)]
    lambdas = [0.0] * Np
    lambdas[Np - 1] = d.value(Np)
    x = d.value(Np) * steps[Np - 1]
    for k in range(Np - 1, 0, -1):
        target = d.value(k)
        x = x - best_approximant(x, chain.level(k + 1), chain.norm, opts.sub_tol)
        Yk = chain.level(k)
        qk = steps[k - 1]

        def g(lam, x=x, qk=qk, Yk=Yk):
            return rho(x + lam * qk, Yk, chain.norm, opts.sub_tol).value

        # bisect at half the budget so re-measured residuals stay inside tol
        lam = smallest_root(
            g, target, 0.5 * opts.tol, scale=max(target, 1e-3),
            max_iter=opts.max_bisect, two_sided=False,
        )
        lambdas[k - 1] = lam
        x = x + lam * qk
    x = x - best_approximant(x, chain.level(1), chain.norm, opts.sub_tol)
    measure_levels = min(n_levels, len(chain.levels) + 1)
    achieved, residuals = _measure(chain, x, d, measure_levels, opts.sub_tol)
    if max(residuals[:Np]) > opts.tol * 10:
        raise ConstructionError(
            f"tolerance not met: max residual {max(residuals[:Np]):.3e} > {opts.tol:.1e}"
        )
    return ConstructionTrace(
        x=x,
        step_vectors=tuple(steps),
        coefficients=tuple(lambdas),
        achieved=achieved,
        targets=d,
        residuals=residuals,
    )


# ---------------------------------------------------------------------------
# prefix construction and stabilization
# ---------------------------------------------------------------------------


def _prefix_steps(chain: Chain, schedule: BorodinSchedule, Np: int, N_col: int, opts):
    """Step families q_j with rho(q_j, Y_j) = 1 and |q_j| = u_{N_col}^(j).

    The within-Y_j search direction is chained to the previous level's step,
    so each q_j pre-loads the distance one level down.  A rank-0 Y_j (the
    chain starting at {0}) degenerates to a plain unit step.
    """
    zero = Subspace.zero(chain.ambient_dim)
    steps = []
    prev_y = None
    for j in range(1, Np + 1):
        Yj = chain.level(j)
        Yj1 = chain.level(j + 1)
        chainj = Chain(ambient_dim=chain.ambient_dim, norm=chain.norm, levels=(Yj, Yj1))
        ystep = normalize_step(chainj, 1, opts.sub_tol)
        if Yj.rank == 0:
            steps.append(ystep)
        else:
            fam = interpolating_family(
                zero, Yj, Yj1, chain.norm,
                u=[float(schedule.u[j - 1, N_col - 1])], v=[1.0],
                within_direction=prev_y, tol=opts.sub_tol,
            )
            steps.append(fam.members[0].q)
        prev_y = ystep
    return steps


def _backward_construct(chain: Chain, d: TargetSequence, steps, Np: int, opts):
    """x = sum lambda_k q_k with rho(x, Y_k) = d_k, k = 1..Np (no recentring)."""
    lambdas = [0.0] * Np
    lambdas[Np - 1] = d.value(Np)
    x = d.value(Np) * steps[Np - 1]
    for k in range(Np - 1, 0, -1):
        target = d.value(k)
        Yk = chain.level(k)
        qk = steps[k - 1]

        def g(lam, x=x, qk=qk, Yk=Yk):
            return rho(x + lam * qk, Yk, chain.norm, opts.sub_tol).value

        lam = smallest_root(
            g, target, 0.5 * opts.tol, scale=max(target - d.value(k + 1), opts.tol),
            max_iter=opts.max_bisect, two_sided=True,
        )
        lambdas[k - 1] = lam
        x = x + lam * qk
    return x, lambdas


def _coefficient_bounds(d: TargetSequence, lambdas, Np: int, tol: float):
    out = []
    for k in range(1, Np + 1):
        if k == Np:
            bound = d.value(k) + tol
        else:
            bound = d.value(k) - d.value(k + 1) * (1.0 - 2.0**-k) + tol
        out.append(CoefficientBound(level=k, value=lambdas[k - 1], bound=bound,
                                    ok=abs(lambdas[k - 1]) <= bound))
    return tuple(out)


def construct_prefix(
    chain: Chain,
    d: TargetSequence,
    N: int,
    opts: ConstructOptions | None = None,
) -> ConstructionTrace:
    """Prefix element x_N with rho(x_N, Y_k) = d_k for k = 1..N.

    Uses schedule-derived step families and records every coefficient with
    its theoretical bound d_k - d_{k+1}(1 - 2^-k); bound violations are
    recorded, not raised.
    """
    opts = opts or ConstructOptions()
    if N < 1:
        raise ValueError("N must be >= 1")
    Np = N
    while Np > 0 and d.value(Np) <= 0.0:
        Np -= 1  # zero-tail reduction: build inside Y_{Np+1}
    if Np == 0:
        x = np.zeros(chain.ambient_dim)
        achieved, residuals = _measure(chain, x, d, min(N, len(chain.levels)), opts.sub_tol)
        return ConstructionTrace(x=x, step_vectors=(), coefficients=(), achieved=achieved,
                                 targets=d, residuals=residuals)
    _require_levels(chain, Np + 1)
    schedule = build_schedule(d, Np)
    steps = _prefix_steps(chain, schedule, Np, Np, opts)
    x, lambdas = _backward_construct(chain, d, steps, Np, opts)
    measure_levels = min(N, len(chain.levels) + 1)
    achieved, residuals = _measure(chain, x, d, measure_levels, opts.sub_tol)
    if max(residuals[:Np]) > opts.tol * 10:
        raise ConstructionError(
            f"tolerance not met: max residual {max(residuals[:Np]):.3e} > {opts.tol:.1e}"
        )
    return ConstructionTrace(
        x=x,
        step_vectors=tuple(steps),
        coefficients=tuple(lambdas),
        achieved=achieved,
        targets=d,
        residuals=residuals,
        coefficient_bounds=_coefficient_bounds(d, lambdas, Np, opts.tol),
    )


@dataclass(frozen=True)
class StabilizationTable:
    """Pairwise |x_N - x_M| for successful prefixes, plus the tail diagnostic."""

    prefixes: tuple[int, ...]
    differences: np.ndarray  # square matrix aligned with prefixes
    max_tail: tuple[float, ...]  # max over M > N of |x_N - x_M|
    tail_non_increasing: bool
    failures: tuple[tuple[int, str], ...] = field(default_factory=tuple)


def construct_sequence(
    chain: Chain,
    d: TargetSequence,
    N_max: int,
    opts: ConstructOptions | None = None,
) -> tuple[list[ConstructionTrace], StabilizationTable]:
    """Prefixes x_1..x_{N_max} over shared step families with a difference table."""
    opts = opts or ConstructOptions()
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    Np_max = N_max
    while Np_max > 0 and d.value(Np_max) <= 0.0:
        Np_max -= 1
    traces: list[ConstructionTrace] = []
    failures = []
    shared_steps = []
    if Np_max > 0:
        _require_levels(chain, Np_max + 1)
        schedule = build_schedule(d, Np_max)
        shared_steps = _prefix_steps(chain, schedule, Np_max, Np_max, opts)
    kept = []
    for N in range(1, N_max + 1):
        Np = min(N, Np_max)
        try:
            if Np == 0:
                x, lambdas = np.zeros(chain.ambient_dim), []
            else:
                x, lambdas = _backward_construct(chain, d, shared_steps[:Np], Np, opts)
            measure_levels = min(N, len(chain.levels) + 1)
            achieved, residuals = _measure(chain, x, d, measure_levels, opts.sub_tol)
            if Np and max(residuals[:Np]) > opts.tol * 10:
                raise ConstructionError(
                    f"prefix {N}: max residual {max(residuals[:Np]):.3e}"
                )
            trace = ConstructionTrace(
                x=x,
                step_vectors=tuple(shared_steps[:Np]),
                coefficients=tuple(lambdas),
                achieved=achieved,
                targets=d,
                residuals=residuals,
                coefficient_bounds=_coefficient_bounds(d, lambdas, Np, opts.tol) if Np else (),
            )
            traces.append(trace)
            kept.append(N)
        except (ConstructionError, SolverError) as exc:
            failures.append((N, str(exc)))
    n = len(traces)
    diffs = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            diffs[i, j] = diffs[j, i] = norm_eval(traces[i].x - traces[j].x, chain.norm)
    max_tail = tuple(
        float(np.max(diffs[i, i + 1 :])) if i + 1 < n else 0.0 for i in range(n)
    )
    body = max_tail[:-1] if n else ()
    non_inc = all(a >= b - 1e-12 for a, b in zip(body, body[1:]))
    return traces, StabilizationTable(
        prefixes=tuple(kept),
        differences=diffs,
        max_tail=max_tail,
        tail_non_increasing=non_inc,
        failures=tuple(failures),
    )

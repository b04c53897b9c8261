"""Constrained scalarized minimization: project ``c_theta`` onto a convex
selection in the ``H_theta`` norm.

Three tiers, tried in order:

1. ``c_theta`` already feasible: return it.
2. Projection onto each single violated constraint (closed form for a
   half-space, a secular equation for an ellipsoid). If one of these lands
   inside every other constraint it is the projection onto the
   intersection, because the intersection is a subset of that constraint.
3. A full solver: a dual active-set method (Goldfarb-Idnani) for linear
   selections, a log-barrier interior-point method for selections with
   quadratic constraints.

Every result is checked against the optimality contract (violation,
stationarity with recovered multipliers) before it is labelled optimal.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from cobi.constraints import ConvexSelection, LinearConstraint, QuadraticConstraint
from cobi.core import SpdMatrix, as_point, spd_solve
from cobi.errors import DimensionError, ValidationError
from cobi.objectives import QuadraticPeak

VIOLATION_TOL = 1e-8
KKT_TOL = 1e-7
ACTIVE_TOL = 1e-7
MULTIPLIER_TOL = -1e-9
MAX_ITERATIONS = 10**6
BARRIER_START = 1.0
BARRIER_STOP = 1e-10
BARRIER_FACTOR = 10.0
NEWTON_TOL = 1e-12


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible-within-tolerance"
    FAILURE = "solver-failure"


@dataclass(frozen=True, eq=False)
class ScalarizedProblem:
    """``min 0.5 (x-c)^T H (x-c) + offset`` over a convex selection."""

    weight: float
    combined_hessian: SpdMatrix
    combined_center: np.ndarray
    combined_offset: float
    constraints: ConvexSelection

    @property
    def n(self) -> int:
        return self.combined_center.size

    def objective(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.combined_center
        return float(0.5 * d @ self.combined_hessian.entries @ d + self.combined_offset)


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    x_star: np.ndarray | None
    status: Status
    kkt_residual: float = math.inf
    violation: float = math.inf
    active_set: tuple[int, ...] = ()
    multipliers: np.ndarray | None = None
    iterations: int = 0
    method: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def build_scalarized(
    peak1: QuadraticPeak, peak2: QuadraticPeak, theta: float, constraints: ConvexSelection | None = None
) -> ScalarizedProblem:
    """``H_theta = theta H1 + (1-theta) H2`` and ``c_theta = H_theta^{-1}(theta H1 c1 + (1-theta) H2 c2)``."""
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"weight must lie in [0, 1], got {theta}")
    if peak1.n != peak2.n:
        raise DimensionError("peaks differ in dimension")
    if constraints is None:
        constraints = ConvexSelection(())
    if theta == 1.0:
        h, c = peak1.hessian, peak1.center
    elif theta == 0.0:
        h, c = peak2.hessian, peak2.center
    else:
        h1, h2 = peak1.hessian.entries, peak2.hessian.entries
        h = SpdMatrix(theta * h1 + (1.0 - theta) * h2)
        c = spd_solve(h, theta * (h1 @ peak1.center) + (1.0 - theta) * (h2 @ peak2.center))
    offset = theta * peak1.offset + (1.0 - theta) * peak2.offset
    return ScalarizedProblem(theta, h, np.asarray(c, dtype=float), offset, constraints)


# -- optimality certificate -------------------------------------------------

def _constraint_gradients(constraints, x) -> np.ndarray:
    return np.array([g.gradient(x) for g in constraints]).reshape(len(constraints), x.size)


def kkt_certificate(sp: ScalarizedProblem, x) -> tuple[float, float, tuple[int, ...], np.ndarray]:
    """Return ``(violation, kkt_residual, active_set, multipliers)`` at ``x``.

    Multipliers come from least squares on the active gradients, falling
    back to non-negative least squares when plain least squares yields a
    negative multiplier (degenerate active sets).
    """
    cons = sp.constraints.constraints
    x = np.asarray(x, dtype=float)
    vals = sp.constraints.values(x)
    violation = float(np.sum(np.maximum(vals, 0.0)))
    grad_f = sp.combined_hessian.entries @ (x - sp.combined_center)
    active = tuple(int(k) for k in np.flatnonzero(np.abs(vals) <= ACTIVE_TOL))
    if not active:
        return violation, float(np.max(np.abs(grad_f))), (), np.zeros(0)
    gmat = _constraint_gradients([cons[k] for k in active], x).T
    mu, *_ = np.linalg.lstsq(gmat, -grad_f, rcond=None)
    if np.any(mu < MULTIPLIER_TOL):
        mu, _ = optimize.nnls(gmat, -grad_f)
    resid = grad_f + gmat @ mu
    return violation, float(np.max(np.abs(resid))), active, mu


def _finish(sp, x, method, iterations) -> ProjectionResult:
    violation, kkt, active, mu = kkt_certificate(sp, x)
    ok = violation <= VIOLATION_TOL and kkt <= KKT_TOL and (mu.size == 0 or np.min(mu) >= MULTIPLIER_TOL)
    return ProjectionResult(
        np.asarray(x, dtype=float), Status.OPTIMAL if ok else Status.FAILURE,
        kkt, violation, active, mu, iterations, method,
    )


# -- single-constraint projections -----------------------------------------

def project_halfspace(h: SpdMatrix, c: np.ndarray, g: LinearConstraint) -> np.ndarray:
    s = float(g.value(c))
    if s <= 0:
        return c.copy()
    w = spd_solve(h, g.normal)
    return c - (s / float(g.normal @ w)) * w


def project_ellipsoid(h: SpdMatrix, c: np.ndarray, g: QuadraticConstraint) -> np.ndarray:
    """Projection of ``c`` onto ``{0.5 (x-q)^T Q (x-q) <= d}`` in the ``H`` norm.

    Simultaneous diagonalization ``V^T Q V = I``, ``V^T H V = diag(lam)``
    turns the stationarity condition into ``y_i = w_i / (lam_i + mu)`` and
    the multiplier ``mu`` solves ``sum_i y_i^2 = 2d``.
    """
    if g.value(c) <= 0:
        return c.copy()
    if g.level == 0.0:
        return g.center.copy()
    lam, v = linalg.eigh(h.entries, g.hessian_matrix.entries)
    w = v.T @ (h.entries @ (c - g.center))
    target = math.sqrt(2.0 * g.level)

    def radius(mu):
        return float(np.linalg.norm(w / (lam + mu)))

    # safeguarded Newton on 1/|y(mu)| - 1/target, which is concave and increasing
    lo, hi = 0.0, float(np.linalg.norm(w)) / target
    while radius(hi) > target:
        hi *= 2.0
    mu = lo
    for _ in range(200):
        y = w / (lam + mu)
        r = float(np.linalg.norm(y))
        phi = 1.0 / r - 1.0 / target
        if abs(r - target) <= 1e-15 * target:
            break
        if phi < 0:
            lo = mu
        else:
            hi = mu
        dr = -float(np.sum(y * y / (lam + mu))) / r
        step = -phi / (-dr / (r * r))
        new = mu + step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if new == mu or hi - lo <= 1e-16 * max(1.0, hi):
            break
        mu = new
    y = w / (lam + mu)
    y *= target / np.linalg.norm(y)
    return g.center + v @ y


def _single_projection(h, c, g) -> np.ndarray:
    if isinstance(g, LinearConstraint):
        return project_halfspace(h, c, g)
    return project_ellipsoid(h, c, g)


# -- dual active-set method (linear constraints) ---------------------------

def _goldfarb_idnani(h: SpdMatrix, c: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Minimize ``0.5 (x-c)^T H (x-c)`` s.t. ``a x + b <= 0``.

    Starts at the unconstrained minimizer and adds violated constraints one
    at a time while keeping dual feasibility. Returns ``(x, status, iters)``.
    """
    x = c.copy()
    active: list[int] = []
    mu = np.zeros(0)
    scale = 1.0 + np.abs(b) + np.linalg.norm(a, axis=1) * (1.0 + np.linalg.norm(c))
    iters = 0
    while True:
        s = (a @ x + b) / scale
        s[active] = -np.inf
        q = int(np.argmax(s))
        if s[q] <= 1e-14:
            return x, Status.OPTIMAL, iters
        u = 0.0
        hinv_aq = spd_solve(h, a[q])
        while True:
            iters += 1
            if iters > MAX_ITERATIONS:
                return x, Status.FAILURE, iters
            if active:
                n_mat = a[active].T
                hinv_n = spd_solve(h, n_mat)
                m = n_mat.T @ hinv_n
                try:
                    r = np.linalg.solve(m, n_mat.T @ hinv_aq)
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(m, n_mat.T @ hinv_aq, rcond=None)[0]
                z = hinv_aq - hinv_n @ r
            else:
                r = np.zeros(0)
                z = hinv_aq
            t_partial, drop = math.inf, -1
            for j, rj in enumerate(r):
                if rj > 1e-14 and mu[j] / rj < t_partial:
                    t_partial, drop = mu[j] / rj, j
            curv = float(a[q] @ z)
            sq = float(a[q] @ x + b[q])
            if curv > 1e-14 * float(a[q] @ hinv_aq) and np.linalg.norm(z) > 0:
                t_full = sq / curv
            else:
                t_full = math.inf
            t = min(t_partial, t_full)
            if math.isinf(t):
                return x, Status.INFEASIBLE, iters
            if not math.isinf(t_full):
                x = x - t * z
            mu = mu - t * r
            u += t
            if t == t_full:
                active.append(q)
                mu = np.append(mu, u)
                break
            del active[drop]
            mu = np.delete(mu, drop)


# -- log-barrier interior-point method --------------------------------------

def _barrier_terms(cons, x):
    """Values, gradients and curvature terms of all constraints at ``x``."""
    vals = np.array([float(g.value(x)) for g in cons])
    grads = _constraint_gradients(cons, x)
    return vals, grads


def _centering(x, obj_grad_hess, cons, mu, budget, stop=None):
    """Damped Newton on ``obj(x) - mu sum log(-g_k(x))``; returns ``(x, iters)``."""
    iters = 0
    hess_list = [g.hessian() for g in cons]
    while iters < budget:
        if stop is not None and stop(x):
            break
        iters += 1
        vals, grads = _barrier_terms(cons, x)
        f0, gf, hf = obj_grad_hess(x)
        inv = 1.0 / (-vals)
        grad = gf + mu * (grads.T @ inv)
        hess = hf + mu * (grads.T * inv**2) @ grads
        for k, hk in enumerate(hess_list):
            if hk is not None:
                hess = hess + mu * inv[k] * hk
        try:
            with warnings.catch_warnings():
                # near the boundary the barrier Hessian is ill-conditioned by design
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                dx = -linalg.solve(hess, grad, assume_a="pos", check_finite=False)
        except (linalg.LinAlgError, ValueError):
            dx = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        dec = float(-grad @ dx)
        if dec / 2.0 <= NEWTON_TOL:
            # one last full step is essentially free this close to the center
            xn = x + dx
            if all(float(g.value(xn)) < 0 for g in cons):
                x = xn
            break
        phi0 = f0 - mu * float(np.sum(np.log(-vals)))
        t = 1.0
        for _ in range(80):
            xn = x + t * dx
            vn = np.array([float(g.value(xn)) for g in cons])
            if np.all(vn < 0):
                phin = obj_grad_hess(xn)[0] - mu * float(np.sum(np.log(-vn)))
                if phin <= phi0 - 0.25 * t * dec:
                    break
            t *= 0.5
        else:
            break
        x = xn
        if t * np.max(np.abs(dx)) <= 1e-16 * (1.0 + np.max(np.abs(x))):
            break
    return x, iters


def _phase_one(cons, start, budget):
    """Find a strictly feasible point by minimizing ``s`` s.t. ``g_k(x) <= s``."""
    n = start.size
    x = start.copy()
    vals = np.array([float(g.value(x)) for g in cons])
    if np.all(vals < 0):
        return x, 0
    lifted = [_Lifted(g, n) for g in cons]
    z = np.append(x, float(np.max(vals)) + 1.0)
    prox = 1e-6 * np.eye(n + 1)
    prox[n, n] = 0.0

    def strictly_feasible(zz):
        return zz[-1] < 0 and all(float(g.value(zz[:n])) < 0 for g in cons)

    total = 0
    weight = 1.0
    while weight <= 1e12:
        def obj(zz, w=weight):
            d = zz - z_ref
            grad = prox @ d
            grad[-1] += w
            return w * zz[-1] + 0.5 * float(d @ prox @ d), grad, prox

        z_ref = z.copy()
        z, it = _centering(z, obj, lifted, 1.0, budget - total, stop=strictly_feasible)
        total += it
        if strictly_feasible(z):
            return z[:n], total
        if total >= budget:
            break
        weight *= 10.0
    return None, total


def interior_point(selection: ConvexSelection, start) -> np.ndarray | None:
    """A strictly feasible point of ``selection`` or ``None`` if none was found.

    The result does not depend on any weight, so sweeps over many weights
    can compute it once and pass it to :func:`project` as ``start``.
    """
    start = np.asarray(start, dtype=float)
    if not selection.constraints:
        return start.copy()
    x, _ = _phase_one(selection.constraints, start, MAX_ITERATIONS)
    return x


class _Lifted:
    """Constraint ``g(x) - s <= 0`` over the lifted variable ``(x, s)``."""

    def __init__(self, g, n):
        self.g, self.n = g, n
        hk = g.hessian()
        if hk is None:
            self._h = None
        else:
            self._h = np.zeros((n + 1, n + 1))
            self._h[:n, :n] = hk

    def value(self, z):
        return self.g.value(z[: self.n]) - z[self.n]

    def gradient(self, z):
        return np.append(self.g.gradient(z[: self.n]), -1.0)

    def hessian(self):
        return self._h


def _polish(sp: ScalarizedProblem, x, mu_barrier):
    """Newton on the KKT equations of the constraints the barrier point leans on.

    Constraints whose multiplier comes out negative are dropped and the
    solve repeated, which handles degenerate vertices where the barrier
    keeps a visible distance from the boundary.
    """
    cons = sp.constraints.constraints
    vals = sp.constraints.values(x)
    act = [k for k in range(len(cons)) if -vals[k] <= 1e-4 * (1.0 + abs(vals[k]))]
    while act:
        lam0 = np.array([mu_barrier / max(-vals[k], 1e-300) for k in act])
        y, lam = _kkt_newton(sp, x, act, lam0)
        if y is None:
            return None
        if np.all(lam >= MULTIPLIER_TOL):
            if np.any(sp.constraints.values(y) > 1e-12):
                return None
            return y
        act = [k for k, lk in zip(act, lam) if lk >= MULTIPLIER_TOL]
    return None


def _kkt_newton(sp, x, act, lam):
    cons = sp.constraints.constraints
    h, c = sp.combined_hessian.entries, sp.combined_center
    n = x.size
    y = x.copy()
    for _ in range(30):
        grads = _constraint_gradients([cons[k] for k in act], y)
        r1 = h @ (y - c) + grads.T @ lam
        r2 = np.array([float(cons[k].value(y)) for k in act])
        if max(np.max(np.abs(r1)), np.max(np.abs(r2))) <= 1e-13 * (1.0 + np.max(np.abs(h @ (y - c)))):
            break
        top = h.copy()
        for lk, k in zip(lam, act):
            hk = cons[k].hessian()
            if hk is not None:
                top = top + lk * hk
        kkt = np.block([[top, grads.T], [grads, np.zeros((len(act), len(act)))]])
        try:
            step = np.linalg.solve(kkt, -np.concatenate([r1, r2]))
        except np.linalg.LinAlgError:
            return None, None
        y = y + step[:n]
        lam = lam + step[n:]
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(lam))):
        return None, None
    return y, lam


def _barrier_solve(sp: ScalarizedProblem, start):
    cons = sp.constraints.constraints
    h, c = sp.combined_hessian.entries, sp.combined_center

    def obj(x):
        d = x - c
        hd = h @ d
        return 0.5 * float(d @ hd), hd, h

    x, total = _phase_one(cons, start, MAX_ITERATIONS)
    if x is None:
        return None, Status.INFEASIBLE, total
    mu = BARRIER_START
    while mu >= BARRIER_STOP * 0.999:
        x, it = _centering(x, obj, cons, mu, MAX_ITERATIONS - total)
        total += it
        if total >= MAX_ITERATIONS:
            return x, Status.FAILURE, total
        mu /= BARRIER_FACTOR
    polished = _polish(sp, x, mu * BARRIER_FACTOR)
    if polished is not None and sp.objective(polished) <= sp.objective(x) + 1e-12 * (1.0 + abs(sp.objective(x))):
        x = polished
    return x, Status.OPTIMAL, total


# -- public entry point -----------------------------------------------------

def _warm_solve(sp: ScalarizedProblem, warm: ProjectionResult) -> ProjectionResult | None:
    """Newton on the KKT system of a neighbouring solution's active set."""
    if warm is None or not warm.ok or not warm.active_set or warm.x_star is None:
        return None
    if warm.x_star.size != sp.n or max(warm.active_set) >= len(sp.constraints):
        return None
    act = list(warm.active_set)
    y, lam = _kkt_newton(sp, warm.x_star, act, np.maximum(warm.multipliers, 0.0))
    if y is None or np.any(lam < MULTIPLIER_TOL) or sp.constraints.violation(y) > 1e-12:
        return None
    res = _finish(sp, y, "warm", 1)
    return res if res.ok else None


def project(
    sp: ScalarizedProblem, start=None, method: str = "auto", warm: ProjectionResult | None = None
) -> ProjectionResult:
    """Minimize the scalarized objective over ``sp.constraints``.

    ``start`` is an optional feasible hint (the problem anchor) for the
    barrier's feasibility phase. ``method`` may force ``"active-set"`` or
    ``"barrier"``; ``"auto"`` uses the tiered strategy and ``"direct"``
    uses it without the barrier tier (reporting infeasible when the cheap
    tiers do not apply), for selections known to lack an interior point.

    ``warm`` is the result of a nearby problem over the same selection,
    typically the previous weight of a sweep. When its active set still
    yields a KKT point, that point is returned without running the full
    solver; the optimality check is the same either way.
    """
    cons = sp.constraints.constraints
    for g in cons:
        if not isinstance(g, (LinearConstraint, QuadraticConstraint)):
            raise ValidationError("project accepts only linear and convex-quadratic constraints")
        if g.n != sp.n:
            raise DimensionError("constraint dimension differs from the scalarized problem")
    c = sp.combined_center
    h = sp.combined_hessian
    if not cons:
        return _finish(sp, c.copy(), "unconstrained", 0)
    vals = sp.constraints.values(c)
    if method in ("auto", "direct"):
        if np.all(vals <= 1e-12):
            return _finish(sp, c.copy(), "interior", 0)
        for k in np.flatnonzero(vals > 0):
            y = _single_projection(h, c, cons[k])
            if sp.constraints.violation(y) <= 1e-12:
                res = _finish(sp, y, "single", 1)
                if res.ok:
                    return res
    linear = sp.constraints.linear_only
    if method in ("auto", "direct") and not linear:
        res = _warm_solve(sp, warm)
        if res is not None:
            return res
    if method == "direct" and not linear:
        return ProjectionResult(None, Status.INFEASIBLE, method="direct")
    if method == "active-set" or (method in ("auto", "direct") and linear):
        if not linear:
            raise ValidationError("the active-set method handles linear constraints only")
        a = np.array([g.normal for g in cons])
        b = np.array([g.intercept for g in cons])
        x, status, iters = _goldfarb_idnani(h, c, a, b)
        if status is not Status.OPTIMAL:
            return ProjectionResult(None, status, iterations=iters, method="active-set")
        return _finish(sp, x, "active-set", iters)
    start = c if start is None else as_point(start, sp.n, name="start")
    x, status, iters = _barrier_solve(sp, np.asarray(start, dtype=float))
    if status is not Status.OPTIMAL:
        return ProjectionResult(x, status, iterations=iters, method="barrier")
    return _finish(sp, x, "barrier", iters)

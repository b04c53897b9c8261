"""Baseline optimizers and the hypervolume-gap harness.

Both optimizers keep an all-time archive of feasible non-dominated
objective vectors and sample its hypervolume at logarithmically spaced
evaluation counts. Objective vectors are the values reference sets are
filtered on (:meth:`CobiProblem.merge_objectives`, equal to the raw
objectives unless peaks carry inner transforms).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from cobi.errors import ExperimentError, ValidationError
from cobi.generator import GeneratorConfig, generate
from cobi.pareto import approx_ps, compute_ideal_nadir, epsilon_weights
from cobi.problem import BiArchive, CobiProblem, ParetoApproximation, hypervolume

CHECKPOINTS_PER_DECADE = 10
FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class Reference:
    """Hypervolume reference point and the reference set's hypervolume (NaN if unknown).

    ``upper_hypervolume`` bounds the hypervolume of the true front from
    above: every Pareto point between two consecutive reference points is
    dominated by their corner ``(f1_i, f2_{i+1})``. An optimizer can beat
    a finite reference set by up to ``upper_hypervolume - hypervolume``.
    """

    point: tuple[float, float]
    hypervolume: float = math.nan
    upper_hypervolume: float = math.nan

    @classmethod
    def from_approximation(cls, approx: ParetoApproximation) -> Reference:
        point = (float(approx.nadir[0]), float(approx.nadir[1]))
        return cls(point, hypervolume(approx.archive, point), staircase_bound(approx.archive.f, point))

    @classmethod
    def for_problem(cls, prob: CobiProblem) -> Reference:
        """Nadir from the endpoint projections only; no reference hypervolume."""
        _, nadir = compute_ideal_nadir(prob)
        return cls((float(nadir[0]), float(nadir[1])))


def staircase_bound(f: np.ndarray, ref) -> float:
    """Hypervolume of the corners between consecutive points of a front sample."""
    f = np.asarray(f, dtype=float).reshape(-1, 2)
    if len(f) == 0:
        return 0.0
    f = f[np.argsort(f[:, 0], kind="stable")]
    corners = np.column_stack([f[:-1, 0], f[1:, 1]])
    return hypervolume(np.vstack([f, corners]), ref)


@dataclass
class RunTrace:
    instance_id: str
    optimizer: str
    seed: int
    budget: int
    samples: list[tuple[int, float, float]] = field(default_factory=list)
    archive: BiArchive | None = None

    @property
    def evals(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples], dtype=int)

    @property
    def hv(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def gap(self) -> np.ndarray:
        return np.array([s[2] for s in self.samples])

    @property
    def final_gap(self) -> float:
        return self.samples[-1][2] if self.samples else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["evals", "hv", "gap"])
        for e, h, g in self.samples:
            w.writerow([e, format(h, ".17g"), format(g, ".17g")])
        return buf.getvalue()


def checkpoints(budget: int) -> np.ndarray:
    """Evaluation counts ``round(10^(k/10))`` up to ``budget``, always ending at ``budget``."""
    top = math.log10(max(budget, 1))
    k = np.arange(0, int(math.floor(top * CHECKPOINTS_PER_DECADE)) + 1)
    pts = np.unique(np.round(10.0 ** (k / CHECKPOINTS_PER_DECADE)).astype(int))
    pts = pts[pts <= budget]
    return np.unique(np.append(pts, budget))


class _Recorder:
    """Feeds evaluations into the archive and samples the trace at checkpoints."""

    def __init__(self, trace: RunTrace, reference: Reference):
        self.trace = trace
        self.ref = reference
        self.archive = BiArchive()
        self.evals = 0
        self.marks = list(checkpoints(trace.budget))
        self.next = 0

    def add(self, x, f, violation) -> None:
        for xv, fv, v in zip(np.atleast_2d(x), np.atleast_2d(f), np.atleast_1d(violation)):
            self.evals += 1
            if v <= FEASIBILITY_TOL:
                self.archive.insert(fv, xv)
            while self.next < len(self.marks) and self.marks[self.next] == self.evals:
                hv = hypervolume(self.archive, self.ref.point)
                self.trace.samples.append((self.evals, hv, self.ref.hypervolume - hv))
                self.next += 1

    def finish(self) -> RunTrace:
        self.trace.archive = self.archive
        return self.trace


def _evaluate(prob: CobiProblem, x: np.ndarray):
    return prob.merge_objectives(x), prob.constraints.total_violation(x)


def _box(prob: CobiProblem, sample_box):
    lo, hi = prob.search_box() if sample_box is None else sample_box
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def run_random_search(
    prob: CobiProblem,
    budget: int,
    seed: int,
    sample_box=None,
    reference: Reference | None = None,
) -> RunTrace:
    """Uniform sampling in ``sample_box`` (default: the problem's search box)."""
    if budget < 1:
        raise ValidationError("budget must be at least 1")
    reference = reference or Reference.for_problem(prob)
    lo, hi = _box(prob, sample_box)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    rec = _Recorder(RunTrace(prob.instance_id, "random", int(seed), int(budget)), reference)
    done = 0
    while done < budget:
        m = min(1000, budget - done)
        x = lo + (hi - lo) * rng.random((m, prob.dimension))
        rec.add(x, *_evaluate(prob, x))
        done += m
    return rec.finish()


# -- NSGA-II ---------------------------------------------------------------

def _nondominated_ranks(f: np.ndarray) -> np.ndarray:
    """Front index (0 = non-dominated) of every row."""
    m = len(f)
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    rank = np.full(m, -1)
    current = np.flatnonzero(count == 0)
    r = 0
    while current.size:
        rank[current] = r
        count = count - dom[current].sum(axis=0)
        count[rank >= 0] = -1
        current = np.flatnonzero(count == 0)
        r += 1
    return rank


def _crowding(f: np.ndarray) -> np.ndarray:
    m = len(f)
    if m <= 2:
        return np.full(m, np.inf)
    d = np.zeros(m)
    for k in range(f.shape[1]):
        order = np.argsort(f[:, k], kind="stable")
        span = f[order[-1], k] - f[order[0], k]
        d[order[0]] = d[order[-1]] = np.inf
        if span > 0:
            d[order[1:-1]] += (f[order[2:], k] - f[order[:-2], k]) / span
    return d


def _rank_and_crowd(f: np.ndarray, cv: np.ndarray):
    """Constraint-domination ranks: feasible points by front, infeasible after them by violation."""
    m = len(f)
    rank = np.empty(m, dtype=float)
    crowd = np.zeros(m)
    feas = cv <= FEASIBILITY_TOL
    idx = np.flatnonzero(feas)
    top = 0
    if idx.size:
        r = _nondominated_ranks(f[idx])
        rank[idx] = r
        for level in np.unique(r):
            members = idx[r == level]
            crowd[members] = _crowding(f[members])
        top = int(r.max()) + 1
    bad = np.flatnonzero(~feas)
    if bad.size:
        order = bad[np.argsort(cv[bad], kind="stable")]
        rank[order] = top + np.arange(order.size)
    return rank, crowd


def _tournament(rng, rank, crowd, count):
    a = rng.integers(0, len(rank), count)
    b = rng.integers(0, len(rank), count)
    better_a = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(better_a, a, b)


def _sbx(rng, p1, p2, lo, hi, eta=15.0, prob=0.9):
    c1, c2 = p1.copy(), p2.copy()
    m, n = p1.shape
    do_pair = rng.random(m) < prob
    do_var = (rng.random((m, n)) < 0.5) & do_pair[:, None] & (np.abs(p1 - p2) > 1e-14)
    u = rng.random((m, n))
    y1, y2 = np.minimum(p1, p2), np.maximum(p1, p2)
    span = np.where(y2 - y1 > 1e-14, y2 - y1, 1.0)
    out = []
    for bound, sign in ((y1 - lo, -1.0), (hi - y2, 1.0)):
        beta = 1.0 + 2.0 * np.maximum(bound, 0.0) / span
        alpha = 2.0 - beta ** (-(eta + 1.0))
        betaq = np.where(
            u <= 1.0 / alpha,
            (u * alpha) ** (1.0 / (eta + 1.0)),
            (1.0 / np.maximum(2.0 - u * alpha, 1e-300)) ** (1.0 / (eta + 1.0)),
        )
        mid = 0.5 * (y1 + y2)
        out.append(mid + sign * 0.5 * betaq * (y2 - y1))
    swap = rng.random((m, n)) < 0.5
    lo_child, hi_child = out
    c1 = np.where(do_var, np.where(swap, hi_child, lo_child), c1)
    c2 = np.where(do_var, np.where(swap, lo_child, hi_child), c2)
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def _polynomial_mutation(rng, x, lo, hi, eta=20.0, prob=None):
    m, n = x.shape
    prob = 1.0 / n if prob is None else prob
    mask = rng.random((m, n)) < prob
    u = rng.random((m, n))
    span = hi - lo
    d1 = (x - lo) / span
    d2 = (hi - x) / span
    power = 1.0 / (eta + 1.0)
    left = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)) ** power - 1.0
    right = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)) ** power
    delta = np.where(u < 0.5, left, right)
    return np.clip(np.where(mask, x + delta * span, x), lo, hi)


def _survivors(f, cv, size):
    rank, crowd = _rank_and_crowd(f, cv)
    order = np.lexsort((-crowd, rank))
    return order[:size]


def run_nsga2_lite(
    prob: CobiProblem,
    population: int = 100,
    budget: int = 10_000,
    seed: int = 0,
    sample_box=None,
    reference: Reference | None = None,
) -> RunTrace:
    """Generational NSGA-II with SBX, polynomial mutation and constraint domination."""
    if population < 2:
        raise ValidationError("population must be at least 2")
    if budget < population:
        raise ValidationError("budget must be at least the population size")
    reference = reference or Reference.for_problem(prob)
    lo, hi = _box(prob, sample_box)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    rec = _Recorder(RunTrace(prob.instance_id, "nsga2lite", int(seed), int(budget)), reference)
    x = lo + (hi - lo) * rng.random((population, prob.dimension))
    f, cv = _evaluate(prob, x)
    rec.add(x, f, cv)
    while rec.evals < budget:
        count = min(population, budget - rec.evals)
        rank, crowd = _rank_and_crowd(f, cv)
        half = (count + 1) // 2
        pa = x[_tournament(rng, rank, crowd, half)]
        pb = x[_tournament(rng, rank, crowd, half)]
        c1, c2 = _sbx(rng, pa, pb, lo, hi)
        kids = _polynomial_mutation(rng, np.vstack([c1, c2])[:count], lo, hi)
        fk, cvk = _evaluate(prob, kids)
        rec.add(kids, fk, cvk)
        x = np.vstack([x, kids])
        f = np.vstack([f, fk])
        cv = np.concatenate([cv, cvk])
        keep = _survivors(f, cv, population)
        x, f, cv = x[keep], f[keep], cv[keep]
    return rec.finish()


OPTIMIZERS = {"random": run_random_search, "nsga2lite": run_nsga2_lite}


def run_baseline(prob, algo: str, budget: int, seed: int, reference: Reference | None = None, population: int = 100):
    if algo == "random":
        return run_random_search(prob, budget, seed, reference=reference)
    if algo == "nsga2lite":
        return run_nsga2_lite(prob, population, budget, seed, reference=reference)
    raise ValidationError(f"unknown optimizer {algo!r}")


# -- dimension scaling -----------------------------------------------------

def calibrate_epsilon(
    prob: CobiProblem, target: int, tolerance: float = 0.05, max_rounds: int = 12
) -> tuple[float, ParetoApproximation]:
    """Find epsilon whose approximation has ``target * (1 +- tolerance)`` points.

    Starts from the epsilon whose unconstrained weight schedules total the
    target, then updates by the secant rule on ``log size`` versus
    ``log epsilon`` with a bracketing safeguard.
    """
    if target < 2:
        raise ValidationError("target archive size must be at least 2")
    p1, p2 = prob.f1.peaks, prob.f2.peaks

    def schedule_size(eps):
        return sum(len(epsilon_weights(a, b, eps)) for a in p1 for b in p2)

    eps = 1.0
    for _ in range(60):
        if schedule_size(eps) >= target:
            break
        eps /= 2.0
    lo, hi = eps, 2.0 * eps
    for _ in range(30):
        mid = math.sqrt(lo * hi)
        if schedule_size(mid) >= target:
            lo = mid
        else:
            hi = mid
    eps = lo
    history = []
    bracket_small, bracket_large = None, None
    for _ in range(max_rounds):
        approx = approx_ps(prob, eps)
        size = len(approx.archive)
        if abs(size - target) <= tolerance * target:
            return eps, approx
        history.append((math.log(eps), math.log(max(size, 1))))
        if size > target:
            bracket_large = eps if bracket_large is None else max(bracket_large, eps)
        else:
            bracket_small = eps if bracket_small is None else min(bracket_small, eps)
        if len(history) >= 2 and history[-1][0] != history[-2][0]:
            slope = (history[-1][1] - history[-2][1]) / (history[-1][0] - history[-2][0])
        else:
            slope = -1.0
        if not slope < -0.05:
            slope = -1.0
        new = math.exp(history[-1][0] + (math.log(target) - history[-1][1]) / slope)
        if bracket_large is not None and bracket_small is not None:
            lo_b, hi_b = bracket_large, bracket_small
            if not lo_b < new < hi_b:
                new = math.sqrt(lo_b * hi_b)
        eps = new
    raise ExperimentError(f"could not calibrate epsilon to {target} +- {tolerance:.0%} points")


@dataclass
class DimensionResult:
    dimension: int
    instance_id: str
    epsilon: float
    reference_size: int
    reference_hv: float
    reference_point: tuple[float, float]
    mean_trace: list[tuple[int, float]]
    final_gaps: list[float]
    median_run: int
    median_run_xy: np.ndarray
    reference_xy: np.ndarray

    def summary(self) -> dict:
        gaps = np.array(self.final_gaps)
        return {
            "dimension": self.dimension,
            "instance_id": self.instance_id,
            "epsilon": self.epsilon,
            "reference_size": self.reference_size,
            "reference_hv": self.reference_hv,
            "reference_point": list(self.reference_point),
            "mean_final_gap": float(gaps.mean()),
            "std_final_gap": float(gaps.std()),
            "final_gaps": [float(g) for g in gaps],
            "median_run": self.median_run,
            "mean_trace": [[int(e), float(g)] for e, g in self.mean_trace],
        }


@dataclass
class ScalingReport:
    algorithm: str
    budget: int
    repetitions: int
    target_size: int
    results: list[DimensionResult]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "budget": self.budget,
            "repetitions": self.repetitions,
            "target_size": self.target_size,
            "dimensions": [r.summary() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def mean_final_gaps(self) -> list[float]:
        return [float(np.mean(r.final_gaps)) for r in self.results]

    def projection_csv(self, dimension: int, which: str = "median_run") -> str:
        """``x1,x2`` projections of the median run's archive (or the reference set)."""
        res = next(r for r in self.results if r.dimension == dimension)
        pts = res.median_run_xy if which == "median_run" else res.reference_xy
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "x2"])
        for row in pts:
            w.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()


def scaling_family(dimension: int, seed: int = 1) -> GeneratorConfig:
    """Single-peak objectives with one linear and one convex-quadratic constraint."""
    return GeneratorConfig(dimension=dimension, peaks=(1, 1), constraints=["linear", "quadratic"], seed=seed)


def dimension_scaling_experiment(
    family=scaling_family,
    dims=(2, 10, 40),
    repetitions: int = 15,
    budget: int = 10_000,
    population: int = 100,
    target_size: int = 2000,
    tolerance: float = 0.05,
    algorithm: str = "nsga2lite",
    references: dict | None = None,
) -> ScalingReport:
    """Mean hypervolume-gap traces per dimension against size-matched reference sets.

    ``family`` maps a dimension to a :class:`GeneratorConfig` (or a
    :class:`CobiProblem`). ``references`` may supply precomputed
    ``(epsilon, ParetoApproximation)`` pairs per dimension.
    """
    results = []
    for n in dims:
        spec = family(n)
        prob = spec if isinstance(spec, CobiProblem) else generate(spec)
        if references is not None and n in references:
            eps, approx = references[n]
        else:
            eps, approx = calibrate_epsilon(prob, target_size, tolerance)
        if approx is None or len(approx.archive) == 0:
            raise ExperimentError(f"missing reference set for dimension {n}")
        ref = Reference.from_approximation(approx)
        base_seed = int(prob.seed or 0)
        traces = []
        for run in range(repetitions):
            seed = base_seed ^ run
            if algorithm == "nsga2lite":
                traces.append(run_nsga2_lite(prob, population, budget, seed, reference=ref))
            else:
                traces.append(run_random_search(prob, budget, seed, reference=ref))
        evals = traces[0].evals
        mean_gap = np.mean([t.gap for t in traces], axis=0)
        finals = [t.final_gap for t in traces]
        median_run = int(np.argsort(finals, kind="stable")[(len(finals) - 1) // 2])
        best = traces[median_run].archive
        xy = best.points()[:, :2] if len(best) else np.zeros((0, 2))
        results.append(DimensionResult(
            n, prob.instance_id, eps, len(approx.archive), ref.hypervolume, ref.point,
            list(zip(evals.tolist(), mean_gap.tolist())), finals, median_run, xy, approx.x[:, :2],
        ))
    return ScalingReport(algorithm, budget, repetitions, target_size, results)

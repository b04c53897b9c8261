"""Reference Pareto set approximation.

For a pair of peaks the unconstrained Pareto set is the curve
``h(theta) = c_theta``. Weights are chosen so that consecutive curve points
are at most ``epsilon`` apart; each infeasible curve point is replaced by
its projection onto the feasible set. Multipeak objectives and multipeak
constraints are handled by running this for every peak pair and every
convex selection, then keeping the non-dominated candidates under the full
objectives.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from cobi.constraints import ConstraintSet, ConvexSelection, convex_selections
from cobi.errors import IdealNadirError, ValidationError
from cobi.objectives import QuadraticPeak
from cobi.problem import BiArchive, CobiProblem, ObjectivePair, ParetoApproximation, ProblemType, classify_type
from cobi.projection import build_scalarized, interior_point, project

BAND_LOW = 0.9
MAX_BISECTIONS = 60
DUPLICATE_TOL = 1e-12


def worker_count() -> int:
    """Parallel workers for per-subproblem work: ``COBI_THREADS`` if set, else 1."""
    raw = os.environ.get("COBI_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def unconstrained_point(peak1: QuadraticPeak, peak2: QuadraticPeak, theta: float) -> np.ndarray:
    """Minimizer of ``theta q1 + (1-theta) q2``; ``theta = 1`` gives the first center."""
    return build_scalarized(peak1, peak2, theta).combined_center.copy()


class _Curve:
    """Fast evaluation of ``c_theta`` through a simultaneous diagonalization.

    With ``V^T H2 V = I`` and ``V^T H1 V = diag(l)``,
    ``c_theta = V (theta a + (1-theta) b) / (theta l + 1 - theta)``.
    """

    def __init__(self, peak1: QuadraticPeak, peak2: QuadraticPeak):
        self.c1, self.c2 = peak1.center, peak2.center
        h1, h2 = peak1.hessian.entries, peak2.hessian.entries
        self.lam, self.v = linalg.eigh(h1, h2)
        self.a = self.v.T @ (h1 @ self.c1)
        self.b = self.v.T @ (h2 @ self.c2)

    def __call__(self, theta: float) -> np.ndarray:
        if theta == 1.0:
            return self.c1
        if theta == 0.0:
            return self.c2
        return self.v @ ((theta * self.a + (1.0 - theta) * self.b) / (theta * self.lam + 1.0 - theta))


@dataclass(frozen=True)
class WeightSchedule:
    weights: np.ndarray
    epsilon: float
    stitch_iterations: int = 0

    def __len__(self) -> int:
        return len(self.weights)


def _march(curve, t0: float, target: float, epsilon: float):
    """Weights from ``t0`` toward ``target``, each within ``[0.9 eps, eps]`` of its predecessor.

    Stops at the first weight whose point is within ``epsilon`` of the
    point at ``target``. The target itself is not included.
    """
    out = []
    ht = curve(target)
    t, ht_prev = t0, curve(t0)
    step = None
    sign = 1.0 if target > t0 else -1.0
    while np.linalg.norm(ht_prev - ht) > epsilon:
        lo, hi = t, target
        if step is not None:
            guess = t + 2.0 * step
            if sign * (target - guess) > 0:
                d = np.linalg.norm(curve(guess) - ht_prev)
                if d < BAND_LOW * epsilon:
                    lo = guess
                elif d <= epsilon:
                    lo = hi = guess
                else:
                    hi = guess
        accepted = lo if lo == hi else None
        for _ in range(MAX_BISECTIONS):
            if accepted is not None:
                break
            mid = 0.5 * (lo + hi)
            d = np.linalg.norm(curve(mid) - ht_prev)
            if d > epsilon:
                hi = mid
            elif d < BAND_LOW * epsilon:
                lo = mid
            else:
                accepted = mid
        if accepted is None:
            accepted = lo if lo != t else 0.5 * (lo + hi)
        step = accepted - t
        t, ht_prev = accepted, curve(accepted)
        out.append(t)
    return out


def epsilon_weights(peak1: QuadraticPeak, peak2: QuadraticPeak, epsilon: float) -> WeightSchedule:
    """Sorted weights from 0 to 1 whose curve points are spaced at most ``epsilon`` apart.

    Marches from both ends toward 1/2, then fills the remaining middle gap
    by marching from the lower frontier toward the upper one until the gap
    is closed.
    """
    epsilon = float(epsilon)
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise ValidationError(f"epsilon must be positive and finite, got {epsilon}")
    curve = _Curve(peak1, peak2)
    if np.linalg.norm(curve(0.0) - curve(1.0)) <= epsilon:
        return WeightSchedule(np.array([0.0, 1.0]), epsilon)
    low = [0.0] + _march(curve, 0.0, 0.5, epsilon)
    high = [1.0] + _march(curve, 1.0, 0.5, epsilon)
    middle: list[float] = []
    stitches = 0
    a, b = low[-1], high[-1]
    if a < b and np.linalg.norm(curve(a) - curve(b)) > epsilon:
        middle = _march(curve, a, b, epsilon)
        stitches = len(middle)
    weights = np.unique(np.array(low + middle + high[::-1]))
    return WeightSchedule(weights, epsilon, stitches)


def _pair_values(peak1: QuadraticPeak, peak2: QuadraticPeak, x) -> ObjectivePair:
    return ObjectivePair(float(peak1.quadratic_form(x) + peak1.offset), float(peak2.quadratic_form(x) + peak2.offset))


class _SweepResult(NamedTuple):
    points: list
    skipped: int
    first: np.ndarray | None
    last: np.ndarray | None


def _sweep(peak1, peak2, selection: ConvexSelection, schedule: WeightSchedule, start=None) -> _SweepResult:
    """Feasible-or-projected point for every scheduled weight, in weight order.

    ``first`` and ``last`` are the points for weights 0 and 1 (or ``None``
    when that projection failed).
    """
    points = []
    skipped = 0
    interior = None
    method = "auto"
    warm = None
    extremes = {}
    for theta in schedule.weights:
        sp = build_scalarized(peak1, peak2, theta, selection)
        x = sp.combined_center
        if selection.constraints and selection.violation(x) > 0:
            if interior is None and not selection.linear_only:
                hint = sp.combined_center if start is None else start
                interior = interior_point(selection, hint)
                if interior is None:
                    method, interior = "direct", False
            res = project(sp, start=interior if interior is not False else None, method=method, warm=warm)
            if not res.ok:
                skipped += 1
                continue
            warm = res
            x = res.x_star
        else:
            x = x.copy()
        points.append((x, _pair_values(peak1, peak2, x)))
        extremes[float(theta)] = x
    return _SweepResult(points, skipped, extremes.get(0.0), extremes.get(1.0))


def approx_ps_singlepeak(
    peak1: QuadraticPeak,
    peak2: QuadraticPeak,
    selection: ConvexSelection | None,
    epsilon: float,
    start=None,
) -> list[tuple[np.ndarray, ObjectivePair]]:
    """Pareto set approximation of two single peaks over a convex selection.

    Returns ``(x, (q1(x), q2(x)))`` per successful weight in increasing
    weight order; weights whose projection fails are skipped.
    """
    if selection is None:
        selection = ConvexSelection(())
    schedule = epsilon_weights(peak1, peak2, epsilon)
    return _sweep(peak1, peak2, selection, schedule, start).points


class SubproblemKey(NamedTuple):
    peak_index_1: int
    peak_index_2: int
    selection_index: int


def _keys(prob: CobiProblem, selections) -> list[SubproblemKey]:
    return [
        SubproblemKey(i, j, s)
        for i in range(len(prob.f1.peaks))
        for j in range(len(prob.f2.peaks))
        for s in range(len(selections))
    ]


def ideal_nadir(prob: CobiProblem, per_subproblem_extremes: list) -> tuple[ObjectivePair, ObjectivePair]:
    """Ideal and nadir points from per-subproblem single-objective minimizers.

    ``per_subproblem_extremes`` holds, per key, ``(p1, p2)``: the minimizers
    of the key's first and second peak over its selection, or ``None`` when
    either is unavailable (the key is then excluded).
    """
    cands1, cands2 = [], []
    excluded = 0
    for item in per_subproblem_extremes:
        if item is None or item[0] is None or item[1] is None:
            excluded += 1
            continue
        p1, p2 = item
        cands1.append(prob.merge_objectives(p1))
        cands2.append(prob.merge_objectives(p2))
    if not cands1:
        raise IdealNadirError("every subproblem was excluded; ideal and nadir are undefined")
    if excluded:
        warnings.warn(f"{excluded} subproblem(s) excluded from the ideal/nadir computation", stacklevel=2)
    f_at_p1 = np.array(cands1)
    f_at_p2 = np.array(cands2)
    x1 = _lexicographic_best(f_at_p1, 0)
    x2 = _lexicographic_best(f_at_p2, 1)
    ideal = ObjectivePair(float(f_at_p1[x1, 0]), float(f_at_p2[x2, 1]))
    nadir = ObjectivePair(float(f_at_p2[x2, 0]), float(f_at_p1[x1, 1]))
    return ideal, nadir


def _lexicographic_best(f: np.ndarray, k: int) -> int:
    """Row minimizing column ``k``; near-ties go to the smaller other column."""
    best = float(np.min(f[:, k]))
    tie = np.flatnonzero(f[:, k] <= best + 1e-12 * max(1.0, abs(best)))
    return int(tie[np.argmin(f[tie, 1 - k])])


def _chord_dominated(f: np.ndarray, seq: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Rows of ``f`` strictly dominated by a chord between consecutive rows of ``seq``.

    ``seq`` holds one subproblem's pair values in weight order. Its front
    bounds a convex set, so every chord point is weakly dominated by an
    attained objective vector and a strict chord dominance is a real one.
    """
    out = np.zeros(len(f), dtype=bool)
    if len(seq) < 2 or len(f) == 0:
        return out
    a, b = seq[:-1], seq[1:]
    d = b - a
    for start in range(0, len(f), 512):
        p = f[start:start + 512]
        target = p - rel_tol * (1.0 + np.abs(p))
        lo = np.zeros((len(p), len(a)))
        hi = np.ones((len(p), len(a)))
        for k in range(2):
            # a_k + t d_k < target_k
            rhs = target[:, k, None] - a[None, :, k]
            dk = np.broadcast_to(d[None, :, k], rhs.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                bound = rhs / dk
            pos, neg, flat = dk > 0, dk < 0, dk == 0
            hi = np.where(pos, np.minimum(hi, bound), hi)
            lo = np.where(neg, np.maximum(lo, bound), lo)
            hi = np.where(flat & (rhs <= 0), -1.0, hi)
        strict = lo < hi
        out[start:start + 512] = np.any(strict, axis=1)
    return out


def approx_ps(
    prob: CobiProblem, epsilon: float, workers: int | None = None, chord_filter: bool = True
) -> ParetoApproximation:
    """Reference approximation of the constrained Pareto set of ``prob``.

    Candidates from every subproblem are merged under the full objectives.
    With ``chord_filter`` the merged set is further pruned of points that a
    chord of another subproblem's sampled front strictly dominates; this
    removes samples of a dominated branch that slip between the samples of
    a nearly coincident dominating branch. It is skipped when peaks carry
    inner transforms, which break the convexity it relies on.

    Deterministic in ``(prob, epsilon)``: per-subproblem results are merged
    in lexicographic key order whatever the number of workers.
    """
    epsilon = float(epsilon)
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise ValidationError(f"epsilon must be positive and finite, got {epsilon}")
    selections = convex_selections(prob.constraints)
    keys = _keys(prob, selections)
    peaks1, peaks2 = prob.f1.peaks, prob.f2.peaks
    schedules = {
        (i, j): epsilon_weights(peaks1[i], peaks2[j], epsilon)
        for i in range(len(peaks1))
        for j in range(len(peaks2))
    }

    def run(key: SubproblemKey) -> _SweepResult:
        i, j, s = key
        return _sweep(peaks1[i], peaks2[j], selections[s], schedules[(i, j)], prob.anchor)

    workers = worker_count() if workers is None else max(1, int(workers))
    if workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, keys))
    else:
        results = [run(k) for k in keys]

    archive = BiArchive(duplicate_tol=DUPLICATE_TOL)
    per_key_counts = {}
    skipped = 0
    extremes = []
    for key, res in zip(keys, results):
        per_key_counts[tuple(key)] = len(res.points)
        skipped += res.skipped
        extremes.append((res.last, res.first))
        if res.points:
            xs = np.array([x for x, _ in res.points])
            fs = prob.merge_objectives(xs)
            for x, f in zip(xs, fs):
                archive.insert(f, x)
    multi = len(keys) > 1
    if chord_filter and multi and len(archive) and not (prob.f1.has_inner_transforms or prob.f2.has_inner_transforms):
        archive = _prune_by_chords(archive, [np.array([v for _, v in r.points]) for r in results])
    degenerate = False
    if len(archive) == 0:
        degenerate = True
        archive.insert(prob.merge_objectives(prob.anchor), prob.anchor.copy())
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ideal, nadir = ideal_nadir(prob, extremes)
    except IdealNadirError:
        f = archive.f
        ideal = ObjectivePair(float(f[:, 0].min()), float(f[:, 1].min()))
        nadir = ObjectivePair(float(f[:, 0].max()), float(f[:, 1].max()))
    stitches = max((s.stitch_iterations for s in schedules.values()), default=0)
    return ParetoApproximation(
        archive, epsilon, ideal, nadir, per_key_counts, skipped, degenerate, stitches
    )


def _prune_by_chords(archive: BiArchive, sequences: list) -> BiArchive:
    f = archive.f
    drop = np.zeros(len(f), dtype=bool)
    for seq in sequences:
        if len(seq) >= 2:
            drop |= _chord_dominated(f, seq)
    if not np.any(drop):
        return archive
    pruned = BiArchive(duplicate_tol=archive.duplicate_tol)
    for keep, fv, x in zip(~drop, f, archive.x):
        if keep:
            pruned.insert(fv, x)
    return pruned


def unconstrained_version(prob: CobiProblem) -> CobiProblem:
    """Same objectives with every constraint removed."""
    return CobiProblem(
        prob.dimension, prob.objectives, ConstraintSet(()), prob.anchor, prob.seed,
        prob.instance_id, prob.name, prob.bounds, prob.config,
    )


def classify(prob: CobiProblem, epsilon: float, tol: float | None = None) -> ProblemType:
    """Type I-IV label from constrained and unconstrained approximations at one epsilon."""
    free = approx_ps(unconstrained_version(prob), epsilon)
    if len(prob.constraints) == 0:
        return classify_type(prob, free, free, tol)
    constrained = approx_ps(prob, epsilon)
    return classify_type(prob, free, constrained, tol)


def summary(prob: CobiProblem, approx: ParetoApproximation) -> dict:
    return approx.summary(prob.instance_id)


def endpoint_extremes(prob: CobiProblem) -> list:
    """Per subproblem key, the minimizers ``(p1, p2)`` of its two peaks over its selection.

    Entries are ``None`` where either projection failed.
    """
    selections = convex_selections(prob.constraints)
    out = []
    for i, j, s in _keys(prob, selections):
        pa, pb = prob.f1.peaks[i], prob.f2.peaks[j]
        ends = _sweep(pa, pb, selections[s], WeightSchedule(np.array([0.0, 1.0]), math.inf), prob.anchor)
        out.append(None if ends.last is None or ends.first is None else (ends.last, ends.first))
    return out


def compute_ideal_nadir(prob: CobiProblem) -> tuple[ObjectivePair, ObjectivePair]:
    """Ideal and nadir points without sampling the interior of the front."""
    return ideal_nadir(prob, endpoint_extremes(prob))

"""The assembled problem, dominance, a sorted non-dominated archive,
bi-objective hypervolume and Type I-IV classification."""

from __future__ import annotations

import bisect
import csv
import enum
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from cobi.constraints import DEFAULT_FEASIBILITY_TOL, ConstraintSet, MultipeakConstraint, QuadraticConstraint
from cobi.core import as_point
from cobi.errors import ClassificationError, DimensionError, ValidationError
from cobi.objectives import MultipeakObjective


class ObjectivePair(NamedTuple):
    f1: float
    f2: float


@dataclass(frozen=True, eq=False)
class CobiProblem:
    dimension: int
    objectives: tuple[MultipeakObjective, MultipeakObjective]
    constraints: ConstraintSet
    anchor: np.ndarray
    seed: int | None = None
    instance_id: str = ""
    name: str = ""
    bounds: tuple[np.ndarray, np.ndarray] | None = None
    config: dict | None = None

    def __post_init__(self):
        n = int(self.dimension)
        if n < 1:
            raise ValidationError("dimension must be positive")
        object.__setattr__(self, "dimension", n)
        if len(self.objectives) != 2:
            raise ValidationError("exactly two objectives are supported")
        object.__setattr__(self, "objectives", tuple(self.objectives))
        for k, obj in enumerate(self.objectives):
            if obj.n != n:
                raise DimensionError(f"objective {k} has dimension {obj.n}, expected {n}")
        if not isinstance(self.constraints, ConstraintSet):
            object.__setattr__(self, "constraints", ConstraintSet(tuple(self.constraints)))
        if self.constraints.n not in (None, n):
            raise DimensionError(f"constraints have dimension {self.constraints.n}, expected {n}")
        anchor = as_point(self.anchor, n, name="anchor").copy()
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        violation = float(self.constraints.total_violation(anchor))
        if violation > DEFAULT_FEASIBILITY_TOL:
            raise ValidationError(f"anchor violates the constraints (total violation {violation:.3g})")
        if self.bounds is not None:
            lo = as_point(self.bounds[0], n, name="bounds lower")
            hi = as_point(self.bounds[1], n, name="bounds upper")
            if np.any(lo >= hi):
                raise ValidationError("bounds must satisfy lower < upper")
            object.__setattr__(self, "bounds", (lo, hi))

    @property
    def f1(self) -> MultipeakObjective:
        return self.objectives[0]

    @property
    def f2(self) -> MultipeakObjective:
        return self.objectives[1]

    def raw_objectives(self, x) -> np.ndarray:
        """Untransformed objective values, shape ``(..., 2)``."""
        return np.stack([o(x, apply_transforms=False) for o in self.objectives], axis=-1)

    def merge_objectives(self, x) -> np.ndarray:
        """Objective values used for non-dominated filtering (outer transforms skipped)."""
        return np.stack([o.merge_value(x) for o in self.objectives], axis=-1)

    def transformed_objectives(self, x) -> np.ndarray:
        return np.stack([o(x, apply_transforms=True) for o in self.objectives], axis=-1)

    def search_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Stored bounds, or a padded bounding box of every center and the anchor."""
        if self.bounds is not None:
            return self.bounds
        pts = [self.anchor]
        for obj in self.objectives:
            pts.extend(p.center for p in obj.peaks)
        for g, _ in self.constraints:
            parts = [part for part, _ in g.parts] if isinstance(g, MultipeakConstraint) else [g]
            pts.extend(part.center for part in parts if isinstance(part, QuadraticConstraint))
        pts = np.array(pts)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.1 * (hi - lo) + 1.0
        return lo - pad, hi + pad

    def with_transforms(self, objective_transforms=None, constraint_transforms=None) -> CobiProblem:
        """Copy with outer objective transforms and/or outer constraint transforms replaced."""
        objectives = self.objectives
        if objective_transforms is not None:
            objectives = tuple(
                MultipeakObjective(obj.peaks, t) for obj, t in zip(self.objectives, objective_transforms)
            )
        constraints = self.constraints
        if constraint_transforms is not None:
            constraints = ConstraintSet(
                tuple((g, t) for (g, _), t in zip(self.constraints.constraints, constraint_transforms))
            )
        return CobiProblem(
            self.dimension, objectives, constraints, self.anchor, self.seed,
            self.instance_id, self.name, self.bounds, self.config,
        )


@dataclass(frozen=True)
class Evaluation:
    f: ObjectivePair
    f_raw: ObjectivePair
    g: tuple[float, ...]
    g_raw: tuple[float, ...]
    violation: float

    @property
    def feasible(self) -> bool:
        return self.violation <= DEFAULT_FEASIBILITY_TOL


def evaluate(prob: CobiProblem, x) -> Evaluation:
    x = as_point(x, prob.dimension)
    f = prob.transformed_objectives(x)
    f_raw = prob.raw_objectives(x)
    g = prob.constraints.transformed_values(x)
    g_raw = prob.constraints.raw_values(x)
    return Evaluation(
        ObjectivePair(float(f[0]), float(f[1])),
        ObjectivePair(float(f_raw[0]), float(f_raw[1])),
        tuple(float(v) for v in g),
        tuple(float(v) for v in g_raw),
        float(np.sum(np.maximum(g_raw, 0.0))),
    )


class Dominance(enum.Enum):
    DOMINATES = "dominates"
    EQUAL = "weakly-dominates-equal"
    INCOMPARABLE = "incomparable"
    DOMINATED = "dominated"


def dominates(a, b) -> Dominance:
    """Relation of objective vector ``a`` to ``b`` under minimization."""
    a1, a2 = float(a[0]), float(a[1])
    b1, b2 = float(b[0]), float(b[1])
    if a1 == b1 and a2 == b2:
        return Dominance.EQUAL
    if a1 <= b1 and a2 <= b2:
        return Dominance.DOMINATES
    if b1 <= a1 and b2 <= a2:
        return Dominance.DOMINATED
    return Dominance.INCOMPARABLE


class BiArchive:
    """Mutually non-dominated bi-objective vectors kept sorted by ``f1``.

    ``f1`` is strictly increasing and ``f2`` strictly decreasing along the
    list. Decision vectors are stored alongside when given.
    """

    def __init__(self, duplicate_tol: float = 0.0):
        self.duplicate_tol = duplicate_tol
        self._f1: list[float] = []
        self._f2: list[float] = []
        self._x: list[np.ndarray | None] = []

    def __len__(self) -> int:
        return len(self._f1)

    def __iter__(self):
        return iter(zip(self._f1, self._f2))

    @property
    def f(self) -> np.ndarray:
        return np.column_stack([self._f1, self._f2]) if self._f1 else np.zeros((0, 2))

    @property
    def x(self) -> list:
        return list(self._x)

    def points(self) -> np.ndarray:
        return np.array(self._x)

    def insert(self, f, x=None) -> tuple[bool, int]:
        """Insert ``f``; returns ``(inserted, evicted_count)``.

        Rejected when an archived vector dominates or equals ``f`` (or lies
        within ``duplicate_tol`` of it in both components).
        """
        a, b = float(f[0]), float(f[1])
        i = bisect.bisect_right(self._f1, a)
        if i > 0 and self._f2[i - 1] <= b:
            return False, 0
        tol = self.duplicate_tol
        if tol > 0:
            for k in (i - 1, i):
                if 0 <= k < len(self._f1) and abs(self._f1[k] - a) <= tol and abs(self._f2[k] - b) <= tol:
                    return False, 0
        j = bisect.bisect_left(self._f1, a)
        k = j
        while k < len(self._f2) and self._f2[k] >= b:
            k += 1
        evicted = k - j
        del self._f1[j:k], self._f2[j:k], self._x[j:k]
        self._f1.insert(j, a)
        self._f2.insert(j, b)
        self._x.insert(j, None if x is None else np.asarray(x, dtype=float))
        return True, evicted

    def extend(self, fs, xs=None) -> int:
        added = 0
        for idx, f in enumerate(fs):
            ok, _ = self.insert(f, None if xs is None else xs[idx])
            added += ok
        return added

    def check_invariants(self) -> None:
        f1, f2 = np.asarray(self._f1), np.asarray(self._f2)
        if np.any(np.diff(f1) <= 0) or np.any(np.diff(f2) >= 0):
            raise AssertionError("archive is not strictly sorted")


def nondominated_mask(f: np.ndarray) -> np.ndarray:
    """Mask of rows not dominated by (or equal to an earlier copy of) another row."""
    f = np.asarray(f, dtype=float)
    order = np.lexsort((f[:, 1], f[:, 0]))
    keep = np.zeros(len(f), dtype=bool)
    best2 = np.inf
    for idx in order:
        if f[idx, 1] < best2:
            keep[idx] = True
            best2 = f[idx, 1]
    return keep


def hypervolume(points, ref) -> float:
    """Area dominated by ``points`` inside the box bounded by ``ref``.

    Accepts a :class:`BiArchive` or any ``(m, 2)`` array; dominated points
    and points not strictly better than ``ref`` in both objectives add
    nothing.
    """
    f = points.f if isinstance(points, BiArchive) else np.asarray(points, dtype=float).reshape(-1, 2)
    r1, r2 = float(ref[0]), float(ref[1])
    f = f[(f[:, 0] < r1) & (f[:, 1] < r2)]
    if len(f) == 0:
        return 0.0
    f = f[nondominated_mask(f)]
    f = f[np.argsort(f[:, 0], kind="stable")]
    right = np.append(f[1:, 0], r1)
    return float(np.sum((right - f[:, 0]) * (r2 - f[:, 1])))


@dataclass
class ParetoApproximation:
    archive: BiArchive
    epsilon: float
    ideal: ObjectivePair
    nadir: ObjectivePair
    per_key_counts: dict = field(default_factory=dict)
    skipped_weights: int = 0
    degenerate: bool = False
    stitch_iterations: int = 0

    def __post_init__(self):
        if len(self.archive) == 0:
            raise ValidationError("a Pareto approximation needs a non-empty archive")

    @property
    def f(self) -> np.ndarray:
        return self.archive.f

    @property
    def x(self) -> np.ndarray:
        return self.archive.points()

    def summary(self, instance_id: str = "") -> dict:
        return {
            "instance_id": instance_id,
            "epsilon": self.epsilon,
            "archive_size": len(self.archive),
            "ideal": list(self.ideal),
            "nadir": list(self.nadir),
            "per_key_counts": {str(k): v for k, v in self.per_key_counts.items()},
            "skipped_weights": self.skipped_weights,
            "degenerate": self.degenerate,
        }


class ProblemType(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


def _distance_to_front(query: np.ndarray, front_f: np.ndarray, front_x: np.ndarray, gap: float) -> np.ndarray:
    """Front-space distance from each query vector to the piecewise-linear front.

    Consecutive front vectors are joined only when their decision vectors
    are at most ``gap`` apart, so disconnected pieces are not bridged.
    """
    dist = np.min(np.linalg.norm(query[:, None, :] - front_f[None, :, :], axis=2), axis=1)
    if len(front_f) < 2:
        return dist
    joined = np.linalg.norm(np.diff(front_x, axis=0), axis=1) <= gap
    a, b = front_f[:-1][joined], front_f[1:][joined]
    if len(a) == 0:
        return dist
    d = b - a
    dd = np.maximum(np.sum(d * d, axis=1), 1e-300)
    t = np.clip(np.einsum("qk,sk->qs", query, d) - np.sum(a * d, axis=1), 0.0, None) / dd
    t = np.minimum(t, 1.0)
    proj = a[None, :, :] + t[:, :, None] * d[None, :, :]
    seg = np.min(np.linalg.norm(query[:, None, :] - proj, axis=2), axis=1)
    return np.minimum(dist, seg)


def classify_type(
    prob: CobiProblem,
    unconstrained_ps: ParetoApproximation,
    constrained_ps: ParetoApproximation,
    tol: float | None = None,
) -> ProblemType:
    """Type I-IV taxonomy from two Pareto approximations computed with the same epsilon."""
    if len(unconstrained_ps.archive) == 0 or len(constrained_ps.archive) == 0:
        raise ClassificationError("cannot classify from an empty approximation")
    eps = unconstrained_ps.epsilon
    if tol is None:
        tol = max(1e-6, eps)
    xu = unconstrained_ps.x
    feasible = prob.constraints.total_violation(xu) <= tol
    if np.all(feasible):
        return ProblemType.I
    if not np.any(feasible):
        return ProblemType.IV
    d = _distance_to_front(constrained_ps.f, unconstrained_ps.f, xu, gap=2.0 * eps)
    return ProblemType.II if np.all(d <= tol) else ProblemType.III


# -- reference set CSV ------------------------------------------------------

def write_reference_csv(fh, archive: BiArchive) -> None:
    """Write ``x1..xn,f1,f2`` rows in f1-ascending order with 17 significant digits."""
    xs = archive.x
    n = len(xs[0]) if xs and xs[0] is not None else 0
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(n)] + ["f1", "f2"])
    for x, (f1, f2) in zip(xs, archive):
        vals = list(x) if x is not None else []
        w.writerow([format(float(v), ".17g") for v in vals + [f1, f2]])


def reference_csv_text(archive: BiArchive) -> str:
    buf = io.StringIO()
    write_reference_csv(buf, archive)
    return buf.getvalue()


def read_reference_csv(fh) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(X, F)`` from a reference-set (or any ``...,f1,f2``) CSV."""
    rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError("empty CSV")
    header = [h.strip() for h in rows[0]]
    if "f1" not in header or "f2" not in header:
        raise ValidationError("CSV header must contain f1 and f2 columns")
    i1, i2 = header.index("f1"), header.index("f2")
    xcols = [k for k, h in enumerate(header) if h.startswith("x")]
    try:
        data = [[float(v) for v in r] for r in rows[1:] if r]
    except ValueError as exc:
        raise ValidationError(f"non-numeric CSV entry: {exc}") from exc
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return arr[:, xcols], arr[:, [i1, i2]]

"""Eight hand-built two-dimensional instances, two per Type I-IV.

Each builder places the constraints deliberately:

* Type I: constraints far from the unconstrained Pareto set.
* Type II: a half-space whose normal is ``H (c2 - c1)`` for proportional
  Hessians, so every projection slides along the Pareto segment and the
  constrained front is a piece of the unconstrained one.
* Type III: constraints that cut the Pareto set obliquely, so projections
  leave the segment and create new front points.
* Type IV: feasible regions that miss the unconstrained Pareto set.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from cobi.constraints import ConstraintSet, LinearConstraint, MultipeakConstraint, QuadraticConstraint
from cobi.core import SpdMatrix
from cobi.objectives import MultipeakObjective, QuadraticPeak
from cobi.problem import CobiProblem, ProblemType

EXPECTED_TYPES = ("I", "I", "II", "II", "III", "III", "IV", "IV")
SHOWCASE_EPSILON = 0.01

_I2 = np.eye(2)


def _disk(center, radius) -> QuadraticConstraint:
    return QuadraticConstraint(np.asarray(center, dtype=float), SpdMatrix(_I2), 0.5 * radius**2)


def _single(center, hessian=_I2) -> MultipeakObjective:
    return MultipeakObjective((QuadraticPeak(np.asarray(center, dtype=float), SpdMatrix(hessian)),))


def _problem(name, f1, f2, constraints, anchor) -> CobiProblem:
    from cobi.generator import content_id

    prob = CobiProblem(
        2, (f1, f2), ConstraintSet(tuple(constraints)), np.asarray(anchor, dtype=float),
        seed=0, name=name, bounds=(np.array([-4.0, -4.0]), np.array([4.0, 4.0])),
    )
    return CobiProblem(
        2, prob.objectives, prob.constraints, prob.anchor, seed=0,
        instance_id=content_id(prob), name=name, bounds=prob.bounds,
    )


def type1_far_constraints() -> CobiProblem:
    return _problem(
        "type-I-far-constraints",
        _single([0.0, 0.0]), _single([1.0, 0.0]),
        [LinearConstraint([1.0, 1.0], -3.0), _disk([0.5, -2.0], 3.0)],
        [0.5, 0.0],
    )


def type1_multipeak_enclosed() -> CobiProblem:
    f1 = MultipeakObjective((
        QuadraticPeak(np.array([-2.0, 0.0]), SpdMatrix(_I2)),
        QuadraticPeak(np.array([2.0, 1.5]), SpdMatrix(np.diag([2.0, 1.0])), 0.5),
    ))
    f2 = _single([0.0, -1.0], np.array([[2.0, 0.5], [0.5, 1.0]]))
    return _problem("type-I-multipeak-enclosed", f1, f2, [_disk([0.0, 0.0], 3.5)], [0.0, 0.0])


def type2_aligned_halfspace() -> CobiProblem:
    return _problem(
        "type-II-aligned-halfspace",
        _single([0.0, 0.0]), _single([1.0, 0.0]),
        [LinearConstraint([1.0, 0.0], -0.5)],
        [0.0, 0.0],
    )


def type2_proportional_hessians() -> CobiProblem:
    h = np.diag([4.0, 1.0])
    c1, c2 = np.array([0.0, 0.0]), np.array([2.0, 1.0])
    normal = h @ (c2 - c1)
    cut = 0.6 * c2
    return _problem(
        "type-II-proportional-hessians",
        _single(c1, h), _single(c2, 2.0 * h),
        [LinearConstraint(normal, -float(normal @ cut)), _disk([0.0, 0.0], 3.5)],
        [0.0, 0.0],
    )


def type3_oblique_halfspace() -> CobiProblem:
    return _problem(
        "type-III-oblique-halfspace",
        _single([0.0, 0.0]), _single([1.0, 0.0]),
        [LinearConstraint([1.0, 1.0], -0.3)],
        [0.0, 0.0],
    )


def type3_two_disks() -> CobiProblem:
    union = MultipeakConstraint((_disk([-1.2, 0.3], 1.0), _disk([1.6, 0.9], 0.9)))
    return _problem(
        "type-III-two-disks",
        _single([-2.0, 0.0]), _single([2.0, 0.0]),
        [union],
        [-1.2, 0.3],
    )


def type4_shifted_halfspace() -> CobiProblem:
    return _problem(
        "type-IV-shifted-halfspace",
        _single([0.0, 0.0]), _single([1.0, 0.0]),
        [LinearConstraint([-1.0, 0.0], 2.0)],
        [3.0, 0.0],
    )


def type4_disjoint_disks() -> CobiProblem:
    union = MultipeakConstraint((_disk([-0.5, 1.5], 1.0), _disk([1.5, -1.2], 0.8)))
    return _problem(
        "type-IV-disjoint-disks",
        _single([0.0, 0.0]), _single([1.0, 0.0]),
        [union],
        [-0.5, 1.5],
    )


BUILDERS = (
    type1_far_constraints,
    type1_multipeak_enclosed,
    type2_aligned_halfspace,
    type2_proportional_hessians,
    type3_oblique_halfspace,
    type3_two_disks,
    type4_shifted_halfspace,
    type4_disjoint_disks,
)


def build_showcase() -> list[CobiProblem]:
    return [b() for b in BUILDERS]


def showcase_files() -> list:
    """Shipped instance documents, in Type I, I, II, II, III, III, IV, IV order."""
    root = resources.files("cobi") / "data" / "showcase"
    return [root / f"{k + 1}-{b().name}.json" for k, b in enumerate(BUILDERS)]


def load_showcase() -> list[CobiProblem]:
    from cobi.generator import loads

    return [loads(f.read_text(encoding="utf-8")) for f in showcase_files()]


def expected_types() -> list[ProblemType]:
    return [ProblemType(t) for t in EXPECTED_TYPES]

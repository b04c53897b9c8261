"""Linear, convex-quadratic and multipeak inequality constraints.

Feasibility is always decided on raw values: sign-preserving transforms
leave every sublevel set ``{g <= 0}`` unchanged, and some of them (the
binary step) throw away the violation magnitude.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np

from cobi.core import SIGN_IDENTITY, SignPreservingTransform, SpdMatrix, as_point
from cobi.errors import DimensionError, ValidationError

DEFAULT_FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """``a^T x + b <= 0``."""

    normal: np.ndarray
    intercept: float

    def __post_init__(self):
        a = as_point(self.normal, name="constraint normal").copy()
        if np.linalg.norm(a) <= 1e-12:
            raise ValidationError("linear constraint normal is the zero vector")
        a.setflags(write=False)
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def n(self) -> int:
        return self.normal.size

    def value(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.normal + self.intercept

    def gradient(self, x) -> np.ndarray:
        return self.normal

    def hessian(self) -> np.ndarray | None:
        return None


@dataclass(frozen=True, eq=False)
class QuadraticConstraint:
    """``0.5 (x-c)^T H (x-c) - d <= 0`` with ``d >= 0``."""

    center: np.ndarray
    hessian_matrix: SpdMatrix
    level: float

    def __post_init__(self):
        c = as_point(self.center, name="constraint center").copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not isinstance(self.hessian_matrix, SpdMatrix):
            object.__setattr__(
                self, "hessian_matrix", SpdMatrix(self.hessian_matrix, name="constraint hessian")
            )
        if self.hessian_matrix.n != c.size:
            raise DimensionError("constraint hessian and center dimensions differ")
        level = float(self.level)
        if not level >= 0:
            raise ValidationError(f"quadratic constraint level must be >= 0, got {level}")
        object.__setattr__(self, "level", level)

    @property
    def n(self) -> int:
        return self.center.size

    def value(self, x) -> np.ndarray:
        y = (np.asarray(x, dtype=float) - self.center) @ self.hessian_matrix.factor
        return 0.5 * np.sum(y * y, axis=-1) - self.level

    def gradient(self, x) -> np.ndarray:
        return self.hessian_matrix.entries @ (np.asarray(x, dtype=float) - self.center)

    def hessian(self) -> np.ndarray:
        return self.hessian_matrix.entries


ConvexConstraint = Union[LinearConstraint, QuadraticConstraint]


@dataclass(frozen=True, eq=False)
class MultipeakConstraint:
    """``min_j tau_j(g_j(x)) <= 0``: feasible set is the union of the parts' sets."""

    parts: tuple[tuple[ConvexConstraint, SignPreservingTransform], ...]

    def __post_init__(self):
        parts = []
        for part in self.parts:
            if isinstance(part, (LinearConstraint, QuadraticConstraint)):
                part = (part, SIGN_IDENTITY)
            parts.append((part[0], part[1]))
        if not parts:
            raise ValidationError("a multipeak constraint needs at least one part")
        if len({g.n for g, _ in parts}) != 1:
            raise DimensionError("multipeak constraint parts differ in dimension")
        object.__setattr__(self, "parts", tuple(parts))

    @property
    def n(self) -> int:
        return self.parts[0][0].n

    def value(self, x) -> np.ndarray:
        return np.min(np.stack([g.value(x) for g, _ in self.parts], axis=-1), axis=-1)

    def transformed_value(self, x) -> np.ndarray:
        return np.min(np.stack([tau(g.value(x)) for g, tau in self.parts], axis=-1), axis=-1)


Constraint = Union[LinearConstraint, QuadraticConstraint, MultipeakConstraint]


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    constraints: tuple[tuple[Constraint, SignPreservingTransform], ...] = ()

    def __post_init__(self):
        items = []
        for item in self.constraints:
            if isinstance(item, (LinearConstraint, QuadraticConstraint, MultipeakConstraint)):
                item = (item, SIGN_IDENTITY)
            items.append((item[0], item[1]))
        if len({g.n for g, _ in items}) > 1:
            raise DimensionError("constraints differ in dimension")
        object.__setattr__(self, "constraints", tuple(items))

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    @property
    def n(self) -> int | None:
        return self.constraints[0][0].n if self.constraints else None

    def raw_values(self, x) -> np.ndarray:
        """Raw constraint values; shape ``(p,)`` for a point or ``(m, p)`` for stacked points."""
        x = np.asarray(x, dtype=float)
        if not self.constraints:
            return np.zeros(x.shape[:-1] + (0,))
        return np.stack([g.value(x) for g, _ in self.constraints], axis=-1)

    def transformed_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.constraints:
            return np.zeros(x.shape[:-1] + (0,))
        vals = []
        for g, tau in self.constraints:
            inner = g.transformed_value(x) if isinstance(g, MultipeakConstraint) else g.value(x)
            vals.append(tau(inner))
        return np.stack(vals, axis=-1)

    def total_violation(self, x) -> np.ndarray:
        return np.sum(np.maximum(self.raw_values(x), 0.0), axis=-1)

    def feasible_mask(self, x, tol: float = DEFAULT_FEASIBILITY_TOL) -> np.ndarray:
        return self.total_violation(x) <= tol


def _check_point(cs: ConstraintSet, x) -> np.ndarray:
    return as_point(x, cs.n) if cs.n is not None else as_point(x)


def constraint_value(cs: ConstraintSet, k: int, x, apply_transforms: bool = False) -> float:
    if not 0 <= k < len(cs):
        raise IndexError(f"constraint index {k} out of range for {len(cs)} constraints")
    x = _check_point(cs, x)
    g, tau = cs.constraints[k]
    if not apply_transforms:
        return float(g.value(x))
    inner = g.transformed_value(x) if isinstance(g, MultipeakConstraint) else g.value(x)
    return float(tau(inner))


def is_feasible(cs: ConstraintSet, x, tol: float = DEFAULT_FEASIBILITY_TOL) -> tuple[bool, float]:
    """Return ``(feasible, total_violation)`` with violation ``sum_k max(0, g_k(x))``."""
    x = _check_point(cs, x)
    v = float(cs.total_violation(x))
    return v <= tol, v


@dataclass(frozen=True, eq=False)
class ConvexSelection:
    """Constraint set with only linear and quadratic members.

    ``choice`` records, for each multipeak constraint of the parent set, the
    index of the part that was selected.
    """

    constraints: tuple[ConvexConstraint, ...]
    choice: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.constraints)

    @property
    def linear_only(self) -> bool:
        return all(isinstance(g, LinearConstraint) for g in self.constraints)

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.constraints:
            return np.zeros(x.shape[:-1] + (0,))
        return np.stack([g.value(x) for g in self.constraints], axis=-1)

    def violation(self, x) -> float:
        return float(np.sum(np.maximum(self.values(x), 0.0)))


def convex_selections(cs: ConstraintSet) -> list[ConvexSelection]:
    """Cartesian product over multipeak constraints of their parts.

    Ordering is lexicographic in the part indices, first multipeak
    constraint varying slowest.
    """
    options = []
    for g, _ in cs.constraints:
        if isinstance(g, MultipeakConstraint):
            options.append([(j, part) for j, (part, _) in enumerate(g.parts)])
        else:
            options.append([(None, g)])
    result = []
    for combo in itertools.product(*options):
        choice = tuple(j for j, _ in combo if j is not None)
        result.append(ConvexSelection(tuple(g for _, g in combo), choice))
    return result


def selection_count(cs: ConstraintSet) -> int:
    count = 1
    for g, _ in cs.constraints:
        if isinstance(g, MultipeakConstraint):
            count *= len(g.parts)
    return count

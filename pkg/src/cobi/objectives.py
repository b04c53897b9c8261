"""Convex-quadratic peaks and multipeak objectives.

A peak evaluates ``inner(0.5 (x-c)^T H (x-c)) + offset``; the offset is
added *after* the inner transform so a peak's minimum value is its offset
and power transforms only ever see nonnegative input. An objective is the
outer transform of the minimum over its peaks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cobi.core import IDENTITY, MonotoneTransform, SpdMatrix, as_point
from cobi.errors import DimensionError, TransformDomainError, ValidationError

MIN_CENTER_DISTANCE = 1e-9


@dataclass(frozen=True, eq=False)
class QuadraticPeak:
    center: np.ndarray
    hessian: SpdMatrix
    offset: float = 0.0
    inner_transform: MonotoneTransform = IDENTITY

    def __post_init__(self):
        c = as_point(self.center, name="peak center").copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not isinstance(self.hessian, SpdMatrix):
            object.__setattr__(self, "hessian", SpdMatrix(self.hessian, name="peak hessian"))
        if self.hessian.n != c.size:
            raise DimensionError("peak hessian and center dimensions differ")
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.center.size

    def quadratic_form(self, x) -> np.ndarray:
        """``0.5 (x-c)^T H (x-c)`` for a point or a stack of points (rows)."""
        d = np.asarray(x, dtype=float) - self.center
        y = d @ self.hessian.factor
        return 0.5 * np.sum(y * y, axis=-1)

    def gradient(self, x) -> np.ndarray:
        return self.hessian.entries @ (np.asarray(x, dtype=float) - self.center)


def peak_value_raw(peak: QuadraticPeak, x) -> float:
    """``0.5 (x-c)^T H (x-c) + v`` ignoring the inner transform."""
    x = as_point(x, peak.n)
    return float(peak.quadratic_form(x) + peak.offset)


def peak_value(peak: QuadraticPeak, x) -> float:
    """Peak value with its inner transform applied."""
    x = as_point(x, peak.n)
    return float(peak.inner_transform(peak.quadratic_form(x)) + peak.offset)


@dataclass(frozen=True, eq=False)
class MultipeakObjective:
    peaks: tuple[QuadraticPeak, ...]
    outer_transform: MonotoneTransform = IDENTITY

    def __post_init__(self):
        peaks = tuple(self.peaks)
        if not peaks:
            raise ValidationError("a multipeak objective needs at least one peak")
        n = peaks[0].n
        if any(p.n != n for p in peaks):
            raise DimensionError("all peaks must share one dimension")
        centers = np.array([p.center for p in peaks])
        for i in range(len(peaks)):
            for j in range(i):
                if np.linalg.norm(centers[i] - centers[j]) <= MIN_CENTER_DISTANCE:
                    raise ValidationError(f"peak centers {j} and {i} coincide")
        object.__setattr__(self, "peaks", peaks)

    @property
    def n(self) -> int:
        return self.peaks[0].n

    @property
    def has_inner_transforms(self) -> bool:
        return any(not p.inner_transform.is_identity for p in self.peaks)

    def raw_peak_values(self, x) -> np.ndarray:
        """Raw values of every peak; ``x`` may be a point or a stack of points."""
        x = np.asarray(x, dtype=float)
        return np.stack([p.quadratic_form(x) + p.offset for p in self.peaks], axis=-1)

    def inner_peak_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        vals = []
        for i, p in enumerate(self.peaks):
            try:
                vals.append(p.inner_transform(p.quadratic_form(x)) + p.offset)
            except TransformDomainError as exc:
                raise TransformDomainError(f"peak {i}: {exc}") from exc
        return np.stack(vals, axis=-1)

    def merge_value(self, x) -> np.ndarray:
        """``min_i`` of inner-transformed peak values, without the outer transform.

        This is the value that decides dominance between points coming from
        different peaks. It equals the raw value when no inner transforms
        are attached.
        """
        if not self.has_inner_transforms:
            return np.min(self.raw_peak_values(x), axis=-1)
        return np.min(self.inner_peak_values(x), axis=-1)

    def __call__(self, x, apply_transforms: bool = True):
        if not apply_transforms:
            return np.min(self.raw_peak_values(x), axis=-1)
        m = self.merge_value(x)
        try:
            return self.outer_transform(m)
        except TransformDomainError as exc:
            raise TransformDomainError(f"outer transform: {exc}") from exc


def objective_value(obj: MultipeakObjective, x, apply_transforms: bool = True) -> float:
    x = as_point(x, obj.n)
    return float(obj(x, apply_transforms))


def active_peak(obj: MultipeakObjective, x) -> int:
    """Index of a peak attaining the minimum raw value (lowest index on ties)."""
    x = as_point(x, obj.n)
    return int(np.argmin(obj.raw_peak_values(x)))


def coercivity_radius(obj: MultipeakObjective, y) -> float:
    """Radius ``r`` such that every ``x`` with ``|x - y| > r`` has a raw value above ``f(y)``.

    Uses ``q(x) >= 0.5 lambda_min |x - c|^2 + v`` for each peak.
    """
    y = as_point(y, obj.n)
    fy = objective_value(obj, y, apply_transforms=False)
    r = 0.0
    for p in obj.peaks:
        lam = p.hessian.eigenvalues()[0]
        reach = np.sqrt(max(fy - p.offset, 0.0) * 2.0 / lam)
        r = max(r, reach + np.linalg.norm(p.center - y))
    return float(r)

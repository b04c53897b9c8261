import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cobi.core import MonotoneTransform, SpdMatrix, random_rotation, spd_from_spectrum
from cobi.errors import DimensionError, TransformDomainError, ValidationError
from cobi.objectives import (
    MultipeakObjective,
    QuadraticPeak,
    active_peak,
    coercivity_radius,
    objective_value,
    peak_value,
    peak_value_raw,
)

EYE = SpdMatrix(np.eye(2))


def two_peaks(v2=0.1, outer=MonotoneTransform()):
    return MultipeakObjective(
        (QuadraticPeak([0.0, 0.0], EYE), QuadraticPeak([2.0, 0.0], EYE, v2)), outer
    )


def test_peak_value_examples():
    assert peak_value_raw(QuadraticPeak([0, 0], EYE), [0, 0]) == 0
    assert peak_value_raw(QuadraticPeak([0, 0], EYE), [3, 4]) == 12.5
    p = QuadraticPeak([1, 1], SpdMatrix(np.diag([4.0, 1.0])), 0.1)
    assert peak_value_raw(p, [0, 0]) == pytest.approx(2.6, abs=1e-15)


def test_inner_transform_applies_before_offset():
    p = QuadraticPeak([0, 0], EYE, 1.0, MonotoneTransform.power(0.5))
    assert peak_value(p, [3, 4]) == pytest.approx(math.sqrt(12.5) + 1.0)
    assert peak_value_raw(p, [3, 4]) == 13.5


def test_objective_examples():
    assert objective_value(two_peaks(), [2, 0], apply_transforms=False) == pytest.approx(0.1)
    single = MultipeakObjective((QuadraticPeak([0, 0], EYE),), MonotoneTransform.power(0.5))
    assert objective_value(single, [3, 4]) == pytest.approx(3.5355339, abs=1e-7)
    assert objective_value(MultipeakObjective((QuadraticPeak([0, 0], EYE),)), [0, 0]) == 0


def test_active_peak_examples():
    # indices are zero-based here
    obj = two_peaks()
    assert active_peak(obj, [2, 0]) == 1
    assert active_peak(obj, [0, 0]) == 0
    assert active_peak(two_peaks(v2=0.0), [1, 0]) == 0


def test_objective_validation():
    with pytest.raises(ValidationError):
        MultipeakObjective(())
    with pytest.raises(ValidationError):
        MultipeakObjective((QuadraticPeak([0, 0], EYE), QuadraticPeak([0, 1e-12], EYE)))
    with pytest.raises(DimensionError):
        MultipeakObjective((QuadraticPeak([0, 0], EYE), QuadraticPeak([0, 0, 1], np.eye(3))))
    with pytest.raises(DimensionError):
        peak_value_raw(QuadraticPeak([0, 0], EYE), [1, 2, 3])


def test_domain_error_names_peak():
    obj = MultipeakObjective(
        (QuadraticPeak([0, 0], EYE), QuadraticPeak([2, 0], EYE, 0.0, MonotoneTransform("log1p", (1.0,)))),
    )
    bad = MultipeakObjective((QuadraticPeak([0, 0], EYE, -5.0),), MonotoneTransform.power(2.0))
    with pytest.raises(TransformDomainError, match="outer"):
        objective_value(bad, [0, 0])
    assert objective_value(obj, [2, 0]) == 0.0


@given(st.integers(0, 2**32 - 1))
def test_raw_path_is_min_of_peaks(seed):
    rng = np.random.default_rng(seed)
    peaks = tuple(
        QuadraticPeak(rng.normal(size=3), spd_from_spectrum(10 ** rng.uniform(0, 2, 3), random_rotation(3, rng)),
                      rng.uniform(0, 1))
        for _ in range(rng.integers(1, 4))
    )
    obj = MultipeakObjective(peaks, MonotoneTransform.power(0.5))
    x = rng.normal(size=3) * 3
    assert objective_value(obj, x, apply_transforms=False) == min(peak_value_raw(p, x) for p in peaks)


@given(st.integers(0, 2**32 - 1))
def test_transforms_preserve_order(seed):
    rng = np.random.default_rng(seed)
    obj_raw = two_peaks()
    for outer in (MonotoneTransform.power(0.5), MonotoneTransform.power(2.0), MonotoneTransform("log1p", (2.0,))):
        obj = two_peaks(outer=outer)
        x, y = rng.normal(size=(2, 2)) * 3
        d_raw = np.sign(objective_value(obj_raw, x) - objective_value(obj_raw, y))
        d_tr = np.sign(objective_value(obj, x) - objective_value(obj, y))
        assert d_raw == d_tr


def test_coercivity_witness():
    rng = np.random.default_rng(5)
    obj = two_peaks()
    worst_center = max(objective_value(obj, p.center, False) for p in obj.peaks)
    center = obj.peaks[int(np.argmax([objective_value(obj, p.center, False) for p in obj.peaks]))].center
    r = coercivity_radius(obj, center)
    for _ in range(200):
        d = rng.normal(size=2)
        x = center + (r + 1e-6) * d / np.linalg.norm(d)
        assert objective_value(obj, x, False) > worst_center

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cobi.constraints import (
    ConstraintSet,
    LinearConstraint,
    MultipeakConstraint,
    QuadraticConstraint,
    constraint_value,
    convex_selections,
    is_feasible,
    selection_count,
)
from cobi.core import SignPreservingTransform, SpdMatrix
from cobi.errors import DimensionError, ValidationError

EYE = SpdMatrix(np.eye(2))


def test_constraint_value_examples():
    cs = ConstraintSet((
        LinearConstraint([1.0, 0.0], -1.0),
        MultipeakConstraint((LinearConstraint([1.0, 0.0], -1.0), QuadraticConstraint([0, 0], EYE, 1.0))),
        QuadraticConstraint([1, 1], SpdMatrix(np.diag([4.0, 1.0])), 0.5),
    ))
    assert constraint_value(cs, 0, [3, 0]) == 2
    assert constraint_value(cs, 1, [0, 0]) == -1
    assert constraint_value(cs, 2, [1, 1]) == -0.5
    with pytest.raises(IndexError):
        constraint_value(cs, 3, [0, 0])
    with pytest.raises(DimensionError):
        constraint_value(cs, 0, [0, 0, 0])


def test_transformed_path():
    cs = ConstraintSet(((LinearConstraint([1.0, 0.0], -1.0), SignPreservingTransform("scale", (3.0,))),))
    assert constraint_value(cs, 0, [3, 0], apply_transforms=True) == 6
    assert constraint_value(cs, 0, [3, 0]) == 2


def test_is_feasible_examples():
    assert is_feasible(ConstraintSet(()), [5, 5]) == (True, 0.0)
    assert is_feasible(ConstraintSet((LinearConstraint([1, 0], -1),)), [3, 0]) == (False, 2.0)
    strip = ConstraintSet((LinearConstraint([1, 0], -1), LinearConstraint([-1, 0], 0)))
    assert is_feasible(strip, [0.5, 0]) == (True, 0.0)


def test_construction_errors():
    with pytest.raises(ValidationError):
        LinearConstraint([0.0, 0.0], 1.0)
    with pytest.raises(ValidationError):
        QuadraticConstraint([0, 0], EYE, -0.1)
    with pytest.raises(ValidationError):
        MultipeakConstraint(())


def test_selection_examples():
    lin, quad = LinearConstraint([1, 0], 0), QuadraticConstraint([0, 0], EYE, 1)
    assert len(convex_selections(ConstraintSet((lin, quad)))) == 1
    mp3 = MultipeakConstraint((lin, quad, LinearConstraint([0, 1], 0)))
    assert len(convex_selections(ConstraintSet((mp3,)))) == 3
    mp2 = MultipeakConstraint((lin, quad))
    sels = convex_selections(ConstraintSet((mp2, mp3, lin)))
    # Cartesian product oracle
    expected = [(a, b) for a in range(2) for b in range(3)]
    assert [s.choice for s in sels] == expected
    assert all(len(s) == 3 for s in sels)
    assert selection_count(ConstraintSet((mp2, mp3, lin))) == 6
    assert len(convex_selections(ConstraintSet(()))) == 1


def _random_set(rng):
    def convex():
        if rng.random() < 0.5:
            return LinearConstraint(rng.normal(size=2), rng.normal())
        return QuadraticConstraint(rng.normal(size=2), EYE, rng.uniform(0, 2))

    items = []
    for _ in range(rng.integers(1, 4)):
        if rng.random() < 0.5:
            items.append(MultipeakConstraint(tuple(convex() for _ in range(rng.integers(1, 4)))))
        else:
            items.append(convex())
    return ConstraintSet(tuple(items))


@given(st.integers(0, 2**32 - 1))
def test_union_and_intersection_laws(seed):
    rng = np.random.default_rng(seed)
    cs = _random_set(rng)
    sels = convex_selections(cs)
    for x in rng.normal(size=(50, 2)) * 2:
        raw = cs.raw_values(x)
        for (g, _), v in zip(cs, raw):
            if isinstance(g, MultipeakConstraint):
                assert (v <= 0) == any(part.value(x) <= 0 for part, _ in g.parts)
        feasible = is_feasible(cs, x, tol=0.0)[0]
        assert feasible == (np.max(raw) <= 0)
        assert feasible == any(s.violation(x) == 0 for s in sels)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["step", "scale"]))
def test_transforms_do_not_change_feasibility(seed, kind):
    rng = np.random.default_rng(seed)
    cs = _random_set(rng)
    tau = SignPreservingTransform(kind, (2.5,) if kind == "scale" else ())
    transformed = ConstraintSet(tuple((g, tau) for g, _ in cs))
    for x in rng.normal(size=(50, 2)) * 2:
        raw = cs.raw_values(x)
        if np.min(np.abs(raw)) <= 1e-9:
            continue
        assert is_feasible(cs, x)[0] == is_feasible(transformed, x)[0]
        assert np.array_equal(transformed.transformed_values(x) <= 0, raw <= 0)

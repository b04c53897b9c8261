import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cobi.constraints import ConstraintSet, LinearConstraint
from cobi.core import SpdMatrix
from cobi.objectives import MultipeakObjective, QuadraticPeak
from cobi.problem import CobiProblem

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile("default")


def sphere_pair(c1=(0.0, 0.0), c2=(1.0, 0.0), constraints=(), anchor=(0.0, 0.0)) -> CobiProblem:
    """Two unit-Hessian peaks; the unconstrained Pareto set is the segment c1-c2."""
    eye = SpdMatrix(np.eye(len(c1)))
    f1 = MultipeakObjective((QuadraticPeak(np.array(c1, float), eye),))
    f2 = MultipeakObjective((QuadraticPeak(np.array(c2, float), eye),))
    return CobiProblem(len(c1), (f1, f2), ConstraintSet(tuple(constraints)), np.array(anchor, float))


@pytest.fixture
def spheres():
    return sphere_pair()


@pytest.fixture
def half_spheres():
    return sphere_pair(constraints=[LinearConstraint([1.0, 0.0], -0.5)])


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

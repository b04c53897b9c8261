import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cobi.constraints import LinearConstraint, MultipeakConstraint, QuadraticConstraint
from cobi.errors import ConfigError, ValidationError
from cobi.generator import (
    GeneratorConfig,
    decode_float,
    dumps,
    encode_float,
    from_document,
    generate,
    load,
    loads,
    save,
    to_document,
)
from cobi.pareto import approx_ps, classify
from cobi.problem import ProblemType

RICH = dict(
    dimension=3, peaks=(2, 1), constraints=["linear", "quadratic", "multipeak:linear,quadratic", "box"],
    condition_range=(2.0, 500.0), offset_range=(0.0, 1.0),
    objective_transforms=[{"kind": "power", "params": [0.5]}, None],
    constraint_transforms=[None, {"kind": "scale", "params": [2.0]}, {"kind": "step", "params": []}, None],
)


def _hessians(prob):
    for obj in prob.objectives:
        for p in obj.peaks:
            yield p.hessian.entries
    for g, _ in prob.constraints:
        parts = [q for q, _ in g.parts] if isinstance(g, MultipeakConstraint) else [g]
        for q in parts:
            if isinstance(q, QuadraticConstraint):
                yield q.hessian_matrix.entries


def test_same_config_gives_identical_documents():
    cfg = GeneratorConfig(seed=7, **RICH)
    assert dumps(generate(cfg)) == dumps(generate(GeneratorConfig(seed=7, **RICH)))
    assert dumps(generate(cfg)) != dumps(generate(GeneratorConfig(seed=8, **RICH)))
    assert generate(cfg).instance_id == cfg.instance_id() and len(cfg.instance_id()) == 16


@given(st.integers(0, 2**64 - 1), st.integers(2, 6))
def test_condition_numbers_and_anchor_margin(seed, n):
    cfg = GeneratorConfig(
        dimension=n, peaks=(2, 2), constraints=["linear", "quadratic", "multipeak:quadratic,linear"],
        condition_range=(3.0, 1e4), seed=seed,
    )
    prob = generate(cfg)
    for h in _hessians(prob):
        ev = np.linalg.eigvalsh(h)
        kappa = ev[-1] / ev[0]
        assert 3.0 * (1 - 1e-6) <= kappa <= 1e4 * (1 + 1e-6)
    for g, _ in prob.constraints:
        if isinstance(g, MultipeakConstraint):
            assert min(float(q.value(prob.anchor)) for q, _ in g.parts) <= -0.09
        else:
            assert float(g.value(prob.anchor)) <= -0.09


def test_box_shorthand_and_anchor():
    prob = generate(GeneratorConfig(dimension=3, constraints=["box"], seed=2))
    cons = [g for g, _ in prob.constraints]
    assert len(cons) == 6 and all(isinstance(g, LinearConstraint) for g in cons)
    one = generate(GeneratorConfig(constraints=["linear"], condition_range=(1, 1), seed=3))
    assert one.constraints.total_violation(one.anchor) == 0
    for h in _hessians(one):
        assert np.allclose(h, np.eye(2))


def test_round_trip_is_byte_exact(tmp_path):
    prob = generate(GeneratorConfig(seed=11, **RICH))
    text = dumps(prob)
    again = loads(text)
    assert dumps(again) == text
    path = tmp_path / "inst.json"
    save(again, path)
    assert path.read_text(encoding="utf-8") == text
    x = np.random.default_rng(0).uniform(-5, 5, (50, 3))
    assert np.array_equal(prob.transformed_objectives(x), load(path).transformed_objectives(x))


def test_float_encoding():
    for v in (0.1, -1e-300, 2.0**-1074, 1e308, 1 / 3):
        assert decode_float(encode_float(v), "v") == v
    assert decode_float({"hex": (0.1).hex()}, "v") == 0.1
    with pytest.raises(ValidationError, match="disagree"):
        decode_float({"dec": "0.2", "hex": (0.1).hex()}, "v")


def _doc():
    return to_document(generate(GeneratorConfig(constraints=["linear", "quadratic"], seed=5)))


def test_non_spd_hessian_names_field():
    doc = _doc()
    bad = [[1.0, 0.0], [0.0, -2.0]]
    doc["instance"]["objectives"][1]["peaks"][0]["hessian"] = bad
    with pytest.raises(ValidationError, match=r"objectives\[1\]\.peaks\[0\]\.hessian"):
        from_document(doc)


def test_infeasible_anchor_rejected():
    doc = _doc()
    prob = from_document(doc)
    g = prob.constraints.constraints[0][0]
    far = prob.anchor + 100 * g.normal
    doc["instance"]["anchor"] = [float(v) for v in far]
    with pytest.raises(ValidationError, match="anchor"):
        from_document(doc)


def test_schema_checks():
    doc = _doc()
    with pytest.raises(ValidationError, match="schema"):
        from_document({**doc, "schema": "other"})
    with pytest.raises(ValidationError, match="schema_version"):
        from_document({**doc, "schema_version": 99})
    with pytest.raises(ValidationError, match="invalid JSON"):
        loads("{nope")
    doc["instance"]["anchor"] = doc["instance"]["anchor"][:1]
    with pytest.raises(ValidationError, match="instance.anchor"):
        from_document(doc)


@pytest.mark.parametrize("bad", [
    dict(dimension=1),
    dict(peaks=(0, 1)),
    dict(condition_range=(0.5, 10)),
    dict(condition_range=(10, 2e6)),
    dict(center_box=(1, 1)),
    dict(constraints=["cubic"]),
    dict(constraints=["multipeak:"]),
    dict(feasibility="maybe"),
    dict(seed=-1),
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        GeneratorConfig(**bad)


def test_subproblem_budget():
    with pytest.raises(ConfigError, match="budget"):
        GeneratorConfig(peaks=(10, 10), constraints=["multipeak:linear,linear,linear"] * 5)
    GeneratorConfig(peaks=(10, 10), constraints=["multipeak:linear,linear"] * 3, subproblem_budget=800)


def test_config_dict_round_trip():
    cfg = GeneratorConfig(seed=3, **RICH)
    assert GeneratorConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    with pytest.raises(ConfigError, match="unknown"):
        GeneratorConfig.from_dict({"colour": 1})


def test_unconstrained_config_is_type_one():
    prob = generate(GeneratorConfig(seed=4))
    assert len(prob.constraints) == 0
    assert classify(prob, 0.05) is ProblemType.I


def test_feasibility_none_still_finds_a_feasible_anchor():
    prob = generate(GeneratorConfig(constraints=["linear", "quadratic"], feasibility="none", seed=9))
    assert prob.constraints.total_violation(prob.anchor) == 0


def test_fifty_seeds_give_nondegenerate_archives():
    recipes = [["linear"], ["quadratic"], ["linear", "quadratic"], ["multipeak:quadratic,linear"]]
    for seed in range(50):
        cfg = GeneratorConfig(peaks=(1 + seed % 2, 1), constraints=recipes[seed % 4], seed=1000 + seed)
        assert not approx_ps(generate(cfg), 0.01).degenerate

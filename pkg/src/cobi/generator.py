"""Seeded instance generation and the JSON instance document.

Draw order from a ``numpy.random.Generator(Philox(seed))`` stream, fixed so
that documents are byte-identical across runs and platforms:

1. objective peak centers (all peaks of f1, then f2), rejection-sampled to
   be pairwise distinct;
2. one condition number per objective peak (log-uniform in the configured
   range), same order;
3. one Haar rotation per objective peak, same order;
4. one offset per objective peak, same order;
5. the anchor point;
6. constraints in recipe order, each drawing its own parameters.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from cobi.constraints import (
    ConstraintSet,
    LinearConstraint,
    MultipeakConstraint,
    QuadraticConstraint,
    selection_count,
)
from cobi.core import (
    MonotoneTransform,
    SignPreservingTransform,
    SpdMatrix,
    log_spaced_spectrum,
    random_rotation,
    spd_from_spectrum,
)
from cobi.errors import ConfigError, GenerationError, ValidationError
from cobi.objectives import MultipeakObjective, QuadraticPeak
from cobi.problem import CobiProblem

SCHEMA = "cobi-instance"
SCHEMA_VERSION = 1
ANCHOR_MARGIN = 0.1
MAX_REJECTIONS = 10_000
DEFAULT_SUBPROBLEM_BUDGET = 10_000
CONSTRAINT_KINDS = ("linear", "quadratic", "box")


@dataclass
class GeneratorConfig:
    """Parameters of a random instance.

    ``constraints`` entries are ``"linear"``, ``"quadratic"``, ``"box"``
    (shorthand for ``2n`` linear constraints bounding the center box) or
    ``"multipeak:<kind>,<kind>,..."`` for a min-composition of parts.
    ``constraint_transforms`` has one transform dict per entry (``None``
    for identity); box entries share theirs across their ``2n`` members.
    """

    dimension: int = 2
    peaks: tuple[int, int] = (1, 1)
    constraints: list[str] = field(default_factory=list)
    condition_range: tuple[float, float] = (1.0, 100.0)
    center_box: tuple[float, float] = (-5.0, 5.0)
    offset_range: tuple[float, float] = (0.0, 0.0)
    objective_transforms: list | None = None
    constraint_transforms: list | None = None
    feasibility: str = "anchor"
    seed: int = 0
    subproblem_budget: int = DEFAULT_SUBPROBLEM_BUDGET
    name: str = ""

    def __post_init__(self):
        self.peaks = tuple(int(p) for p in self.peaks)
        self.constraints = list(self.constraints)
        self.condition_range = tuple(float(v) for v in self.condition_range)
        self.center_box = tuple(float(v) for v in self.center_box)
        self.offset_range = tuple(float(v) for v in self.offset_range)
        self.validate()

    def validate(self) -> None:
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ConfigError(f"dimension must be an integer >= 2, got {self.dimension}")
        if len(self.peaks) != 2 or min(self.peaks) < 1:
            raise ConfigError(f"peaks must be two counts >= 1, got {self.peaks}")
        lo, hi = self.condition_range
        if not 1.0 <= lo <= hi <= 1e6:
            raise ConfigError(f"condition range must satisfy 1 <= min <= max <= 1e6, got {self.condition_range}")
        if not self.center_box[0] < self.center_box[1]:
            raise ConfigError(f"center box must have lower < upper, got {self.center_box}")
        if not 0.0 <= self.offset_range[0] <= self.offset_range[1]:
            raise ConfigError(f"offset range must satisfy 0 <= min <= max, got {self.offset_range}")
        if self.feasibility not in ("anchor", "none"):
            raise ConfigError(f"feasibility mode must be 'anchor' or 'none', got {self.feasibility!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for entry in self.constraints:
            _parse_recipe(entry)
        if self.objective_transforms is not None and len(self.objective_transforms) != 2:
            raise ConfigError("objective_transforms needs one entry per objective")
        if self.constraint_transforms is not None and len(self.constraint_transforms) != len(self.constraints):
            raise ConfigError("constraint_transforms needs one entry per constraint recipe")
        try:
            for t in self.objective_transforms or []:
                MonotoneTransform.from_dict(t)
            for t in self.constraint_transforms or []:
                SignPreservingTransform.from_dict(t)
        except ValidationError as exc:
            raise ConfigError(f"invalid transform: {exc}") from exc
        count = self.peaks[0] * self.peaks[1]
        for entry in self.constraints:
            count *= max(1, len(_parse_recipe(entry)[1]))
        if count > self.subproblem_budget:
            raise ConfigError(f"{count} subproblems exceed the budget of {self.subproblem_budget}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["peaks"] = list(self.peaks)
        d["condition_range"] = list(self.condition_range)
        d["center_box"] = list(self.center_box)
        d["offset_range"] = list(self.offset_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GeneratorConfig:
        known = cls.__dataclass_fields__.keys()
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**d)

    def instance_id(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _parse_recipe(entry: str) -> tuple[str, list[str]]:
    if not isinstance(entry, str):
        raise ConfigError(f"constraint recipe entries are strings, got {entry!r}")
    if entry.startswith("multipeak:"):
        parts = [p.strip() for p in entry.split(":", 1)[1].split(",") if p.strip()]
        if not parts or any(p not in ("linear", "quadratic") for p in parts):
            raise ConfigError(f"multipeak parts must be linear/quadratic, got {entry!r}")
        return "multipeak", parts
    if entry not in CONSTRAINT_KINDS:
        raise ConfigError(f"unknown constraint kind {entry!r}")
    return entry, []


# -- generation -------------------------------------------------------------

def _uniform_box(rng, lo, hi, n):
    return lo + (hi - lo) * rng.random(n)


def _draw_condition(rng, lo, hi) -> float:
    if lo == hi:
        return lo
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _draw_linear(rng, cfg, n):
    a = rng.standard_normal(n)
    a /= np.linalg.norm(a)
    through = _uniform_box(rng, *cfg.center_box, n)
    return LinearConstraint(a, -float(a @ through))


def _draw_quadratic(rng, cfg, n):
    center = _uniform_box(rng, *cfg.center_box, n)
    kappa = _draw_condition(rng, *cfg.condition_range)
    rot = random_rotation(n, rng)
    width = cfg.center_box[1] - cfg.center_box[0]
    radius = rng.uniform(0.1, 0.4) * width
    return QuadraticConstraint(center, spd_from_spectrum(log_spaced_spectrum(n, kappa), rot), 0.5 * radius**2)


def _make_anchor_feasible(g, anchor):
    """Shift a linear constraint or raise a quadratic level so ``g(anchor) <= -margin``."""
    value = float(g.value(anchor))
    if value <= -ANCHOR_MARGIN:
        return g
    if isinstance(g, LinearConstraint):
        return LinearConstraint(g.normal, -ANCHOR_MARGIN - float(g.normal @ anchor))
    return QuadraticConstraint(g.center, g.hessian_matrix, g.level + value + ANCHOR_MARGIN)


def _box_constraints(cfg, n):
    lo, hi = cfg.center_box
    out = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        out.append(LinearConstraint(e, -hi))
        out.append(LinearConstraint(-e, lo))
    return out


def generate(config: GeneratorConfig) -> CobiProblem:
    """Deterministic instance for ``config`` (including its seed)."""
    config.validate()
    n = int(config.dimension)
    rng = np.random.Generator(np.random.Philox(int(config.seed)))
    lo, hi = config.center_box
    total = config.peaks[0] + config.peaks[1]
    min_dist = 1e-6 * (hi - lo) * math.sqrt(n)

    centers = []
    draws = 0
    while len(centers) < total:
        c = _uniform_box(rng, lo, hi, n)
        draws += 1
        if draws > MAX_REJECTIONS:
            raise GenerationError("could not draw pairwise-distinct peak centers")
        if all(np.linalg.norm(c - o) > min_dist for o in centers):
            centers.append(c)
    kappas = [_draw_condition(rng, *config.condition_range) for _ in range(total)]
    rotations = [random_rotation(n, rng) for _ in range(total)]
    offsets = [float(rng.uniform(*config.offset_range)) for _ in range(total)]
    anchor = _uniform_box(rng, lo, hi, n)

    peaks = [
        QuadraticPeak(centers[k], spd_from_spectrum(log_spaced_spectrum(n, kappas[k]), rotations[k]), offsets[k])
        for k in range(total)
    ]
    transforms = config.objective_transforms or [None, None]
    objectives = (
        MultipeakObjective(tuple(peaks[: config.peaks[0]]), MonotoneTransform.from_dict(transforms[0])),
        MultipeakObjective(tuple(peaks[config.peaks[0]:]), MonotoneTransform.from_dict(transforms[1])),
    )

    anchored = config.feasibility == "anchor"
    ctransforms = config.constraint_transforms or [None] * len(config.constraints)
    items = []
    for entry, tdict in zip(config.constraints, ctransforms):
        tau = SignPreservingTransform.from_dict(tdict)
        kind, parts = _parse_recipe(entry)
        if kind == "box":
            members = _box_constraints(config, n)
            if anchored:
                members = [_make_anchor_feasible(g, anchor) for g in members]
            items.extend((g, tau) for g in members)
            continue
        if kind == "linear":
            g = _draw_linear(rng, config, n)
            items.append((_make_anchor_feasible(g, anchor) if anchored else g, tau))
            continue
        if kind == "quadratic":
            g = _draw_quadratic(rng, config, n)
            items.append((_make_anchor_feasible(g, anchor) if anchored else g, tau))
            continue
        drawn = [_draw_linear(rng, config, n) if p == "linear" else _draw_quadratic(rng, config, n) for p in parts]
        if anchored:
            best = int(np.argmin([float(g.value(anchor)) for g in drawn]))
            drawn[best] = _make_anchor_feasible(drawn[best], anchor)
        items.append((MultipeakConstraint(tuple(drawn)), tau))

    constraints = ConstraintSet(tuple(items))
    if not anchored and constraints.total_violation(anchor) > 0:
        anchor = _search_feasible(constraints, rng, lo, hi, n)
    if selection_count(constraints) * config.peaks[0] * config.peaks[1] > config.subproblem_budget:
        raise ConfigError("subproblem budget exceeded")
    return CobiProblem(
        n, objectives, constraints, anchor, seed=int(config.seed),
        instance_id=config.instance_id(), name=config.name,
        bounds=(np.full(n, lo), np.full(n, hi)), config=config.to_dict(),
    )


def _search_feasible(constraints, rng, lo, hi, n):
    """Without anchor construction, some feasible point must still be found."""
    for _ in range(MAX_REJECTIONS):
        x = _uniform_box(rng, lo, hi, n)
        if constraints.total_violation(x) <= 0:
            return x
    raise GenerationError("no feasible point found in the center box; the feasible set may be empty")


# -- instance documents -----------------------------------------------------

def encode_float(v: float) -> dict:
    v = float(v)
    return {"dec": repr(v), "hex": v.hex()}


def decode_float(obj, path: str) -> float:
    """Decode a number stored as ``{"dec", "hex"}``, a bare JSON number, or a numeric string."""
    if isinstance(obj, bool):
        raise ValidationError(f"{path}: expected a number, got a boolean")
    if isinstance(obj, (int, float)):
        return float(obj)
    if isinstance(obj, dict):
        if "hex" in obj:
            try:
                v = float.fromhex(obj["hex"])
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: malformed hex float {obj['hex']!r}") from exc
            if "dec" in obj:
                d = decode_float(obj["dec"], path)
                if not (d == v or (math.isnan(d) and math.isnan(v))):
                    raise ValidationError(f"{path}: decimal {obj['dec']} and hex {obj['hex']} disagree")
            return v
        if "dec" in obj:
            return decode_float(obj["dec"], path)
    if isinstance(obj, str):
        try:
            return float(obj)
        except ValueError:
            pass
    raise ValidationError(f"{path}: expected a number, got {obj!r}")


def _enc_vec(v) -> list:
    return [encode_float(x) for x in np.asarray(v, dtype=float).ravel()]


def _enc_mat(m) -> list:
    return [_enc_vec(row) for row in np.asarray(m, dtype=float)]


def _dec_vec(obj, path, n=None) -> np.ndarray:
    if not isinstance(obj, list):
        raise ValidationError(f"{path}: expected an array")
    v = np.array([decode_float(x, f"{path}[{i}]") for i, x in enumerate(obj)], dtype=float)
    if n is not None and v.size != n:
        raise ValidationError(f"{path}: expected length {n}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{path}: non-finite entry")
    return v


def _dec_mat(obj, path, n) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != n:
        raise ValidationError(f"{path}: expected a {n}x{n} matrix")
    return np.array([_dec_vec(row, f"{path}[{i}]", n) for i, row in enumerate(obj)])


def _enc_transform(t) -> dict:
    return {"kind": t.kind, "params": [encode_float(p) for p in t.params]}


def _dec_transform(obj, path, cls):
    if obj is None:
        return cls()
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError(f"{path}: expected a transform object with a kind")
    params = tuple(decode_float(p, f"{path}.params[{i}]") for i, p in enumerate(obj.get("params", [])))
    try:
        return cls(obj["kind"], params)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _spd(m, path) -> SpdMatrix:
    try:
        return SpdMatrix(m, name=path)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _enc_convex(g) -> dict:
    if isinstance(g, LinearConstraint):
        return {"kind": "linear", "normal": _enc_vec(g.normal), "intercept": encode_float(g.intercept)}
    return {
        "kind": "quadratic",
        "center": _enc_vec(g.center),
        "hessian": _enc_mat(g.hessian_matrix.entries),
        "level": encode_float(g.level),
    }


def _dec_convex(obj, path, n):
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected an object")
    kind = obj.get("kind")
    try:
        if kind == "linear":
            return LinearConstraint(_dec_vec(obj.get("normal"), f"{path}.normal", n),
                                    decode_float(obj.get("intercept"), f"{path}.intercept"))
        if kind == "quadratic":
            return QuadraticConstraint(
                _dec_vec(obj.get("center"), f"{path}.center", n),
                _spd(_dec_mat(obj.get("hessian"), f"{path}.hessian", n), f"{path}.hessian"),
                decode_float(obj.get("level"), f"{path}.level"),
            )
    except ValidationError as exc:
        if str(exc).startswith(path):
            raise
        raise ValidationError(f"{path}: {exc}") from exc
    raise ValidationError(f"{path}.kind: unknown constraint kind {kind!r}")


def to_document(prob: CobiProblem) -> dict:
    objectives = []
    for obj in prob.objectives:
        objectives.append({
            "outer_transform": _enc_transform(obj.outer_transform),
            "peaks": [
                {
                    "center": _enc_vec(p.center),
                    "hessian": _enc_mat(p.hessian.entries),
                    "offset": encode_float(p.offset),
                    "inner_transform": _enc_transform(p.inner_transform),
                }
                for p in obj.peaks
            ],
        })
    constraints = []
    for g, tau in prob.constraints:
        if isinstance(g, MultipeakConstraint):
            entry = {
                "kind": "multipeak",
                "parts": [{"constraint": _enc_convex(part), "transform": _enc_transform(t)} for part, t in g.parts],
            }
        else:
            entry = _enc_convex(g)
        entry["transform"] = _enc_transform(tau)
        constraints.append(entry)
    bounds = None
    if prob.bounds is not None:
        bounds = {"lower": _enc_vec(prob.bounds[0]), "upper": _enc_vec(prob.bounds[1])}
    return {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "config": prob.config,
        "instance": {
            "dimension": prob.dimension,
            "name": prob.name,
            "instance_id": prob.instance_id,
            "seed": prob.seed,
            "anchor": _enc_vec(prob.anchor),
            "bounds": bounds,
            "objectives": objectives,
            "constraints": constraints,
        },
    }


def from_document(doc: dict) -> CobiProblem:
    """Rebuild and re-validate a problem; errors name the offending field."""
    if not isinstance(doc, dict):
        raise ValidationError("document: expected a JSON object")
    if doc.get("schema") != SCHEMA:
        raise ValidationError(f"schema: expected {SCHEMA!r}, got {doc.get('schema')!r}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"schema_version: unsupported version {doc.get('schema_version')!r}")
    inst = doc.get("instance")
    if not isinstance(inst, dict):
        raise ValidationError("instance: missing or not an object")
    n = inst.get("dimension")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"instance.dimension: expected a positive integer, got {n!r}")
    objs = inst.get("objectives")
    if not isinstance(objs, list) or len(objs) != 2:
        raise ValidationError("instance.objectives: expected exactly two objectives")
    objectives = []
    for k, o in enumerate(objs):
        path = f"instance.objectives[{k}]"
        if not isinstance(o, dict) or not isinstance(o.get("peaks"), list):
            raise ValidationError(f"{path}.peaks: expected an array")
        peaks = []
        for i, p in enumerate(o["peaks"]):
            pp = f"{path}.peaks[{i}]"
            if not isinstance(p, dict):
                raise ValidationError(f"{pp}: expected an object")
            peaks.append(QuadraticPeak(
                _dec_vec(p.get("center"), f"{pp}.center", n),
                _spd(_dec_mat(p.get("hessian"), f"{pp}.hessian", n), f"{pp}.hessian"),
                decode_float(p.get("offset", 0.0), f"{pp}.offset"),
                _dec_transform(p.get("inner_transform"), f"{pp}.inner_transform", MonotoneTransform),
            ))
        try:
            objectives.append(MultipeakObjective(
                tuple(peaks), _dec_transform(o.get("outer_transform"), f"{path}.outer_transform", MonotoneTransform)
            ))
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from exc
    items = []
    cons = inst.get("constraints", [])
    if not isinstance(cons, list):
        raise ValidationError("instance.constraints: expected an array")
    for k, c in enumerate(cons):
        path = f"instance.constraints[{k}]"
        if not isinstance(c, dict):
            raise ValidationError(f"{path}: expected an object")
        tau = _dec_transform(c.get("transform"), f"{path}.transform", SignPreservingTransform)
        if c.get("kind") == "multipeak":
            parts = c.get("parts")
            if not isinstance(parts, list) or not parts:
                raise ValidationError(f"{path}.parts: expected a non-empty array")
            decoded = []
            for j, part in enumerate(parts):
                pp = f"{path}.parts[{j}]"
                if not isinstance(part, dict):
                    raise ValidationError(f"{pp}: expected an object")
                decoded.append((
                    _dec_convex(part.get("constraint"), f"{pp}.constraint", n),
                    _dec_transform(part.get("transform"), f"{pp}.transform", SignPreservingTransform),
                ))
            items.append((MultipeakConstraint(tuple(decoded)), tau))
        else:
            items.append((_dec_convex(c, path, n), tau))
    anchor = _dec_vec(inst.get("anchor"), "instance.anchor", n)
    bounds = inst.get("bounds")
    if bounds is not None:
        if not isinstance(bounds, dict):
            raise ValidationError("instance.bounds: expected an object")
        bounds = (_dec_vec(bounds.get("lower"), "instance.bounds.lower", n),
                  _dec_vec(bounds.get("upper"), "instance.bounds.upper", n))
    seed = inst.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ValidationError("instance.seed: expected an integer or null")
    config = doc.get("config")
    if config is not None and not isinstance(config, dict):
        raise ValidationError("config: expected an object or null")
    try:
        return CobiProblem(
            n, tuple(objectives), ConstraintSet(tuple(items)), anchor, seed=seed,
            instance_id=str(inst.get("instance_id", "")), name=str(inst.get("name", "")),
            bounds=bounds, config=config,
        )
    except ValidationError as exc:
        field_name = "instance.anchor" if "anchor" in str(exc) else "instance"
        raise ValidationError(f"{field_name}: {exc}") from exc


def dumps(prob: CobiProblem) -> str:
    return json.dumps(to_document(prob), sort_keys=True, indent=1) + "\n"


def loads(text: str) -> CobiProblem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"document: invalid JSON ({exc})") from exc
    return from_document(doc)


def save(prob: CobiProblem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(prob))


def load(path) -> CobiProblem:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def content_id(prob: CobiProblem) -> str:
    """Hash of the numeric payload, for instances not produced from a config."""
    inst = dict(to_document(prob)["instance"])
    inst.pop("instance_id", None)
    payload = json.dumps(inst, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


__all__ = [
    "GeneratorConfig", "generate", "to_document", "from_document", "dumps", "loads",
    "save", "load", "encode_float", "decode_float", "content_id",
]

"""The ten acceptance criteria, each printing one PASS/FAIL line.

The lines are also repeated in the terminal summary (see conftest.py)
so they are visible without ``-s``.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from acceptance_log import LINES
from cobi.baseline import dimension_scaling_experiment
from cobi.constraints import ConvexSelection, LinearConstraint, QuadraticConstraint
from cobi.core import MonotoneTransform, SignPreservingTransform, SpdMatrix, random_rotation, spd_from_spectrum
from cobi.objectives import QuadraticPeak
from cobi.pareto import approx_ps, classify, epsilon_weights, unconstrained_point
from cobi.problem import CobiProblem, hypervolume
from cobi.projection import ScalarizedProblem, build_scalarized, project
from cobi.showcase import EXPECTED_TYPES, SHOWCASE_EPSILON, load_showcase
from conftest import sphere_pair
from instances import planar_instances
from oracles import active_set_enumeration, grid_dominance_violations, hypervolume_inclusion_exclusion


def report(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def planar():
    """Twenty seeded two-dimensional instances and their approximations at 0.01."""
    t0 = time.perf_counter()
    probs = planar_instances(20)
    approx = [approx_ps(p, 0.01) for p in probs]
    return probs, approx, time.perf_counter() - t0


def _random_peak(rng, n, kappa_max):
    h = spd_from_spectrum(np.geomspace(1.0, rng.uniform(1.0, kappa_max), n), random_rotation(n, rng))
    return QuadraticPeak(rng.uniform(-5, 5, n), h)


def test_criterion_1_scalarization_stationarity():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(200):
        n = (2, 5, 10, 40)[k % 4]
        p1, p2 = _random_peak(rng, n, 1e4), _random_peak(rng, n, 1e4)
        for theta in rng.random(20):
            c = build_scalarized(p1, p2, theta).combined_center
            grad = theta * p1.gradient(c) + (1 - theta) * p2.gradient(c)
            worst = max(worst, np.max(np.abs(grad)) / (1e-8 * (1 + np.linalg.norm(c))))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1.0 and elapsed < 10,
           f"max |grad|/(1e-8 (1+|c|)) = {worst:.3g} over 4000 weights in {elapsed:.1f}s")


def _selection(rng, n, linear_only):
    anchor = rng.normal(size=n)
    cons = []
    for _ in range(rng.integers(1 if linear_only else 0, 4)):
        a = rng.normal(size=n)
        cons.append(LinearConstraint(a, -float(a @ anchor) - rng.uniform(0.0, 1.0)))
    if not linear_only:
        for _ in range(rng.integers(1, 3)):
            q = anchor + rng.normal(size=n)
            qh = spd_from_spectrum(np.geomspace(1.0, rng.uniform(1, 100), n), random_rotation(n, rng))
            level = 0.5 * float((anchor - q) @ qh.entries @ (anchor - q)) + rng.uniform(0.05, 2.0)
            cons.append(QuadraticConstraint(q, qh, level))
    return anchor, ConvexSelection(tuple(cons))


def _feasible_samples(rng, sel, centers, count):
    out = []
    scale = 1.0
    while sum(len(o) for o in out) < count:
        base = centers[rng.integers(len(centers), size=4 * count)]
        z = base + scale * rng.normal(size=base.shape) * rng.exponential(1.0, (len(base), 1))
        ok = np.all(np.column_stack([g.value(z) for g in sel.constraints]) <= 0, axis=1)
        out.append(z[ok])
        scale *= 0.7
    return np.vstack(out)[:count]


def test_criterion_2_projection_optimality():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst_vi, worst_kkt, worst_viol, worst_enum, failures = -np.inf, 0.0, 0.0, 0.0, 0
    for k in range(100):
        n = int(rng.integers(2, 6))
        linear_only = k % 4 == 0
        anchor, sel = _selection(rng, n, linear_only)
        h = spd_from_spectrum(np.geomspace(1.0, rng.uniform(1, 1e3), n), random_rotation(n, rng))
        c = anchor + 3 * rng.normal(size=n)
        sp = ScalarizedProblem(rng.random(), h, c, 0.0, sel)
        r = project(sp, start=anchor)
        if not r.ok:
            failures += 1
            continue
        x = r.x_star
        worst_kkt, worst_viol = max(worst_kkt, r.kkt_residual), max(worst_viol, r.violation)
        z = _feasible_samples(rng, sel, np.array([anchor, x]), 1000)
        vi = (z - x) @ h.entries @ (c - x)
        worst_vi = max(worst_vi, float(np.max(vi)) / (1e-6 * (1 + np.linalg.norm(c))))
        if linear_only:
            a = np.array([g.normal for g in sel.constraints])
            b = np.array([g.intercept for g in sel.constraints])
            worst_enum = max(worst_enum, float(np.max(np.abs(x - active_set_enumeration(h.entries, c, a, b)))))
    elapsed = time.perf_counter() - t0
    ok = (failures == 0 and worst_viol <= 1e-8 and worst_kkt <= 1e-7 and worst_vi <= 1.0
          and worst_enum <= 1e-7 and elapsed < 60)
    report(2, ok, f"failures={failures} violation={worst_viol:.2g} kkt={worst_kkt:.2g} "
                  f"VI ratio={worst_vi:.2g} enum diff={worst_enum:.2g} in {elapsed:.1f}s")


def test_criterion_3_grid_dominance(planar):
    probs, approx, build = planar
    t0 = time.perf_counter()
    bad = [len(grid_dominance_violations(p, a.f, m=401, margin=1e-3)) for p, a in zip(probs, approx)]
    elapsed = build + time.perf_counter() - t0
    report(3, sum(bad) == 0 and elapsed < 120,
           f"{sum(bad)} dominated archive points over {len(probs)} instances in {elapsed:.1f}s")


def test_criterion_4_spacing_and_refinement(planar):
    probs, _, _ = planar
    rng = np.random.default_rng(4)
    pairs = [(a, b) for p in probs for a in p.f1.peaks for b in p.f2.peaks]
    pairs += [(_random_peak(rng, n, 1e4), _random_peak(rng, n, 1e4)) for n in (2, 5, 10, 40) for _ in range(5)]
    worst = 0.0
    for eps in (0.1, 0.01):
        for a, b in pairs:
            pts = np.array([unconstrained_point(a, b, t) for t in epsilon_weights(a, b, eps).weights])
            worst = max(worst, float(np.max(np.linalg.norm(np.diff(pts, axis=0), axis=1))) / eps)
    h = SpdMatrix(np.diag([4.0, 1.0]))
    seg = sphere_pair()
    from cobi.objectives import MultipeakObjective
    objs = (MultipeakObjective((QuadraticPeak(np.zeros(2), h),)),
            MultipeakObjective((QuadraticPeak(np.array([2.0, 1.0]), SpdMatrix(2 * h.entries)),)))
    prop = CobiProblem(2, objs, seg.constraints, seg.anchor)
    sizes = [(len(approx_ps(prop, e).archive), len(approx_ps(prop, e / 2).archive)) for e in (0.05, 0.01)]
    refine_ok = all(2 * n - 3 <= m <= 2 * n + 3 for n, m in sizes)
    report(4, worst <= 1.0 + 1e-12 and refine_ok,
           f"max spacing/eps = {worst:.6f} over {len(pairs)} pairs; |PS_eps|, |PS_eps/2| = {sizes}")


def test_criterion_5_transform_invariance(planar):
    probs, approx, _ = planar
    rng = np.random.default_rng(5)
    same_x, same_dom = True, True
    for prob, base in list(zip(probs, approx))[:10]:
        con_t = [SignPreservingTransform("step") if k % 2 else SignPreservingTransform("scale", (2.5,))
                 for k in range(len(prob.constraints))]
        moved = prob.with_transforms((MonotoneTransform.power(0.5), MonotoneTransform.power(2.0)), con_t)
        same_x &= np.array_equal(approx_ps(moved, 0.01).x, base.x)
        lo, hi = prob.search_box()
        kept = []
        while sum(len(k) for k in kept) < 20000:
            pts = lo + (hi - lo) * rng.random((50000, 2))
            mask = prob.constraints.feasible_mask(pts)
            same_x &= np.array_equal(mask, moved.constraints.feasible_mask(pts))
            kept.append(pts[mask])
        pts = np.vstack(kept)[:20000]
        a, b = pts[:10000], pts[10000:]

        def relation(f, g):
            le = np.all(f <= g, axis=1)
            ge = np.all(f >= g, axis=1)
            return le.astype(int) + 2 * ge.astype(int)

        fa, fb = prob.raw_objectives(a), prob.raw_objectives(b)
        ta, tb = moved.transformed_objectives(a), moved.transformed_objectives(b)
        same_dom &= np.array_equal(relation(fa, fb), relation(ta, tb))
    report(5, same_x and same_dom,
           f"decision vectors bit-identical: {same_x}; dominance of 10^4 pairs unchanged: {same_dom} (10 instances)")


def test_criterion_6_ideal_nadir(planar):
    probs, approx, _ = planar
    worst_ideal, worst_nadir = 0.0, 0.0
    multipeak = 0
    for prob, a in zip(probs, approx):
        f = a.f
        spacing = float(np.max(np.abs(np.diff(f, axis=0)))) if len(f) > 1 else 0.0
        worst_ideal = max(worst_ideal, float(np.max(np.abs(np.array(a.ideal) - f.min(axis=0)))) / 1e-6)
        worst_nadir = max(worst_nadir, float(np.max(np.abs(np.array(a.nadir) - f.max(axis=0)))) / max(1e-6, spacing))
        multipeak += len(a.per_key_counts) > 1
    report(6, worst_ideal <= 1 and worst_nadir <= 1,
           f"ideal err/1e-6 = {worst_ideal:.3g}, nadir err/tol = {worst_nadir:.3g} "
           f"({len(probs)} instances, {multipeak} with several subproblems)")


def test_criterion_7_hypervolume_exactness():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 9))
        pts = rng.random((m, 2)) * rng.uniform(0.1, 10)
        if rng.random() < 0.3:
            pts = np.round(pts, 1)  # ties and duplicates
        ref = pts.max(axis=0) + rng.uniform(-0.5, 1.0, 2)
        exact = hypervolume_inclusion_exclusion(pts, ref)
        worst = max(worst, abs(hypervolume(pts, ref) - exact) / max(abs(exact), 1e-300))
    report(7, worst <= 1e-12, f"max relative error {worst:.3g} over 1000 archives")


def test_criterion_8_type_taxonomy():
    t0 = time.perf_counter()
    labels = [classify(p, SHOWCASE_EPSILON).value for p in load_showcase()]
    elapsed = time.perf_counter() - t0
    report(8, tuple(labels) == EXPECTED_TYPES and elapsed < 60,
           f"showcase types {labels} (expected {list(EXPECTED_TYPES)}) in {elapsed:.1f}s")


def test_criterion_9_dimension_scaling():
    t0 = time.perf_counter()
    rep = dimension_scaling_experiment(dims=(2, 10, 40), repetitions=15, budget=10_000,
                                       population=100, target_size=2000)
    elapsed = time.perf_counter() - t0
    gaps = rep.mean_final_gaps()
    sizes = [r.reference_size for r in rep.results]
    increasing = all(a < b for a, b in zip(gaps, gaps[1:]))
    in_band = all(abs(s - 2000) <= 100 for s in sizes)
    report(9, increasing and in_band and elapsed < 600,
           f"mean final gaps {['%.4g' % g for g in gaps]} for n=2,10,40; reference sizes {sizes}; {elapsed:.0f}s")


def _cli(*args):
    res = subprocess.run([sys.executable, "-m", "cobi", *map(str, args)], capture_output=True, check=False)
    return res.returncode, res.stdout


def test_criterion_10_determinism(tmp_path):
    outputs = []
    for run in range(2):
        d = tmp_path / f"run{run}"
        d.mkdir()
        inst = d / "inst.json"
        codes = [
            _cli("generate", "--n", 2, "--peaks", "2,1", "--constraints", "linear,multipeak:quadratic+quadratic",
                 "--seed", 13, "--out", inst)[0],
            _cli("approx-ps", "--instance", inst, "--epsilon", 0.02, "--out", d / "ref.csv")[0],
            _cli("run-baseline", "--instance", inst, "--algo", "nsga2lite", "--budget", 2000,
                 "--seed", 4, "--reference", d / "ref.csv", "--trace", d / "trace.csv")[0],
        ]
        outputs.append((codes, [(d / f).read_bytes() for f in ("inst.json", "ref.csv", "trace.csv")]))
    (c0, f0), (c1, f1) = outputs
    report(10, c0 == c1 == [0, 0, 0] and f0 == f1,
           f"exit codes {c0}/{c1}; instance, reference CSV and trace byte-identical: {f0 == f1}")

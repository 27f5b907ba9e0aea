"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured values and
runtime, then asserts.
"""

import json
import time

import numpy as np
import pytest
from scipy.spatial import cKDTree

from m1lab.cadlag import completed_graph, make_step
from m1lab.cli import Resolved, build_parser, resolve_config, run, run_experiment
from m1lab.harness import FidiGrid, ecf_distance, fidi_experiment, ks_statistic
from m1lab.heavytail import TailModel
from m1lab.limits import (
    build_spec,
    extremal_marginal_cdf,
    levy_exponent_cf,
    sample_limit_batch,
    simulate_joint_limit,
)
from m1lab.linproc import CoefficientSeq
from m1lab.skorohod import d_M1, d_M2, d_uniform

MESH = 1e-3
Z_GRID = (0.5, 1.0, 2.0)


def verdict(number, title, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed <= budget
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail} | {elapsed:.1f}s (budget {budget:.0f}s)")
    assert ok


def random_step(rng, max_jumps=6):
    k = int(rng.integers(0, max_jumps + 1))
    times = np.unique(np.round(rng.uniform(0.001, 1.0, k), 3))
    values = np.round(rng.uniform(-2, 2, len(times)), 2)
    return make_step(float(np.round(rng.uniform(-2, 2), 2)), list(zip(times, values)))


def test_criterion_1_metric_axioms():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    worst = {"uniform": 0.0, "m2": 0.0, "m1": 0.0}
    sym_ok = True
    for _ in range(500):
        f, g, h = (random_step(rng) for _ in range(3))
        for name, d in (("uniform", lambda a, b: d_uniform(a, b).value), ("m2", lambda a, b: d_M2(a, b).value),
                        ("m1", lambda a, b: d_M1(a, b, MESH).value)):
            fg, gf, gh, fh = d(f, g), d(g, f), d(g, h), d(f, h)
            if name == "m1":
                sym_ok &= abs(fg - gf) <= 2 * MESH
            else:
                sym_ok &= fg == gf
            worst[name] = max(worst[name], fh - fg - gh)
    elapsed = time.perf_counter() - t0
    ok = sym_ok and worst["uniform"] <= 1e-12 and worst["m2"] <= 1e-12 and worst["m1"] <= 2 * MESH
    detail = f"symmetry={sym_ok}, worst triangle excess uniform={worst['uniform']:.2e} m2={worst['m2']:.2e} m1={worst['m1']:.2e}"
    verdict(1, "metric axioms on 500 triples", ok, detail, elapsed, 60)


def test_criterion_2_metric_ordering():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2002)
    worst_m2, worst_u = -np.inf, -np.inf
    for _ in range(500):
        f, g = random_step(rng), random_step(rng)
        m1 = d_M1(f, g, MESH)
        worst_m2 = max(worst_m2, d_M2(f, g).value - m1.upper_bound)
        worst_u = max(worst_u, m1.lower_bound - d_uniform(f, g).value - MESH)
    elapsed = time.perf_counter() - t0
    ok = worst_m2 <= 1e-12 and worst_u <= 1e-12
    detail = f"max(d_M2 - d_M1.upper)={worst_m2:.3g}, max(d_M1.lower - d_uniform - mesh)={worst_u:.3g}"
    verdict(2, "metric ordering on 500 pairs", ok, detail, elapsed, 60)


def _resample(vertices, h):
    pts = [vertices[0]]
    for a, b in zip(vertices[:-1], vertices[1:]):
        k = max(1, int(round(np.max(np.abs(b - a)) / h)))
        pts.extend(a + (b - a) * i / k for i in range(1, k + 1))
    return np.array(pts)


def _oracle_discrete_frechet(P, Q):
    # plain-python dynamic program, independent of the package kernels
    P, Q = P.tolist(), Q.tolist()
    m = len(Q)
    prev = [0.0] * m
    for i, (px, pz) in enumerate(P):
        cur = [0.0] * m
        for j, (qx, qz) in enumerate(Q):
            d = max(abs(px - qx), abs(pz - qz))
            if i == 0:
                cur[j] = d if j == 0 else max(d, cur[j - 1])
            elif j == 0:
                cur[j] = max(d, prev[0])
            else:
                cur[j] = max(d, min(prev[j], prev[j - 1], cur[j - 1]))
        prev = cur
    return prev[-1]


def _oracle_hausdorff(P, Q, h):
    A, B = _resample(P, h), _resample(Q, h)
    return max(cKDTree(B).query(A, p=np.inf)[0].max(), cKDTree(A).query(B, p=np.inf)[0].max())


def test_criterion_3_oracle_agreement():
    t0 = time.perf_counter()
    pairs = {
        "step 0.5 vs zero": (make_step(0.0, [(0.5, 1.0)]), make_step(0.0, [])),
        "step 0.5 vs step 0.6": (make_step(0.0, [(0.5, 1.0)]), make_step(0.0, [(0.6, 1.0)])),
        "0->2 vs staircase": (make_step(0.0, [(0.5, 2.0)]), make_step(0.0, [(0.5, 1.0), (0.7, 2.0)])),
    }
    ok, parts = True, []
    for name, (f, g) in pairs.items():
        P, Q = completed_graph(f).vertices, completed_graph(g).vertices
        haus = _oracle_hausdorff(P, Q, 1e-4)
        m2 = d_M2(f, g).value
        dfd = _oracle_discrete_frechet(_resample(P, MESH), _resample(Q, MESH))
        m1 = d_M1(f, g, MESH)
        good = abs(m2 - haus) <= 1e-3 and m1.lower_bound - 1e-9 <= dfd <= m1.upper_bound + 1e-9
        ok &= good
        parts.append(f"{name}: M2 {m2:.4f}/oracle {haus:.4f}, M1 [{m1.lower_bound:.4f},{m1.upper_bound:.4f}] oracle {dfd:.4f}")
    verdict(3, "M1/M2 oracle agreement", ok, "; ".join(parts), time.perf_counter() - t0, 120)


def test_criterion_4_iid_maxima():
    t0 = time.perf_counter()
    rep = fidi_experiment(TailModel(1.5, 1.0), CoefficientSeq(), [10**4], FidiGrid((1.0,)), 10**4, seed=404, workers=4)
    ks = next(s["value"] for s in rep.body["statistics"] if s["component"] == "W" and s["t"] == 1.0)
    verdict(4, "i.i.d. maxima KS vs exp(-x^-1.5)", ks <= 0.02, f"KS={ks:.4f} (<= 0.02)", time.perf_counter() - t0, 120)


@pytest.mark.parametrize("alpha, p", [(0.7, 1.0), (1.0, 0.5), (1.5, 0.7)])
def test_criterion_5_limit_simulator(alpha, p):
    t0 = time.perf_counter()
    spec = build_spec(alpha, p, 1, 1.0, 1.0)
    one = simulate_joint_limit(spec, [0.5, 1.0], None, seed=55)
    V1, W1, _ = sample_limit_batch(spec, [0.5, 1.0], None, 1, seed=55)
    same = one.first.eval(1.0) == V1[0, -1] and one.second.eval(1.0) == W1[0, -1]
    _, W, _ = sample_limit_batch(spec, [1.0], None, 10**5, seed=505)
    cdf = lambda x: np.array([extremal_marginal_cdf(spec.exponent, 1.0, v) if v > 0 else 0.0 for v in np.ravel(x)])
    ks = ks_statistic(W[:, 0], cdf)
    V, _, _ = sample_limit_batch(spec, [1.0], None, 10**4, seed=5005)
    cf = ecf_distance(V[:, 0], lambda z: levy_exponent_cf(spec.triple, z), Z_GRID)
    ok = same and ks <= 0.01 and cf <= 0.02
    detail = f"alpha={alpha} p={p}: W(1) KS={ks:.4f} (<= 0.01, N=1e5), V(1) CF sup-diff={cf:.4f} (<= 0.02, N=1e4)"
    verdict(5, "limit simulator self-consistency", ok, detail, time.perf_counter() - t0, 100)


def _preset_report(name, workers=4):
    args = build_parser().parse_args(["converge", "--preset", name, "--workers", str(workers)])
    return run_experiment(Resolved(resolve_config(args, environ={})))


def _w_checks(body, n_top=10**4):
    lines, ok = [], True
    for t, mono in body["monotonicity"].items():
        ks = mono["ks"]
        top = ks[mono["n"].index(n_top)]
        good = mono["strictly_decreasing"] and top <= 0.03
        ok &= good
        lines.append(f"t={t} KS {' > '.join(f'{v:.4f}' for v in ks)}")
    return ok, lines


def test_criterion_6_ma2_positive():
    t0 = time.perf_counter()
    body = _preset_report("ma2_positive").body
    assert body["limit"]["beta"] == 1.75 and body["limit"]["gamma"] == 1.0 and body["limit"]["c"] == 1.0
    ok, lines = _w_checks(body)
    stat = {(s["n"], s["t"], s["component"]): s["value"] for s in body["statistics"]}
    cf, biv = stat[(10**4, 1.0, "V")], stat[(10**4, 1.0, "VW")]
    ok = ok and cf <= 0.05 and biv <= 0.05
    detail = "; ".join(lines) + f"; V_n(1) CF={cf:.4f} (<= 0.05); bivariate ECDF={biv:.4f} (<= 0.05)"
    verdict(6, "ma2_positive at desk scale", ok, detail, time.perf_counter() - t0, 900)


def test_criterion_7_geometric_negative():
    t0 = time.perf_counter()
    body = _preset_report("geometric_negative").body
    lim = body["limit"]
    assert lim["coeff_sign"] == "nonpositive" and lim["c"] == pytest.approx(0.7)
    ok, lines = _w_checks(body)
    verdict(7, "geometric_negative W-marginal (c = r)", ok, "; ".join(lines), time.perf_counter() - t0, 600)


def test_criterion_8_reproducibility(tmp_path):
    t0 = time.perf_counter()
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        code = run(["converge", "--preset", "iid_frechet", "--workers", "4", "--out", str(out)], environ={})
        assert code == 0
        outs.append(out)
    bodies = [json.dumps(json.loads(p.read_text())["body"], sort_keys=True, indent=2) for p in outs]
    csvs = [p.with_suffix(".csv").read_bytes() for p in outs]
    ok = bodies[0] == bodies[1] and csvs[0] == csvs[1]
    verdict(8, "byte-identical reports on rerun", ok, f"body bytes equal={bodies[0] == bodies[1]}, csv equal={csvs[0] == csvs[1]}",
            time.perf_counter() - t0, 60)

"""Monte Carlo checks of finite-dimensional convergence of L_n to (beta V, gamma W).

Only finite-dimensional laws and a few M1-continuous functionals are
compared; tightness is not something a simulation can certify, and every
report says so.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .cadlag import BivariatePath, sample_grid
from .heavytail import TailModel, derive_seed
from .limits import (
    default_trunc_K,
    limit_spec,
    sample_limit_batch,
    scaled_extremal_cdf,
    scaled_levy_cf,
)
from .linproc import CoefficientSeq, fidi_batch, joint_path, validate_coeffs
from .skorohod import d_p, d_p_M2, default_mesh

__all__ = [
    "FidiGrid",
    "ExperimentReport",
    "Thresholds",
    "ks_statistic",
    "ks_two_sample",
    "ecf_distance",
    "bivariate_ecdf_distance",
    "fidi_experiment",
    "functional_convergence_experiment",
    "metric_self_distance",
    "self_distance_experiment",
]

TIGHTNESS_NOTE = (
    "Only finite-dimensional distributions and M1-continuous functionals are "
    "compared; tightness is not checked."
)
LIMIT_SEED_INDEX = 1 << 40
DEFAULT_Z = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class FidiGrid:
    times: tuple

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if not ts:
            raise ValueError("fidi grid must be non-empty")
        if any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] <= 0 or ts[-1] > 1:
            raise ValueError(f"fidi grid must be strictly increasing in (0, 1], got {ts}")
        if ts[-1] != 1.0:
            raise ValueError("fidi grid must contain t = 1")
        object.__setattr__(self, "times", ts)


@dataclass
class Thresholds:
    """Pass/fail limits; ``None`` disables an assertion."""

    w_ks: float | None = 0.03
    w_ks_monotone_slack: float | None = 0.01
    v_cf: float | None = 0.05
    bivariate: float | None = 0.05
    sup_ks: float | None = None

    @classmethod
    def from_dict(cls, d: dict | None) -> "Thresholds":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown threshold keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ExperimentReport:
    body: dict
    header: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a["passed"] for a in self.body.get("assertions", []))

    def to_json(self) -> str:
        return json.dumps({"header": self.header, "body": self.body}, indent=2, sort_keys=True) + "\n"

    def body_json(self) -> str:
        return json.dumps(self.body, indent=2, sort_keys=True) + "\n"

    def rows(self) -> list[tuple]:
        return [(s["n"], s["t"], s["component"], s["statistic"], s["value"]) for s in self.body["statistics"]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "t", "component", "statistic_name", "value"])
        for row in self.rows():
            w.writerow(["" if x is None else (repr(x) if isinstance(x, float) else x) for x in row])
        return buf.getvalue()

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        d = json.loads(text)
        return cls(d["body"], d.get("header", {}))


# ---------------------------------------------------------------------------
# statistics


def ks_statistic(samples, cdf) -> float:
    """Exact ``sup_x |F_N(x) - F(x)|`` for a vectorized CDF ``cdf``.

    Left limits of ``cdf`` are taken at the next float below each sample, so
    CDFs with atoms are handled.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("no samples")
    u, counts = np.unique(x, return_counts=True)
    right = np.cumsum(counts) / x.size
    left = right - counts / x.size
    F = np.asarray(cdf(u), dtype=float)
    F_left = np.asarray(cdf(np.nextafter(u, -np.inf)), dtype=float)
    d = max(np.max(np.abs(right - F)), np.max(np.abs(left - F_left)))
    return float(min(max(d, 0.0), 1.0))


def ks_two_sample(a, b) -> float:
    return float(stats.ks_2samp(np.asarray(a).ravel(), np.asarray(b).ravel()).statistic)


def ecf_distance(samples, cf, z_grid) -> float:
    """``max_z |mean exp(i z X) - cf(z)|``."""
    x = np.asarray(samples, dtype=float).ravel()
    z_grid = list(z_grid)
    if x.size == 0 or not z_grid:
        raise ValueError("need samples and a non-empty z grid")
    out = 0.0
    for z in z_grid:
        if z == 0:
            continue
        ecf = np.mean(np.exp(1j * z * x))
        out = max(out, abs(ecf - cf(z)))
    return float(out)


def bivariate_ecdf_distance(sample, reference, size: int = 20) -> float:
    """Sup-difference of two bivariate ECDFs on a ``size x size`` grid of the
    reference marginal quantiles (levels ``k / (size + 1)``)."""
    a = np.asarray(sample, dtype=float)
    b = np.asarray(reference, dtype=float)
    levels = np.arange(1, size + 1) / (size + 1)
    qx = np.quantile(b[:, 0], levels)
    qy = np.quantile(b[:, 1], levels)

    def ecdf(s):
        ix = (s[:, 0][:, None] <= qx[None, :]).astype(float)
        iy = (s[:, 1][:, None] <= qy[None, :]).astype(float)
        return ix.T @ iy / len(s)

    return float(np.max(np.abs(ecdf(a) - ecdf(b))))


# ---------------------------------------------------------------------------
# experiments


def _check_hypotheses(model: TailModel, coeffs: CoefficientSeq, diagnostic: bool) -> bool:
    validate_coeffs(coeffs, model.alpha)
    if coeffs.mixed:
        if not diagnostic:
            raise ValueError("mixed-sign coefficients are outside the theorem; set the diagnostic flag")
        return False
    return True


def _fidi_worker(args):
    return fidi_batch(*args)


def simulate_replicates(model, coeffs, n, times, N, seed, trunc=None, workers: int = 1, chunk: int = 1000):
    """``fidi_batch`` over replicate seeds ``derive_seed(seed, i)``, i < N.

    The output does not depend on ``workers``: each replicate has its own
    seed and chunks are concatenated in order.
    """
    seeds = [derive_seed(seed, i) for i in range(N)]
    jobs = [(model, coeffs, n, list(times), seeds[s : s + chunk], trunc) for s in range(0, N, chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_fidi_worker, jobs))
    else:
        parts = [_fidi_worker(j) for j in jobs]
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def _stat(n, t, component, name, value):
    return {"n": n, "t": t, "component": component, "statistic": name, "value": float(value)}


def _assert(name, value, threshold, relation="<="):
    ok = value <= threshold
    return {"name": name, "value": float(value), "threshold": float(threshold), "relation": relation, "passed": bool(ok)}


def fidi_experiment(
    model: TailModel,
    coeffs: CoefficientSeq,
    n_list,
    grid: FidiGrid,
    N: int,
    seed: int,
    *,
    trunc_K: int | None = None,
    trunc: int | None = None,
    z_grid=DEFAULT_Z,
    thresholds: Thresholds | None = None,
    diagnostic: bool = False,
    workers: int = 1,
    config: dict | None = None,
) -> ExperimentReport:
    """Compare ``(V_n(t), W_n(t))`` with the limit at every grid time.

    * ``W_n(t)``: exact KS distance to the law of ``gamma W(t)``.
    * ``V_n(t)``: empirical CF against the quadrature CF of ``beta V(t)``.
    * ``(V_n(1), W_n(1))``: bivariate ECDF distance to simulated limit draws.

    The same replicate seeds are used for every n.
    """
    if N < 1000:
        raise ValueError(f"need N >= 1000 replicates, got {N}")
    if isinstance(grid, (list, tuple)):
        grid = FidiGrid(tuple(grid))
    within = _check_hypotheses(model, coeffs, diagnostic)
    spec = limit_spec(model, coeffs)
    th = thresholds or Thresholds()
    n_list = sorted(int(n) for n in n_list)
    times = np.array(grid.times)
    K = trunc_K or default_trunc_K(model.alpha)
    runtimes = {}

    t0 = time.perf_counter()
    limit_seed = derive_seed(seed, LIMIT_SEED_INDEX)
    LV, LW, _ = sample_limit_batch(spec, times, K, N, limit_seed)
    runtimes["limit"] = time.perf_counter() - t0
    ref = np.column_stack((LV[:, -1], LW[:, -1]))

    statistics = []
    per_n = {}
    for n in n_list:
        t0 = time.perf_counter()
        V, W, _ = simulate_replicates(model, coeffs, n, times, N, seed, trunc, workers)
        for g, t in enumerate(times):
            ks = ks_statistic(W[:, g], scaled_extremal_cdf(spec, t))
            cfd = ecf_distance(V[:, g], scaled_levy_cf(spec, t), z_grid)
            statistics.append(_stat(n, float(t), "W", "ks", ks))
            statistics.append(_stat(n, float(t), "V", "cf_sup", cfd))
            per_n[(n, float(t))] = (ks, cfd)
        biv = bivariate_ecdf_distance(np.column_stack((V[:, -1], W[:, -1])), ref)
        statistics.append(_stat(n, 1.0, "VW", "bivariate_ecdf", biv))
        per_n[(n, "biv")] = biv
        runtimes[f"n={n}"] = time.perf_counter() - t0

    monotone = {}
    for t in times:
        ks_seq = [per_n[(n, float(t))][0] for n in n_list]
        monotone[repr(float(t))] = {
            "n": n_list,
            "ks": ks_seq,
            "strictly_decreasing": all(b < a for a, b in zip(ks_seq, ks_seq[1:])),
        }

    assertions = []
    if within:
        top = n_list[-1]
        for t in times:
            t = float(t)
            if th.w_ks is not None:
                assertions.append(_assert(f"W_ks[t={t},n={top}]", per_n[(top, t)][0], th.w_ks))
            if th.w_ks_monotone_slack is not None:
                seq = monotone[repr(t)]["ks"]
                worst = max((b - a for a, b in zip(seq, seq[1:])), default=0.0)
                assertions.append(_assert(f"W_ks_nonincreasing[t={t}]", worst, th.w_ks_monotone_slack))
        if th.v_cf is not None:
            assertions.append(_assert(f"V_cf_sup[t=1.0,n={top}]", per_n[(top, 1.0)][1], th.v_cf))
        if th.bivariate is not None:
            assertions.append(_assert(f"bivariate_ecdf[n={top}]", per_n[(top, "biv")], th.bivariate))

    body = {
        "experiment": "fidi",
        "config": config if config is not None else _config_echo(model, coeffs, n_list, grid.times, N, seed, K, trunc, z_grid),
        "limit": spec.to_dict(),
        "within_hypotheses": within,
        "note": TIGHTNESS_NOTE,
        "sample_counts": {"replicates": N, "limit_draws": N},
        "seeds": {"replicates": seed, "limit": limit_seed},
        "statistics": statistics,
        "monotonicity": monotone,
        "assertions": assertions,
    }
    body["passed"] = all(a["passed"] for a in assertions)
    return ExperimentReport(body, {"runtimes": runtimes})


def _config_echo(model, coeffs, n_list, times, N, seed, K, trunc, z_grid):
    return {
        "model": model.to_dict(),
        "coeffs": coeffs.to_dict(),
        "n_list": list(n_list),
        "grid": list(times),
        "N": N,
        "seed": seed,
        "trunc_K": K,
        "trunc": trunc if trunc is not None else None,
        "z_grid": list(z_grid),
    }


def functional_convergence_experiment(
    model: TailModel,
    coeffs: CoefficientSeq,
    n_list,
    N: int,
    seed: int,
    *,
    trunc_K: int | None = None,
    trunc: int | None = None,
    sup_grid: int = 1000,
    thresholds: Thresholds | None = None,
    diagnostic: bool = False,
    workers: int = 1,
    config: dict | None = None,
) -> ExperimentReport:
    """Two-sample KS distances for ``sup_t V_n``, ``V_n(1)`` and ``W_n(1)``.

    The limit cohort is simulated on a uniform grid of ``sup_grid`` points,
    so its supremum is a grid supremum.
    """
    if N < 1000:
        raise ValueError(f"need N >= 1000 replicates, got {N}")
    within = _check_hypotheses(model, coeffs, diagnostic)
    spec = limit_spec(model, coeffs)
    th = thresholds or Thresholds(w_ks=None, w_ks_monotone_slack=None, v_cf=None, bivariate=None, sup_ks=0.03)
    n_list = sorted(int(n) for n in n_list)
    K = trunc_K or default_trunc_K(model.alpha)
    runtimes = {}
    t0 = time.perf_counter()
    fine = np.arange(1, sup_grid + 1) / sup_grid
    limit_seed = derive_seed(seed, LIMIT_SEED_INDEX)
    LV, LW, Lsup = sample_limit_batch(spec, fine, K, N, limit_seed)
    runtimes["limit"] = time.perf_counter() - t0
    limit_funcs = {"sup_V": Lsup, "V_1": LV[:, -1], "W_1": LW[:, -1]}

    statistics = []
    table = {}
    for n in n_list:
        t0 = time.perf_counter()
        V, W, supV = simulate_replicates(model, coeffs, n, [1.0], N, seed, trunc, workers)
        funcs = {"sup_V": supV, "V_1": V[:, 0], "W_1": W[:, 0], "sup_W": W[:, 0]}
        for name, lim_name in (("sup_V", "sup_V"), ("V_1", "V_1"), ("W_1", "W_1"), ("sup_W", "W_1")):
            ks = ks_two_sample(funcs[name], limit_funcs[lim_name])
            table[(n, name)] = ks
            statistics.append(_stat(n, None, name, "ks_2samp", ks))
        runtimes[f"n={n}"] = time.perf_counter() - t0

    assertions = []
    if within and th.sup_ks is not None:
        top = n_list[-1]
        assertions.append(_assert(f"sup_V_ks[n={top}]", table[(top, "sup_V")], th.sup_ks))
    body = {
        "experiment": "functional",
        "config": config if config is not None else _config_echo(model, coeffs, n_list, [1.0], N, seed, K, trunc, ()),
        "limit": spec.to_dict(),
        "within_hypotheses": within,
        "note": TIGHTNESS_NOTE,
        "sample_counts": {"replicates": N, "limit_draws": N, "limit_sup_grid": sup_grid},
        "seeds": {"replicates": seed, "limit": limit_seed},
        "statistics": statistics,
        "assertions": assertions,
    }
    body["passed"] = all(a["passed"] for a in assertions)
    return ExperimentReport(body, {"runtimes": runtimes})


def coarsen(path: BivariatePath, n: int) -> BivariatePath:
    """Resample a resolution-n joint path at the coarser times k / (n // 2)."""
    m = n // 2
    grid = np.arange(1, m + 1) / m
    return BivariatePath(sample_grid(path.first, grid), sample_grid(path.second, grid))


def metric_self_distance(model, coeffs, n: int, seed: int, mesh: float | None = None) -> dict:
    """``d_p`` and ``d_{p,M2}`` between ``L_n`` and its coarsening to n // 2."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    fine = joint_path(model, coeffs, n, seed).path
    coarse = coarsen(fine, n)
    if mesh is None:
        mesh = max(default_mesh(fine.first, coarse.first), default_mesh(fine.second, coarse.second))
    dp = d_p(fine, coarse, mesh)
    dm2 = d_p_M2(fine, coarse)
    return {
        "n": n,
        "seed": seed,
        "mesh": mesh,
        "d_p": dp.to_dict(),
        "d_p_M2": dm2.to_dict(),
        "bracket_width": dp.upper_bound - dp.lower_bound,
        "m2_below_m1": dm2.value <= dp.upper_bound,
    }


def self_distance_experiment(
    model, coeffs, n: int, draws: int, seed: int, mesh: float | None = None, config: dict | None = None
) -> ExperimentReport:
    """``metric_self_distance`` over ``draws`` derived seeds, with the ordering
    ``d_{p,M2} <= d_p.upper`` and the bracket width ``<= 2 mesh`` asserted."""
    validate_coeffs(coeffs, model.alpha)
    t0 = time.perf_counter()
    rows = [metric_self_distance(model, coeffs, n, derive_seed(seed, i), mesh) for i in range(draws)]
    statistics = []
    for i, r in enumerate(rows):
        statistics.append(_stat(n, None, f"draw{i}", "d_p", r["d_p"]["value"]))
        statistics.append(_stat(n, None, f"draw{i}", "d_p_M2", r["d_p_M2"]["value"]))
        statistics.append(_stat(n, None, f"draw{i}", "bracket_width", r["bracket_width"]))
    worst_order = max(r["d_p_M2"]["value"] - r["d_p"]["upper"] for r in rows)
    worst_width = max(r["bracket_width"] - 2 * r["mesh"] for r in rows)
    assertions = [_assert("d_p_M2_minus_d_p_upper", worst_order, 0.0), _assert("bracket_width_minus_2mesh", worst_width, 0.0)]
    body = {
        "experiment": "self_distance",
        "config": config if config is not None else {"model": model.to_dict(), "coeffs": coeffs.to_dict(), "n": n, "draws": draws, "seed": seed, "mesh": mesh},
        "draws": rows,
        "statistics": statistics,
        "assertions": assertions,
    }
    body["passed"] = all(a["passed"] for a in assertions)
    return ExperimentReport(body, {"runtimes": {"total": time.perf_counter() - t0}})

"""Uniform, M2 and M1 distances between step functions.

All distances use the Chebyshev ground metric ``max(|dt|, |dz|)`` on the
time-value plane.

* ``d_M2`` is the Hausdorff distance between completed graphs.  Both graphs
  are unions of axis-parallel segments, so along any segment of one graph the
  distance to a segment of the other is a unit-slope "bathtub"
  ``max(c, dist(lambda, [L, R]))``.  The supremum of the lower envelope of
  bathtubs is found exactly by a sweep over the offsets ``c``.
* ``d_M1`` is the Fréchet distance between the completed graphs traversed in
  graph order.  The default method decides ``F <= eps`` with a free-space
  reachability sweep and bisects ``eps`` to near machine precision; the
  ``"discrete"`` method runs the discrete Fréchet recursion on polylines
  refined to the requested mesh.  Either way the result is reported as the
  bracket ``[value - mesh, value]``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .cadlag import BivariatePath, StepFunction, completed_graph

__all__ = [
    "MetricResult",
    "default_mesh",
    "d_uniform",
    "d_M2",
    "d_M1",
    "d_p",
    "d_p_M2",
    "frechet_distance",
    "discrete_frechet",
    "hausdorff_directed",
]


@dataclass(frozen=True)
class MetricResult:
    value: float
    lower_bound: float
    upper_bound: float
    mesh: float | str = "exact"

    def __post_init__(self):
        if not (0.0 <= self.lower_bound <= self.value <= self.upper_bound):
            raise ValueError(f"inconsistent bracket {self}")

    def to_dict(self) -> dict:
        return {"value": self.value, "lower": self.lower_bound, "upper": self.upper_bound, "mesh": self.mesh}

    @classmethod
    def exact(cls, value: float) -> "MetricResult":
        return cls(value, value, value, "exact")


def default_mesh(f: StepFunction, g: StepFunction) -> float:
    """1e-3 of the larger of the time span (1) and the joint value span."""
    lv = np.concatenate((f.levels(), g.levels()))
    return 1e-3 * max(1.0, float(lv.max() - lv.min()))


def d_uniform(f: StepFunction, g: StepFunction) -> MetricResult:
    ts = np.union1d(f.times, g.times)
    ts = np.concatenate(([0.0], ts))
    return MetricResult.exact(float(np.max(np.abs(f.eval(ts) - g.eval(ts)))))


# ---------------------------------------------------------------------------
# M2: exact Hausdorff distance between completed graphs


def _boxes(vertices: np.ndarray):
    a, b = vertices[:-1], vertices[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return lo[:, 0], hi[:, 0], lo[:, 1], hi[:, 1]


def _interval_dist(x, lo, hi):
    return np.maximum(np.maximum(lo - x, x - hi), 0.0)


def _envelope_max(c, L, R, lam0, lam1, cap):
    """Exact ``max_{lam in [lam0, lam1]} min_j max(c_j, dist(lam, [L_j, R_j]))``.

    ``cap`` is a known upper bound on the answer; bathtubs that stay above
    it on the whole range must already be filtered out by the caller.
    """
    order = np.argsort(c, kind="stable")
    c, L, R = c[order], L[order], R[order]
    best = cap
    starts: list[float] = []
    ends: list[float] = []
    for k in range(len(c)):
        if c[k] >= best:
            break
        # intervals kept sorted by start for the merge below
        pos = bisect.bisect_left(starts, L[k])
        starts.insert(pos, float(L[k]))
        ends.insert(pos, float(R[k]))
        need = _uncovered_radius(starts, ends, lam0, lam1)
        best = min(best, max(float(c[k]), need))
    return best


def _uncovered_radius(starts, ends, lam0, lam1) -> float:
    """``max_{lam in [lam0, lam1]}`` of the distance from lam to the union."""
    merged_a: list[float] = []
    merged_b: list[float] = []
    for a, b in zip(starts, ends):
        if merged_b and a <= merged_b[-1]:
            if b > merged_b[-1]:
                merged_b[-1] = b
        else:
            merged_a.append(a)
            merged_b.append(b)

    def dist(lam):
        i = bisect.bisect_right(merged_a, lam) - 1
        d = math.inf
        if i >= 0:
            d = max(0.0, lam - merged_b[i])
        if i + 1 < len(merged_a):
            d = min(d, merged_a[i + 1] - lam)
        return d

    worst = max(dist(lam0), dist(lam1))
    for i in range(len(merged_a) - 1):
        g0, g1 = merged_b[i], merged_a[i + 1]
        if g1 <= lam0 or g0 >= lam1:
            continue
        mid = min(max(0.5 * (g0 + g1), lam0), lam1)
        worst = max(worst, dist(mid))
    return worst


def hausdorff_directed(A: np.ndarray, B: np.ndarray) -> float:
    """``sup_{a in A} inf_{b in B} d(a, b)`` for axis-parallel polylines A, B."""
    at0, at1, az0, az1 = _boxes(A)
    bt0, bt1, bz0, bz1 = _boxes(B)
    vertical = at0 == at1
    # along-axis coordinate range and perpendicular offsets, per A-segment
    lam0 = np.where(vertical, az0, at0)[:, None]
    lam1 = np.where(vertical, az1, at1)[:, None]
    c = np.where(
        vertical[:, None],
        _interval_dist(at0[:, None], bt0[None, :], bt1[None, :]),
        _interval_dist(az0[:, None], bz0[None, :], bz1[None, :]),
    )
    Ls = np.where(vertical[:, None], bz0[None, :], bt0[None, :])
    Rs = np.where(vertical[:, None], bz1[None, :], bt1[None, :])
    at_start = np.maximum(c, _interval_dist(lam0, Ls, Rs)).min(axis=1)
    at_end = np.maximum(c, _interval_dist(lam1, Ls, Rs)).min(axis=1)
    lower = float(max(at_start.max(), at_end.max()))
    # the worst single-bathtub value bounds the envelope on each segment
    upper = np.maximum(c, np.maximum(Ls - lam0, lam1 - Rs)).min(axis=1)
    result = lower
    for k in np.flatnonzero(upper > lower):
        ub = float(upper[k])
        if ub <= result:
            continue
        l0, l1 = float(lam0[k, 0]), float(lam1[k, 0])
        keep = (c[k] <= ub) & (Ls[k] - ub <= l1) & (Rs[k] + ub >= l0)
        val = _envelope_max(c[k, keep], Ls[k, keep], Rs[k, keep], l0, l1, ub)
        result = max(result, val)
    return result


def d_M2(f: StepFunction, g: StepFunction) -> MetricResult:
    if f == g:
        return MetricResult.exact(0.0)
    A = completed_graph(f).vertices
    B = completed_graph(g).vertices
    return MetricResult.exact(max(hausdorff_directed(A, B), hausdorff_directed(B, A)))


# ---------------------------------------------------------------------------
# M1: Fréchet distance between completed graphs


@njit(cache=True)
def _free_interval(px, pz, ax, az, bx, bz, eps):
    # {lam in [0, 1] : |a + lam (b - a) - p|_inf <= eps}
    lo, hi = 0.0, 1.0
    for k in range(2):
        if k == 0:
            a, d, p = ax, bx - ax, px
        else:
            a, d, p = az, bz - az, pz
        if d == 0.0:
            if abs(a - p) > eps:
                return 1.0, 0.0
        else:
            u = (p - eps - a) / d
            v = (p + eps - a) / d
            if u > v:
                u, v = v, u
            if u > lo:
                lo = u
            if v < hi:
                hi = v
    return lo, hi


@njit(cache=True)
def _frechet_decide(P, Q, eps):
    M = P.shape[0] - 1
    N = Q.shape[0] - 1
    if max(abs(P[0, 0] - Q[0, 0]), abs(P[0, 1] - Q[0, 1])) > eps:
        return False
    if max(abs(P[M, 0] - Q[N, 0]), abs(P[M, 1] - Q[N, 1])) > eps:
        return False
    inf = np.inf
    # reach_left[j]: lowest reachable lam on the left edge of cell (i, j)
    reach_left = np.full(N, inf)
    reach_bottom = np.full(M, inf)
    # column i = 0 of left edges
    ok = True
    for j in range(N):
        lo, hi = _free_interval(P[0, 0], P[0, 1], Q[j, 0], Q[j, 1], Q[j + 1, 0], Q[j + 1, 1], eps)
        if ok and lo <= 0.0 and lo <= hi:
            reach_left[j] = 0.0
            ok = hi >= 1.0
        else:
            ok = False
    ok = True
    for i in range(M):
        lo, hi = _free_interval(Q[0, 0], Q[0, 1], P[i, 0], P[i, 1], P[i + 1, 0], P[i + 1, 1], eps)
        if ok and lo <= 0.0 and lo <= hi:
            reach_bottom[i] = 0.0
            ok = hi >= 1.0
        else:
            ok = False
    # sweep cells column by column; reach_bottom[i] is row-updated in place
    for i in range(M):
        new_left = np.full(N, inf)
        for j in range(N):
            rl = reach_left[j]
            rb = reach_bottom[i]
            # right edge: vertex P[i+1] against Q segment j
            lo, hi = _free_interval(
                P[i + 1, 0], P[i + 1, 1], Q[j, 0], Q[j, 1], Q[j + 1, 0], Q[j + 1, 1], eps
            )
            if lo <= hi:
                if rb < inf:
                    new_left[j] = lo
                elif rl < inf:
                    s = max(lo, rl)
                    if s <= hi:
                        new_left[j] = s
            # top edge: vertex Q[j+1] against P segment i
            lo, hi = _free_interval(
                Q[j + 1, 0], Q[j + 1, 1], P[i, 0], P[i, 1], P[i + 1, 0], P[i + 1, 1], eps
            )
            top = inf
            if lo <= hi:
                if rl < inf:
                    top = lo
                elif rb < inf:
                    s = max(lo, rb)
                    if s <= hi:
                        top = s
            reach_bottom[i] = top
        reach_left = new_left
    return reach_left[N - 1] < inf or reach_bottom[M - 1] < inf


def frechet_distance(P, Q, rtol: float = 1e-13) -> tuple[float, float]:
    """Bisection bracket ``(lo, hi)`` of the Chebyshev Fréchet distance.

    ``hi`` is certified feasible by the decision procedure; ``lo`` is either
    infeasible or the endpoint lower bound.
    """
    P = np.ascontiguousarray(P, dtype=float)
    Q = np.ascontiguousarray(Q, dtype=float)
    lo = max(np.abs(P[0] - Q[0]).max(), np.abs(P[-1] - Q[-1]).max())
    if _frechet_decide(P, Q, lo):
        return float(lo), float(lo)
    both = np.vstack((P, Q))
    hi = float((both.max(axis=0) - both.min(axis=0)).max())
    while not _frechet_decide(P, Q, hi):  # pragma: no cover - diameter is always feasible
        hi *= 2.0
    tol = rtol * max(1.0, hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _frechet_decide(P, Q, mid):
            hi = mid
        else:
            lo = mid
    # snap to a vertex-to-segment critical value when one falls in the bracket
    cands = np.concatenate((_vertex_segment_dists(P, Q), _vertex_segment_dists(Q, P)))
    cands = np.unique(cands[(cands >= lo - tol) & (cands <= hi)])
    for c in cands:
        if _frechet_decide(P, Q, c):
            return float(min(lo, c)), float(c)
    return float(lo), float(hi)


def _vertex_segment_dists(P, Q):
    lo = np.minimum(Q[:-1], Q[1:])
    hi = np.maximum(Q[:-1], Q[1:])
    p = P[:, None, :]
    d = np.maximum(np.maximum(lo[None] - p, p - hi[None]), 0.0).max(axis=2)
    return d.ravel()


@njit(cache=True)
def _dfd_rows(P, Q):
    n, m = P.shape[0], Q.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        for j in range(m):
            d = max(abs(P[i, 0] - Q[j, 0]), abs(P[i, 1] - Q[j, 1]))
            if i == 0 and j == 0:
                cur[j] = d
            elif i == 0:
                cur[j] = max(d, cur[j - 1])
            elif j == 0:
                cur[j] = max(d, prev[j])
            else:
                cur[j] = max(d, min(prev[j], prev[j - 1], cur[j - 1]))
        prev, cur = cur, prev
    return prev[m - 1]


def refine(vertices: np.ndarray, mesh: float) -> np.ndarray:
    """Subdivide each segment into a power-of-two number of equal pieces of
    Chebyshev length at most ``mesh`` (nested as ``mesh`` shrinks)."""
    v = np.asarray(vertices, dtype=float)
    out = [v[:1]]
    for a, b in zip(v[:-1], v[1:]):
        L = float(np.abs(b - a).max())
        k = 0 if L <= mesh else int(math.ceil(math.log2(L / mesh)))
        while L / 2**k > mesh:
            k += 1
        s = np.linspace(0.0, 1.0, 2**k + 1)[1:, None]
        out.append(a + s * (b - a))
    return np.vstack(out)


def discrete_frechet(P, Q) -> float:
    return float(_dfd_rows(np.ascontiguousarray(P, float), np.ascontiguousarray(Q, float)))


def d_M1(f: StepFunction, g: StepFunction, mesh: float | None = None, method: str = "exact") -> MetricResult:
    """M1 distance bracket ``[value - mesh, value]``.

    With ``method="exact"`` the value is the certified-feasible end of a
    bisection on the continuous Fréchet distance (accurate to ~1e-13
    relative).  With ``method="discrete"`` it is the discrete Fréchet
    distance of the mesh-refined graphs, which overestimates by at most
    ``mesh``.
    """
    if mesh is None:
        mesh = default_mesh(f, g)
    if not mesh > 0:
        raise ValueError(f"mesh must be positive, got {mesh!r}")
    if f == g:
        return MetricResult(0.0, 0.0, 0.0, mesh)
    P = completed_graph(f).vertices
    Q = completed_graph(g).vertices
    if method == "exact":
        _, value = frechet_distance(P, Q)
    elif method == "discrete":
        value = discrete_frechet(refine(P, mesh), refine(Q, mesh))
    else:
        raise ValueError(f"unknown M1 method {method!r}")
    return MetricResult(value, max(0.0, value - mesh), value, mesh)


def d_p(x: BivariatePath, y: BivariatePath, mesh: float | None = None, method: str = "exact") -> MetricResult:
    if mesh is None:
        mesh = max(default_mesh(x.first, y.first), default_mesh(x.second, y.second))
    r1 = d_M1(x.first, y.first, mesh, method)
    r2 = d_M1(x.second, y.second, mesh, method)
    return MetricResult(
        max(r1.value, r2.value),
        max(r1.lower_bound, r2.lower_bound),
        max(r1.upper_bound, r2.upper_bound),
        mesh,
    )


def d_p_M2(x: BivariatePath, y: BivariatePath) -> MetricResult:
    return MetricResult.exact(max(d_M2(x.first, y.first).value, d_M2(x.second, y.second).value))


METRICS = {
    "uniform": lambda f, g, mesh: d_uniform(f, g),
    "m2": lambda f, g, mesh: d_M2(f, g),
    "m1": lambda f, g, mesh: d_M1(f, g, mesh),
    "p": lambda x, y, mesh: d_p(x, y, mesh),
    "pm2": lambda x, y, mesh: d_p_M2(x, y),
}

"""Piecewise-constant càdlàg paths on [0, 1] and their completed graphs."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "StepFunction",
    "CompletedGraph",
    "BivariatePath",
    "make_step",
    "completed_graph",
    "step_from_graph",
    "to_json",
    "from_json",
    "to_csv",
    "from_csv",
    "to_dict",
    "from_dict",
    "step_from_arrays",
    "sample_grid",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function on [0, 1].

    ``x(t) = values[k]`` for the largest ``times[k] <= t``, and
    ``x(t) = initial`` before the first jump.  Instances produced by
    :func:`make_step` are normalized: times strictly increasing in (0, 1]
    and consecutive values distinct.
    """

    initial: float
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "initial", float(self.initial))
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")

    @property
    def n_jumps(self) -> int:
        return len(self.times)

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            self.initial == other.initial
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.initial, self.times.tobytes(), self.values.tobytes()))

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        """Value ``x(t)``; accepts a scalar or an array of times in [0, 1]."""
        ts = np.asarray(t, dtype=float)
        if np.any((ts < 0) | (ts > 1)) or np.any(np.isnan(ts)):
            raise ValueError(f"evaluation time outside [0, 1]: {t!r}")
        k = np.searchsorted(self.times, ts, side="right")
        out = np.where(k > 0, self._levels()[k], self.initial)
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        """Left limit ``x(t-)`` for t in (0, 1]."""
        ts = np.asarray(t, dtype=float)
        if np.any((ts <= 0) | (ts > 1)) or np.any(np.isnan(ts)):
            raise ValueError(f"left limit needs t in (0, 1], got {t!r}")
        k = np.searchsorted(self.times, ts, side="left")
        out = self._levels()[k]
        return float(out) if out.ndim == 0 else out

    def _levels(self) -> np.ndarray:
        # level[k] is the value after the k-th jump, level[0] the initial value
        return np.concatenate(([self.initial], self.values))

    def levels(self) -> np.ndarray:
        return self._levels()

    def value_span(self) -> float:
        lv = self._levels()
        return float(lv.max() - lv.min())


def make_step(initial: float, jumps: Iterable[tuple[float, float]] = ()) -> StepFunction:
    """Build a normalized :class:`StepFunction` from ``(time, new_value)`` pairs.

    Jumps may be given in any order.  Jumps that do not change the value are
    dropped.  Duplicate times and times outside (0, 1] raise ``ValueError``.
    """
    initial = float(initial)
    if not math.isfinite(initial):
        raise ValueError(f"non-finite initial value {initial!r}")
    pairs = [(float(t), float(v)) for t, v in jumps]
    for t, v in pairs:
        if not (0.0 < t <= 1.0):
            raise ValueError(f"jump time {t!r} outside (0, 1]")
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} at time {t!r}")
    pairs.sort(key=lambda p: p[0])
    for (t0, _), (t1, _) in zip(pairs, pairs[1:]):
        if t0 == t1:
            raise ValueError(f"duplicate jump time {t0!r}")
    times, values = [], []
    current = initial
    for t, v in pairs:
        if v != current:
            times.append(t)
            values.append(v)
            current = v
    return StepFunction(initial, times, values)


def step_from_arrays(initial: float, times, values) -> StepFunction:
    """Fast constructor for already sorted arrays (normalizes zero jumps)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size:
        if not (np.all(np.diff(times) > 0) and times[0] > 0 and times[-1] <= 1):
            raise ValueError("jump times must be strictly increasing in (0, 1]")
        if not (np.all(np.isfinite(values)) and math.isfinite(initial)):
            raise ValueError("non-finite path values")
        lv = np.concatenate(([initial], values))
        keep = lv[1:] != lv[:-1]
        times, values = times[keep], values[keep]
    return StepFunction(float(initial), times, values)


@dataclass(frozen=True)
class CompletedGraph:
    """Completed graph as a polyline of axis-parallel segments.

    ``vertices`` is an ``(m + 1, 2)`` array of (time, value) points listed in
    the graph order; segment ``k`` joins ``vertices[k]`` and
    ``vertices[k + 1]``.  Plateaus are horizontal, jumps vertical.  A
    plateau of zero length, which arises only for a jump at t = 1, is
    omitted.
    """

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices))

    @property
    def segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        v = self.vertices
        return [(tuple(v[k]), tuple(v[k + 1])) for k in range(len(v) - 1)]

    def is_vertical(self) -> np.ndarray:
        v = self.vertices
        return v[1:, 0] == v[:-1, 0]

    def n_vertical(self) -> int:
        return int(self.is_vertical().sum())


def completed_graph(f: StepFunction) -> CompletedGraph:
    lv = f.levels()
    m = f.n_jumps
    pts = np.empty((2 * m + 2, 2))
    pts[0] = (0.0, lv[0])
    # corners (t_k, x(t_k-)) then (t_k, x(t_k))
    pts[1 : 2 * m + 1 : 2, 0] = f.times
    pts[1 : 2 * m + 1 : 2, 1] = lv[:-1]
    pts[2 : 2 * m + 2 : 2, 0] = f.times
    pts[2 : 2 * m + 2 : 2, 1] = lv[1:]
    pts[-1] = (1.0, lv[-1])
    if m and f.times[-1] == 1.0:
        pts = pts[:-1]
    elif m == 0:
        pts = pts[[0, -1]]
    return CompletedGraph(pts)


def step_from_graph(g: CompletedGraph) -> StepFunction:
    """Invert :func:`completed_graph` using the vertical segments."""
    v = g.vertices
    vert = np.flatnonzero(v[1:, 0] == v[:-1, 0])
    return step_from_arrays(v[0, 1], v[vert + 1, 0], v[vert + 1, 1])


@dataclass(frozen=True)
class BivariatePath:
    """An R^2-valued step path given by its two coordinate paths."""

    first: StepFunction
    second: StepFunction

    def __iter__(self):
        return iter((self.first, self.second))


# serialization


def to_dict(f: StepFunction) -> dict:
    return {"initial": f.initial, "jumps": [[t, v] for t, v in zip(f.times.tolist(), f.values.tolist())]}


def from_dict(d: dict) -> StepFunction:
    try:
        return make_step(d["initial"], [tuple(j) for j in d.get("jumps", [])])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed step function object: {exc}") from exc


def to_json(f) -> str:
    """JSON text for a StepFunction or a BivariatePath (``{"first", "second"}``)."""
    if isinstance(f, BivariatePath):
        return json.dumps({"first": to_dict(f.first), "second": to_dict(f.second)})
    return json.dumps(to_dict(f))


def from_json(text: str):
    d = json.loads(text)
    if "first" in d and "second" in d:
        return BivariatePath(from_dict(d["first"]), from_dict(d["second"]))
    return from_dict(d)


def to_csv(f: StepFunction) -> str:
    """Two columns ``time,value``: the row at time 0 holds the initial value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "value"])
    w.writerow([repr(0.0), repr(f.initial)])
    for t, v in zip(f.times.tolist(), f.values.tolist()):
        w.writerow([repr(t), repr(v)])
    return buf.getvalue()


def from_csv(text: str) -> StepFunction:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["time", "value"]:
        raise ValueError("CSV path must start with a 'time,value' header")
    body = [(float(a), float(b)) for a, b in rows[1:] if (a, b) != ("", "")]
    if not body or body[0][0] != 0.0:
        raise ValueError("first CSV row must be time 0 with the initial value")
    return make_step(body[0][1], body[1:])


def sample_grid(f: StepFunction, grid: Sequence[float]) -> StepFunction:
    """Step path that jumps only at grid points, holding ``f(t_k)`` on [t_k, t_{k+1})."""
    grid = np.asarray(grid, dtype=float)
    return step_from_arrays(f.initial, grid, f.eval(grid))

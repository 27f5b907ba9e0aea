"""Linear processes with heavy-tailed innovations and the joint path L_n = (V_n, W_n)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal

from .cadlag import BivariatePath, StepFunction, step_from_arrays
from .heavytail import (
    TailModel,
    draw_innovations,
    main_stream,
    mean_innovation,
    norming_an,
    side_streams,
)

__all__ = [
    "CoefficientSeq",
    "JointPath",
    "validate_coeffs",
    "beta_gamma",
    "taps",
    "default_trunc",
    "tail_sum",
    "innovation_buffer",
    "generate_linear",
    "centering_bn",
    "partial_sum_path",
    "running_max_path",
    "joint_path",
    "joint_path_from_linear",
    "fidi_batch",
]

DEFAULT_TAIL_TOL = 1e-6
_DIRECT_TAPS = 8


@dataclass(frozen=True)
class CoefficientSeq:
    """Coefficients ``phi_j`` of ``X_i = sum_j phi_j Z_{i-j}``.

    ``kind="finite"``: ``phi_{offset + k} = values[k]``.
    ``kind="geometric"``: ``phi_j = s * c * rho^|j|`` for ``j >= 0`` (or all
    ``j`` when ``two_sided``) with ``s = -1`` iff ``sign == "nonpositive"``.

    Mixed-sign finite sequences are rejected unless ``allow_mixed`` is set;
    that flag exists only for out-of-hypothesis diagnostics.
    """

    kind: str = "finite"
    values: tuple = (1.0,)
    offset: int = 0
    c: float = 1.0
    rho: float = 0.5
    sign: str | None = None
    delta: float = 0.5
    two_sided: bool = False
    allow_mixed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == "finite":
            if not self.values or max(abs(v) for v in self.values) == 0:
                raise ValueError("finite coefficients need at least one nonzero value")
            pos = any(v > 0 for v in self.values)
            neg = any(v < 0 for v in self.values)
            inferred = "mixed" if pos and neg else ("nonnegative" if pos else "nonpositive")
            if inferred == "mixed" and not self.allow_mixed:
                raise ValueError(
                    "coefficients must all share one sign (the limit theorem needs "
                    f"same-sign coefficients); got {self.values}"
                )
            if self.sign is not None and inferred != "mixed" and self.sign != inferred:
                raise ValueError(f"declared sign {self.sign!r} but coefficients are {inferred}")
            object.__setattr__(self, "sign", inferred)
        elif self.kind == "geometric":
            if not (0.0 < self.rho < 1.0):
                raise ValueError(f"geometric coefficients need rho in (0, 1), got {self.rho!r}")
            if not self.c > 0:
                raise ValueError(f"geometric coefficients need c > 0, got {self.c!r}")
            sign = self.sign or "nonnegative"
            if sign not in ("nonnegative", "nonpositive"):
                raise ValueError(f"sign must be 'nonnegative' or 'nonpositive', got {sign!r}")
            object.__setattr__(self, "sign", sign)
        else:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")

    @property
    def mixed(self) -> bool:
        return self.sign == "mixed"

    def support_radius(self) -> int | None:
        if self.kind == "finite":
            return max(abs(self.offset), abs(self.offset + len(self.values) - 1))
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["values"] = list(self.values)
        return d


def _geo_sign(c: CoefficientSeq) -> float:
    return -1.0 if c.sign == "nonpositive" else 1.0


def validate_coeffs(c: CoefficientSeq, alpha: float) -> dict:
    """Check the summability witness and sign hypothesis; report ``sum |phi_j|^delta``."""
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    if c.mixed and not c.allow_mixed:  # pragma: no cover - rejected at construction
        raise ValueError("mixed-sign coefficients")
    if not (c.delta < alpha):
        raise ValueError(f"summability witness needs delta < alpha, got delta={c.delta}, alpha={alpha}")
    if c.kind == "finite":
        total = float(sum(abs(v) ** c.delta for v in c.values))
    else:
        one = c.c**c.delta / (1.0 - c.rho**c.delta)
        total = 2.0 * one - c.c**c.delta if c.two_sided else one
    return {"delta": c.delta, "alpha": alpha, "sign": c.sign, "sum_abs_pow_delta": total, "admissible": True}


def beta_gamma(c: CoefficientSeq) -> tuple[float, float]:
    """``beta = sum phi_j`` and ``gamma = max |phi_j|``."""
    if c.kind == "finite":
        return float(math.fsum(c.values)), float(max(abs(v) for v in c.values))
    s = _geo_sign(c)
    beta = c.c * (1.0 + c.rho) / (1.0 - c.rho) if c.two_sided else c.c / (1.0 - c.rho)
    return s * beta, c.c


def tail_sum(c: CoefficientSeq, M: int) -> float:
    """``sum_{|j| > M} |phi_j|^delta``, the part dropped by truncation at M."""
    if c.kind == "finite":
        r = c.support_radius()
        return 0.0 if M >= r else float(
            sum(abs(v) ** c.delta for k, v in enumerate(c.values) if abs(c.offset + k) > M)
        )
    one = (c.c * c.rho ** (M + 1)) ** c.delta / (1.0 - c.rho**c.delta)
    return 2.0 * one if c.two_sided else one


def default_trunc(c: CoefficientSeq, tol: float = DEFAULT_TAIL_TOL) -> int:
    if c.kind == "finite":
        return c.support_radius()
    M = 0
    while tail_sum(c, M) >= tol:
        M += 1
    return M


def taps(c: CoefficientSeq, M: int) -> np.ndarray:
    """Kernel ``h[j + M] = phi_j`` for ``|j| <= M``."""
    h = np.zeros(2 * M + 1)
    if c.kind == "finite":
        if M < c.support_radius():
            raise ValueError(f"truncation M={M} is below the coefficient support radius {c.support_radius()}")
        for k, v in enumerate(c.values):
            h[c.offset + k + M] = v
    else:
        j = np.arange(-M, M + 1)
        phi = _geo_sign(c) * c.c * c.rho ** np.abs(j)
        if not c.two_sided:
            phi[j < 0] = 0.0
        h[:] = phi
    return h


def innovation_buffer(model: TailModel, n: int, M: int, seed: int) -> np.ndarray:
    """Innovations ``Z_{1-M}, ..., Z_{n+M}``.

    ``Z_1..Z_n`` come from the main stream (equal to
    ``sample_innovations(model, n, seed)``); the past ``Z_0, Z_{-1}, ...`` and
    future ``Z_{n+1}, ...`` come from two side streams, so every ``Z_i`` is
    the same whatever ``M`` is.
    """
    main = draw_innovations(model, main_stream(seed), n)
    past_rng, future_rng = side_streams(seed)
    past = draw_innovations(model, past_rng, M) if M else np.empty(0)
    future = draw_innovations(model, future_rng, M) if M else np.empty(0)
    return np.concatenate((past[::-1], main, future))


def generate_linear(innovations, c: CoefficientSeq, n: int, trunc: int | None = None):
    """``X_i = sum_{|j| <= M} phi_j Z_{i-j}`` for i = 1..n.

    ``innovations`` holds ``Z_{1-M}..Z_{n+M}`` along its last axis (a batch
    of rows is allowed).  Returns ``(X, truncation_tail)``.
    """
    M = default_trunc(c) if trunc is None else int(trunc)
    Z = np.asarray(innovations, dtype=float)
    if Z.shape[-1] != n + 2 * M:
        raise ValueError(
            f"innovation buffer must cover indices {1 - M}..{n + M} "
            f"({n + 2 * M} values), got {Z.shape[-1]}"
        )
    h = taps(c, M)
    nz = np.flatnonzero(h)
    if len(nz) <= _DIRECT_TAPS:
        X = np.zeros(Z.shape[:-1] + (n,))
        for k in nz:
            j = k - M
            X += h[k] * Z[..., M - j : M - j + n]
    else:
        kernel = h.reshape((1,) * (Z.ndim - 1) + (-1,))
        X = signal.fftconvolve(Z, kernel, mode="valid", axes=-1)
    return X, tail_sum(c, M)


def centering_bn(alpha: float, beta: float, model: TailModel) -> float:
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    if alpha <= 1.0:
        return 0.0
    return beta * mean_innovation(model)


def _jump_times(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / n


def partial_sum_path(X, a_n: float, b_n: float) -> StepFunction:
    """``V_n``: value ``(X_1 + ... + X_k - k b_n) / a_n`` on [k/n, (k+1)/n)."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise ValueError("empty sample")
    if not a_n > 0:
        raise ValueError(f"a_n must be positive, got {a_n!r}")
    n = X.size
    k = np.arange(1, n + 1)
    return step_from_arrays(0.0, _jump_times(n), (np.cumsum(X) - k * b_n) / a_n)


def running_max_path(X, a_n: float) -> StepFunction:
    """``W_n``: value ``max(X_1..X_k) / a_n`` on [k/n, (k+1)/n); ``X_1 / a_n`` on [0, 1/n)."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise ValueError("empty sample")
    if not a_n > 0:
        raise ValueError(f"a_n must be positive, got {a_n!r}")
    m = np.maximum.accumulate(X) / a_n
    return step_from_arrays(m[0], _jump_times(X.size), m)


@dataclass(frozen=True)
class JointPath:
    path: BivariatePath
    n: int
    a_n: float
    b_n: float
    trunc: int = 0
    truncation_tail: float = 0.0
    X: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def V(self) -> StepFunction:
        return self.path.first

    @property
    def W(self) -> StepFunction:
        return self.path.second


def norming(model: TailModel, coeffs: CoefficientSeq, n: int) -> tuple[float, float]:
    beta, _ = beta_gamma(coeffs)
    return norming_an(model, n), centering_bn(model.alpha, beta, model)


def joint_path_from_linear(X, a_n: float, b_n: float, **extra) -> JointPath:
    X = np.asarray(X, dtype=float)
    path = BivariatePath(partial_sum_path(X, a_n, b_n), running_max_path(X, a_n))
    return JointPath(path, X.size, a_n, b_n, X=X, **extra)


def joint_path(model: TailModel, coeffs: CoefficientSeq, n: int, seed: int, trunc: int | None = None) -> JointPath:
    validate_coeffs(coeffs, model.alpha)
    M = default_trunc(coeffs) if trunc is None else int(trunc)
    Z = innovation_buffer(model, n, M, seed)
    X, tail = generate_linear(Z, coeffs, n, M)
    a_n, b_n = norming(model, coeffs, n)
    return joint_path_from_linear(X, a_n, b_n, trunc=M, truncation_tail=tail)


def floor_index(n: int, times) -> np.ndarray:
    """``floor(n t)`` robust to ``t = k/n`` rounding just below k."""
    nt = n * np.asarray(times, dtype=float)
    k = np.floor(nt)
    k = np.where(nt - k > 1.0 - 1e-9, k + 1, k)
    return k.astype(np.int64)


def fidi_batch(model, coeffs, n, times, seeds, trunc=None, block: int = 256):
    """Values of ``V_n`` and ``W_n`` at ``times`` for one replicate per seed.

    Returns ``(V, W, supV)`` with shapes ``(N, len(times))``,
    ``(N, len(times))`` and ``(N,)``.  Replicate ``i`` equals
    ``joint_path(model, coeffs, n, seeds[i], trunc)`` evaluated at ``times``.
    """
    M = default_trunc(coeffs) if trunc is None else int(trunc)
    a_n, b_n = norming(model, coeffs, n)
    kidx = floor_index(n, times)
    seeds = list(seeds)
    V = np.empty((len(seeds), len(kidx)))
    W = np.empty_like(V)
    supV = np.empty(len(seeds))
    k = np.arange(1, n + 1)
    for s0 in range(0, len(seeds), block):
        chunk = seeds[s0 : s0 + block]
        Z = np.stack([innovation_buffer(model, n, M, s) for s in chunk])
        X, _ = generate_linear(Z, coeffs, n, M)
        path_v = (np.cumsum(X, axis=1) - k * b_n) / a_n
        path_w = np.maximum.accumulate(X, axis=1) / a_n
        idx = np.maximum(kidx - 1, 0)
        v = path_v[:, idx]
        v[:, kidx == 0] = 0.0
        V[s0 : s0 + len(chunk)] = v
        W[s0 : s0 + len(chunk)] = path_w[:, idx]
        supV[s0 : s0 + len(chunk)] = np.maximum(path_v.max(axis=1), 0.0)
    return V, W, supV

"""The limit pair (beta V, gamma W): stable Lévy process and extremal process.

Paths are simulated from one Poisson random measure on [0, 1] x R with
intensity ``dt x mu(dx)``.  Points are generated in LePage form: arrival
times ``Gamma_i`` of a unit-rate Poisson process up to time ``K``, jump
magnitudes ``Gamma_i^(-1/alpha)``, independent signs and uniform locations.
``V`` sums the signed jumps (compensated when ``alpha > 1``); ``W`` is the
running maximum of the jumps on the exponent-measure side.

Dropping the arrivals beyond ``K`` removes all jumps smaller than
``eps = K^(-1/alpha)``.  Their contribution is replaced by a process with
the same first two cumulants: a Brownian motion for ``alpha >= 1`` and a
gamma subordinator per sign for ``alpha < 1`` (this keeps ``V`` monotone
for one-sided jumps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .cadlag import BivariatePath, step_from_arrays
from .heavytail import LevyMeasure, TailModel, derive_seed
from .linproc import CoefficientSeq, beta_gamma

__all__ = [
    "LevyTriple",
    "ExponentMeasure",
    "LimitSpec",
    "QuadratureError",
    "limit_spec",
    "extremal_marginal_cdf",
    "levy_exponent",
    "levy_exponent_cf",
    "simulate_extremal",
    "simulate_joint_limit",
    "sample_limit_batch",
    "series_tail_estimate",
    "suggest_trunc_K",
]

SERIES_TOL = 1e-3
LIMIT_BLOCK = 1000


class QuadratureError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual estimate {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True)
class LevyTriple:
    """Characteristic triple ``(0, mu, b)`` with truncation ``1{|x| <= 1}``."""

    levy_measure: LevyMeasure
    b: float
    a: float = 0.0

    @classmethod
    def stable(cls, alpha: float, p: float) -> "LevyTriple":
        if alpha == 1.0:
            if p != 0.5:
                raise ValueError("alpha = 1 requires p = r = 1/2")
            b = 0.0
        else:
            b = (p - (1.0 - p)) * alpha / (1.0 - alpha)
        return cls(LevyMeasure(alpha, p), b)

    @property
    def alpha(self) -> float:
        return self.levy_measure.alpha


@dataclass(frozen=True)
class ExponentMeasure:
    """``nu(dx) = c alpha x^(-alpha-1) dx`` on (0, inf)."""

    c: float
    alpha: float


@dataclass(frozen=True)
class LimitSpec:
    triple: LevyTriple
    exponent: ExponentMeasure
    beta: float
    gamma: float
    side: int = 1  # +1: W from positive jumps (c = p); -1: negative jumps (c = r)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def alpha(self) -> float:
        return self.triple.alpha

    def to_dict(self) -> dict:
        m = self.triple.levy_measure
        return {
            "alpha": m.alpha,
            "p": m.p,
            "b": self.triple.b,
            "c": self.exponent.c,
            "beta": self.beta,
            "gamma": self.gamma,
            "coeff_sign": "nonnegative" if self.side > 0 else "nonpositive",
        }


def limit_spec(model: TailModel, coeffs: CoefficientSeq) -> LimitSpec:
    """Limit parameters for innovations ``model`` and coefficients ``coeffs``.

    For a mixed-sign diagnostic sequence the side of the largest coefficient
    is used, which is a nominal choice outside the theorem's hypotheses.
    """
    beta, gamma = beta_gamma(coeffs)
    if coeffs.sign == "nonnegative":
        side = 1
    elif coeffs.sign == "nonpositive":
        side = -1
    else:
        vals = np.array(coeffs.values)
        side = 1 if vals[np.argmax(np.abs(vals))] > 0 else -1
    c = model.p if side > 0 else model.r
    if c <= 0:
        raise ValueError(
            "the extremal limit is degenerate: need p > 0 for nonnegative and r > 0 "
            "for nonpositive coefficients"
        )
    return build_spec(model.alpha, model.p, side, beta, gamma)


def build_spec(alpha: float, p: float, side: int, beta: float, gamma: float) -> LimitSpec:
    c = p if side > 0 else 1.0 - p
    return LimitSpec(LevyTriple.stable(alpha, p), ExponentMeasure(c, alpha), beta, gamma, side)


# ---------------------------------------------------------------------------
# marginal laws


def extremal_marginal_cdf(e: ExponentMeasure, t: float, x: float) -> float:
    """``P(W(t) <= x) = exp(-t c x^(-alpha))``."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r}")
    if not x > 0:
        raise ValueError(f"x must be positive, got {x!r}")
    return math.exp(-t * e.c * x ** (-e.alpha))


def scaled_extremal_cdf(spec: LimitSpec, t: float):
    """Vectorized CDF of ``gamma W(t)`` (zero on x <= 0)."""
    c, a, g = spec.exponent.c, spec.alpha, spec.gamma

    def cdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(x > 0, np.exp(-t * c * (np.maximum(x, 1e-300) / g) ** (-a)), 0.0)
        return out

    return cdf


def _sin_minus_x(y):
    if abs(y) < 0.1:
        y2 = y * y
        return -y * y2 / 6.0 * (1.0 - y2 / 20.0 * (1.0 - y2 / 42.0 * (1.0 - y2 / 72.0)))
    return math.sin(y) - y


def _half_line_exponent(alpha: float, z: float) -> complex:
    """``int_0^inf (e^{izx} - 1 - izx 1{x<=1}) alpha x^(-alpha-1) dx`` for z > 0."""
    opts = dict(epsabs=0.0, epsrel=1e-10, limit=200)
    w = lambda x: alpha * x ** (-alpha - 1.0)
    re0, e1 = integrate.quad(lambda x: -2.0 * math.sin(0.5 * z * x) ** 2 * w(x), 0.0, 1.0, **opts)
    im0, e2 = integrate.quad(lambda x: _sin_minus_x(z * x) * w(x), 0.0, 1.0, **opts)
    # oscillatory tails on [1, inf) via Fourier-weighted quadrature
    re1, e3 = integrate.quad(w, 1.0, math.inf, weight="cos", wvar=z, limlst=200, epsabs=1e-12)
    im1, e4 = integrate.quad(w, 1.0, math.inf, weight="sin", wvar=z, limlst=200, epsabs=1e-12)
    val = complex(re0 + re1 - 1.0, im0 + im1)
    residual = e1 + e2 + e3 + e4
    if residual > 1e-8 * max(1.0, abs(val)):
        raise QuadratureError(f"Lévy exponent quadrature did not converge at z={z}", residual)
    return val


def levy_exponent(tr: LevyTriple, z: float) -> complex:
    """``log E exp(i z V(1))`` by quadrature against the Lévy measure."""
    z = float(z)
    if z == 0.0:
        return 0j
    m = tr.levy_measure
    half = _half_line_exponent(m.alpha, abs(z))
    if z < 0:
        half = half.conjugate()
    # negative half-line contributes the conjugate of the positive one
    return m.p * half + m.r * half.conjugate() + 1j * tr.b * z - 0.5 * tr.a * z * z


def levy_exponent_cf(tr: LevyTriple, z: float) -> complex:
    return complex(np.exp(levy_exponent(tr, z)))


def scaled_levy_cf(spec: LimitSpec, t: float):
    """CF of ``beta V(t)``: ``z -> exp(t psi(beta z))``, cached per z."""
    cache: dict[float, complex] = {}

    def cf(z):
        z = float(z)
        if z not in cache:
            cache[z] = levy_exponent(spec.triple, spec.beta * z)
        return complex(np.exp(t * cache[z]))

    return cf


# ---------------------------------------------------------------------------
# simulation


def simulate_extremal(e: ExponentMeasure, grid, seed: int):
    """Extremal process on ``grid`` from independent Fréchet max-increments."""
    grid = _check_grid(grid)
    rng = np.random.default_rng(int(seed))
    dt = np.diff(np.concatenate(([0.0], grid)))
    u = 1.0 - rng.random(len(grid))
    # P(F <= x) = exp(-c dt x^-alpha)  =>  F = (c dt / -log u)^(1/alpha)
    F = (e.c * dt / -np.log(u)) ** (1.0 / e.alpha)
    return step_from_arrays(0.0, grid, np.maximum.accumulate(F))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d sequence")
    if grid[0] <= 0 or grid[-1] > 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing in (0, 1]")
    return grid


def series_tail_estimate(alpha: float, K: float) -> float:
    """Third absolute moment of the Lévy mass below ``K^(-1/alpha)``.

    The two-cumulant replacement of the small jumps changes the log-CF of
    ``V(t)`` by at most ``t |z|^3 / 6`` times this number.
    """
    eps = K ** (-1.0 / alpha)
    return alpha * eps ** (3.0 - alpha) / (3.0 - alpha)


def suggest_trunc_K(alpha: float, tol: float = SERIES_TOL) -> int:
    K = ((3.0 - alpha) * tol / alpha) ** (-alpha / (3.0 - alpha))
    K = max(100, int(math.ceil(K)))
    while series_tail_estimate(alpha, K) > tol:
        K += 1
    return K


def default_trunc_K(alpha: float) -> int:
    return max(2000, suggest_trunc_K(alpha))


def _limit_block(spec: LimitSpec, grid: np.ndarray, K: int, B: int, rng: np.random.Generator):
    alpha = spec.alpha
    p = spec.triple.levy_measure.p
    r = 1.0 - p
    G = len(grid)
    counts = rng.poisson(K, size=B)
    owner = np.repeat(np.arange(B), counts)
    u = rng.random((owner.size, 3))
    mag = (K * (1.0 - u[:, 0])) ** (-1.0 / alpha)
    positive = u[:, 1] < p
    # jump at location U enters V(t) for every grid t >= U
    gidx = np.searchsorted(grid, u[:, 2], side="left")
    flat = owner * (G + 1) + gidx
    signed = np.where(positive, mag, -mag)
    inc = np.bincount(flat, weights=signed, minlength=B * (G + 1)).reshape(B, G + 1)[:, :G]

    side = positive if spec.side > 0 else ~positive
    wmax = np.zeros(B * (G + 1))
    np.maximum.at(wmax, flat[side], mag[side])
    W = np.maximum.accumulate(wmax.reshape(B, G + 1)[:, :G], axis=1)

    dt = np.diff(np.concatenate(([0.0], grid)))
    eps = K ** (-1.0 / alpha)
    var_rate = alpha * eps ** (2.0 - alpha) / (2.0 - alpha)
    if alpha < 1.0:
        mean_rate = alpha * eps ** (1.0 - alpha) / (1.0 - alpha)
        for w, s in ((p, 1.0), (r, -1.0)):
            if w > 0:
                m, v = w * mean_rate * dt, w * var_rate * dt
                inc = inc + s * rng.gamma(m * m / v, v / m, size=(B, G))
    else:
        if alpha > 1.0:
            inc = inc - (p - r) * alpha * eps ** (1.0 - alpha) / (alpha - 1.0) * dt
        inc = inc + rng.standard_normal((B, G)) * np.sqrt(var_rate * dt)
    V = np.cumsum(inc, axis=1)
    return spec.beta * V, spec.gamma * W


def sample_limit_batch(spec: LimitSpec, grid, trunc_K: int | None, N: int, seed: int, block: int = LIMIT_BLOCK):
    """``N`` independent draws of ``(beta V, gamma W)`` on ``grid``.

    Returns arrays ``V, W`` of shape ``(N, len(grid))`` and ``supV`` (the
    maximum of ``beta V`` over ``{0} U grid``).  Draws are produced in blocks
    of ``block`` replicates, block ``k`` seeded with ``derive_seed(seed, k)``.
    """
    grid = _check_grid(grid)
    K = default_trunc_K(spec.alpha) if trunc_K is None else int(trunc_K)
    check_trunc_K(spec.alpha, K)
    Vs, Ws = [], []
    for k, s0 in enumerate(range(0, N, block)):
        rng = np.random.default_rng(derive_seed(seed, k))
        V, W = _limit_block(spec, grid, K, min(block, N - s0), rng)
        Vs.append(V)
        Ws.append(W)
    V = np.vstack(Vs)
    W = np.vstack(Ws)
    return V, W, np.maximum(V.max(axis=1), 0.0)


def check_trunc_K(alpha: float, K: int) -> None:
    if K < 100:
        raise ValueError(f"trunc_K must be at least 100, got {K}")
    est = series_tail_estimate(alpha, K)
    if est > SERIES_TOL:
        raise ValueError(
            f"trunc_K={K} leaves a series tail estimate {est:.3g} > {SERIES_TOL}; "
            f"use trunc_K >= {suggest_trunc_K(alpha)}"
        )


def simulate_joint_limit(spec: LimitSpec, grid, trunc_K: int | None, seed: int) -> BivariatePath:
    """One draw of ``(beta V, gamma W)`` as step paths jumping on ``grid``."""
    grid = _check_grid(grid)
    V, W, _ = sample_limit_batch(spec, grid, trunc_K, 1, seed)
    return BivariatePath(step_from_arrays(0.0, grid, V[0]), step_from_arrays(0.0, grid, W[0]))

"""Regularly varying innovations: tail model, samplers, norming constants."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "TailModel",
    "LevyMeasure",
    "survival",
    "draw_innovations",
    "sample_innovations",
    "norming_an",
    "mean_innovation",
    "mu_tail",
    "splitmix64",
    "derive_seed",
]

SV_KINDS = ("constant", "log")
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TailModel:
    """Innovation law ``P(|Z| > x) = (x/scale)^(-alpha) L(x/scale)`` for x >= scale.

    ``L == 1`` for ``sv_kind="constant"`` (pure Pareto) and
    ``L(y) = 1 / (1 + log y)`` for ``sv_kind="log"``.  The sign is +1 with
    probability ``p`` and -1 otherwise.
    """

    alpha: float
    p: float = 1.0
    sv_kind: str = "constant"
    scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")
        if self.sv_kind not in SV_KINDS:
            raise ValueError(f"sv_kind must be one of {SV_KINDS}, got {self.sv_kind!r}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")
        if self.alpha == 1.0 and self.p != 0.5:
            raise ValueError("alpha = 1 requires symmetric innovations (p = r = 1/2)")

    @property
    def r(self) -> float:
        return 1.0 - self.p

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TailModel":
        unknown = set(d) - {"alpha", "p", "sv_kind", "scale"}
        if unknown:
            raise ValueError(f"unknown tail model keys: {sorted(unknown)}")
        return cls(**d)

    def levy_measure(self) -> "LevyMeasure":
        return LevyMeasure(self.alpha, self.p)


@dataclass(frozen=True)
class LevyMeasure:
    """``mu(dx) = (p 1{x>0} + r 1{x<0}) alpha |x|^(-alpha-1) dx``."""

    alpha: float
    p: float

    @property
    def r(self) -> float:
        return 1.0 - self.p


def mu_tail(m: LevyMeasure, x: float, side: str = "right") -> float:
    """``mu(x, inf)`` for ``side="right"``, ``mu(-inf, -x)`` for ``side="left"``."""
    if not x > 0:
        raise ValueError(f"x must be positive, got {x!r}")
    if side == "right":
        w = m.p
    elif side == "left":
        w = m.r
    else:
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    return w * x ** (-m.alpha)


def survival(model: TailModel, x):
    """``P(|Z| > x)``."""
    y = np.asarray(x, dtype=float) / model.scale
    with np.errstate(divide="ignore", invalid="ignore"):
        s = y ** (-model.alpha)
        if model.sv_kind == "log":
            s = s / (1.0 + np.log(y))
    out = np.where(y <= 1.0, 1.0, s)
    return float(out) if out.ndim == 0 else out


def _log_inverse(logu: np.ndarray, alpha: float) -> np.ndarray:
    # solve alpha*s + log1p(s) = -log u for s >= 0; Newton from 0 increases
    # monotonically to the root because the left side is concave
    target = -logu
    s = np.zeros_like(target)
    for _ in range(100):
        g = alpha * s + np.log1p(s) - target
        step = g / (alpha + 1.0 / (1.0 + s))
        s = s - step
        if np.max(np.abs(step), initial=0.0) <= 1e-15 * max(1.0, float(np.max(s, initial=0.0))):
            break
    return s


def magnitudes_from_uniform(model: TailModel, u: np.ndarray) -> np.ndarray:
    """Inverse survival transform; ``u`` in (0, 1]."""
    if model.sv_kind == "constant":
        return model.scale * u ** (-1.0 / model.alpha)
    return model.scale * np.exp(_log_inverse(np.log(u), model.alpha))


def draw_innovations(model: TailModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` innovations from ``rng``.

    Uniforms are drawn as an ``(n, 2)`` block (magnitude, sign) so the first
    ``k`` draws do not depend on ``n``.
    """
    u = rng.random((n, 2))
    mag = magnitudes_from_uniform(model, 1.0 - u[:, 0])
    return np.where(u[:, 1] < model.p, mag, -mag)


def sample_innovations(model: TailModel, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"need n >= 1, got {n!r}")
    return draw_innovations(model, main_stream(seed), n)


def main_stream(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed) & _MASK64).spawn(3)[0])


def side_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    _, past, future = np.random.SeedSequence(int(seed) & _MASK64).spawn(3)
    return np.random.default_rng(past), np.random.default_rng(future)


def norming_an(model: TailModel, n: int) -> float:
    """Solve ``n P(|Z| > a) = 1``."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n!r}")
    if model.sv_kind == "constant":
        return model.scale * n ** (1.0 / model.alpha)
    # alpha*s + log1p(s) = log n, s = log(a/scale) lies in [0, log n / alpha]
    target = math.log(n)
    lo, hi = 0.0, target / model.alpha
    while hi - lo > 1e-13 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if model.alpha * mid + math.log1p(mid) < target:
            lo = mid
        else:
            hi = mid
    return model.scale * math.exp(0.5 * (lo + hi))


def mean_innovation(model: TailModel) -> float:
    """``E(Z)``; defined only for ``alpha > 1``."""
    if model.alpha <= 1.0:
        raise ValueError(f"E(Z) is infinite for alpha = {model.alpha} <= 1")
    if model.sv_kind == "constant":
        mean_abs = model.scale * model.alpha / (model.alpha - 1.0)
    else:
        # E|Z| = scale * (1 + int_1^inf y^-alpha / (1 + log y) dy), with y = e^s
        a = model.alpha
        tail, _ = integrate.quad(lambda s: math.exp((1.0 - a) * s) / (1.0 + s), 0.0, math.inf, epsabs=0, epsrel=1e-12)
        mean_abs = model.scale * (1.0 + tail)
    return (model.p - model.r) * mean_abs


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer, used to decorrelate replicate indices."""
    z = (int(x) + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-replicate seed ``seed XOR splitmix64(index)`` (64-bit)."""
    return (int(seed) ^ splitmix64(index)) & _MASK64

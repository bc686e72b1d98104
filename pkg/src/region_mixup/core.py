"""Deterministic random streams, samplers and small array helpers."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    """An argument is outside the operation's domain."""


class ShapeError(ValueError):
    """Array shapes are incompatible."""


class DivisibilityError(ShapeError):
    """Image extent is not divisible by the grid dimension."""


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required."""


def float_dtype():
    """Default float type: float32, or float64 when ``REGION_MIXUP_FLOAT64=1``."""
    return np.float64 if os.environ.get("REGION_MIXUP_FLOAT64") == "1" else np.float32


class RngState:
    """Seeded, splittable random stream.

    Backed by a Philox4x32 counter-based generator keyed from ``(seed, path)``.
    ``split`` derives children from the parent's key and a child index, so
    child streams never draw from the parent's sequence and do not depend on
    how much the parent has consumed.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(_path)
        self._children = 0
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._bitgen = np.random.Philox(ss)
        self._gen = np.random.Generator(self._bitgen)

    def __repr__(self):
        return f"RngState(seed={self.seed}, path={self.path}, counter={self.counter})"

    @property
    def counter(self) -> int:
        """Philox block counter; advances as values are drawn."""
        return int(self._bitgen.state["state"]["counter"][0])

    def split(self, n: int = 2) -> list[RngState]:
        """Return ``n`` fresh child streams. Repeated calls keep producing new children."""
        start = self._children
        self._children += n
        return [RngState(self.seed, self.path + (start + i,)) for i in range(n)]

    def uniform(self, size=None):
        return self._gen.random(size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, high, size=None):
        """Integers in ``[0, high)``; ``high`` may be an array."""
        return self._gen.integers(0, high, size=size)


@dataclass(frozen=True)
class BetaParams:
    alpha: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")


def _log_gamma_mt(shape: float, size: int, rng: RngState) -> np.ndarray:
    """log of Gamma(shape, 1) variates by Marsaglia-Tsang, for shape >= 1."""
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = size - filled
        # acceptance is above 95% for every shape >= 1; a small margin avoids extra rounds
        m_draw = m + 8 + m // 16
        z = rng.normal(m_draw)
        u = rng.uniform(m_draw)
        v = (1.0 + c * z) ** 3
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = (v > 0) & (np.log(u) < 0.5 * z * z + d - d * v + d * np.log(v))
        got = np.log(d) + np.log(v[ok])
        take = min(m, got.size)
        out[filled:filled + take] = got[:take]
        filled += take
    return out


def sample_log_gamma(shape: float, size: int, rng: RngState) -> np.ndarray:
    """log of Gamma(shape, 1) variates for any shape > 0.

    For shape < 1 uses Gamma(a) = Gamma(a + 1) * U**(1/a), kept in log space
    so tiny shapes do not underflow to zero.
    """
    if shape >= 1.0:
        return _log_gamma_mt(shape, size, rng)
    boosted = _log_gamma_mt(shape + 1.0, size, rng)
    u = rng.uniform(size)
    with np.errstate(divide="ignore"):
        return boosted + np.log(u) / shape


def sample_beta(params: BetaParams | float, rng: RngState, size: int | None = None):
    """Draw from the symmetric Beta(alpha, alpha) as X / (X + Y), X, Y ~ Gamma(alpha).

    Returns a Python float when ``size`` is None, otherwise a float64 array.
    """
    if not isinstance(params, BetaParams):
        params = BetaParams(float(params))
    n = 1 if size is None else int(size)
    if n < 0:
        raise ParameterError("size must be non-negative")
    log_x = sample_log_gamma(params.alpha, n, rng)
    log_y = sample_log_gamma(params.alpha, n, rng)
    with np.errstate(over="ignore"):
        lam = 1.0 / (1.0 + np.exp(log_y - log_x))
    lam = np.clip(lam, 0.0, 1.0)
    return float(lam[0]) if size is None else lam


def sample_permutation(n: int, rng: RngState) -> np.ndarray:
    """Uniform random permutation of ``0..n-1`` by Fisher-Yates."""
    if n < 1:
        raise ParameterError(f"permutation length must be >= 1, got {n}")
    perm = np.arange(n)
    if n == 1:
        return perm
    # swap partner for position i (counting down) is uniform on [0, i]
    js = rng.integers(np.arange(n, 1, -1))
    for i, j in zip(range(n - 1, 0, -1), js):
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def lerp(a, b, lam: float):
    """Elementwise ``lam * a + (1 - lam) * b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"lerp shape mismatch: {a.shape} vs {b.shape}")
    lam = float(lam)
    return lam * a + (1.0 - lam) * b


class ConfigError(ValueError):
    """Invalid training or run configuration."""

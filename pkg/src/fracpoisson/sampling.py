"""Random variate generation for one-sided stable laws and their inverses.

Everything stochastic in this package draws through a :class:`RandomSource`,
a thin splittable wrapper over numpy's Philox generator.  Identical
``(seed, stream)`` pairs reproduce identical sequences byte for byte, and
substreams obtained from :meth:`RandomSource.substream` are statistically
independent, which is what makes chunk-by-index Monte Carlo deterministic
under any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """A parameter violates its documented constraint."""


@dataclass
class RandomSource:
    """Seedable, splittable randomness source.

    ``seed`` and ``stream`` are folded into a ``numpy.random.SeedSequence``
    spawn key, so distinct streams are independent by construction.  The
    underlying generator is created lazily and advances as it is consumed;
    rebuild the source from the same ``(seed, stream)`` to replay a sequence.
    """

    seed: int
    stream: int = 0
    _path: tuple[int, ...] = field(default=(), repr=False)
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self._path))
            self._gen = np.random.Generator(np.random.Philox(seq))
        return self._gen

    def substream(self, index: int) -> "RandomSource":
        """Independent child source; deterministic in (seed, stream, index)."""
        return RandomSource(self.seed, self.stream, self._path + (index,))


def _as_gen(rng: RandomSource | np.random.Generator) -> np.random.Generator:
    return rng.gen if isinstance(rng, RandomSource) else rng


def _check_alpha(alpha: float) -> None:
    # alpha = 1 is admitted as the degenerate / classical reduction
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"stability index must lie in (0, 1], got {alpha}")


def sample_stable(alpha: float, scale: float, rng: RandomSource, size: int | None = None):
    """Draw one-sided alpha-stable variates with E exp(-sX) = exp(-scale * s**alpha).

    Uses Kanter's exact rejection-free representation
    ``X = scale**(1/alpha) * sin(a U) / sin(U)**(1/a)
    * (sin((1-a) U) / E)**((1-a)/a)``
    with U uniform on (0, pi) and E unit exponential.  alpha = 1 is the
    degenerate deterministic drift X = scale.
    """
    _check_alpha(alpha)
    if scale <= 0.0:
        raise ParameterError(f"scale must be positive, got {scale}")
    gen = _as_gen(rng)
    n = 1 if size is None else int(size)
    if alpha == 1.0:
        x = np.full(n, scale)
    else:
        u = gen.uniform(0.0, np.pi, size=n)
        e = gen.standard_exponential(size=n)
        x = scale ** (1.0 / alpha) * _kanter(alpha, u, e)
    return float(x[0]) if size is None else x


def _kanter(alpha: float, u: np.ndarray, e: np.ndarray) -> np.ndarray:
    a = alpha
    # log-space keeps the (1-a)/a power stable for a close to 0 or 1
    log_x = (
        np.log(np.sin(a * u))
        - np.log(np.sin(u)) / a
        + ((1.0 - a) / a) * (np.log(np.sin((1.0 - a) * u)) - np.log(e))
    )
    return np.exp(log_x)


def sample_ml_waiting_time(alpha: float, lam: float, rng: RandomSource, size: int | None = None):
    """Waiting times with survival function E_alpha(-lam * t**alpha).

    Exact in law via T = (E / lam)**(1/alpha) * S_alpha with E unit
    exponential and S_alpha a unit one-sided stable draw (the first passage
    of the stable subordinator at an independent exponential level).
    """
    _check_alpha(alpha)
    if lam <= 0.0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    gen = _as_gen(rng)
    n = 1 if size is None else int(size)
    e = gen.standard_exponential(size=n)
    u = gen.uniform(0.0, np.pi, size=n)
    e2 = gen.standard_exponential(size=n)
    t = (e / lam) ** (1.0 / alpha) * _kanter(alpha, u, e2)
    return float(t[0]) if size is None else t


def sample_inverse_at(alpha: float, t: float, rng: RandomSource, size: int | None = None):
    """Exact single-time draw of the inverse stable subordinator at time t.

    Self-similarity gives Y_alpha(t) =d t**alpha * S_alpha**(-alpha) with
    S_alpha unit one-sided stable; Y_alpha(0) = 0.
    """
    _check_alpha(alpha)
    if t < 0.0:
        raise ParameterError(f"time must be nonnegative, got {t}")
    gen = _as_gen(rng)
    n = 1 if size is None else int(size)
    if t == 0.0:
        y = np.zeros(n)
    else:
        u = gen.uniform(0.0, np.pi, size=n)
        e = gen.standard_exponential(size=n)
        y = t**alpha * _kanter(alpha, u, e) ** (-alpha)
    return float(y[0]) if size is None else y


@dataclass(frozen=True)
class MixedParams:
    """Exponent mixture of two stable subordinators.

    The mixed Laplace exponent is ``c1 * s**alpha1 + c2 * s**alpha2`` with
    c1 + c2 = 1, c2 > 0 and alpha1 < alpha2 (alpha1 = alpha2 collapses
    to a single stable subordinator and is rejected here).
    """

    alpha1: float
    alpha2: float
    c1: float
    c2: float

    def __post_init__(self):
        _check_alpha(self.alpha1)
        _check_alpha(self.alpha2)
        if not self.alpha1 < self.alpha2:
            raise ParameterError(
                f"alpha1 < alpha2 required, got {self.alpha1}, {self.alpha2}"
            )
        if self.c1 < 0.0 or self.c2 <= 0.0:
            raise ParameterError(f"need c1 >= 0 and c2 > 0, got {self.c1}, {self.c2}")
        if abs(self.c1 + self.c2 - 1.0) > 1e-12:
            raise ParameterError(f"c1 + c2 must equal 1, got {self.c1 + self.c2}")

    def phi(self, s):
        """Laplace exponent c1 * s**alpha1 + c2 * s**alpha2 (complex-safe)."""
        return self.c1 * s**self.alpha1 + self.c2 * s**self.alpha2

"""Grid simulation of (mixed) stable subordinators and their inverses.

The grid scheme is exact in distribution at the grid times: increments of
the driving subordinator over internal steps of size delta are drawn from
the law with Laplace transform exp(-delta * phi(s)), and the inverse process
is read off as the right-continuous step function that jumps by delta at
the simulated values.  Analytic counterparts (renewal function, second
moments, covariances) evaluate the closed forms and the renewal-integral
covariance with singularity-aware quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as _gamma

import numpy as np
from scipy.integrate import quad

from . import specfun
from .sampling import MixedParams, ParameterError, RandomSource, sample_stable


class ResourceLimitError(RuntimeError):
    """A simulated path exceeded its configured maximum length."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature could not reach its error target."""


Params = float | MixedParams


def _is_mixed(params: Params) -> bool:
    return isinstance(params, MixedParams)


@dataclass
class SubordinatorPath:
    """Values L(n * delta) of a subordinator on its internal grid.

    values[0] = 0 and the sequence is strictly increasing; the final value is
    the first one beyond the requested horizon.
    """

    params: Params
    delta: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values[0] != 0.0 or np.any(np.diff(self.values) <= 0.0):
            raise ValueError("subordinator path must start at 0 and strictly increase")


@dataclass
class InversePath:
    """Right-continuous step version of the inverse subordinator.

    The inverse sits at level n * delta on [jump_times[n-1], jump_times[n]);
    `interp` gives the piecewise-linear version used to place events inside
    grid cells (uniform smearing, exact at grid resolution).
    """

    params: Params
    delta: float
    jump_times: np.ndarray

    def __post_init__(self):
        self.jump_times = np.asarray(self.jump_times, dtype=float)
        if np.any(np.diff(self.jump_times) < 0.0):
            raise ValueError("jump times must be nondecreasing")

    def __call__(self, s):
        """Step evaluation Y(s); zero before the first jump."""
        idx = np.searchsorted(self.jump_times, s, side="right")
        out = self.delta * idx
        return float(out) if np.ndim(s) == 0 else out

    def interp(self, s):
        """Piecewise-linear interpolant through (jump_times[n], (n+1) delta)."""
        xs = np.concatenate(([0.0], self.jump_times))
        ys = self.delta * np.arange(xs.size)
        out = np.interp(s, xs, ys)
        return float(out) if np.ndim(s) == 0 else out

    def level_time(self, u):
        """First time s at which Y reaches level u (linear inside cells)."""
        xs = np.concatenate(([0.0], self.jump_times))
        ys = self.delta * np.arange(xs.size)
        out = np.interp(u, ys, xs)
        return float(out) if np.ndim(u) == 0 else out

    @property
    def horizon(self) -> float:
        return float(self.jump_times[-1])


def simulate_subordinator(
    params: Params,
    delta: float,
    s_end: float,
    rng: RandomSource,
    max_steps: int = 50_000_000,
    block: int = 8192,
) -> SubordinatorPath:
    """Simulate L on its internal grid until it first exceeds s_end.

    Stable increments have Laplace transform exp(-delta s^alpha); the mixed
    subordinator adds two independently scaled stable increments, matching
    exp(-delta (c1 s^a1 + c2 s^a2)).
    """
    if delta <= 0.0 or s_end <= 0.0:
        raise ParameterError("delta and s_end must be positive")
    chunks = [np.zeros(1)]
    total = 0.0
    n = 0
    while total <= s_end:
        if n >= max_steps:
            raise ResourceLimitError(
                f"subordinator path exceeded {max_steps} steps before reaching {s_end}"
            )
        if _is_mixed(params):
            inc = params.c1 ** (1.0 / params.alpha1) * sample_stable(
                params.alpha1, delta, rng, size=block
            ) + params.c2 ** (1.0 / params.alpha2) * sample_stable(
                params.alpha2, delta, rng, size=block
            )
        else:
            inc = sample_stable(params, delta, rng, size=block)
        vals = total + np.cumsum(inc)
        chunks.append(vals)
        total = float(vals[-1])
        n += block
    values = np.concatenate(chunks)
    stop = int(np.searchsorted(values, s_end, side="right"))
    return SubordinatorPath(params, delta, values[: stop + 1])


def invert_path(path: SubordinatorPath) -> InversePath:
    """Inverse path: jumps of size delta at the simulated subordinator values."""
    return InversePath(path.params, path.delta, path.values[1:])


def simulate_inverse(
    params: Params, delta: float, t_end: float, rng: RandomSource, **kw
) -> InversePath:
    """One-call helper: simulate the subordinator past t_end and invert it."""
    return invert_path(simulate_subordinator(params, delta, t_end, rng, **kw))


# ---------------------------------------------------------------------------
# Analytic renewal functions and covariances


def inverse_mean(params: Params, t) -> float | np.ndarray:
    """Renewal function U(t) = E Y(t).

    Stable: t^alpha / Gamma(1+alpha).  Mixed: the two-parameter
    Mittag-Leffler form t^a2 E_{a2-a1, a2+1}(-(c1/c2) t^(a2-a1)) / c2.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0.0):
        raise ParameterError("time must be nonnegative")
    out = np.zeros_like(ts)
    pos = ts > 0.0
    if _is_mixed(params):
        om = params.alpha2 - params.alpha1
        ml = specfun.mittag_leffler2(
            om, params.alpha2 + 1.0, -(params.c1 / params.c2) * ts[pos] ** om
        )
        out[pos] = ts[pos] ** params.alpha2 * np.atleast_1d(ml) / params.c2
    else:
        out[pos] = ts[pos] ** params / _gamma(1.0 + params)
    return float(out[0]) if np.ndim(t) == 0 else out


def inverse_mean_derivative(params: Params, t) -> float | np.ndarray:
    """Renewal density U'(t), from term-wise differentiation of the series.

    Stable: t^(alpha-1)/Gamma(alpha).  Mixed: the differentiated series sums
    back to t^(a2-1) E_{a2-a1, a2}(-(c1/c2) t^(a2-a1)) / c2.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if _is_mixed(params):
        om = params.alpha2 - params.alpha1
        ml = specfun.mittag_leffler2(om, params.alpha2, -(params.c1 / params.c2) * ts**om)
        out = ts ** (params.alpha2 - 1.0) * np.atleast_1d(ml) / params.c2
    else:
        out = ts ** (params - 1.0) / _gamma(params)
    return float(out[0]) if np.ndim(t) == 0 else out


def inverse_second_moment(params: Params, t) -> float | np.ndarray:
    """E Y(t)^2: 2 t^(2a)/Gamma(1+2a), or the Prabhakar form for the mixture.

    The mixed form 2 t^(2 a2) E^2_{a2-a1, 2 a2 + 1}(-(c1/c2) t^(a2-a1)) / c2^2
    follows from transforming the iterated renewal convolution 2 (U * dU).
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(ts)
    pos = ts > 0.0
    if _is_mixed(params):
        om = params.alpha2 - params.alpha1
        ml = specfun.mittag_leffler3(
            om, 2.0 * params.alpha2 + 1.0, 2.0, -(params.c1 / params.c2) * ts[pos] ** om
        )
        out[pos] = 2.0 * ts[pos] ** (2.0 * params.alpha2) * np.atleast_1d(ml) / params.c2**2
    else:
        out[pos] = 2.0 * ts[pos] ** (2.0 * params) / _gamma(1.0 + 2.0 * params)
    return float(out[0]) if np.ndim(t) == 0 else out


def inverse_cov(alpha: float, t: float, s: float, target: float = 1e-8) -> float:
    """Covariance of the inverse stable subordinator at two times.

    Evaluates the renewal-integral form with the substitution tau = u^(1/a)
    that removes the tau^(a-1) endpoint singularity, minus U(t) U(s).
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if t < 0.0 or s < 0.0:
        raise ParameterError("times must be nonnegative")
    if t == 0.0 or s == 0.0:
        return 0.0
    lo, hi = min(t, s), max(t, s)
    c = 1.0 / (_gamma(1.0 + alpha) * _gamma(alpha))

    def f(u):
        tau = u ** (1.0 / alpha)
        return ((t - tau) ** alpha + (s - tau) ** alpha) / alpha

    val, est = quad(f, 0.0, lo**alpha, epsabs=1e-12, epsrel=1e-11, limit=200)
    if est > target * max(1.0, abs(val)):
        raise QuadratureError(f"inverse_cov quadrature error {est:g} above target")
    return c * val - (t * s) ** alpha / _gamma(1.0 + alpha) ** 2


def mixed_inverse_cov(params: MixedParams, t: float, s: float, target: float = 1e-8) -> float:
    """Covariance of the mixed inverse subordinator via the renewal integral.

    Cov(Y(t), Y(s)) = int_0^min (U(t-tau) + U(s-tau)) dU(tau) - U(t) U(s)
    with dU from the term-wise differentiated renewal series; the
    substitution tau = u^(1/a2) regularizes the tau^(a2-1) factor.
    """
    if t < 0.0 or s < 0.0:
        raise ParameterError("times must be nonnegative")
    if t == 0.0 or s == 0.0:
        return 0.0
    lo = min(t, s)
    a2 = params.alpha2
    om = a2 - params.alpha1
    ratio = params.c1 / params.c2

    def f(u):
        tau = u ** (1.0 / a2)
        ml = specfun.mittag_leffler2(om, a2, -ratio * u ** (om / a2), atol=1e-11)
        return (
            (inverse_mean(params, t - tau) + inverse_mean(params, s - tau))
            * ml
            / (params.c2 * a2)
        )

    val, est = quad(f, 0.0, lo**a2, epsabs=1e-12, epsrel=1e-10, limit=200)
    if est > target * max(1.0, abs(val)):
        raise QuadratureError(f"mixed_inverse_cov quadrature error {est:g} above target")
    return val - inverse_mean(params, t) * inverse_mean(params, s)


def cov(params: Params, t: float, s: float, target: float = 1e-8) -> float:
    """Dispatch to the stable or mixed inverse-subordinator covariance."""
    if _is_mixed(params):
        return mixed_inverse_cov(params, t, s, target=target)
    return inverse_cov(params, t, s, target=target)


# ---------------------------------------------------------------------------
# CSV export


def export_subordinator_csv(path: SubordinatorPath, fh) -> None:
    """Columns t,L: internal grid time and subordinator value."""
    fh.write("t,L\n")
    for n, v in enumerate(path.values):
        fh.write(f"{n * path.delta:.17g},{v:.17g}\n")


def export_inverse_csv(path: InversePath, fh) -> None:
    """Columns s,Y: jump time and post-jump level of the inverse."""
    fh.write("s,Y\n")
    for n, sj in enumerate(path.jump_times, start=1):
        fh.write(f"{sj:.17g},{n * path.delta:.17g}\n")

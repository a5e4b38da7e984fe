"""Fractional, mixed-fractional, and time-changed Poisson processes.

Simulation comes in two exact-in-law flavors: the renewal construction
(partial sums of Mittag-Leffler waiting times) and the time-change
construction (homogeneous Poisson run on the internal scale of a simulated
inverse subordinator).  Distributions come in analytic form through the
Mittag-Leffler family, through Laplace inversion, through the convolution
recurrence with the renewal kernel, and through Monte Carlo, with the
multiple routes cross-validating each other in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as _gamma

import numpy as np
from scipy.special import rgamma as _rgamma

from . import specfun, subordinate
from .fraccalc import talbot
from .sampling import MixedParams, ParameterError, RandomSource, sample_ml_waiting_time
from .subordinate import InversePath, ResourceLimitError

MAX_EVENTS = 10_000_000


@dataclass
class EventTimes:
    """Strictly increasing event times of a simple point process."""

    times: np.ndarray
    horizon: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size and (
            np.any(np.diff(self.times) <= 0.0) or self.times[-1] > self.horizon
        ):
            raise ValueError("event times must strictly increase within the horizon")

    def count_at(self, t):
        """N(t): number of events in [0, t]."""
        out = np.searchsorted(self.times, t, side="right")
        return int(out) if np.ndim(t) == 0 else out

    def export_csv(self, fh) -> None:
        fh.write("t\n")
        for t in self.times:
            fh.write(f"{t:.17g}\n")


@dataclass
class Pmf:
    """Probability mass table k -> p_k with normalization metadata."""

    probs: np.ndarray
    tail_mass: float
    se: np.ndarray | None = None
    issues: list = field(default_factory=list)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        total = float(self.probs.sum()) + self.tail_mass
        if not (self.probs.min() >= -1e-12 and abs(total - 1.0) <= 1e-6):
            raise ValueError(f"pmf fails normalization: sum+tail={total}")

    @property
    def k_max(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    def variance(self) -> float:
        k = np.arange(self.probs.size)
        m = self.mean()
        return float((k - m) ** 2 @ self.probs)

    def export_csv(self, fh) -> None:
        fh.write("k,p\n")
        for k, p in enumerate(self.probs):
            fh.write(f"{k},{p:.17g}\n")


# ---------------------------------------------------------------------------
# Simulation


def simulate_fpp_renewal(
    alpha: float, lam: float, t_end: float, rng: RandomSource, max_events: int = MAX_EVENTS
) -> EventTimes:
    """FPP as a renewal process with Mittag-Leffler waiting times.

    alpha = 1 reduces to the homogeneous Poisson process (exponential waits).
    """
    if lam <= 0.0 or t_end <= 0.0:
        raise ParameterError("lambda and t_end must be positive")
    block = 1024
    total = 0.0
    chunks = []
    n = 0
    while total <= t_end:
        if n >= max_events:
            raise ResourceLimitError(f"event count exceeded {max_events}")
        if alpha == 1.0:
            w = rng.gen.standard_exponential(block) / lam
        else:
            w = sample_ml_waiting_time(alpha, lam, rng, size=block)
        arr = total + np.cumsum(w)
        chunks.append(arr)
        total = float(arr[-1])
        n += block
    times = np.concatenate(chunks)
    return EventTimes(times[times <= t_end], t_end)


def _events_on_inverse(path: InversePath, rate: float, t_end: float, rng: RandomSource,
                       level_of=None, max_events: int = MAX_EVENTS) -> EventTimes:
    """Poisson(rate) arrivals on the internal scale, mapped through a path.

    Arrivals inside one grid cell of the inverse are placed by linear
    interpolation between consecutive jump times, the 1-D analogue of the
    uniform-in-cell placement used for planar fields; ties then have
    probability zero and counts at the jump times are unchanged.
    """
    n_cells = int(path(t_end) / path.delta + 0.5)
    internal_end = n_cells * path.delta if level_of is None else level_of(n_cells * path.delta)
    expected = rate * internal_end
    if expected > max_events:
        raise ResourceLimitError(f"expected event count {expected:.3g} exceeds {max_events}")
    n = int(rng.gen.poisson(expected))
    if n > max_events:
        raise ResourceLimitError(f"event count {n} exceeds {max_events}")
    u = np.sort(rng.gen.uniform(0.0, internal_end, size=n))
    if level_of is None:
        times = path.level_time(u)
    else:
        # u lives on the transformed level scale; invert the composition
        grid_levels = level_of(path.delta * np.arange(n_cells + 1))
        cell = np.searchsorted(grid_levels, u, side="left")
        cell = np.clip(cell, 1, n_cells)
        lo, hi = grid_levels[cell - 1], grid_levels[cell]
        s_lo = np.concatenate(([0.0], path.jump_times))[cell - 1]
        s_hi = np.concatenate(([0.0], path.jump_times))[cell]
        frac = np.where(hi > lo, (u - lo) / np.where(hi > lo, hi - lo, 1.0), 1.0)
        times = s_lo + frac * (s_hi - s_lo)
    times = times[(times > 0.0) & (times <= t_end)]
    return EventTimes(np.unique(times), t_end)


def simulate_fpp_timechange(
    alpha: float,
    lam: float,
    t_end: float,
    rng: RandomSource,
    delta: float = 5e-4,
) -> tuple[EventTimes, InversePath]:
    """FPP as N(Y_alpha(t)): simulate the inverse path, then Poisson on it."""
    if lam <= 0.0 or t_end <= 0.0:
        raise ParameterError("lambda and t_end must be positive")
    path = subordinate.simulate_inverse(alpha, delta, t_end, rng)
    events = _events_on_inverse(path, lam, t_end, rng)
    return events, path


def simulate_mfpp(
    params: MixedParams,
    lam: float,
    t_end: float,
    rng: RandomSource,
    delta: float = 5e-4,
    return_path: bool = False,
):
    """Mixed-fractional Poisson process N(Y_{a1,a2}(t)) on a simulated path."""
    if lam <= 0.0 or t_end <= 0.0:
        raise ParameterError("lambda and t_end must be positive")
    path = subordinate.simulate_inverse(params, delta, t_end, rng)
    events = _events_on_inverse(path, lam, t_end, rng)
    return (events, path) if return_path else events


@dataclass
class ConsistentFunction:
    """Monotone table t -> L(t) with L(0) = 0 and jump sizes at most 1.

    interp "linear" joins the knots continuously; "right" evaluates as a
    right-continuous step function, in which case consecutive value
    increments are the jumps and must not exceed 1.
    """

    ts: np.ndarray
    values: np.ndarray
    interp: str = "linear"

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.ts[0] != 0.0 or self.values[0] != 0.0:
            raise ParameterError("consistent function must start at (0, 0)")
        if np.any(np.diff(self.ts) <= 0.0) or np.any(np.diff(self.values) < 0.0):
            raise ParameterError("consistent function must be nondecreasing")
        if self.interp == "right" and np.any(np.diff(self.values) > 1.0 + 1e-12):
            raise ParameterError("consistent function jumps must not exceed 1")
        if self.interp not in ("linear", "right"):
            raise ParameterError(f"unknown interpolation rule {self.interp!r}")

    def __call__(self, t):
        if self.interp == "linear":
            out = np.interp(t, self.ts, self.values)
        else:
            idx = np.clip(np.searchsorted(self.ts, t, side="right") - 1, 0, self.ts.size - 1)
            out = self.values[idx]
        return float(out) if np.ndim(t) == 0 else out

    @classmethod
    def linear_rate(cls, lam: float, horizon: float) -> "ConsistentFunction":
        return cls(np.array([0.0, horizon]), np.array([0.0, lam * horizon]))


def apply_consistent_time_change(
    inner: ConsistentFunction, path: InversePath, rng: RandomSource
) -> EventTimes:
    """Simulate N(L(Y(t))) with a unit-rate N through a consistent L.

    L(t) = lam * t reproduces the mixed-fractional process with intensity
    lam; L identically 0 produces the empty process.
    """
    t_end = path.horizon
    return _events_on_inverse(path, 1.0, t_end, rng, level_of=inner)


# ---------------------------------------------------------------------------
# Distributions


def fpp_pmf_values(alpha: float, lam: float, ts, k: int, atol: float = 1e-9):
    """p_k(t) = (lam t^a)^k E^{k+1}_{a, ak+1}(-lam t^a), vectorized over t."""
    scalar = np.ndim(ts) == 0
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    y = lam * ts**alpha
    ml = specfun.mittag_leffler3(alpha, alpha * k + 1.0, k + 1.0, -y, atol=atol)
    with np.errstate(over="ignore"):
        out = y**k * np.atleast_1d(ml)
        if k > 0:
            out[ts == 0.0] = 0.0
    return float(out[0]) if scalar else out


def fpp_pmf(alpha: float, lam: float, t: float, k_max: int, atol: float = 1e-9) -> Pmf:
    """Analytic FPP pmf table through the three-parameter Mittag-Leffler form.

    Per-k accuracy failures are recorded in `issues` rather than silently
    degraded; such entries carry NaN.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if lam <= 0.0 or t < 0.0 or k_max < 0:
        raise ParameterError("need lam > 0, t >= 0, k_max >= 0")
    probs = np.empty(k_max + 1)
    issues = []
    for k in range(k_max + 1):
        try:
            probs[k] = fpp_pmf_values(alpha, lam, t, k, atol=atol)
        except specfun.AccuracyError as exc:
            probs[k] = np.nan
            issues.append({"k": k, "error": str(exc)})
    if issues:
        raise specfun.AccuracyError(
            f"fpp_pmf series degraded at k={[i['k'] for i in issues]}"
        )
    return Pmf(probs, tail_mass=1.0 - float(probs.sum()), issues=issues)


def fpp_mean(alpha: float, lam: float, t: float) -> float:
    return lam * t**alpha / _gamma(1.0 + alpha)


def fpp_variance(alpha: float, lam: float, t: float) -> float:
    bracket = 2.0 / _gamma(1.0 + 2.0 * alpha) - 1.0 / _gamma(1.0 + alpha) ** 2
    return lam**2 * t ** (2.0 * alpha) * bracket + fpp_mean(alpha, lam, t)


def fpp_moments(alpha: float, lam: float, t: float, s: float | None = None):
    """Mean/variance at t and, when s is given, Cov(N(t), N(s)).

    The covariance combines the Poisson part lam * U(min(t, s)) with the
    lam^2-weighted covariance of the inverse subordinator.
    """
    from .stats import MomentReport

    mean = fpp_mean(alpha, lam, t)
    var = fpp_variance(alpha, lam, t)
    covs = {}
    if s is not None:
        covs[(t, s)] = lam * fpp_mean(alpha, 1.0, min(t, s)) + lam**2 * subordinate.inverse_cov(
            alpha, t, s
        )
    return MomentReport(mean=mean, variance=var, covariance=covs, n="analytic")


def fpp_hurst(alpha: float) -> float:
    """Hurst index of the FPP: the variance grows like t^(2 alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def hurst_from_variance_growth(var_fn, ts) -> float:
    """Demonstration estimator: half the log-log regression slope of Var."""
    ts = np.asarray(ts, dtype=float)
    vs = np.array([var_fn(t) for t in ts])
    slope = np.polyfit(np.log(ts), np.log(vs), 1)[0]
    return 0.5 * slope


# ---------------------------------------------------------------------------
# Mixed-fractional distributions


def _mfpp_transform(params: MixedParams, lam: float, k: int):
    def transform(s):
        phi = params.phi(s)
        return lam**k * (phi / s) / (lam + phi) ** (k + 1)

    return transform


def mfpp_p0_values(
    params: MixedParams, lam: float, ts, atol: float = 1e-10, max_terms: int = 80
) -> np.ndarray:
    """Vectorized empty-probability series of the MFPP; raises on divergence."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    om = params.alpha2 - params.alpha1
    a2 = params.alpha2
    out = np.ones_like(ts)
    pos = ts > 0.0
    tp = ts[pos]
    x = -(params.c1 / params.c2) * tp**om
    y = -(lam / params.c2) * tp**a2
    total = np.zeros_like(tp)
    xpow = np.ones_like(tp)
    for r in range(max_terms):
        t1 = xpow * np.atleast_1d(specfun.mittag_leffler3(a2, om * r + 1.0, r + 1.0, y, atol=atol))
        t2 = (
            xpow
            * x
            * np.atleast_1d(specfun.mittag_leffler3(a2, om * (r + 1) + 1.0, r + 1.0, y, atol=atol))
        )
        term = t1 - t2
        total += term
        xpow = xpow * x
        if r >= 1 and np.all(np.abs(term) < 1e-14 * np.maximum(np.abs(total), 1e-30)):
            break
    else:
        raise specfun.AccuracyError(f"mfpp p0 series did not settle in {max_terms} terms")
    out[pos] = total
    return out


def mfpp_p0(
    params: MixedParams,
    lam: float,
    t: float,
    atol: float = 1e-10,
    max_terms: int = 80,
    return_info: bool = False,
):
    """Empty probability of the MFPP from its double Mittag-Leffler series.

    Outer terms stop when the term ratio drops below 1e-14; if the series
    has not settled within max_terms the Talbot inversion of the transform
    (c1 s^(a1-1) + c2 s^(a2-1)) / (lam + c1 s^a1 + c2 s^a2) takes over and
    the result is flagged accordingly.
    """
    if t < 0.0:
        raise ParameterError("t must be nonnegative")
    if t == 0.0:
        return (1.0, {"method": "series"}) if return_info else 1.0
    try:
        val = float(mfpp_p0_values(params, lam, t, atol=atol, max_terms=max_terms)[0])
        return (val, {"method": "series"}) if return_info else val
    except specfun.AccuracyError:
        pass
    val = float(talbot(_mfpp_transform(params, lam, 0), t))
    info = {"method": "talbot-fallback"}
    return (val, info) if return_info else val


def _mfpp_pmf_talbot(params, lam, t, k_max) -> Pmf:
    probs = np.array(
        [float(talbot(_mfpp_transform(params, lam, k), t)) for k in range(k_max + 1)]
    )
    probs = np.clip(probs, 0.0, 1.0)
    return Pmf(probs, tail_mass=1.0 - float(probs.sum()))


def renewal_kernel_values(params: MixedParams, lam: float, zs, atol: float = 1e-9):
    """Interarrival kernel g(z) = lam z^(a2-1) sum_r (...) E^{r+1}(...)/c2.

    This is the inverse transform of lam / (lam + c1 s^a1 + c2 s^a2), the
    Laplace-domain factor linking consecutive pmf entries.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    om = params.alpha2 - params.alpha1
    a2 = params.alpha2
    x = -(params.c1 / params.c2) * zs**om
    y = -(lam / params.c2) * zs**a2
    total = np.zeros_like(zs)
    xpow = np.ones_like(zs)
    for r in range(120):
        term = xpow * specfun.mittag_leffler3(a2, a2 + om * r, r + 1.0, y, atol=atol)
        total += term
        xpow = xpow * x
        if np.all(np.abs(term) <= 1e-15 * np.maximum(np.abs(total), 1e-30)) and r >= 1:
            break
    else:
        raise specfun.AccuracyError("renewal kernel series did not settle in 120 terms")
    return (lam / params.c2) * zs ** (a2 - 1.0) * total


def _kernel_cell_integrals(params, lam, t: float, m: int, atol: float = 1e-9):
    """Exact cell integrals of g and of z*g(z) on a uniform grid over [0, t].

    Both antiderivatives are plain double power series in z (exponents
    a2 (j+1) + (a2-a1) r), so the values at the grid points come from the
    same series with shifted denominators; this keeps the convolution
    quadrature exact for the singular kernel factor z^(a2-1).
    """
    om = params.alpha2 - params.alpha1
    a2 = params.alpha2
    c2 = params.c2
    zs = np.linspace(0.0, t, m + 1)
    i0 = np.zeros_like(zs)
    i1 = np.zeros_like(zs)
    zpos = zs[1:]
    xr = np.ones_like(zpos)
    x = -(params.c1 / c2) * zpos**om
    y = -(lam / c2) * zpos**a2
    for r in range(160):
        # inner Prabhakar series with the antiderivative denominators
        theta0 = a2 + om * r
        j = 0
        poch = 1.0
        ypow = np.ones_like(zpos)
        s0 = np.zeros_like(zpos)
        s1 = np.zeros_like(zpos)
        while True:
            expo = a2 * (j + 1) + om * r
            coef = poch * _rgamma(expo) / expo
            s0 += ypow * coef
            s1 += ypow * coef * expo / (expo + 1.0)
            j += 1
            poch *= (r + 1.0 + j - 1.0) / j
            ypow = ypow * y
            term_scale = np.max(np.abs(ypow)) * poch * abs(_rgamma(a2 * (j + 1) + om * r))
            if term_scale <= 1e-16 * max(np.max(np.abs(s0)), 1e-30) and j > 2:
                break
            if j > 600:
                raise specfun.AccuracyError("kernel cell integral series stalled")
        add0 = xr * zpos**a2 * s0
        add1 = xr * zpos ** (a2 + 1.0) * s1
        i0[1:] += add0
        i1[1:] += add1
        xr = xr * x
        if np.all(np.abs(add0) <= 1e-15 * np.maximum(np.abs(i0[1:]), 1e-30)) and r >= 1:
            break
    else:
        raise specfun.AccuracyError("kernel cell integral outer series stalled")
    i0 *= lam / c2
    i1 *= lam / c2
    a_cells = np.diff(i0)
    b_cells = np.diff(i1)
    return zs, a_cells, b_cells


def _mfpp_pmf_convolution(params, lam, t, k_max, m: int = 2048) -> Pmf:
    """Convolution recurrence p_k = int_0^t p_{k-1}(t - z) g(z) dz on a grid.

    p_0 comes from the Mittag-Leffler double series; each recurrence level
    is a product-integration convolution with exact cell moments of the
    kernel against a piecewise-linear interpolant of p_{k-1}.
    """
    zs, a_cells, b_cells = _kernel_cell_integrals(params, lam, t, m)
    h = t / m
    p_prev = mfpp_p0_values(params, lam, zs)
    probs = [float(p_prev[-1])]
    # weights for value-at-left-node and slope contributions per cell
    w_left = a_cells
    w_slope = b_cells - zs[:-1] * a_cells
    for _ in range(k_max):
        p_next = np.zeros_like(p_prev)
        rev = p_prev[::-1]
        for i in range(1, m + 1):
            seg = rev[m - i : m + 1 - 0][: i + 1]
            # p_{k-1}(t_i - z) sampled at z-grid nodes 0..i
            vals = seg[: i + 1]
            left = vals[:i]
            slope = (vals[1:] - vals[:i]) / h
            p_next[i] = float(left @ w_left[:i] + slope @ w_slope[:i])
        p_prev = p_next
        probs.append(float(p_prev[-1]))
    probs = np.clip(np.array(probs), 0.0, 1.0)
    return Pmf(probs, tail_mass=1.0 - float(probs.sum()))


def _mfpp_pmf_montecarlo(params, lam, t, k_max, n_mc, rng, delta) -> Pmf:
    """Average the conditional Poisson pmf over simulated inverse draws."""
    draws = np.empty(n_mc)
    for i in range(n_mc):
        path = subordinate.simulate_inverse(params, delta, t, rng.substream(i))
        draws[i] = path(t)
    k = np.arange(k_max + 1)
    log_w = (
        k[None, :] * np.log(np.maximum(lam * draws[:, None], 1e-300))
        - lam * draws[:, None]
        - np.cumsum(np.concatenate(([0.0], np.log(np.maximum(k[1:], 1)))))[None, :]
    )
    w = np.exp(log_w)
    probs = w.mean(axis=0)
    se = w.std(axis=0, ddof=1) / np.sqrt(n_mc)
    return Pmf(probs, tail_mass=1.0 - float(probs.sum()), se=se)


def mfpp_pmf(
    params: MixedParams,
    lam: float,
    t: float,
    k_max: int,
    method: str = "series",
    n_mc: int = 10_000,
    rng: RandomSource | None = None,
    delta: float = 5e-4,
) -> Pmf:
    """MFPP pmf by one of three routes.

    "series" inverts the per-k Laplace transforms on the Talbot contour
    (realizing the inverse-transform series), "convolution" runs the renewal
    recurrence against the kernel g, "montecarlo" averages conditional
    Poisson masses over simulated inverse-subordinator draws.
    """
    if t < 0.0 or k_max < 0 or lam <= 0.0:
        raise ParameterError("need t >= 0, k_max >= 0, lam > 0")
    if method in ("series", "talbot", "laplace"):
        return _mfpp_pmf_talbot(params, lam, t, k_max)
    if method == "convolution":
        return _mfpp_pmf_convolution(params, lam, t, k_max)
    if method in ("montecarlo", "mc"):
        if rng is None:
            raise ParameterError("montecarlo method requires rng")
        return _mfpp_pmf_montecarlo(params, lam, t, k_max, n_mc, rng, delta)
    raise ParameterError(f"unknown pmf method {method!r}")


def mfpp_moments(params: MixedParams, lam: float, t: float, s: float | None = None):
    """Moments of the MFPP from the renewal function and its covariance.

    Var N(t) = lam^2 Var Y(t) + lam U(t), consistent with the covariance
    display evaluated at t = s (the renewal-integral route).
    """
    from .stats import MomentReport

    u_t = subordinate.inverse_mean(params, t)
    mean = lam * u_t
    var_y = subordinate.inverse_second_moment(params, t) - u_t**2
    var = lam**2 * var_y + lam * u_t
    covs = {}
    if s is not None:
        covs[(t, s)] = lam * subordinate.inverse_mean(params, min(t, s)) + lam**2 * (
            subordinate.mixed_inverse_cov(params, t, s)
        )
    return MomentReport(mean=mean, variance=var, covariance=covs, n="analytic")

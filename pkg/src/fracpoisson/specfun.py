"""Mittag-Leffler family, Wright function, and stable-law densities.

All evaluators are real-argument, float64, and deliberately two-regime:
a Taylor series with running cancellation tracking, plus a regime that takes
over where the series loses accuracy (an optimally truncated algebraic
expansion for the Mittag-Leffler functions at large negative argument, and
an exact single-integral representation for the one-sided stable density at
small argument).  Every function either meets the requested absolute
tolerance or raises :class:`AccuracyError`; nothing is silently degraded.

Functions accept scalars or numpy arrays in the main argument and are pure,
so they are safe for concurrent use.
"""

from __future__ import annotations

from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy.integrate import quad
from scipy.special import rgamma

_EPS = np.finfo(float).eps
_LD = np.longdouble
_EPS_LD = float(np.finfo(_LD).eps)


class AccuracyError(ArithmeticError):
    """Requested tolerance is not attainable in any implemented regime."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the function."""


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


# ---------------------------------------------------------------------------
# Mittag-Leffler: one- and two-parameter forms share one code path


@lru_cache(maxsize=256)
def _rgamma_ladder(alpha: float, beta: float, n: int) -> np.ndarray:
    """Reciprocal-gamma coefficients 1/Gamma(alpha k + beta), k = 0..n-1.

    Tabulated once per (alpha, beta) through mpmath and stored in extended
    precision; the series terms are then formed to ~1e-19 relative error,
    which is what limits the attainable accuracy of the cancelling sums.
    """
    with mp.workdps(30):
        a, b = mp.mpf(alpha), mp.mpf(beta)
        vals = [mp.rgamma(a * k + b) for k in range(n)]
    return np.array([_LD(mp.nstr(v, 25)) for v in vals], dtype=_LD)


def _ml2_series(alpha: float, beta: float, z: np.ndarray, max_terms: int = 320):
    """Taylor series of E_{alpha,beta}; returns (values, error estimates).

    Evaluated in extended precision with tabulated coefficients; the error
    estimate 3 * eps_ld * sum |term| tracks the term-formation rounding under
    cancellation.  Entries not converged within max_terms get an infinite
    estimate.
    """
    coef = _rgamma_ladder(alpha, beta, max_terms + 1)
    zl = z.astype(_LD)
    total = np.full(z.shape, coef[0], dtype=_LD)
    zpow = np.ones_like(zl)
    sum_abs = np.abs(total).copy()
    converged = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, max_terms + 1):
            zpow = zpow * zl
            term = zpow * coef[k]
            total += term
            sum_abs += np.abs(term)
            converged |= np.abs(term) <= 1e-20 * np.abs(total)
            if converged.all() and k >= 2:
                break
            if not np.all(np.isfinite(zpow)):
                # overflowed entries can never converge; freeze them
                blown = ~np.isfinite(zpow)
                zpow[blown] = 0.0
                total[blown] = np.nan
                sum_abs[blown] = np.inf
    with np.errstate(over="ignore"):
        err = 3.0 * _EPS_LD * sum_abs.astype(float)
        out = total.astype(float)
    err[~converged] = np.inf
    return out, err


def _ml2_asymptotic(alpha: float, beta: float, z: np.ndarray, max_terms: int = 128):
    """Algebraic expansion E_{alpha,beta}(z) ~ -sum z^-k / Gamma(beta-alpha k).

    Valid for z -> -inf with 0 < alpha <= 1; truncated at the smallest term.
    The error estimate combines the optimal-truncation term with, for
    alpha > 0.82, the magnitude of the exponentially small saddle
    contribution (2/alpha) exp(x^(1/a) cos(pi/a)) that the algebraic series
    cannot see but which is numerically visible at moderate x.
    """
    total = np.zeros(z.shape)
    err = np.full(z.shape, np.inf)
    active = z < 0
    best = np.full(z.shape, np.inf)
    zinv = np.zeros_like(z)
    zinv[active] = 1.0 / z[active]
    zk = np.ones_like(z)
    for k in range(1, max_terms + 1):
        zk = zk * zinv
        arg = beta - alpha * k
        # snap float-rounded pole hits to the exact zero of 1/Gamma, else a
        # spurious ~1e-16 coefficient derails the optimal truncation
        coef = 0.0 if arg < 0.5 and abs(arg - round(arg)) < 1e-7 else rgamma(arg)
        term = -zk * coef
        mag = np.abs(term)
        growing = active & (coef != 0.0) & (mag > best)
        err[growing] = np.minimum(err[growing], best[growing])
        active &= ~growing
        total[active] += term[active]
        nz = active & (coef != 0.0)
        best[nz] = np.minimum(best[nz], mag[nz])
        done = nz & (mag < 1e-18)
        err[done] = np.minimum(err[done], mag[done] + _EPS * np.abs(total[done]))
        active &= ~done
        if not active.any():
            break
    err[active] = np.minimum(err[active], best[active])
    err = 6.0 * err
    if alpha > 0.82:
        with np.errstate(over="ignore"):
            w = np.abs(z) ** (1.0 / alpha)
            saddle = (2.0 / alpha) * np.exp(w * np.cos(np.pi / alpha))
        err = err + np.where(z < 0, saddle, 0.0)
    return total, err


def _ml2(alpha: float, beta: float, z, atol: float):
    # tolerance is absolute, relaxed to relative for values exceeding 1
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    vals, err = _ml2_series(alpha, beta, zarr)

    def ok(v, e):
        return np.isfinite(v) & (e <= atol * np.maximum(1.0, np.abs(v)))

    bad = ~ok(vals, err)
    if np.any(bad & (zarr > 0.0)):
        # positive arguments never cancel, only need more terms
        sel = bad & (zarr > 0.0)
        lv, le = _ml2_series(alpha, beta, zarr[sel], max_terms=4000)
        vals[sel], err[sel] = lv, le
        bad = ~ok(vals, err)
    if np.any(bad & (zarr < 0.0)):
        sel = bad & (zarr < 0.0)
        av, ae = _ml2_asymptotic(alpha, beta, zarr[sel])
        use = ae < err[sel]
        sub_v, sub_e = vals[sel], err[sel]
        sub_v[use] = av[use]
        sub_e[use] = ae[use]
        vals[sel], err[sel] = sub_v, sub_e
        bad = ~ok(vals, err)
    if bad.any():
        rel_err = err / np.maximum(1.0, np.abs(vals))
        worst = zarr[np.nanargmax(np.where(bad, rel_err, -np.inf))]
        raise AccuracyError(
            f"E_({alpha},{beta}) not attainable to atol={atol:g} "
            f"(worst z={worst:g}, err~{np.nanmax(rel_err):.2g})"
        )
    return vals


def mittag_leffler2(alpha: float, beta: float, z, atol: float = 1e-10):
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z), real z.

    Series for moderate |z|; optimally truncated algebraic expansion for
    large negative z.  Raises AccuracyError if neither regime attains atol.
    """
    _check(alpha > 0.0, f"alpha must be positive, got {alpha}")
    _check(beta > 0.0, f"beta must be positive, got {beta}")
    vals = _ml2(alpha, beta, z, atol)
    return float(vals[0]) if np.ndim(z) == 0 else vals


def mittag_leffler(alpha: float, z, atol: float = 1e-10):
    """Mittag-Leffler function E_alpha(z) = E_{alpha,1}(z)."""
    return mittag_leffler2(alpha, 1.0, z, atol=atol)


def mittag_leffler3(alpha: float, beta: float, gamma: float, z, atol: float = 1e-10):
    """Three-parameter (Prabhakar) Mittag-Leffler function E^gamma_{alpha,beta}(z).

    Series with dynamic truncation and cancellation tracking; gamma = 1
    delegates to the two-parameter code path.  For arguments beyond the
    series-stable region an AccuracyError reports the attained error instead
    of silently returning a degraded value.
    """
    _check(alpha > 0.0, f"alpha must be positive, got {alpha}")
    _check(beta > 0.0, f"beta must be positive, got {beta}")
    _check(gamma > 0.0, f"gamma must be positive, got {gamma}")
    if gamma == 1.0:
        return mittag_leffler2(alpha, beta, z, atol=atol)
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    total, err = _ml3_series(alpha, beta, gamma, zarr)
    scale = np.maximum(1.0, np.abs(total))
    if np.any(err > atol * scale):
        worst = zarr[np.argmax(err / scale)]
        raise AccuracyError(
            f"E^{gamma}_({alpha},{beta}) series degraded beyond atol={atol:g} "
            f"(worst z={worst:g}, err~{err.max():.2g})"
        )
    return float(total[0]) if np.ndim(z) == 0 else total


def _ml3_series(alpha: float, beta: float, gamma: float, zarr: np.ndarray, block: int = 320):
    """Prabhakar series with Pochhammer recurrence in extended precision."""
    zl = zarr.astype(_LD)
    coef = _rgamma_ladder(alpha, beta, block + 1)
    total = np.full(zarr.shape, coef[0], dtype=_LD)
    zpow = np.ones_like(zl)
    poch = _LD(1.0)
    sum_abs = np.abs(total).copy()
    quiet = np.zeros(zarr.shape, dtype=int)
    converged = False
    max_terms = 4000
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(1, max_terms + 1):
            if j > block:
                block = 2 * block
                coef = _rgamma_ladder(alpha, beta, block + 1)
            poch = poch * _LD(gamma + j - 1) / _LD(j)
            zpow = zpow * zl
            term = poch * zpow * coef[j]
            total += term
            sum_abs += np.abs(term)
            quiet = np.where(np.abs(term) <= 1e-20 * np.abs(total), quiet + 1, 0)
            if (quiet >= 2).all():
                converged = True
                break
            if not np.all(np.isfinite(term)):
                blown = ~np.isfinite(term)
                zpow[blown] = 0.0
                total[blown] = np.nan
                sum_abs[blown] = np.inf
    with np.errstate(over="ignore"):
        err = 3.0 * _EPS_LD * sum_abs.astype(float)
        out = total.astype(float)
    if not converged:
        err[:] = np.inf
    return out, err


# ---------------------------------------------------------------------------
# Wright function and stable densities


def _wright_series(gamma_w: float, beta: float, z: np.ndarray, max_terms: int = 600):
    coef = _rgamma_ladder(gamma_w, beta, max_terms + 1)
    zl = z.astype(_LD)
    total = np.full(z.shape, coef[0], dtype=_LD)
    fact = np.ones_like(zl)
    sum_abs = np.abs(total).copy()
    quiet = np.zeros(z.shape, dtype=int)
    converged = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, max_terms + 1):
            fact = fact * zl / _LD(k)
            term = fact * coef[k]
            total += term
            sum_abs += np.abs(term)
            if k > np.max(np.abs(z)):
                # two consecutive tiny terms: a lone zero (1/Gamma pole) must
                # not be mistaken for convergence
                quiet = np.where(
                    np.abs(term) <= 1e-20 * np.maximum(np.abs(total), _LD(1e-300)),
                    quiet + 1,
                    0,
                )
                converged |= quiet >= 2
                if converged.all():
                    break
    with np.errstate(over="ignore"):
        err = 3.0 * _EPS_LD * sum_abs.astype(float)
        out = total.astype(float)
    err[~converged] = np.inf
    return out, err


def wright(gamma_w: float, beta: float, z, atol: float = 1e-10):
    """Wright generalized Bessel function W_{gamma,beta}(z), gamma > -1.

    Series terms whose Gamma argument hits a nonpositive integer contribute
    zero (reciprocal-Gamma convention), which is what the stable-density
    kernel W_{-alpha,0} requires.
    """
    _check(gamma_w > -1.0, f"wright requires gamma > -1, got {gamma_w}")
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    vals, err = _wright_series(gamma_w, beta, zarr)
    if np.any(err > atol):
        worst = zarr[np.argmax(err)]
        raise AccuracyError(
            f"W_({gamma_w},{beta}) series degraded beyond atol={atol:g} (worst z={worst:g})"
        )
    return float(vals[0]) if np.ndim(z) == 0 else vals


def _stable_integrand_scale(alpha: float):
    return alpha / (1.0 - alpha)


def _kanter_a(alpha: float, phi: np.ndarray) -> np.ndarray:
    return (
        np.sin(alpha * phi) ** (alpha / (1.0 - alpha))
        * np.sin((1.0 - alpha) * phi)
        * np.sin(phi) ** (-1.0 / (1.0 - alpha))
    )


def _stable_density_integral(alpha: float, x: float) -> float:
    """Exact single-integral form of the unit one-sided stable density.

    g_alpha(x) = a/((1-a-..)..) -- concretely
    (alpha/(1-alpha)) * x^(-1/(1-alpha)) / pi * int_0^pi A(phi) exp(-x^-a A(phi)) dphi
    with a = alpha/(1-alpha) and A the Kanter integrand.  Positive integrand,
    no cancellation; used where the Wright series loses precision (small x).
    """
    a = _stable_integrand_scale(alpha)
    xa = x ** (-a)

    def f(phi):
        big = _kanter_a(alpha, np.asarray(phi))
        return big * np.exp(-xa * big)

    val, est = quad(f, 0.0, np.pi, epsabs=1e-14, epsrel=1e-11, limit=200)
    return a / (np.pi * x ** (1.0 + a)) * val


def stable_density(alpha: float, x, atol: float = 1e-10):
    """Density g_alpha of the unit one-sided stable law, E e^{-s S} = e^{-s^a}.

    Wright-series form g(x) = W_{-alpha,0}(-x^-alpha) / x where the series is
    stable; the exact Kanter-type integral takes over at small x where the
    series cancels catastrophically.  Nonnegative by construction.
    """
    _check(0.0 < alpha < 1.0, f"alpha must lie in (0,1), got {alpha}")
    xarr = np.atleast_1d(np.asarray(x, dtype=float))
    _check(bool(np.all(xarr > 0.0)), "stable_density requires x > 0")
    z = -(xarr ** (-alpha))
    vals, err = _wright_series(-alpha, 0.0, z)
    vals = vals / xarr
    err = err / xarr
    bad = np.where(err > atol)[0]
    for idx in bad:
        vals[idx] = _stable_density_integral(alpha, float(xarr[idx]))
    vals = np.maximum(vals, 0.0)
    return float(vals[0]) if np.ndim(x) == 0 else vals


def inverse_stable_density(alpha: float, t: float, x, atol: float = 1e-10):
    """Density f_alpha(t, x) of the inverse stable subordinator at time t.

    f_alpha(t,x) = (t/alpha) x^(-1-1/alpha) g_alpha(t x^(-1/alpha)), t,x > 0.
    """
    _check(0.0 < alpha < 1.0, f"alpha must lie in (0,1), got {alpha}")
    _check(t > 0.0, f"inverse_stable_density requires t > 0, got {t}")
    xarr = np.atleast_1d(np.asarray(x, dtype=float))
    _check(bool(np.all(xarr > 0.0)), "inverse_stable_density requires x > 0")
    y = t * xarr ** (-1.0 / alpha)
    g = stable_density(alpha, y, atol=atol)
    vals = (t / alpha) * xarr ** (-1.0 - 1.0 / alpha) * np.atleast_1d(g)
    return float(vals[0]) if np.ndim(x) == 0 else vals


def mixed_inverse_density(params, t: float, x: float, m: int = 48) -> float:
    """Density of the inverse of the mixed stable subordinator at time t.

    Obtained by Talbot inversion (in t) of the transform phi(s)/s *
    exp(-x phi(s)) with phi the mixed Laplace exponent; the value is clipped
    at zero, consistent with the inversion tolerance.
    """
    from .fraccalc import laplace_invert

    _check(t > 0.0, f"mixed_inverse_density requires t > 0, got {t}")
    _check(x >= 0.0, f"mixed_inverse_density requires x >= 0, got {x}")

    def transform(s):
        phi = params.phi(s)
        return phi / s * np.exp(-x * phi)

    val = laplace_invert(transform, t, method="talbot", m=m)
    return max(float(val), 0.0)

"""Monte Carlo estimators and statistical validation tests.

All estimators consume explicit RandomSource streams and chunk work by
sample index, so results are byte-identical no matter how many workers
execute the chunks.  Test helpers wrap scipy's KS and chi-square machinery
with deterministic tail pooling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .sampling import RandomSource

DEFAULT_CHUNK = 4096


@dataclass
class MomentReport:
    """Mean / variance / covariance values, analytic or Monte Carlo.

    Standard errors are present exactly when the report comes from a finite
    sample (n is an integer); covariance entries are keyed by the time pairs
    they refer to.
    """

    mean: float
    variance: float
    covariance: dict = field(default_factory=dict)
    se: dict = field(default_factory=dict)
    n: int | str = "analytic"

    def __post_init__(self):
        if self.variance < -1e-12:
            raise ValueError("variance must be nonnegative")
        if self.n == "analytic" and self.se:
            raise ValueError("analytic reports carry no standard errors")

    def to_json_dict(self) -> dict:
        out = {
            "mean": self.mean,
            "var": self.variance,
            "cov": {repr(k): v for k, v in self.covariance.items()},
            "n": self.n,
        }
        if self.se:
            out["se"] = {str(k): v for k, v in self.se.items()}
        return out


@dataclass
class TestResult:
    """Outcome of one statistical test at a configured level."""

    name: str
    statistic: float
    p_value: float | None
    n: int
    level: float = 0.01
    passed: bool | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(self.p_value is None or self.p_value > self.level)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "p": self.p_value,
            "pass": bool(self.passed),
            "seed": self.seed,
        }


class InsufficientDataError(ValueError):
    """Too few samples (or too-sparse bins) for an asymptotic test."""


def chunked_samples(sampler, n: int, rng: RandomSource, chunk: int = DEFAULT_CHUNK, jobs: int = 1):
    """Draw n samples in index-chunked substreams, combined in chunk order.

    `sampler(source, size)` must return an array of that many draws.  The
    chunk layout (not the worker count) fixes the substream assignment, so
    any jobs value reproduces identical output.
    """
    starts = list(range(0, n, chunk))
    sizes = [min(chunk, n - s) for s in starts]

    def run(i: int):
        return np.asarray(sampler(rng.substream(i), sizes[i]))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, range(len(starts))))
    else:
        parts = [run(i) for i in range(len(starts))]
    return np.concatenate(parts, axis=0)


def mc_moments(
    sampler,
    n: int,
    rng: RandomSource,
    chunk: int = DEFAULT_CHUNK,
    jobs: int = 1,
) -> MomentReport:
    """Sample mean/variance (and covariances for vector samplers) with SEs.

    The sampler returns either (size,) scalars or (size, d) joint draws; in
    the joint case the report's covariance holds the off-diagonal entries
    keyed by the component index pair.  Plug-in standard errors use fourth
    moments (delta method).
    """
    if n < 2:
        raise InsufficientDataError("need at least 2 samples")
    x = chunked_samples(sampler, n, rng, chunk=chunk, jobs=jobs)
    if x.ndim == 1:
        x = x[:, None]
    mean = x.mean(axis=0)
    center = x - mean
    var = center.var(axis=0, ddof=1)
    se_mean = np.sqrt(var / n)
    m4 = (center**4).mean(axis=0)
    se_var = np.sqrt(np.maximum(m4 - var**2, 0.0) / n)
    covs, ses = {}, {}
    d = x.shape[1]
    for i in range(d):
        for j in range(i + 1, d):
            prod = center[:, i] * center[:, j]
            covs[(i, j)] = float(prod.mean() * n / (n - 1))
            ses[(i, j)] = float(prod.std(ddof=1) / np.sqrt(n))
    report = MomentReport(
        mean=float(mean[0]) if d == 1 else mean,
        variance=float(var[0]) if d == 1 else var,
        covariance=covs,
        se={"mean": se_mean if d > 1 else float(se_mean[0]),
            "var": se_var if d > 1 else float(se_var[0]), **ses},
        n=n,
    )
    return report


# ---------------------------------------------------------------------------
# Goodness-of-fit tests


def ks_test(samples, cdf, name: str = "ks", level: float = 0.01, seed=None) -> TestResult:
    """One-sample Kolmogorov-Smirnov test against a continuous CDF."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 100:
        raise InsufficientDataError("ks_test needs at least 100 samples")
    stat, p = sps.kstest(samples, cdf)
    return TestResult(name, float(stat), float(p), samples.size, level, seed=seed)


def ks_two_sample(x, y, name: str = "ks2", level: float = 0.01, seed=None) -> TestResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if min(x.size, y.size) < 100:
        raise InsufficientDataError("two-sample KS needs at least 100 samples per side")
    stat, p = sps.ks_2samp(x, y)
    return TestResult(name, float(stat), float(p), x.size + y.size, level, seed=seed)


def _pool_tail(expected: np.ndarray, min_expected: float = 5.0) -> list[np.ndarray]:
    """Deterministic bin pooling: merge from the upper tail until all bins
    reach the minimum expected count, then likewise from the lower end."""
    groups = [np.array([k]) for k in range(expected.size)]
    # upper tail
    while len(groups) > 1 and expected[groups[-1]].sum() < min_expected:
        last = groups.pop()
        groups[-1] = np.concatenate([groups[-1], last])
    while len(groups) > 1 and expected[groups[0]].sum() < min_expected:
        first = groups.pop(0)
        groups[0] = np.concatenate([first, groups[0]])
    return groups


def chi_square_gof(
    samples,
    expected_pmf,
    name: str = "chi2",
    level: float = 0.01,
    seed=None,
    k_cap: int = 10_000,
) -> TestResult:
    """Chi-square goodness of fit of integer samples against a pmf callable.

    expected_pmf(k_array) returns probabilities; mass beyond the observed
    maximum is folded into the top bin.  Sparse bins are pooled from both
    tails to an expected count of 5 before the statistic is formed.
    """
    samples = np.asarray(samples)
    n = samples.size
    if n < 100:
        raise InsufficientDataError("chi-square needs at least 100 samples")
    k_hi = int(samples.max())
    if k_hi > k_cap:
        raise InsufficientDataError(f"support too wide ({k_hi} > {k_cap})")
    ks = np.arange(k_hi + 1)
    probs = np.asarray(expected_pmf(ks), dtype=float)
    probs = np.append(probs, max(0.0, 1.0 - probs.sum()))  # fold the tail
    observed = np.bincount(samples.astype(int), minlength=k_hi + 2).astype(float)
    expected = n * probs
    groups = _pool_tail(expected)
    obs_g = np.array([observed[g].sum() for g in groups])
    exp_g = np.array([expected[g].sum() for g in groups])
    if len(groups) < 2:
        raise InsufficientDataError("pooling left fewer than 2 bins")
    stat = float(((obs_g - exp_g) ** 2 / exp_g).sum())
    dof = len(groups) - 1
    p = float(sps.chi2.sf(stat, dof))
    return TestResult(name, stat, p, n, level, seed=seed)


def chi_square_two_sample(
    x, y, name: str = "chi2-2s", level: float = 0.01, seed=None
) -> TestResult:
    """Two-sample chi-square homogeneity test for integer counts."""
    x = np.asarray(x).astype(int)
    y = np.asarray(y).astype(int)
    if min(x.size, y.size) < 100:
        raise InsufficientDataError("two-sample chi-square needs at least 100 per sample")
    k_hi = int(max(x.max(), y.max()))
    ox = np.bincount(x, minlength=k_hi + 1).astype(float)
    oy = np.bincount(y, minlength=k_hi + 1).astype(float)
    combined = ox + oy
    groups = _pool_tail(combined)
    gx = np.array([ox[g].sum() for g in groups])
    gy = np.array([oy[g].sum() for g in groups])
    table = np.vstack([gx, gy])
    keep = table.sum(axis=0) > 0
    table = table[:, keep]
    if table.shape[1] < 2:
        raise InsufficientDataError("two-sample chi-square has fewer than 2 usable bins")
    stat, p, dof, _ = sps.chi2_contingency(table, correction=False)
    return TestResult(name, float(stat), float(p), x.size + y.size, level, seed=seed)


def martingale_diagnostic(
    paths: list,
    lam: float,
    times: tuple[float, float],
    bins: int = 5,
    name: str = "martingale",
    level: float = 0.01,
    seed=None,
) -> TestResult:
    """Necessary-condition check that M = X - lam * Y is a martingale.

    Bins the paths by M(s) (quantile bins), tests each bin's mean increment
    M(t) - M(s) against zero at 4 standard errors, and combines the bin
    z-scores into a chi-square statistic.
    """
    s, t = times
    if not s < t:
        raise ValueError("need s < t")
    ms, dm = [], []
    for events, ypath in paths:
        m_s = events.count_at(s) - lam * ypath(s)
        m_t = events.count_at(t) - lam * ypath(t)
        ms.append(m_s)
        dm.append(m_t - m_s)
    ms = np.asarray(ms)
    dm = np.asarray(dm)
    edges = np.quantile(ms, np.linspace(0.0, 1.0, bins + 1))
    edges[0] -= 1.0
    edges[-1] += 1.0
    which = np.clip(np.searchsorted(edges, ms, side="right") - 1, 0, bins - 1)
    zs = []
    for b in range(bins):
        sel = which == b
        if sel.sum() < 30:
            raise InsufficientDataError(f"martingale bin {b} has {sel.sum()} paths")
        inc = dm[sel]
        se = inc.std(ddof=1) / np.sqrt(sel.sum())
        zs.append(inc.mean() / se)
    zs = np.asarray(zs)
    stat = float((zs**2).sum())
    p = float(sps.chi2.sf(stat, bins))
    passed = bool(np.all(np.abs(zs) <= 4.0) and p > level)
    return TestResult(name, stat, p, len(paths), level, passed=passed, seed=seed)

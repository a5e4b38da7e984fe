"""Named validation suites behind the CLI ``validate`` subcommand.

Each suite runs desk-scale versions of the cross-checks that tie the
simulators to the closed-form distribution theory and reports one record
per check: {name, statistic, p, pass, seed}.  Deterministic numeric checks
carry p = None and pass on an explicit error bound.  All randomness flows
through chunk-indexed substreams of the given seed, so reports are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
from math import erfc, exp, gamma, sqrt

import numpy as np

from . import fields, fraccalc, processes, specfun, stats, subordinate
from .sampling import MixedParams, RandomSource, sample_inverse_at, sample_ml_waiting_time, sample_stable
from .stats import TestResult


def _bound_check(name: str, err: float, bound: float, n: int = 0, seed=None) -> TestResult:
    return TestResult(name, float(err), None, n, passed=bool(err <= bound), seed=seed)


def suite_specfun(seed: int, jobs: int = 1) -> list[TestResult]:
    out = []
    out.append(_bound_check("ml.E1(1)=e", abs(specfun.mittag_leffler(1.0, 1.0) - exp(1)), 1e-12))
    errs = [
        abs(specfun.mittag_leffler(0.5, -x, atol=1e-9) - exp(x * x) * erfc(x))
        for x in (0.25, 1.0, 4.0)
    ]
    out.append(_bound_check("ml.E0.5-erfc", max(errs), 1e-9))
    out.append(
        _bound_check(
            "ml.E12-identity", abs(specfun.mittag_leffler2(1.0, 2.0, 1.0) - (exp(1) - 1.0)), 1e-12
        )
    )
    out.append(
        _bound_check(
            "ml3.gamma1-reduction",
            abs(
                specfun.mittag_leffler3(0.8, 1.0, 1.0, -0.5)
                - specfun.mittag_leffler2(0.8, 1.0, -0.5)
            ),
            1e-12,
        )
    )
    g_half = lambda x: x**-1.5 * exp(-1.0 / (4.0 * x)) / (2.0 * sqrt(np.pi))
    out.append(
        _bound_check("stable.levy-closed-form", abs(specfun.stable_density(0.5, 1.0) - g_half(1.0)), 1e-10)
    )
    f_half = lambda t, x: exp(-x * x / (4 * t)) / sqrt(np.pi * t)
    grid_err = max(
        abs(specfun.inverse_stable_density(0.5, t, x) - f_half(t, x))
        for t in (0.25, 0.5, 1.0, 2.0, 4.0)
        for x in (0.2, 0.5, 1.0, 1.5, 2.5)
    )
    out.append(_bound_check("inverse-stable.closed-form-grid", grid_err, 1e-8))
    mono = specfun.mittag_leffler(0.75, -np.linspace(0.0, 50.0, 500), atol=1e-5)
    out.append(_bound_check("ml.monotone", float(np.max(np.diff(mono))), 0.0))
    return out


def suite_sampling(seed: int, jobs: int = 1) -> list[TestResult]:
    out = []
    rng = RandomSource(seed, 1)
    x = stats.chunked_samples(
        lambda r, m: sample_stable(0.5, 1.0, r, size=m), 20_000, rng, jobs=jobs
    )
    out.append(stats.ks_test(x, lambda v: erfc_vec(1.0 / (2.0 * np.sqrt(v))), "sampling.stable-levy-cdf", seed=seed))
    mean_lt = float(np.exp(-x).mean())
    se = float(np.exp(-x).std(ddof=1) / np.sqrt(x.size))
    out.append(
        _bound_check("sampling.stable-laplace", abs(mean_lt - exp(-1.0)), 4 * se, x.size, seed)
    )
    w = stats.chunked_samples(
        lambda r, m: sample_ml_waiting_time(0.999, 1.0, r, size=m), 20_000, RandomSource(seed, 2), jobs=jobs
    )
    out.append(stats.ks_test(w, lambda v: 1.0 - np.exp(-v), "sampling.ml-wait-exp-limit", seed=seed))
    y = stats.chunked_samples(
        lambda r, m: sample_inverse_at(0.5, 1.0, r, size=m), 50_000, RandomSource(seed, 3), jobs=jobs
    )
    for nu, name in ((1, "sampling.inverse-mean"), (2, "sampling.inverse-m2"), (3, "sampling.inverse-m3")):
        target = gamma(nu + 1.0) / gamma(0.5 * nu + 1.0)
        se = float((y**nu).std(ddof=1) / np.sqrt(y.size))
        out.append(_bound_check(name, abs(float((y**nu).mean()) - target), 4 * se, y.size, seed))
    a, scale = 0.75, 2.0
    x1 = stats.chunked_samples(lambda r, m: sample_stable(a, scale, r, size=m), 10_000, RandomSource(seed, 4), jobs=jobs)
    x2 = stats.chunked_samples(lambda r, m: sample_stable(a, 1.0, r, size=m), 10_000, RandomSource(seed, 5), jobs=jobs)
    out.append(stats.ks_two_sample(x1, scale ** (1 / a) * x2, "sampling.self-similar", seed=seed))
    return out


def erfc_vec(v):
    from scipy.special import erfc as _erfc

    return _erfc(v)


def suite_subordinate(seed: int, jobs: int = 1) -> list[TestResult]:
    out = []
    # grid inverse readout vs exact single-time draws
    def grid_draw(r, m):
        vals = np.empty(m)
        for i in range(m):
            vals[i] = subordinate.simulate_inverse(0.75, 5e-4, 1.0, r.substream(i))(1.0)
        return vals

    yg = stats.chunked_samples(grid_draw, 3000, RandomSource(seed, 10), chunk=512, jobs=jobs)
    ye = sample_inverse_at(0.75, 1.0, RandomSource(seed, 11), size=3000)
    out.append(stats.ks_two_sample(yg, ye, "subordinate.grid-vs-exact", seed=seed))
    se = float(yg.std(ddof=1) / np.sqrt(yg.size))
    out.append(
        _bound_check(
            "subordinate.grid-mean",
            abs(float(yg.mean()) - 1.0 / gamma(1.75)),
            4 * se + 5e-4,
            yg.size,
            seed,
        )
    )
    # self-similarity of exact draws
    ya = sample_inverse_at(0.6, 2.0, RandomSource(seed, 12), size=10_000) / 2.0**0.6
    yb = sample_inverse_at(0.6, 1.0, RandomSource(seed, 13), size=10_000)
    out.append(stats.ks_two_sample(ya, yb, "subordinate.self-similar", seed=seed))
    # covariance quadrature identity at t = s
    a = 0.5
    v1 = subordinate.inverse_cov(a, 1.0, 1.0)
    v2 = 2.0 / gamma(2.0) - 1.0 / gamma(1.5) ** 2
    out.append(_bound_check("subordinate.cov4-variance", abs(v1 - v2), 1e-8))
    mixed = MixedParams(0.5, 0.9, 0.5, 0.5)
    u_int = _mean_from_density(mixed, 1.0)
    out.append(
        _bound_check(
            "subordinate.mixed-density-mean",
            abs(u_int - subordinate.inverse_mean(mixed, 1.0)),
            1e-4,
        )
    )
    return out


def _mean_from_density(params, t: float) -> float:
    from scipy.integrate import quad

    return quad(
        lambda x: x * specfun.mixed_inverse_density(params, t, x), 0.0, 40.0, limit=200
    )[0]


def suite_processes(seed: int, jobs: int = 1) -> list[TestResult]:
    out = []
    lam, t_end = 2.0, 1.0
    n = 3000

    def renewal_counts(r, m):
        return np.array(
            [
                processes.simulate_fpp_renewal(0.75, lam, t_end, r.substream(i)).count_at(t_end)
                for i in range(m)
            ]
        )

    def tc_counts(r, m):
        return np.array(
            [
                processes.simulate_fpp_timechange(0.75, lam, t_end, r.substream(i), delta=1e-3)[
                    0
                ].count_at(t_end)
                for i in range(m)
            ]
        )

    cr = stats.chunked_samples(renewal_counts, n, RandomSource(seed, 20), chunk=512, jobs=jobs)
    ct = stats.chunked_samples(tc_counts, n, RandomSource(seed, 21), chunk=512, jobs=jobs)
    out.append(stats.chi_square_two_sample(cr, ct, "processes.renewal-vs-timechange", seed=seed))
    pmf = processes.fpp_pmf(0.75, lam, t_end, 60)
    out.append(
        stats.chi_square_gof(cr, lambda k: pmf.probs[np.clip(k, 0, 60)], "processes.counts-vs-pmf", seed=seed)
    )
    rep = processes.fpp_moments(0.75, lam, t_end)
    se = float(cr.std(ddof=1) / np.sqrt(cr.size))
    out.append(_bound_check("processes.mc-mean", abs(float(cr.mean()) - rep.mean), 4 * se + 2 * lam * 1e-3, cr.size, seed))
    mixed = MixedParams(0.5, 0.9, 0.5, 0.5)
    pa = processes.mfpp_pmf(mixed, 1.0, 1.0, 8, method="series")
    pb = processes.mfpp_pmf(mixed, 1.0, 1.0, 8, method="convolution")
    out.append(_bound_check("processes.mfpp-talbot-vs-convolution", float(np.max(np.abs(pa.probs - pb.probs))), 1e-5))
    p0 = processes.mfpp_p0(mixed, 1.0, 1.0)
    out.append(_bound_check("processes.mfpp-p0-series-vs-talbot", abs(p0 - pa.probs[0]), 1e-6))
    return out


def suite_fields(seed: int, jobs: int = 1) -> list[TestResult]:
    out = []
    lam, window = 10.0, 2.0
    counts = np.array(
        [
            fields.simulate_prf(lam, window, RandomSource(seed, 30).substream(i)).points.shape[0]
            for i in range(2000)
        ]
    )
    from scipy.stats import poisson

    out.append(
        stats.chi_square_gof(counts, lambda k: poisson(lam * window**2).pmf(k), "fields.prf-count", seed=seed)
    )
    # FPRF mean count vs closed form
    tot = np.array(
        [
            fields.simulate_fprf(0.9, 0.75, 20.0, 1.0, 2e-3, RandomSource(seed, 31).substream(i))[0]
            .points.shape[0]
            for i in range(400)
        ]
    )
    target = fields.fprf_mean_direct(0.9, 0.75, 20.0, 1.0, 1.0)
    se = float(tot.std(ddof=1) / np.sqrt(tot.size))
    out.append(_bound_check("fields.fprf-mean", abs(float(tot.mean()) - target), 4 * se + 20 * 4e-3, tot.size, seed))
    # records vs Poisson at unit intensity
    rec = np.array(
        [
            fields.gergely_yezhov_counts(lambda t: t, np.array([1.0]), RandomSource(seed, 32).substream(i))[0]
            for i in range(3000)
        ]
    )
    out.append(stats.chi_square_gof(rec, lambda k: poisson(1.0).pmf(k), "fields.records-poisson", seed=seed))
    # engine vs direct formulas
    rep = fields.fprf_moments(0.9, 0.75, 5.0, (1.0, 1.5), (0.8, 2.0))
    err = max(
        abs(rep.mean - fields.fprf_mean_direct(0.9, 0.75, 5.0, 1.0, 1.5)),
        abs(rep.variance - fields.fprf_variance_direct(0.9, 0.75, 5.0, 1.0, 1.5)),
        abs(rep.covariance[((1.0, 1.5), (0.8, 2.0))] - fields.fprf_cov_direct(0.9, 0.75, 5.0, (1.0, 1.5), (0.8, 2.0))),
    )
    out.append(_bound_check("fields.engine-vs-direct", err, 1e-10))
    return out


def suite_fraccalc(seed: int, jobs: int = 1) -> list[TestResult]:
    out = []
    out.append(
        _bound_check(
            "fraccalc.talbot-pair",
            abs(fraccalc.laplace_invert(lambda s: 1.0 / (s + 2.0), 1.0) - exp(-2.0)),
            1e-8,
        )
    )
    tal = fraccalc.laplace_invert(lambda s: s**-0.5 / (1.0 + s**0.5), 1.0)
    gs = fraccalc.laplace_invert(
        lambda s: s**-0.5 / (1.0 + s**0.5), 1.0, method="gaver-stehfest"
    )
    out.append(_bound_check("fraccalc.talbot-vs-gs", abs(tal - gs), 1e-6))
    # caputo of t -> t at the closed form
    step = 1e-3
    ts = np.arange(0.0, 1.0 + step / 2, step)
    d = fraccalc.caputo_l1(fraccalc.GridFunction(step, ts), 0.5).values
    out.append(
        _bound_check("fraccalc.caputo-linear", abs(d[-1] - 1.0 / gamma(1.5)), 5e-3)
    )
    rep = fraccalc.fde_residual_fpp(0.5, 1.0, 1e-3, 1.0, 3)
    out.append(
        _bound_check("fraccalc.fpp-residual", rep["max_residual"], 10.0 * 1e-3 ** (1.5), seed=seed)
    )
    return out


SUITES = {
    "specfun": suite_specfun,
    "sampling": suite_sampling,
    "subordinate": suite_subordinate,
    "processes": suite_processes,
    "fields": suite_fields,
    "fraccalc": suite_fraccalc,
}


def run_suite(name: str, seed: int, jobs: int = 1) -> list[TestResult]:
    if name == "all":
        results = []
        for key in SUITES:
            results.extend(SUITES[key](seed, jobs))
        return results
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name](seed, jobs)


def report_json(results: list[TestResult]) -> str:
    return json.dumps([r.to_json_dict() for r in results], indent=2, sort_keys=True)

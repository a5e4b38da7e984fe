"""Planar Poisson and fractional Poisson random fields.

The fractional field is doubly stochastic: conditional on two independent
inverse-subordinator paths, points fall as a Poisson process whose intensity
is the product measure of the path increments scaled by the rate.  The grid
simulation draws one count per grid cell with mean rate * delta^2 (exactly
Poisson, or Bernoulli as an opt-in approximation when rate * delta^2 is
small) and places points uniformly inside their cells.  Record-based
construction, traces along increasing paths, random time change to a unit
Poisson process, and the generic parameter-changed covariance engine round
out the module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as _gamma

import numpy as np

from . import subordinate
from .processes import EventTimes, Pmf
from .sampling import ParameterError, RandomSource, sample_stable
from .subordinate import InversePath, ResourceLimitError

MAX_POINTS = 10_000_000


@dataclass
class PlanarPoints:
    """Points of a simple planar point process inside [0, window]^2."""

    points: np.ndarray
    window: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.points.size and not (
            self.points.min() >= 0.0 and self.points.max() <= self.window
        ):
            raise ValueError("points must lie inside the window")

    def count_rectangle(self, x: float, y: float) -> int:
        """Number of points in [0, x] x [0, y]."""
        return int(np.sum((self.points[:, 0] <= x) & (self.points[:, 1] <= y)))

    def export_csv(self, fh) -> None:
        fh.write("x,y\n")
        for x, y in self.points:
            fh.write(f"{x:.17g},{y:.17g}\n")


def simulate_prf(lam: float, window: float, rng: RandomSource) -> PlanarPoints:
    """Homogeneous planar Poisson field on [0, window]^2."""
    if lam <= 0.0 or window <= 0.0:
        raise ParameterError("lam and window must be positive")
    mean = lam * window**2
    if mean > MAX_POINTS:
        raise ResourceLimitError(f"expected point count {mean:.3g} exceeds {MAX_POINTS}")
    n = int(rng.gen.poisson(mean))
    pts = rng.gen.uniform(0.0, window, size=(n, 2))
    return PlanarPoints(pts, window, {"lam": lam})


def _cell_edges(path: InversePath, window: float) -> np.ndarray:
    """Cell boundaries 0 = s_0 < s_1 <= ... <= s_n <= window from a path."""
    n = int(np.searchsorted(path.jump_times, window, side="right"))
    return np.concatenate(([0.0], path.jump_times[:n]))


def simulate_fprf(
    alpha1: float,
    alpha2: float,
    lam: float,
    window: float,
    delta: float,
    rng: RandomSource,
    cell_law: str = "poisson",
) -> tuple[PlanarPoints, InversePath, InversePath]:
    """Fractional Poisson random field on [0, window]^2 at grid resolution delta.

    Two independent inverse stable subordinator paths drive the field; each
    grid cell spanned by consecutive jump times carries mean count
    lam * delta^2.  cell_law "poisson" is exact (cell counts are drawn
    jointly through superposition); "bernoulli" reproduces the one-point
    approximation and requires lam * delta^2 < 0.1.
    """
    if min(alpha1, alpha2, lam, window, delta) <= 0.0:
        raise ParameterError("all parameters must be positive")
    if delta > 0.01:
        raise ParameterError("delta must not exceed 0.01")
    p_cell = lam * delta**2
    if cell_law not in ("poisson", "bernoulli"):
        raise ParameterError(f"unknown cell law {cell_law!r}")
    if cell_law == "bernoulli" and p_cell >= 0.1:
        raise ParameterError(f"bernoulli cell law invalid: lam * delta^2 = {p_cell} >= 0.1")
    path1 = subordinate.simulate_inverse(alpha1, delta, window, rng.substream(0))
    path2 = subordinate.simulate_inverse(alpha2, delta, window, rng.substream(1))
    e1 = _cell_edges(path1, window)
    e2 = _cell_edges(path2, window)
    n1, n2 = e1.size - 1, e2.size - 1
    gen = rng.substream(2).gen
    n_cells = n1 * n2
    if p_cell * n_cells > MAX_POINTS:
        raise ResourceLimitError("expected point count exceeds the configured cap")
    if cell_law == "poisson":
        total = int(gen.poisson(p_cell * n_cells))
        cells = gen.integers(0, n_cells, size=total)
    else:
        total = int(gen.binomial(n_cells, p_cell))
        cells = _distinct_integers(gen, n_cells, total)
    i1, i2 = cells // n2, cells % n2
    u = gen.uniform(size=(total, 2))
    xs = e1[i1] + u[:, 0] * (e1[i1 + 1] - e1[i1])
    ys = e2[i2] + u[:, 1] * (e2[i2 + 1] - e2[i2])
    pts = np.column_stack([xs, ys])
    meta = {"alpha1": alpha1, "alpha2": alpha2, "lam": lam, "delta": delta, "cell_law": cell_law}
    return PlanarPoints(pts, window, meta), path1, path2


def _distinct_integers(gen, n: int, k: int) -> np.ndarray:
    """k distinct uniform integers from range(n) without materializing range(n)."""
    if k > n:
        raise ParameterError("cannot draw more distinct cells than exist")
    chosen: set[int] = set()
    out = np.empty(k, dtype=np.int64)
    filled = 0
    while filled < k:
        draw = gen.integers(0, n, size=max(64, 2 * (k - filled)))
        for v in draw:
            vi = int(v)
            if vi not in chosen:
                chosen.add(vi)
                out[filled] = vi
                filled += 1
                if filled == k:
                    break
    return out


# ---------------------------------------------------------------------------
# Marginal distribution and moments


def fprf_pmf_mc(
    alpha1: float,
    alpha2: float,
    lam: float,
    t1: float,
    t2: float,
    k_max: int,
    n_mc: int,
    rng: RandomSource,
) -> Pmf:
    """Monte Carlo pmf of the field count at (t1, t2).

    Product-form estimator: averages the conditional Poisson pmf at
    lam * X1 * X2 over all n_mc^2 pairings of exact single-time draws
    X1 ~ Y_a1(t1), X2 ~ Y_a2(t2).  Standard errors come from the row/column
    variance decomposition of the two-sample V-statistic.
    """
    if n_mc < 1:
        raise ParameterError("n_mc must be at least 1")
    x1 = t1**alpha1 * sample_stable(alpha1, 1.0, rng.substream(0), size=n_mc) ** (-alpha1)
    x2 = t2**alpha2 * sample_stable(alpha2, 1.0, rng.substream(1), size=n_mc) ** (-alpha2)
    w = lam * np.outer(x1, x2)
    acc = np.exp(-w)
    probs = np.empty(k_max + 1)
    se = np.empty(k_max + 1)
    for k in range(k_max + 1):
        if k > 0:
            acc = acc * w / k
        probs[k] = acc.mean()
        row = acc.mean(axis=1)
        col = acc.mean(axis=0)
        se[k] = np.sqrt((row.var(ddof=1) + col.var(ddof=1)) / n_mc)
    return Pmf(np.clip(probs, 0.0, 1.0), tail_mass=1.0 - float(probs.sum()), se=se)


@dataclass
class CovInputs:
    """Ingredients of the parameter-changed covariance engine.

    mean_n11 / var_n11 describe the base field through E N(1,1) and
    Var N(1,1); u_i, m2_i and cov_i are the mean, second moment, and
    two-time covariance of the independent time changes.
    """

    mean_n11: float
    var_n11: float
    u1: object
    u2: object
    m2_1: object
    m2_2: object
    cov1: object
    cov2: object

    def validate_at(self, t: float) -> None:
        for u, m2, cov in ((self.u1, self.m2_1, self.cov1), (self.u2, self.m2_2, self.cov2)):
            var = m2(t) - u(t) ** 2
            if var < -1e-8 or abs(cov(t, t) - var) > 1e-8 * max(1.0, abs(var)):
                raise ParameterError("cov_i(t,t) must match m2_i(t) - u_i(t)^2")


def stable_cov_inputs(alpha1: float, alpha2: float, lam: float) -> CovInputs:
    """CovInputs for two independent inverse stable subordinators."""
    return CovInputs(
        mean_n11=lam,
        var_n11=lam,
        u1=lambda t: subordinate.inverse_mean(alpha1, t),
        u2=lambda t: subordinate.inverse_mean(alpha2, t),
        m2_1=lambda t: subordinate.inverse_second_moment(alpha1, t),
        m2_2=lambda t: subordinate.inverse_second_moment(alpha2, t),
        cov1=lambda t, s: subordinate.inverse_cov(alpha1, t, s),
        cov2=lambda t, s: subordinate.inverse_cov(alpha2, t, s),
    )


def parameter_change_cov(inputs: CovInputs, t: tuple, s: tuple | None = None):
    """Mean/variance/covariance of N(Y1(t1), Y2(t2)) for a general base field.

    Mean is E N(1,1) U1 U2; the variance uses the second moments of the time
    changes; the two-point covariance is the min-based form valid for every
    quadrant ordering of (t, s).
    """
    from .stats import MomentReport

    t1, t2 = t
    mean = inputs.mean_n11 * inputs.u1(t1) * inputs.u2(t2)
    var = inputs.mean_n11**2 * (
        inputs.m2_1(t1) * inputs.m2_2(t2) - inputs.u1(t1) ** 2 * inputs.u2(t2) ** 2
    ) + inputs.var_n11 * inputs.u1(t1) * inputs.u2(t2)
    covs = {}
    if s is not None:
        s1, s2 = s
        c1 = inputs.cov1(t1, s1)
        c2 = inputs.cov2(t2, s2)
        covs[(t, s)] = (
            inputs.mean_n11**2
            * (c1 * c2 + inputs.u2(t2) * inputs.u2(s2) * c1 + inputs.u1(t1) * inputs.u1(s1) * c2)
            + inputs.var_n11 * inputs.u1(min(t1, s1)) * inputs.u2(min(t2, s2))
        )
    return MomentReport(mean=mean, variance=var, covariance=covs, n="analytic")


def fprf_moments(alpha1: float, alpha2: float, lam: float, t: tuple, s: tuple | None = None):
    """First and second order structure of the fractional field.

    Implemented through the generic parameter-changed engine with inverse
    stable inputs; the closed-form variance constants are exposed separately
    in :func:`fprf_variance_direct` for cross-validation.
    """
    return parameter_change_cov(stable_cov_inputs(alpha1, alpha2, lam), t, s)


def fprf_variance_constants(alpha1: float, alpha2: float) -> tuple[float, float]:
    """Constants (C1, C2) of the closed-form field variance.

    C1 = 1/(a1 a2 G(2a1) G(2a2)) - 1/((a1 a2)^2 G(a1)^2 G(a2)^2) and
    C2 = 1/(G(1+a1) G(1+a2)); C1(1,1) = 0 and C2(1,1) = 1.
    """
    c1 = 1.0 / (alpha1 * alpha2 * _gamma(2 * alpha1) * _gamma(2 * alpha2)) - 1.0 / (
        (alpha1 * alpha2) ** 2 * _gamma(alpha1) ** 2 * _gamma(alpha2) ** 2
    )
    c2 = 1.0 / (_gamma(1 + alpha1) * _gamma(1 + alpha2))
    return c1, c2


def fprf_mean_direct(alpha1: float, alpha2: float, lam: float, t1: float, t2: float) -> float:
    return lam * t1**alpha1 * t2**alpha2 / (_gamma(1 + alpha1) * _gamma(1 + alpha2))


def fprf_variance_direct(alpha1: float, alpha2: float, lam: float, t1: float, t2: float) -> float:
    c1, c2 = fprf_variance_constants(alpha1, alpha2)
    return lam**2 * t1 ** (2 * alpha1) * t2 ** (2 * alpha2) * c1 + lam * t1**alpha1 * t2**alpha2 * c2


def fprf_cov_direct(
    alpha1: float, alpha2: float, lam: float, t: tuple, s: tuple
) -> float:
    """Two-point covariance written out bracket by bracket (cross-check form)."""
    t1, t2 = t
    s1, s2 = s
    b1 = subordinate.inverse_cov(alpha1, t1, s1)
    b2 = subordinate.inverse_cov(alpha2, t2, s2)
    g1, g2 = _gamma(1 + alpha1), _gamma(1 + alpha2)
    return (
        lam**2
        * (
            b1 * b2
            + (t2 * s2) ** alpha2 / g2**2 * b1
            + (t1 * s1) ** alpha1 / g1**2 * b2
        )
        + lam * min(t1, s1) ** alpha1 * min(t2, s2) ** alpha2 / (g1 * g2)
    )


def fprf_hurst(alpha1: float, alpha2: float) -> float:
    """Hurst index of the field on the diagonal: (alpha1 + alpha2) / 2."""
    if not (0.0 < alpha1 < 1.0 and 0.0 < alpha2 < 1.0):
        raise ParameterError("stability indices must lie in (0, 1)")
    return 0.5 * (alpha1 + alpha2)


# ---------------------------------------------------------------------------
# Increasing paths, traces, time change, records


@dataclass
class IncreasingPathSpec:
    """Coordinatewise nondecreasing path t -> (G1(t), G2(t)) from the origin.

    Represented as monotone tables with linear interpolation; only
    rectangle-valued increasing families (true paths) are supported.
    """

    ts: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        self.g1 = np.asarray(self.g1, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        if self.g1[0] != 0.0 or self.g2[0] != 0.0 or self.ts[0] != 0.0:
            raise ParameterError("increasing path must start at the origin")
        if (
            np.any(np.diff(self.ts) <= 0.0)
            or np.any(np.diff(self.g1) < 0.0)
            or np.any(np.diff(self.g2) < 0.0)
        ):
            raise ParameterError("increasing path must be coordinatewise nondecreasing")

    def __call__(self, t):
        return np.interp(t, self.ts, self.g1), np.interp(t, self.ts, self.g2)

    def first_cover(self, x, y):
        """Earliest parameter t at which the rectangle covers the point (x, y)."""
        tx = np.interp(x, self.g1, self.ts, right=np.inf)
        ty = np.interp(y, self.g2, self.ts, right=np.inf)
        return np.maximum(tx, ty)

    @classmethod
    def diagonal(cls, horizon: float, n: int = 2) -> "IncreasingPathSpec":
        ts = np.linspace(0.0, horizon, n)
        return cls(ts, ts.copy(), ts.copy())


def trace_along_path(
    driver: tuple[PlanarPoints, InversePath, InversePath],
    path: IncreasingPathSpec,
    n_eval: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Counting function of the field along the growing rectangles of a path.

    The driver tuple is exactly what :func:`simulate_fprf` returns.  Returns
    (t, counts) at n_eval evenly spaced parameters up to the path horizon;
    raises if the path leaves the simulated window.
    """
    points = driver[0]
    t_hi = float(path.ts[-1])
    g1_hi, g2_hi = path(t_hi)
    if g1_hi > points.window + 1e-12 or g2_hi > points.window + 1e-12:
        raise ParameterError("increasing path leaves the simulated window")
    ts = np.linspace(0.0, t_hi, n_eval)
    cover = path.first_cover(points.points[:, 0], points.points[:, 1])
    counts = np.searchsorted(np.sort(cover), ts, side="right")
    return ts, counts


def reparametrize_to_standard(
    driver: tuple[PlanarPoints, InversePath, InversePath],
    path: IncreasingPathSpec,
    lam: float,
) -> EventTimes:
    """Random time change of the trace by the accumulated random intensity.

    Each traced point receives the internal coordinate
    s = lam * Y1(G1(t*)) * Y2(G2(t*)) at its first-coverage parameter t*,
    with the interpolated (uniform-in-cell) inverse paths; the resulting
    arrival sequence is a unit-rate Poisson process up to the horizon
    intensity.  Raises when the requested horizon intensity is never
    reached on the path.
    """
    points, path1, path2 = driver
    t_hi = float(path.ts[-1])
    g1_hi, g2_hi = path(t_hi)
    if g1_hi > points.window + 1e-12 or g2_hi > points.window + 1e-12:
        raise ParameterError("increasing path leaves the simulated window")
    cover = path.first_cover(points.points[:, 0], points.points[:, 1])
    inside = np.isfinite(cover) & (cover <= t_hi)
    tstar = cover[inside]
    g1, g2 = path(tstar)
    svals = lam * path1.interp(g1) * path2.interp(g2)
    horizon = lam * path1.interp(g1_hi) * path2.interp(g2_hi)
    return EventTimes(np.sort(svals), horizon)


def gergely_yezhov_counts(
    intensity, t_grid, rng: RandomSource, cap: int = 100_000_000
) -> np.ndarray:
    """Counting function from the record construction of an i.i.d. sequence.

    Generates uniforms, tracks their running records V_n, and returns
    Y_t = sup{n : V_n <= 1 - exp(-m(t))} at the grid points for the
    nondecreasing intensity m.  Record indices grow exponentially, so the
    draw budget is capped; exceeding it raises rather than biasing.
    """
    ts = np.asarray(t_grid, dtype=float)
    m = np.asarray(intensity(ts), dtype=float)
    if np.any(m < 0.0) or np.any(np.diff(m) < -1e-12):
        raise ParameterError("intensity must be nonnegative and nondecreasing")
    thresholds = -np.expm1(-m)
    target = float(thresholds.max())
    records = []
    current = 0.0
    drawn = 0
    gen = rng.gen
    block = 4096
    while current <= target:
        if drawn >= cap:
            raise ResourceLimitError(
                f"record search exceeded {cap} draws at record level {current}"
            )
        u = gen.uniform(size=block)
        drawn += block
        running = np.maximum.accumulate(np.concatenate(([current], u)))[:-1]
        new = u[u > running]
        if new.size:
            records.extend(new.tolist())
            current = records[-1]
    rec = np.asarray(records)
    return np.searchsorted(rec, thresholds, side="right")

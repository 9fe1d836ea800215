"""Trend functions and trend renewal processes (TRP).

A TRP is a counting process whose occurrence times, pushed through the
cumulative trend ``Lambda``, form an ordinary renewal process with
inter-occurrence CDF ``F``.  Constant trend recovers a renewal process
with CDF ``F(lambda * x)``; a unit-exponential renewal recovers a
non-homogeneous Poisson process with intensity ``lambda(t)``.

Also houses the marginal CDFs of the k-th delay when a sequence of
settlement delays itself generates a TRP (used for dependent-delay
simulation of the reserve).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special, stats

from .rng import substream

DAYS_PER_YEAR = 365.0

__all__ = [
    "TrendSpec",
    "RenewalDistribution",
    "OccurrenceHistory",
    "TrendSaturationError",
    "cumulative_trend",
    "inverse_cumulative_trend",
    "sample_trp",
    "conditional_intensity",
    "fit_trend",
    "trp_delay_marginal_cdf",
    "trp_partial_sum_cdf",
]


class TrendSaturationError(ValueError):
    """Requested transformed time exceeds the finite total trend mass."""


@dataclass(frozen=True)
class TrendSpec:
    """Trend function lambda(t) with cumulative Lambda(t).

    ``time_unit`` declares the unit of the time argument ("years" or
    "days"); the gamma-density mixture is conventionally calibrated in
    days.  Conversions use 365 days per year.
    """

    family: str  # "constant" | "power" | "gamma_mixture"
    params: dict = field(default_factory=dict)
    time_unit: str = "years"

    def __post_init__(self):
        if self.family not in ("constant", "power", "gamma_mixture"):
            raise ValueError(f"unknown trend family {self.family!r}")
        if self.time_unit not in ("years", "days"):
            raise ValueError(f"unknown time unit {self.time_unit!r}")

    @classmethod
    def constant(cls, rate: float, time_unit: str = "years") -> "TrendSpec":
        if rate <= 0:
            raise ValueError("constant trend rate must be > 0")
        return cls("constant", {"rate": float(rate)}, time_unit)

    @classmethod
    def power(cls, gamma: float, time_unit: str = "years") -> "TrendSpec":
        if gamma <= 0:
            raise ValueError("power trend exponent must be > 0")
        return cls("power", {"gamma": float(gamma)}, time_unit)

    @classmethod
    def gamma_mixture(cls, p1, alpha1, lambda1, p2, alpha2, lambda2,
                      time_unit: str = "days") -> "TrendSpec":
        if min(p1, p2) < 0 or min(alpha1, alpha2) <= 0 or min(lambda1, lambda2) <= 0:
            raise ValueError("gamma mixture needs weights >= 0, shapes/rates > 0")
        return cls("gamma_mixture",
                   {"p1": float(p1), "alpha1": float(alpha1), "lambda1": float(lambda1),
                    "p2": float(p2), "alpha2": float(alpha2), "lambda2": float(lambda2)},
                   time_unit)

    @property
    def total_mass(self) -> float:
        """Lambda(infinity); finite only for the gamma mixture."""
        if self.family == "gamma_mixture":
            return self.params["p1"] + self.params["p2"]
        return np.inf

    def intensity(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("time must be >= 0")
        p = self.params
        if self.family == "constant":
            return np.broadcast_to(p["rate"], t.shape).copy() if t.shape else float(p["rate"])
        if self.family == "power":
            g = p["gamma"]
            with np.errstate(divide="ignore"):
                out = g * np.power(t, g - 1.0)
            return out
        out = (p["p1"] * stats.gamma.pdf(t, p["alpha1"], scale=1.0 / p["lambda1"])
               + p["p2"] * stats.gamma.pdf(t, p["alpha2"], scale=1.0 / p["lambda2"]))
        return out

    def cumulative(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise ValueError("time must be >= 0")
        p = self.params
        if self.family == "constant":
            out = p["rate"] * t_arr
        elif self.family == "power":
            out = np.power(t_arr, p["gamma"])
        else:
            out = (p["p1"] * special.gammainc(p["alpha1"], p["lambda1"] * t_arr)
                   + p["p2"] * special.gammainc(p["alpha2"], p["lambda2"] * t_arr))
        return float(out) if np.isscalar(t) or t_arr.shape == () else out

    def inverse(self, s):
        """Lambda^{-1}(s); raises TrendSaturationError past the total mass."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0):
            raise ValueError("transformed time must be >= 0")
        p = self.params
        if self.family == "constant":
            out = s_arr / p["rate"]
        elif self.family == "power":
            out = np.power(s_arr, 1.0 / p["gamma"])
        else:
            if np.any(s_arr >= self.total_mass):
                raise TrendSaturationError(
                    f"transformed time {np.max(s_arr):g} >= total trend mass "
                    f"{self.total_mass:g}")
            out = self._inverse_mixture_vec(np.atleast_1d(s_arr)).reshape(s_arr.shape)
        return float(out) if np.isscalar(s) or s_arr.shape == () else out

    def _inverse_mixture_vec(self, s: np.ndarray) -> np.ndarray:
        """Vectorized inverse for the mixture: bracket then bisect."""
        smax = float(np.max(s, initial=0.0))
        hi = 1.0
        while self.cumulative(hi) < smax:
            hi *= 2.0
            if hi > 1e12:  # pragma: no cover - unreachable below total mass
                raise TrendSaturationError("could not bracket inverse trend")
        lo_t = np.zeros_like(s)
        hi_t = np.full_like(s, hi)
        for _ in range(80):  # bisection to ~hi * 2^-80 absolute
            mid = 0.5 * (lo_t + hi_t)
            low = self.cumulative(mid) < s
            lo_t = np.where(low, mid, lo_t)
            hi_t = np.where(low, hi_t, mid)
        return 0.5 * (lo_t + hi_t)

    # Unit-aware helpers: arguments in years regardless of the declared unit.
    def _to_native(self, t_years):
        return np.asarray(t_years, dtype=float) * (DAYS_PER_YEAR if self.time_unit == "days" else 1.0)

    def _to_years(self, t_native):
        return np.asarray(t_native, dtype=float) / (DAYS_PER_YEAR if self.time_unit == "days" else 1.0)

    def cumulative_years(self, t_years):
        return self.cumulative(self._to_native(t_years))

    def inverse_years(self, s):
        return self._to_years(self.inverse(s))

    def intensity_years(self, t_years):
        """Intensity per year at a time given in years."""
        scale = DAYS_PER_YEAR if self.time_unit == "days" else 1.0
        return self.intensity(self._to_native(t_years)) * scale


@dataclass(frozen=True)
class RenewalDistribution:
    """Positive inter-occurrence distribution F with F(0) = 0."""

    family: str  # "exponential" | "generalized_gamma" | "user"
    params: dict = field(default_factory=dict)

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "RenewalDistribution":
        if rate <= 0:
            raise ValueError("exponential rate must be > 0")
        return cls("exponential", {"rate": float(rate)})

    @classmethod
    def generalized_gamma(cls, a: float, b: float, c: float) -> "RenewalDistribution":
        if min(a, b, c) <= 0:
            raise ValueError("generalized gamma parameters must be > 0")
        return cls("generalized_gamma", {"a": float(a), "b": float(b), "c": float(c)})

    @classmethod
    def user(cls, cdf: Callable, ppf: Callable,
             pdf: Optional[Callable] = None) -> "RenewalDistribution":
        return cls("user", {"cdf": cdf, "ppf": ppf, "pdf": pdf})

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "exponential":
            return np.where(x > 0, -np.expm1(-p["rate"] * np.maximum(x, 0.0)), 0.0)
        if self.family == "generalized_gamma":
            xp = np.maximum(x, 0.0)
            return np.where(x > 0, special.gammainc(p["a"], np.power(xp / p["c"], p["b"])), 0.0)
        return np.asarray(p["cdf"](x), dtype=float)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "exponential":
            return np.where(x >= 0, p["rate"] * np.exp(-p["rate"] * np.maximum(x, 0.0)), 0.0)
        if self.family == "generalized_gamma":
            a, b, c = p["a"], p["b"], p["c"]
            xp = np.where(x > 0, x, np.nan)
            out = (b / (xp * special.gamma(a))) * np.power(xp / c, a * b) * np.exp(-np.power(xp / c, b))
            return np.where(x > 0, out, 0.0)
        if p["pdf"] is None:
            raise ValueError("user renewal distribution has no density")
        return np.asarray(p["pdf"](x), dtype=float)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        p = self.params
        if self.family == "exponential":
            return -np.log1p(-q) / p["rate"]
        if self.family == "generalized_gamma":
            return p["c"] * np.power(special.gammaincinv(p["a"], q), 1.0 / p["b"])
        return np.asarray(p["ppf"](q), dtype=float)

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(rng.random(size))


@dataclass(frozen=True)
class OccurrenceHistory:
    """Sorted event times (years) observed up to ``horizon``."""

    times: tuple
    horizon: float

    def __post_init__(self):
        ts = np.asarray(self.times, dtype=float)
        if ts.size and (np.any(np.diff(ts) <= 0) or ts[0] <= 0):
            raise ValueError("event times must be strictly increasing and positive")
        object.__setattr__(self, "times", tuple(float(t) for t in ts))

    def __len__(self):
        return len(self.times)


def cumulative_trend(spec: TrendSpec, t):
    """Lambda(t) in the spec's native time unit."""
    return spec.cumulative(t)


def inverse_cumulative_trend(spec: TrendSpec, s):
    """Lambda^{-1}(s); saturation error past the finite total mass."""
    return spec.inverse(s)


def sample_trp(spec: TrendSpec, renewal: RenewalDistribution, horizon: float,
               rng: np.random.Generator) -> OccurrenceHistory:
    """Sample one TRP path on (0, horizon] (times in years).

    The transformed times perform a renewal walk with iid increments ~ F;
    events past the horizon are discarded.  If the trend saturates before
    the horizon the path is truncated at saturation.
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    mass = spec.total_mass
    s_horizon = min(spec.cumulative_years(horizon), mass)
    times = []
    s = 0.0
    while True:
        s += float(renewal.sample(rng))
        if s >= s_horizon and s >= mass:
            break  # saturated: no further events possible
        if s > s_horizon:
            break
        t = float(spec.inverse_years(s))
        if t > horizon:
            break
        times.append(t)
    return OccurrenceHistory(tuple(times), horizon)


def conditional_intensity(spec: TrendSpec, renewal: RenewalDistribution,
                          history: OccurrenceHistory, t: float) -> float:
    """Hazard-modulated intensity at t given the history (per year).

    For a unit-exponential renewal this reduces to lambda(t).
    """
    t_last = history.times[-1] if len(history) else 0.0
    if t < t_last:
        raise ValueError("evaluation time precedes the last observed event")
    gap = float(spec.cumulative_years(t) - spec.cumulative_years(t_last))
    surv = float(renewal.sf(gap))
    if surv <= 0.0:
        raise ZeroDivisionError("renewal survival vanished at the evaluation gap")
    return float(renewal.pdf(gap)) / surv * float(spec.intensity_years(t))


def _trp_loglik(spec: TrendSpec, renewal: RenewalDistribution,
                history: OccurrenceHistory) -> float:
    ts = np.asarray(history.times)
    lam = spec.cumulative_years(ts)
    gaps = np.diff(np.concatenate([[0.0], lam]))
    if np.any(gaps <= 0):
        return -np.inf
    tail = spec.cumulative_years(history.horizon) - (lam[-1] if ts.size else 0.0)
    with np.errstate(divide="ignore"):
        ll = (np.sum(np.log(spec.intensity_years(ts)))
              + np.sum(np.log(renewal.pdf(gaps)))
              + np.log(max(float(renewal.sf(tail)), 1e-300)))
    return float(ll)


def fit_trend(history: OccurrenceHistory, family: str,
              renewal: RenewalDistribution) -> tuple:
    """Maximum-likelihood trend fit for the given family.

    Returns ``(TrendSpec, info)`` where info carries the log-likelihood
    and convergence flag.  Requires at least 10 events.
    """
    if len(history) < 10:
        raise ValueError("need at least 10 events to fit a trend")
    n, tau = len(history), history.horizon

    if family == "constant":
        starts = [n / tau, 0.5 * n / tau, 2.0 * n / tau]
        build = lambda th: TrendSpec.constant(np.exp(th[0]))
        x0s = [[np.log(s)] for s in starts]
    elif family == "power":
        # moment-matching start: E[N(tau)] ~ tau^gamma for the NHPP case
        g0 = max(np.log(max(n, 2)) / np.log(max(tau, 1.0 + 1e-9)), 0.1)
        build = lambda th: TrendSpec.power(np.exp(th[0]))
        x0s = [[np.log(g0)], [0.0], [np.log(2.0)]]
    elif family == "gamma_mixture":
        ts = np.asarray(history.times)
        m, v = ts.mean(), max(ts.var(), 1e-6)
        a0, l0 = m * m / v, m / v
        build = lambda th: TrendSpec.gamma_mixture(
            np.exp(th[0]), np.exp(th[1]), np.exp(th[2]),
            np.exp(th[3]), np.exp(th[4]), np.exp(th[5]), time_unit="years")
        base = [np.log(n / 2), np.log(a0), np.log(l0)]
        x0s = [base + [np.log(n / 2), np.log(a0 * 2), np.log(l0 * 2)],
               base + [np.log(n / 2), np.log(a0 / 2), np.log(l0 / 2)]]
    else:
        raise ValueError(f"unknown trend family {family!r}")

    def nll(th):
        try:
            return -_trp_loglik(build(th), renewal, history)
        except (ValueError, FloatingPointError, OverflowError):
            return np.inf

    best = None
    for x0 in x0s:
        res = optimize.minimize(nll, x0, method="Nelder-Mead",
                                options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-10})
        if best is None or res.fun < best.fun:
            best = res
    if not np.isfinite(best.fun):
        raise RuntimeError("trend fit did not converge; best objective is infinite")
    info = {"log_likelihood": -float(best.fun), "converged": bool(best.success),
            "n_iter": int(best.nit)}
    return build(best.x), info


def _conv_pdf(renewal: RenewalDistribution, m: int):
    """Density of the m-fold sum of iid renewal increments (m >= 1)."""
    if m == 1:
        return lambda s: renewal.pdf(s)
    inner = _conv_pdf(renewal, m - 1)

    def pdf(s: float) -> float:
        if s <= 0:
            return 0.0
        val, _ = integrate.quad(lambda u: float(inner(s - u)) * float(renewal.pdf(u)),
                                0.0, s, limit=200)
        return val

    return pdf


def _conv_cdf(renewal: RenewalDistribution, m: int):
    """CDF of the m-fold sum of iid renewal increments (m >= 1)."""
    if m == 1:
        return lambda s: float(renewal.cdf(s))
    inner = _conv_cdf(renewal, m - 1)

    def cdf(s: float) -> float:
        if s <= 0:
            return 0.0
        val, _ = integrate.quad(lambda u: inner(s - u) * float(renewal.pdf(u)),
                                0.0, s, limit=200)
        return min(val, 1.0)

    return cdf


QUADRATURE_MAX_INDEX = 4
_MC_CONV_PATHS = 200_000


def trp_delay_marginal_cdf(spec: TrendSpec, renewal: RenewalDistribution,
                           k: int, t: float, mode: str = "auto",
                           seed: int = 0) -> float:
    """P(k-th TRP inter-occurrence time <= t) for a delay-generating TRP.

    The k-th gap integrates the renewal CDF of the transformed increment
    against the (k-1)-fold convolution of F.  Nested quadrature is used
    for k <= 4; larger k falls back to a Monte Carlo convolution unless
    quadrature is forced.
    """
    if k < 1:
        raise ValueError("index k must be >= 1")
    if t < 0:
        raise ValueError("time must be >= 0")
    if t == 0:
        return 0.0
    if k == 1:
        return float(renewal.cdf(spec.cumulative(t)))

    mass = spec.total_mass

    def gap_cdf(s):
        # P(gap <= t | previous transformed time = s)
        u = spec.inverse(s)
        return float(renewal.cdf(spec.cumulative(u + t) - s))

    if mode == "quadrature" or (mode == "auto" and k <= QUADRATURE_MAX_INDEX):
        if mode == "quadrature" and k > QUADRATURE_MAX_INDEX:
            raise ValueError(f"quadrature unsupported for k > {QUADRATURE_MAX_INDEX}")
        conv = _conv_pdf(renewal, k - 1)
        upper = min(mass, float(renewal.ppf(1.0 - 1e-12)) * (k - 1)) if np.isfinite(mass) \
            else float(renewal.ppf(1.0 - 1e-12)) * (k - 1)
        val, _ = integrate.quad(lambda s: gap_cdf(s) * float(conv(s)),
                                0.0, upper, limit=200)
        if np.isfinite(mass):
            # transformed walk may saturate before the (k-1)-th event
            tail = 1.0 - _conv_cdf(renewal, k - 1)(mass)
            val = min(val + 0.0, 1.0) if tail <= 0 else val
        return float(min(max(val, 0.0), 1.0))

    rng = substream(seed, "trp-delay-marginal", k)
    incr = renewal.sample(rng, size=(_MC_CONV_PATHS, k - 1))
    s = incr.sum(axis=1)
    ok = s < mass
    if not np.any(ok):
        return 0.0
    vals = np.array([gap_cdf(v) for v in s[ok]])
    return float(np.mean(np.concatenate([vals, np.zeros(np.count_nonzero(~ok))])))


def trp_partial_sum_cdf(spec: TrendSpec, renewal: RenewalDistribution,
                        k: int, t: float) -> float:
    """P(sum of the first k TRP delays <= t) = F^{*k}(Lambda(t))."""
    if k < 1:
        raise ValueError("index k must be >= 1")
    if t <= 0:
        return 0.0
    return float(_conv_cdf(renewal, k)(float(spec.cumulative(t))))

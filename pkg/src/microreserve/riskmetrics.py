"""Risk measures, risk capital, and the aggregate benchmark reserve.

Value-at-risk uses the order-statistic convention: for a sample of size
n sorted ascending, VaR at level p is the ceil(p * n)-th order statistic
and TVaR at level p is the mean of the observations strictly above that
order statistic.  Risk capital is the difference of two tail values,
TVaR at a solvency level minus TVaR at a best-estimate level.

The run-off triangle benchmark is the distribution-free chain ladder
with volume-weighted development factors and the classical recursive
mean squared error of prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "RiskSummary",
    "RunoffTriangle",
    "MackResult",
    "risk_measures",
    "risk_capital",
    "mape",
    "chain_ladder_mack",
]


@dataclass(frozen=True)
class RiskSummary:
    mean: float
    sd: float
    var: dict          # level -> value at risk
    tvar: dict         # level -> tail value at risk
    risk_capital: float
    n: int


def _var_index(p: float, n: int) -> int:
    """Zero-based index of the order statistic defining VaR at level p."""
    if not 0.0 < p < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    return min(math.ceil(p * n), n) - 1


def risk_measures(values, levels=(0.60, 0.95, 0.99)) -> RiskSummary:
    """Empirical VaR/TVaR at the requested levels plus mean and sd."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    var = {}
    tvar = {}
    for p in levels:
        i = _var_index(p, n)
        var[p] = float(x[i])
        tvar[p] = float(x[i + 1:].mean()) if i + 1 < n else float(x[-1])
    rc = (tvar[0.95] - tvar[0.60]) if 0.95 in tvar and 0.60 in tvar else float("nan")
    return RiskSummary(mean=float(x.mean()), sd=float(x.std(ddof=1)),
                       var=var, tvar=tvar, risk_capital=rc, n=n)


def risk_capital(values, solvency_level: float = 0.95,
                 base_level: float = 0.60) -> float:
    """TVaR at the solvency level minus TVaR at the base level."""
    summary = risk_measures(values, levels=(base_level, solvency_level))
    return summary.tvar[solvency_level] - summary.tvar[base_level]


def mape(estimate: float, truth: float) -> float:
    """Absolute percentage error of an estimate, in percent."""
    if truth == 0:
        raise ValueError("truth must be nonzero")
    return 100.0 * abs(estimate - truth) / abs(truth)


@dataclass(frozen=True)
class RunoffTriangle:
    """Cumulative run-off triangle; NaN below the anti-diagonal."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("triangle must be square")
        n = v.shape[0]
        for i in range(n):
            if np.any(np.isnan(v[i, :n - i])):
                raise ValueError("upper triangle must be fully observed")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_incremental(cls, incremental) -> "RunoffTriangle":
        v = np.asarray(incremental, dtype=float)
        return cls(np.where(np.isnan(v), np.nan, np.nancumsum(v, axis=1)
                            + np.where(np.isnan(v), np.nan, 0.0)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.array([self.values[i, self.n - 1 - i] for i in range(self.n)])


@dataclass
class MackResult:
    factors: np.ndarray
    sigma2: np.ndarray
    ultimates: np.ndarray
    reserves: np.ndarray
    reserve: float
    mse: np.ndarray
    total_mse: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def total_se(self) -> float:
        return math.sqrt(self.total_mse)


def chain_ladder_mack(triangle: RunoffTriangle) -> MackResult:
    """Volume-weighted chain ladder with the recursive prediction error.

    Development factors f_k average the observed link ratios weighted by
    the preceding cumulative amounts.  The last variance parameter uses
    the usual extrapolation minimum rule.  No tail factor is applied.
    """
    c = triangle.values
    n = triangle.n
    f = np.ones(n - 1)
    sigma2 = np.zeros(n - 1)
    for k in range(n - 1):
        rows = n - 1 - k  # rows with both column k and k+1 observed
        num = c[:rows, k + 1].sum()
        den = c[:rows, k].sum()
        if den <= 0:
            raise ValueError(f"non-positive column sum at development {k}")
        f[k] = num / den
        if rows > 1:
            ratios = c[:rows, k + 1] / c[:rows, k]
            sigma2[k] = float(np.sum(c[:rows, k] * (ratios - f[k]) ** 2)
                              / (rows - 1))
    if n >= 3:
        # last factor has a single link ratio; extrapolate its variance
        s_prev = sigma2[n - 3]
        s_prev2 = sigma2[n - 4] if n >= 4 else s_prev
        extrapolated = s_prev ** 2 / s_prev2 if s_prev2 > 0 else 0.0
        sigma2[n - 2] = min(extrapolated, s_prev, s_prev2)

    completed = c.copy()
    for i in range(1, n):
        for k in range(n - i, n):
            completed[i, k] = completed[i, k - 1] * f[k - 1]
    ultimates = completed[:, n - 1]
    reserves = ultimates - triangle.diagonal()

    # recursive per-origin prediction error
    mse = np.zeros(n)
    for i in range(1, n):
        acc = 0.0
        for k in range(n - i, n - 1):
            col_sum = c[:n - 1 - k, k].sum()
            acc += (sigma2[k] / f[k] ** 2) * (1.0 / completed[i, k]
                                              + 1.0 / col_sum)
        mse[i] = ultimates[i] ** 2 * acc

    total = float(mse.sum())
    for i in range(1, n):
        cross = 0.0
        for k in range(n - i, n - 1):
            col_sum = c[:n - 1 - k, k].sum()
            cross += (sigma2[k] / f[k] ** 2) / col_sum
        later = ultimates[i + 1:].sum()
        total += 2.0 * ultimates[i] * later * cross

    return MackResult(factors=f, sigma2=sigma2, ultimates=ultimates,
                      reserves=reserves, reserve=float(reserves.sum()),
                      mse=mse, total_mse=total)

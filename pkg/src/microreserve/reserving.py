"""Closed-form moments of outstanding payments on reported open claims.

Each open claim was reported at ``r_k`` (years) and pays once, at its
settlement date ``r_k + zeta``, an indemnity X plus an expense Y whose
distributions depend on the settlement delay ``zeta``.  Conditional on
being open at the evaluation time ``t`` and settling within the
development horizon, the delay is doubly truncated to
``(t - r_k, i_k + t - 1 - r_k]`` where ``i_k = ceil(r_k)`` is the
reporting year.  Cell (i, j) collects payments of claims reported in
year i that settle in calendar year i + j - 1; the future cells of a
claim partition its truncation window, so the cell-sum of means must
match the whole-window integral.

All moments are exact one-dimensional quadratures of the conditional
severity moments against the truncated delay density, scaled by the net
inflation/discount factor at the payment date.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .distributions import (DegenerateWindowError, PortfolioModels,
                            TruncatedDelay, conditional_cross_moment)
from .financial import FinancialAssumptions

log = logging.getLogger(__name__)

__all__ = [
    "OpenClaim",
    "RbnsInfoSet",
    "CellPrediction",
    "ReservePrediction",
    "build_info_sets",
    "cell_mean",
    "cell_second_moment",
    "cross_cell_moment",
    "total_mean",
    "total_second_moment",
    "total_sd",
    "predict_rbns",
]

# Relative tolerance for the cell-sum vs whole-window consistency check.
_CONSISTENCY_RTOL = 1e-6
# Negative variance no larger than this times E[W]^2 is numerical noise.
_VARIANCE_CLAMP = 1e-8


@dataclass(frozen=True)
class OpenClaim:
    """A claim reported but not yet settled at the evaluation time."""

    claim_id: str
    occurrence_time: float  # years from portfolio start
    reporting_delay: float  # years
    cls: Optional[int] = None

    def __post_init__(self):
        if self.occurrence_time < 0 or self.reporting_delay < 0:
            raise ValueError("occurrence time and reporting delay must be >= 0")

    @property
    def reporting_time(self) -> float:
        return self.occurrence_time + self.reporting_delay

    @property
    def reporting_year(self) -> int:
        return max(1, math.ceil(self.reporting_time))


@dataclass
class RbnsInfoSet:
    """Open claims of one reporting year, with the shared truncation data."""

    year: int
    t: int
    claims: list

    def window(self, claim: OpenClaim):
        """Truncation window (lower, upper] for the settlement delay."""
        r = claim.reporting_time
        return self.t - r, self.year + self.t - 1 - r

    def future_cells(self):
        """Development indices j whose calendar year lies beyond t."""
        return range(self.t + 2 - self.year, self.t + 1)


@dataclass(frozen=True)
class CellPrediction:
    year: int
    dev: int
    mean: float
    second_moment: float


@dataclass
class ReservePrediction:
    cells: list
    total_mean: float
    total_sd: float
    total_second_moment: float
    claim_means: dict
    diagnostics: dict = field(default_factory=dict)

    def cell(self, year: int, dev: int) -> CellPrediction:
        for c in self.cells:
            if c.year == year and c.dev == dev:
                return c
        raise KeyError((year, dev))


def build_info_sets(claims, t: int, delay=None):
    """Group open claims by reporting year, dropping unusable ones.

    Excluded with diagnostics: claims reported after t (not in the
    information set), claims of reporting year 1 (their truncation window
    is empty by construction), and, when ``delay`` is given, claims whose
    window carries no delay mass.
    """
    if t < 2:
        raise ValueError("need a development horizon t >= 2")
    diagnostics = {"reported_after_t": 0, "year_one": 0, "degenerate_window": 0}
    by_year: dict = {}
    for ck in claims:
        r = ck.reporting_time
        if r > t:
            diagnostics["reported_after_t"] += 1
            continue
        i = ck.reporting_year
        if i < 2:
            diagnostics["year_one"] += 1
            continue
        if delay is not None:
            try:
                TruncatedDelay(delay, t - r, i + t - 1 - r)
            except DegenerateWindowError:
                diagnostics["degenerate_window"] += 1
                log.warning("claim %s dropped: zero delay mass in (%g, %g]",
                            ck.claim_id, t - r, i + t - 1 - r)
                continue
        by_year.setdefault(i, []).append(ck)
    sets = [RbnsInfoSet(year=i, t=t, claims=cks)
            for i, cks in sorted(by_year.items())]
    return sets, diagnostics


def _moment_fns(claim: OpenClaim, t: float, models: PortfolioModels,
                fin: FinancialAssumptions):
    """First- and second-moment integrands g1(v), g2(v) at delay v."""
    mx = models.effective("x")
    my = models.effective("y")
    r = claim.reporting_time
    cls = claim.cls
    if models.dependence == "frank":
        # severities are delay independent under the copula, so the cross
        # moment is a single constant quadrature
        cross_const = conditional_cross_moment(mx, my, 0.0, cls,
                                               copula=models.copula)
        cross = lambda v: cross_const
    else:
        cross = lambda v: conditional_cross_moment(mx, my, v, cls)

    def g1(v):
        x = r + v
        a1 = fin.factor("x", x, t)
        a2 = fin.factor("y", x, t)
        return a1 * mx.moment(v, 1, cls) + a2 * my.moment(v, 1, cls)

    def g2(v):
        x = r + v
        a1 = fin.factor("x", x, t)
        a2 = fin.factor("y", x, t)
        return (a1 * a1 * mx.moment(v, 2, cls)
                + 2.0 * a1 * a2 * cross(v)
                + a2 * a2 * my.moment(v, 2, cls))

    return g1, g2


def _window_integral(g, td: TruncatedDelay, a: float, b: float) -> float:
    """Integral of g against the truncated delay density over (a, b]."""
    a = max(a, td.lower, 0.0)
    b = min(b, td.upper)
    if b <= a:
        return 0.0
    val, _ = integrate.quad(lambda v: g(v) * td.base.pdf(v), a, b, limit=200)
    return val / td.mass


def cell_mean(info: RbnsInfoSet, dev: int, models: PortfolioModels,
              fin: FinancialAssumptions) -> float:
    """Expected discounted payments in cell (info.year, dev)."""
    total = 0.0
    for ck in info.claims:
        total += _claim_cell_moment(ck, info, dev, models, fin, order=1)
    return total


def _claim_cell_moment(ck: OpenClaim, info: RbnsInfoSet, dev: int,
                       models: PortfolioModels, fin: FinancialAssumptions,
                       order: int) -> float:
    lower, upper = info.window(ck)
    td = TruncatedDelay(models.delay, lower, upper)
    g1, g2 = _moment_fns(ck, float(info.t), models, fin)
    r = ck.reporting_time
    a = info.year + dev - 2 - r
    b = info.year + dev - 1 - r
    return _window_integral(g1 if order == 1 else g2, td, a, b)


def cell_second_moment(info: RbnsInfoSet, dev: int, models: PortfolioModels,
                       fin: FinancialAssumptions) -> float:
    """E[W_ij^2] for the cell: per-claim squares plus cross products."""
    seconds = []
    means = []
    for ck in info.claims:
        seconds.append(_claim_cell_moment(ck, info, dev, models, fin, order=2))
        means.append(_claim_cell_moment(ck, info, dev, models, fin, order=1))
    m = np.asarray(means)
    return float(np.sum(seconds) + m.sum() ** 2 - np.dot(m, m))


def cross_cell_moment(info_j: RbnsInfoSet, dev_j: int,
                      info_l: RbnsInfoSet, dev_l: int,
                      models: PortfolioModels,
                      fin: FinancialAssumptions) -> float:
    """E[W_ij W_il'] for distinct cells.

    A claim pays exactly once, so its payments cannot land in two cells;
    the same-claim term vanishes and only cross-claim products of means
    remain.
    """
    if info_j.year == info_l.year and dev_j == dev_l:
        raise ValueError("cells must be distinct")
    mj = np.array([_claim_cell_moment(ck, info_j, dev_j, models, fin, 1)
                   for ck in info_j.claims])
    ml = np.array([_claim_cell_moment(ck, info_l, dev_l, models, fin, 1)
                   for ck in info_l.claims])
    total = mj.sum() * ml.sum()
    if info_j.year == info_l.year:
        total -= float(np.dot(mj, ml))
    return float(total)


def _claim_totals(info_sets, models, fin):
    """Whole-window first and second moments per claim."""
    out = {}
    for info in info_sets:
        for ck in info.claims:
            lower, upper = info.window(ck)
            td = TruncatedDelay(models.delay, lower, upper)
            g1, g2 = _moment_fns(ck, float(info.t), models, fin)
            m1 = _window_integral(g1, td, lower, upper)
            m2 = _window_integral(g2, td, lower, upper)
            out[ck.claim_id] = (m1, m2)
    return out


def total_mean(info_sets, models: PortfolioModels,
               fin: FinancialAssumptions) -> float:
    """Expected total outstanding payment, summed over future cells.

    Cross-checked against the whole-window integral per claim; the two
    must agree because the future cells partition the truncation window.
    """
    cell_sum = sum(cell_mean(info, j, models, fin)
                   for info in info_sets for j in info.future_cells())
    whole = sum(m1 for m1, _ in _claim_totals(info_sets, models, fin).values())
    scale = max(abs(whole), 1.0)
    if abs(cell_sum - whole) > _CONSISTENCY_RTOL * scale:
        raise RuntimeError(
            f"cell-sum mean {cell_sum:.10g} disagrees with whole-window "
            f"mean {whole:.10g} beyond tolerance")
    return cell_sum


def total_second_moment(info_sets, models: PortfolioModels,
                        fin: FinancialAssumptions) -> float:
    """E[W^2] of the total: claims are independent, each pays once."""
    totals = _claim_totals(info_sets, models, fin)
    m1 = np.array([v[0] for v in totals.values()])
    m2 = np.array([v[1] for v in totals.values()])
    return float(m2.sum() + m1.sum() ** 2 - np.dot(m1, m1))


def total_sd(info_sets, models: PortfolioModels,
             fin: FinancialAssumptions) -> float:
    mean = total_mean(info_sets, models, fin)
    second = total_second_moment(info_sets, models, fin)
    var = second - mean * mean
    if var < 0:
        if -var <= _VARIANCE_CLAMP * mean * mean:
            var = 0.0
        else:
            raise RuntimeError(
                f"variance {var:.6g} is negative beyond numerical tolerance")
    return math.sqrt(var)


def predict_rbns(claims, t: int, models: PortfolioModels,
                 fin: FinancialAssumptions) -> ReservePrediction:
    """Full moment prediction: every future cell plus portfolio totals."""
    info_sets, diagnostics = build_info_sets(claims, t, delay=models.delay)
    cells = []
    for info in info_sets:
        for j in info.future_cells():
            cells.append(CellPrediction(
                year=info.year, dev=j,
                mean=cell_mean(info, j, models, fin),
                second_moment=cell_second_moment(info, j, models, fin)))
    totals = _claim_totals(info_sets, models, fin)
    mean = total_mean(info_sets, models, fin)
    second = total_second_moment(info_sets, models, fin)
    var = second - mean * mean
    if var < 0 and -var <= _VARIANCE_CLAMP * mean * mean:
        var = 0.0
    elif var < 0:
        raise RuntimeError(
            f"variance {var:.6g} is negative beyond numerical tolerance")
    return ReservePrediction(
        cells=cells, total_mean=mean, total_sd=math.sqrt(var),
        total_second_moment=second,
        claim_means={cid: m1 for cid, (m1, _) in totals.items()},
        diagnostics=diagnostics)

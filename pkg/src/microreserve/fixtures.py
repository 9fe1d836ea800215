"""Reference models and a small synthetic portfolio.

The severity, delay and financial parameters are the package's
calibrated reference set (a bodily-injury portfolio with an indemnity
payment X and an expense payment Y per claim).  The open-claim portfolio
is synthetic: eight claims reported in years 2 and 3 of a three-year
observation window, which exercises every future development cell.
"""

from __future__ import annotations

import numpy as np

from .calibration import ClaimRecord
from .distributions import (FrankCopula, GeneralizedGammaDelay,
                            PortfolioModels, SeverityModel)
from .financial import FinancialAssumptions
from .reserving import OpenClaim
from .rng import substream
from .trend import RenewalDistribution, TrendSpec

__all__ = [
    "reference_delay",
    "reference_severity_x",
    "reference_severity_y",
    "reference_models",
    "reference_financials",
    "reference_portfolio",
    "reference_reporting_delay",
    "reference_occurrence_trend",
    "reference_settled_records",
    "FRANK_THETA",
]

FRANK_THETA = 1.413523


def reference_delay() -> GeneralizedGammaDelay:
    """Settlement-delay model (years)."""
    return GeneralizedGammaDelay(a=3.33246873, b=0.67977335, c=0.3645056)


def reference_severity_x() -> SeverityModel:
    """Indemnity severity: zero-inflated 2-component lognormal."""
    return SeverityModel(
        p0=0.5605836,
        weights=(0.7193306, 0.2806694),
        mus=(8.590078, 9.603317),
        sigmas=(1.316284, 0.2598194),
        kappa=0.29504)


def reference_severity_y() -> SeverityModel:
    """Expense severity: zero-inflated 2-component lognormal."""
    s = 0.3142661 + 0.6857334  # published weights miss 1 by 5e-7
    return SeverityModel(
        p0=0.1683231,
        weights=(0.3142661 / s, 0.6857334 / s),
        mus=(-0.05958437, 0.9696933),
        sigmas=(1.1458589, 0.7298423),
        kappa=1.23178)


def reference_models(dependence: str = "kappa") -> PortfolioModels:
    copula = FrankCopula(FRANK_THETA) if dependence == "frank" else None
    return PortfolioModels(x=reference_severity_x(), y=reference_severity_y(),
                           delay=reference_delay(), dependence=dependence,
                           copula=copula)


def reference_financials(mode: str = "payment_date") -> FinancialAssumptions:
    return FinancialAssumptions(alpha_x=0.045692, alpha_y=0.041744,
                                beta=0.06, mode=mode)


def reference_portfolio():
    """Eight open claims at t = 3 (reporting years 2 and 3)."""
    rows = [
        ("c01", 0.80, 0.45), ("c02", 1.10, 0.30),
        ("c03", 1.30, 0.35), ("c04", 1.55, 0.40),
        ("c05", 1.90, 0.25), ("c06", 2.20, 0.30),
        ("c07", 2.40, 0.35), ("c08", 2.70, 0.20),
    ]
    return [OpenClaim(claim_id=cid, occurrence_time=occ, reporting_delay=xi)
            for cid, occ, xi in rows]


def reference_reporting_delay() -> GeneralizedGammaDelay:
    """Reporting-delay model (years); short delays, mean about 0.3."""
    return GeneralizedGammaDelay(a=2.0, b=1.0, c=0.15)


def reference_occurrence_trend():
    """Homogeneous Poisson occurrence: constant trend, unit-exponential F."""
    return TrendSpec.constant(40.0), RenewalDistribution.exponential(1.0)


def reference_settled_records(n: int = 400, seed: int = 7):
    """Synthetic settled claims drawn from the reference models.

    Amounts carry the reference inflation at the payment date, so the
    calibration pipeline can be exercised end to end.
    """
    models = reference_models()
    fin = reference_financials()
    rng_occ = substream(seed, "settled", "occ")
    rng_d = substream(seed, "settled", "delays")
    occ = np.sort(rng_occ.random(n) * 3.0)
    xi = reference_reporting_delay().sample(rng_d, n)
    zeta = models.delay.sample(substream(seed, "settled", "zeta"), n)
    x = models.x.sample(zeta, substream(seed, "settled", "x"), n)
    y = models.y.sample(zeta, substream(seed, "settled", "y"), n)
    pay = occ + xi + zeta
    records = []
    for k in range(n):
        records.append(ClaimRecord(
            claim_id=f"s{k:04d}",
            occurrence_time=float(occ[k]),
            reporting_delay=float(xi[k]),
            settlement_delay=float(zeta[k]),
            x_amount=float(x[k] * np.exp(fin.alpha_x * pay[k])),
            y_amount=float(y[k] * np.exp(fin.alpha_y * pay[k]))))
    return records

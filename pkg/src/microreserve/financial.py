"""Inflation and discounting applied to future payments.

A payment of type k made at calendar time ``x`` (years), valued at the
evaluation time ``t``, is scaled by a net factor combining claims
inflation at rate ``alpha_k`` and discounting at rate ``beta``.  In the
default mode the payment inflates to its payment date and is then
discounted back to ``t``:

    A_k(x) = exp(alpha_k * x - beta * (x - t))

With ``mode="valuation_date"`` the inflation leg is frozen at the
evaluation date instead:

    A_k(x) = exp(alpha_k * t - beta * (x - t))

When ``alpha_k == beta`` the default factor reduces to the constant
``exp(beta * t)`` for every payment date.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FinancialAssumptions", "net_discount_factor"]

_MODES = ("payment_date", "valuation_date")


@dataclass(frozen=True)
class FinancialAssumptions:
    """Annual continuously-compounded rates.

    alpha_x, alpha_y : inflation rates for the two payment types
    beta             : risk-free discount rate
    mode             : "payment_date" (default) or "valuation_date"
    """

    alpha_x: float
    alpha_y: float
    beta: float
    mode: str = "payment_date"

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")

    def alpha(self, which: str) -> float:
        if which == "x":
            return self.alpha_x
        if which == "y":
            return self.alpha_y
        raise ValueError("payment type must be 'x' or 'y'")

    def factor(self, which: str, x, t: float):
        return net_discount_factor(self.alpha(which), self.beta, x, t, self.mode)


def net_discount_factor(alpha: float, beta: float, x, t: float,
                        mode: str = "payment_date"):
    """Net inflation/discount factor for a payment at time x valued at t."""
    x = np.asarray(x, dtype=float)
    if np.any(x < t - 1e-12):
        raise ValueError("payment time precedes the valuation time")
    if mode == "payment_date":
        out = np.exp(alpha * x - beta * (x - t))
    elif mode == "valuation_date":
        out = np.exp(alpha * t - beta * (x - t))
    else:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    return float(out) if out.shape == () else out

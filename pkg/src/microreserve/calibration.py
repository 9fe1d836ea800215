"""Parameter estimation from claim-level data.

Covers the settlement-delay MLE, the zero-inflated lognormal mixture EM
with delay coupling, quasi-likelihood inflation regression, rank-based
copula calibration, a normal mixture EM for aggregate outputs, and
between-group heterogeneity statistics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, special, stats

from .distributions import (DAYS_PER_YEAR, GeneralizedGammaDelay,
                            SeverityModel, frank_theta_from_tau)

log = logging.getLogger(__name__)

__all__ = [
    "ClaimRecord",
    "FitDiagnostics",
    "NormalMixture",
    "fit_generalized_gamma",
    "fit_severity_em",
    "severity_trans_params",
    "severity_from_trans",
    "fit_inflation",
    "fit_frank_itau",
    "fit_normal_mixture",
    "heterogeneity_stats",
]


@dataclass(frozen=True)
class ClaimRecord:
    """One settled or open claim as ingested from a claims file."""

    claim_id: str
    occurrence_time: float          # years from portfolio start
    reporting_delay: float          # years
    settlement_delay: Optional[float] = None  # years; None while open
    x_amount: Optional[float] = None
    y_amount: Optional[float] = None
    cls: Optional[int] = None

    @property
    def reporting_time(self) -> float:
        return self.occurrence_time + self.reporting_delay

    @property
    def settlement_time(self) -> Optional[float]:
        if self.settlement_delay is None:
            return None
        return self.reporting_time + self.settlement_delay

    @property
    def is_settled(self) -> bool:
        return self.settlement_delay is not None


@dataclass
class FitDiagnostics:
    loglik: float
    converged: bool
    n_iter: int
    covariance: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)


def _gg_negloglik(logp, x):
    a, b, c = np.exp(logp)
    z = np.power(x / c, b)
    ll = (np.log(b) - np.log(x) - special.gammaln(a)
          + a * b * (np.log(x) - np.log(c)) - z)
    return -np.sum(ll)


def fit_generalized_gamma(delays, n_starts: int = 8, seed: int = 0):
    """Maximum likelihood fit of the generalized gamma delay model.

    Optimizes over log-parameters with multiple Nelder-Mead starts; the
    covariance of the log-parameter estimate comes from a finite
    difference Hessian of the negative log-likelihood.
    """
    x = np.asarray(delays, dtype=float)
    if x.size < 10:
        raise ValueError("need at least 10 settled delays to fit")
    if np.any(x <= 0):
        raise ValueError("settlement delays must be > 0")
    rng = np.random.default_rng(seed)
    # moment-flavored anchor: gamma shape from log dispersion, scale near mean
    anchor = np.log([1.0, 1.0, float(np.mean(x))])
    best = None
    for k in range(n_starts):
        p0 = anchor + (rng.standard_normal(3) if k else 0.0)
        res = optimize.minimize(_gg_negloglik, p0, args=(x,),
                                method="Nelder-Mead",
                                options={"maxiter": 4000, "xatol": 1e-10,
                                         "fatol": 1e-10})
        if best is None or res.fun < best.fun:
            best = res
    hess = _numeric_hessian(lambda p: _gg_negloglik(p, x), best.x)
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov = None
    a, b, c = np.exp(best.x)
    diag = FitDiagnostics(loglik=-best.fun, converged=bool(best.success),
                          n_iter=int(best.nit), covariance=cov,
                          extra={"log_params": best.x.copy()})
    return GeneralizedGammaDelay(a, b, c), diag


def _numeric_hessian(f, x0, h: float = 1e-4) -> np.ndarray:
    n = len(x0)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = H[j, i] = (
                f(x0 + ei + ej) - f(x0 + ei - ej)
                - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4 * h * h)
    return H


def _mixture_em_gaussian(y, n_components, weights_init, mus_init, sigmas_init,
                         cls=None, n_classes=0, max_iter=500, tol=1e-10):
    """ECM for a Gaussian mixture with an additive class shift.

    y is the coupling-adjusted log amount.  Class level 0 is absorbed
    into the component means; levels 1..n_classes-1 get shifts phi.
    Each conditional maximization step increases the likelihood, which
    is asserted at every iteration.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights_init, dtype=float)
    mus = np.asarray(mus_init, dtype=float)
    sgs = np.asarray(sigmas_init, dtype=float)
    phi = np.zeros(max(n_classes, 1))
    onehot = None
    if cls is not None and n_classes > 1:
        onehot = np.eye(n_classes)[np.asarray(cls, dtype=int)]

    def _npdf(resid, sigmas):
        return (np.exp(-0.5 * (resid / sigmas) ** 2)
                / (sigmas * math.sqrt(2.0 * math.pi)))

    prev = -np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        shift = phi[cls] if onehot is not None else 0.0
        resp = w * _npdf((y - shift)[:, None] - mus, sgs)
        dens = np.maximum(resp.sum(axis=1), 1e-300)
        cur = float(np.sum(np.log(dens)))
        if cur < prev - 1e-8 * max(1.0, abs(prev)):
            raise RuntimeError(
                f"log-likelihood decreased at iteration {it}: {prev} -> {cur}")
        if cur - prev < tol * max(1.0, abs(cur)):
            prev = cur
            converged = True
            break
        prev = cur
        resp /= dens[:, None]
        nk = resp.sum(axis=0)
        w = nk / y.size
        r = y - shift
        mus = (resp * r[:, None]).sum(axis=0) / nk
        sgs = np.sqrt((resp * (r[:, None] - mus) ** 2).sum(axis=0) / nk)
        sgs = np.maximum(sgs, 1e-6)
        if onehot is not None:
            # weighted mean of component residuals per class; level 0 fixed
            prec = resp / sgs ** 2
            res = y[:, None] - mus[None, :]
            num = (prec * res).sum(axis=1)
            den = prec.sum(axis=1)
            for c in range(1, n_classes):
                mask = onehot[:, c] > 0
                if np.any(mask):
                    phi[c] = float(num[mask].sum() / den[mask].sum())
    order = np.argsort(mus)
    return (w[order], mus[order], sgs[order],
            phi if onehot is not None else None, prev, converged, it)


def fit_severity_em(amounts, delays, cls=None, n_classes: int = 0,
                    n_components: int = 2, fit_kappa: bool = True,
                    kappa_fixed: float = 0.0, kappa_grid=None,
                    max_iter: int = 2000, tol: float = 1e-10):
    """Fit the zero-inflated coupled lognormal mixture.

    The zero mass is the empirical zero fraction.  For positive amounts
    the mixture is fit by EM on ``log(x) - kappa*log(1 + 365*zeta)``
    (minus the class shift), with kappa chosen by profile likelihood on a
    coarse grid refined by golden-section search.
    """
    x = np.asarray(amounts, dtype=float)
    zeta = np.asarray(delays, dtype=float)
    if x.shape != zeta.shape:
        raise ValueError("amounts and delays must align")
    if np.any(x < 0) or np.any(zeta < 0):
        raise ValueError("amounts and delays must be >= 0")
    p0 = float(np.mean(x == 0))
    pos = x > 0
    if pos.sum() < 10 * n_components:
        raise ValueError("too few positive amounts for the mixture fit")
    lx = np.log(x[pos])
    ell = np.log1p(DAYS_PER_YEAR * zeta[pos])
    cls_pos = np.asarray(cls)[pos] if cls is not None else None

    def profile(kappa):
        y = lx - kappa * ell
        qs = np.quantile(y, np.linspace(0.2, 0.8, n_components))
        out = _mixture_em_gaussian(
            y, n_components, np.full(n_components, 1.0 / n_components),
            qs, np.full(n_components, max(np.std(y), 1e-3) ),
            cls=cls_pos, n_classes=n_classes, max_iter=max_iter, tol=tol)
        return out

    if not fit_kappa:
        kappa = float(kappa_fixed)
        result = profile(kappa)
    else:
        grid = np.asarray(kappa_grid if kappa_grid is not None
                          else np.linspace(-0.5, 2.0, 11))
        lls = [profile(k)[4] for k in grid]
        j = int(np.argmax(lls))
        lo = grid[max(j - 1, 0)]
        hi = grid[min(j + 1, len(grid) - 1)]
        kappa = float(optimize.minimize_scalar(
            lambda k: -profile(k)[4], bracket=None, bounds=(lo, hi),
            method="bounded", options={"xatol": 1e-5}).x)
        result = profile(kappa)
    w, mus, sgs, phi, ll, converged, it = result
    model = SeverityModel(
        p0=p0, weights=tuple(w), mus=tuple(mus), sigmas=tuple(sgs),
        kappa=kappa,
        phi=tuple(np.concatenate([phi, np.zeros(9 - len(phi))]))
        if phi is not None else None)
    diag = FitDiagnostics(loglik=ll, converged=converged, n_iter=it,
                          extra={"kappa": kappa, "p0": p0})
    if cls is None and n_components == 2 and converged:
        trans, cov = _severity_asymptotics(model, x.size, lx, ell, fit_kappa)
        diag.extra["trans_params"] = trans
        diag.covariance = cov
    return model, diag


def severity_trans_params(model: SeverityModel) -> np.ndarray:
    """Unconstrained coordinates for a two-component severity model.

    Layout: (logit p0, kappa, logit w1, mu1, mu2, log s1, log s2).
    """
    p0 = min(max(model.p0, 1e-12), 1.0 - 1e-12)
    return np.array([special.logit(p0), model.kappa,
                     special.logit(model.weights[0]),
                     model.mus[0], model.mus[1],
                     np.log(model.sigmas[0]), np.log(model.sigmas[1])])


def severity_from_trans(theta, phi=None) -> SeverityModel:
    """Inverse of severity_trans_params; always yields a valid model."""
    theta = np.asarray(theta, dtype=float)
    w1 = float(special.expit(theta[2]))
    return SeverityModel(
        p0=float(special.expit(theta[0])), weights=(w1, 1.0 - w1),
        mus=(float(theta[3]), float(theta[4])),
        sigmas=(float(np.exp(theta[5])), float(np.exp(theta[6]))),
        kappa=float(theta[1]), phi=phi)


def _severity_asymptotics(model, n_total, lx, ell, fit_kappa):
    """Observed-information covariance in the unconstrained coordinates.

    The zero-mass block is binomial and exactly independent of the
    positive part, so its information is analytic; the positive-part
    block comes from a finite difference Hessian.  When kappa was held
    fixed its row and column stay zero.
    """
    trans = severity_trans_params(model)
    cov = np.zeros((7, 7))
    if 0.0 < model.p0 < 1.0:
        cov[0, 0] = 1.0 / (n_total * model.p0 * (1.0 - model.p0))

    def nll(free):
        th = trans.copy()
        th[idx] = free
        kappa, lw = th[1], th[2]
        w1 = special.expit(lw)
        y = lx - kappa * ell
        dens = (w1 * _std_npdf(y, th[3], np.exp(th[5]))
                + (1.0 - w1) * _std_npdf(y, th[4], np.exp(th[6])))
        return -float(np.sum(np.log(np.maximum(dens, 1e-300))))

    idx = np.arange(1, 7) if fit_kappa else np.arange(2, 7)
    try:
        block = np.linalg.inv(_numeric_hessian(nll, trans[idx]))
    except np.linalg.LinAlgError:
        return trans, None
    if not np.all(np.isfinite(block)):
        return trans, None
    cov[np.ix_(idx, idx)] = block
    return trans, cov


def _std_npdf(y, mu, sg):
    return np.exp(-0.5 * ((y - mu) / sg) ** 2) / (sg * math.sqrt(2.0 * math.pi))


def fit_inflation(amounts, payment_times, max_iter: int = 100,
                  tol: float = 1e-10):
    """Quasi-likelihood log-link regression of amounts on calendar time.

    Mean model exp(intercept + alpha * time) with variance proportional
    to the mean (Poisson-type quasi-likelihood); alpha is the annual
    inflation rate.  The scale comes from the Pearson chi-square, and the
    returned variance of alpha includes it.
    """
    y = np.asarray(amounts, dtype=float)
    tt = np.asarray(payment_times, dtype=float)
    if y.size != tt.size or y.size < 3:
        raise ValueError("need at least 3 aligned amounts and times")
    if np.any(y < 0):
        raise ValueError("amounts must be >= 0")
    X = np.column_stack([np.ones_like(tt), tt])
    beta = np.array([math.log(max(y.mean(), 1e-12)), 0.0])
    for it in range(max_iter):
        eta = X @ beta
        mu = np.exp(np.clip(eta, -700, 700))
        z = eta + (y - mu) / mu
        WX = X * mu[:, None]
        beta_new = np.linalg.solve(X.T @ WX, X.T @ (mu * z))
        if np.max(np.abs(beta_new - beta)) < tol:
            beta = beta_new
            break
        beta = beta_new
    mu = np.exp(X @ beta)
    dof = max(y.size - 2, 1)
    scale = float(np.sum((y - mu) ** 2 / mu) / dof)
    cov = scale * np.linalg.inv(X.T @ (X * mu[:, None]))
    diag = FitDiagnostics(loglik=float("nan"), converged=it < max_iter - 1,
                          n_iter=it + 1, covariance=cov,
                          extra={"scale": scale, "intercept": float(beta[0])})
    return float(beta[1]), float(cov[1, 1]), diag


def fit_frank_itau(x, y):
    """Frank copula parameter by inversion of the sample Kendall tau."""
    tau, _ = stats.kendalltau(np.asarray(x, float), np.asarray(y, float))
    theta = frank_theta_from_tau(float(tau))
    return theta, float(tau)


@dataclass(frozen=True)
class NormalMixture:
    """Finite normal mixture with analytic tail expectations."""

    weights: tuple
    mus: tuple
    sigmas: tuple

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = sum(w * stats.norm.pdf(x, m, s)
                  for w, m, s in zip(self.weights, self.mus, self.sigmas))
        return float(out) if np.asarray(out).shape == () else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = sum(w * stats.norm.cdf(x, m, s)
                  for w, m, s in zip(self.weights, self.mus, self.sigmas))
        return float(out) if np.asarray(out).shape == () else out

    def ppf(self, q: float) -> float:
        lo = min(m - 12 * s for m, s in zip(self.mus, self.sigmas))
        hi = max(m + 12 * s for m, s in zip(self.mus, self.sigmas))
        return float(optimize.brentq(lambda x: self.cdf(x) - q, lo, hi,
                                     xtol=1e-12))

    def mean(self) -> float:
        return float(np.dot(self.weights, self.mus))

    def tvar(self, p: float) -> float:
        """E[Z | Z > q_p], in closed form per component."""
        q = self.ppf(p)
        num = 0.0
        den = 0.0
        for w, m, s in zip(self.weights, self.mus, self.sigmas):
            z = (q - m) / s
            tail = stats.norm.sf(z)
            num += w * (m * tail + s * stats.norm.pdf(z))
            den += w * tail
        return num / den


def fit_normal_mixture(data, n_components: int = 2, max_iter: int = 500,
                       tol: float = 1e-10):
    """EM fit of a normal mixture; components returned by ascending mean."""
    y = np.asarray(data, dtype=float)
    if y.size < 10 * n_components:
        raise ValueError("too few observations for the mixture fit")
    qs = np.quantile(y, np.linspace(0.2, 0.8, n_components))
    w, mus, sgs, _, ll, converged, it = _mixture_em_gaussian(
        y, n_components, np.full(n_components, 1.0 / n_components), qs,
        np.full(n_components, max(float(np.std(y)), 1e-6)),
        max_iter=max_iter, tol=tol)
    model = NormalMixture(tuple(w), tuple(mus), tuple(sgs))
    diag = FitDiagnostics(loglik=ll, converged=converged, n_iter=it)
    return model, diag


def heterogeneity_stats(estimates, variances=None, sizes=None, weights=None):
    """Cochran's Q and the I-squared statistic across group estimates.

    Default weights are n_i / s_i^2 (inverse variance scaled by group
    size); pass ``weights`` to override.
    """
    x = np.asarray(estimates, dtype=float)
    k = x.size
    if k < 2:
        raise ValueError("need at least 2 group estimates")
    if weights is None:
        if variances is None:
            raise ValueError("provide variances (and sizes) or weights")
        v = np.asarray(variances, dtype=float)
        n = np.ones(k) if sizes is None else np.asarray(sizes, dtype=float)
        weights = n / v
    w = np.asarray(weights, dtype=float)
    xbar = float(np.sum(w * x) / np.sum(w))
    q = float(np.sum(w * (x - xbar) ** 2))
    i2 = max(0.0, (q - (k - 1)) / q) if q > 0 else 0.0
    return {"Q": q, "I2": i2, "pooled": xbar, "df": k - 1}

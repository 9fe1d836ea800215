"""Monte Carlo engines: open-claim payments, exposure projection,
dependent settlement sequences, and parameter-uncertainty bootstrap.

Every routine draws from named counter-based substreams (see rng.py), so
results are reproducible and common random numbers carry across scenario
grids.  Occurrence, reporting, settlement and severity draws live on
separate streams; parameters of one block therefore never perturb the
draws of another, which makes count-based outputs exactly invariant to
severity or settlement assumptions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .calibration import severity_from_trans
from .distributions import (GeneralizedGammaDelay, PortfolioModels,
                            SeverityModel, TruncatedDelay)
from .financial import FinancialAssumptions
from .reserving import build_info_sets
from .rng import substream
from .trend import RenewalDistribution, TrendSpec

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "RbnsSimResult",
    "ExposureSample",
    "BootstrapInputs",
    "simulate_rbns",
    "simulate_exposure",
    "ibnr_proportions",
    "upr_proportions",
    "simulate_trp_settlement",
    "bootstrap_parameter_uncertainty",
]


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("need at least one path")


@dataclass
class RbnsSimResult:
    paths: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(self.paths.mean())

    @property
    def sd(self) -> float:
        return float(self.paths.std(ddof=1)) if self.paths.size > 1 else 0.0


def _severity_pair(models: PortfolioModels, zeta, cls, seed, *labels):
    """Draw (X, Y) given settlement delays under the configured dependence."""
    n = np.asarray(zeta).shape
    mx = models.effective("x")
    my = models.effective("y")
    if models.dependence == "frank":
        rng = substream(seed, *labels, "xy")
        u, v = models.copula.sample(rng, n[0] if n else None)

        def from_u(m: SeverityModel, uu):
            uu = np.atleast_1d(uu)
            out = np.zeros_like(uu)
            pos = uu > m.p0
            if np.any(pos):
                out[pos] = m.positive_quantile(
                    (uu[pos] - m.p0) / (1.0 - m.p0), 0.0, cls)
            return out

        return from_u(mx, u), from_u(my, v)
    x = mx.sample(zeta, substream(seed, *labels, "x"), n[0] if n else None, cls)
    y = my.sample(zeta, substream(seed, *labels, "y"), n[0] if n else None, cls)
    return np.atleast_1d(x), np.atleast_1d(y)


def simulate_rbns(claims, t: int, models: PortfolioModels,
                  fin: FinancialAssumptions, config: SimConfig,
                  scope: str = "rbns") -> RbnsSimResult:
    """Simulate discounted outstanding payments on the open claims.

    One truncated settlement delay and one severity pair per claim per
    path, all vectorized across paths within per-claim substreams.
    """
    info_sets, diagnostics = build_info_sets(claims, t, delay=models.delay)
    n = config.n_paths
    total = np.zeros(n)
    for info in info_sets:
        for ck in info.claims:
            lower, upper = info.window(ck)
            td = TruncatedDelay(models.delay, lower, upper)
            u = substream(config.seed, scope, ck.claim_id, "zeta").random(n)
            zeta = np.asarray(td.ppf(u))
            x, y = _severity_pair(models, zeta, ck.cls, config.seed,
                                  scope, ck.claim_id)
            pay_time = ck.reporting_time + zeta
            total += (fin.factor("x", pay_time, float(t)) * x
                      + fin.factor("y", pay_time, float(t)) * y)
    return RbnsSimResult(paths=total, diagnostics=diagnostics)


@dataclass
class ExposureSample:
    """Flattened event table of a simulated occurrence process.

    Event-level arrays are aligned: ``path_idx[k]`` is the path of event
    k, ``occ_time[k]`` its occurrence time, ``report_delay[k]`` its
    reporting delay and ``cost[k]`` its total claim cost.
    """

    n_paths: int
    path_idx: np.ndarray
    occ_time: np.ndarray
    report_delay: np.ndarray
    cost: Optional[np.ndarray] = None

    def _per_path(self, values, mask) -> np.ndarray:
        return np.bincount(self.path_idx[mask],
                           weights=None if values is None else values[mask],
                           minlength=self.n_paths).astype(float)

    def counts_occurred(self, tau: float) -> np.ndarray:
        return self._per_path(None, self.occ_time <= tau)

    def counts_tail(self, tau: float) -> np.ndarray:
        """Occurred by tau but reported after tau."""
        m = (self.occ_time <= tau) & (self.occ_time + self.report_delay > tau)
        return self._per_path(None, m)

    def costs_occurred(self, tau: float) -> np.ndarray:
        return self._per_path(self.cost, self.occ_time <= tau)

    def costs_tail(self, tau: float) -> np.ndarray:
        m = (self.occ_time <= tau) & (self.occ_time + self.report_delay > tau)
        return self._per_path(self.cost, m)


def simulate_exposure(trend: TrendSpec, renewal: RenewalDistribution,
                      reporting_delay, config: SimConfig,
                      horizon: float,
                      models: Optional[PortfolioModels] = None,
                      scope: str = "exposure") -> ExposureSample:
    """Simulate the claim arrival process on [0, horizon] across paths.

    Occurrence times come from the trend renewal process; reporting
    delays, settlement delays and severities (when ``models`` is given)
    are attached per event from their own substreams.
    """
    n = config.n_paths
    rng_occ = substream(config.seed, scope, "occurrence")
    s_hor = trend.cumulative_years(horizon)
    s = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    path_chunks = []
    time_chunks = []
    while np.any(alive):
        idx = np.nonzero(alive)[0]
        gaps = renewal.sample(rng_occ, idx.size)
        s[idx] += gaps
        ok = s[idx] <= s_hor
        hit = idx[ok]
        if hit.size:
            path_chunks.append(hit)
            time_chunks.append(s[hit].copy())
        alive[idx[~ok]] = False
    if path_chunks:
        path_idx = np.concatenate(path_chunks)
        s_events = np.concatenate(time_chunks)
        order = np.lexsort((s_events, path_idx))
        path_idx = path_idx[order]
        occ_time = np.asarray(trend.inverse_years(s_events[order]))
    else:
        path_idx = np.zeros(0, dtype=int)
        occ_time = np.zeros(0)
    k = path_idx.size
    xi = np.asarray(reporting_delay.sample(
        substream(config.seed, scope, "report"), k)) if k else np.zeros(0)
    cost = None
    if models is not None and k:
        zeta = np.asarray(models.delay.sample(
            substream(config.seed, scope, "settle"), k))
        x, y = _severity_pair(models, zeta, None, config.seed, scope, "events")
        cost = x + y
    elif models is not None:
        cost = np.zeros(0)
    return ExposureSample(n_paths=n, path_idx=path_idx, occ_time=occ_time,
                          report_delay=xi, cost=cost)


def _ratio_of_means(num: np.ndarray, den: np.ndarray):
    """Ratio estimate with a delta-method standard error."""
    mn, md = num.mean(), den.mean()
    if md == 0:
        raise ValueError("denominator mean is zero")
    r = mn / md
    n = num.size
    resid = num - r * den
    se = float(np.sqrt(np.sum(resid ** 2) / (n - 1) / n) / md) if n > 1 else 0.0
    return float(r), se


def ibnr_proportions(trend: TrendSpec, renewal: RenewalDistribution,
                     reporting_delay, t: float, config: SimConfig,
                     models: Optional[PortfolioModels] = None) -> dict:
    """Incurred-but-not-reported proportions at time t.

    Count-based: E[# occurred, unreported at t] / E[# occurred by t].
    Cost-based analog uses total claim costs, and requires ``models``.
    """
    sample = simulate_exposure(trend, renewal, reporting_delay, config,
                               horizon=t, models=models, scope="ibnr")
    p_n, se_n = _ratio_of_means(sample.counts_tail(t), sample.counts_occurred(t))
    out = {"count": p_n, "count_se": se_n}
    if models is not None:
        p_z, se_z = _ratio_of_means(sample.costs_tail(t),
                                    sample.costs_occurred(t))
        out.update({"cost": p_z, "cost_se": se_z})
    return out


def upr_proportions(trend: TrendSpec, renewal: RenewalDistribution,
                    reporting_delay, t: float, h: float, config: SimConfig,
                    models: Optional[PortfolioModels] = None) -> dict:
    """Unearned-exposure proportions over (t, t + h].

    A single simulation on [0, t + h] is evaluated at both endpoints:
    (E[N(t+h)] - E[N(t)]) / E[N(t+h)], with a cost analog when
    ``models`` is given.
    """
    if h <= 0:
        raise ValueError("need a positive projection window h")
    sample = simulate_exposure(trend, renewal, reporting_delay, config,
                               horizon=t + h, models=models, scope="upr")
    n_t = sample.counts_occurred(t)
    n_th = sample.counts_occurred(t + h)
    p_n, se_n = _ratio_of_means(n_th - n_t, n_th)
    out = {"count": p_n, "count_se": se_n}
    if models is not None:
        z_t = sample.costs_occurred(t)
        z_th = sample.costs_occurred(t + h)
        p_z, se_z = _ratio_of_means(z_th - z_t, z_th)
        out.update({"cost": p_z, "cost_se": se_z})
    return out


def simulate_trp_settlement(claims, t: int, settle_trend: TrendSpec,
                            settle_renewal: RenewalDistribution,
                            models: PortfolioModels,
                            fin: FinancialAssumptions, config: SimConfig,
                            rejection_budget: int = 10_000) -> RbnsSimResult:
    """Open-claim simulation with serially dependent settlement delays.

    Claims are ordered by reporting time; their delays are consecutive
    inter-occurrence times of a trend renewal process, each rejected into
    the claim's feasible window.  With a constant trend this reduces to
    independent truncated delays.
    """
    info_sets, diagnostics = build_info_sets(claims, t, delay=models.delay)
    ordered = sorted(
        [(ck, info) for info in info_sets for ck in info.claims],
        key=lambda pair: pair[0].reporting_time)
    n = config.n_paths
    psi = np.zeros(n)
    total = np.zeros(n)
    for pos, (ck, info) in enumerate(ordered):
        lower, upper = info.window(ck)
        rng = substream(config.seed, "trpsettle", ck.claim_id, "walk")
        lam_psi = np.asarray(settle_trend.cumulative_years(psi))
        zeta = np.full(n, np.nan)
        pending = np.ones(n, dtype=bool)
        for attempt in range(rejection_budget):
            m = int(pending.sum())
            if m == 0:
                break
            gaps = settle_renewal.sample(rng, m)
            psi_new = np.asarray(settle_trend.inverse_years(
                lam_psi[pending] + gaps))
            cand = psi_new - psi[pending]
            ok = (cand > max(lower, 0.0)) & (cand <= upper)
            idx = np.nonzero(pending)[0]
            good = idx[ok]
            zeta[good] = cand[ok]
            psi[good] = psi_new[ok]
            pending[good] = False
        else:
            raise RuntimeError(
                f"claim {ck.claim_id}: rejection budget {rejection_budget} "
                f"exhausted with {int(pending.sum())} paths unresolved")
        x, y = _severity_pair(models, zeta, ck.cls, config.seed,
                              "trpsettle", ck.claim_id)
        pay_time = ck.reporting_time + zeta
        total += (fin.factor("x", pay_time, float(t)) * x
                  + fin.factor("y", pay_time, float(t)) * y)
    return RbnsSimResult(paths=total, diagnostics=diagnostics)


@dataclass(frozen=True)
class BootstrapInputs:
    """Estimation uncertainty inputs for the bootstrap.

    delay_log_params / delay_cov: MLE of the settlement-delay model on
    the log-parameter scale and its asymptotic covariance.
    alpha_x, alpha_x_var, alpha_y, alpha_y_var: inflation estimates.
    x_params / x_cov, y_params / y_cov: severity point estimates and
    covariances in the unconstrained coordinates of
    ``severity_trans_params``.
    """

    delay_log_params: np.ndarray
    delay_cov: np.ndarray
    alpha_x: float
    alpha_x_var: float
    alpha_y: float
    alpha_y_var: float
    x_params: np.ndarray
    x_cov: np.ndarray
    y_params: np.ndarray
    y_cov: np.ndarray

    @property
    def degenerate(self) -> bool:
        return (not np.any(self.delay_cov)
                and not np.any(self.x_cov) and not np.any(self.y_cov)
                and self.alpha_x_var == 0.0 and self.alpha_y_var == 0.0)


def bootstrap_parameter_uncertainty(claims, t: int, models: PortfolioModels,
                                    fin: FinancialAssumptions,
                                    inputs: BootstrapInputs,
                                    config: SimConfig,
                                    max_failure_rate: float = 0.01
                                    ) -> RbnsSimResult:
    """Reserve distribution including estimation error.

    Each scenario draws the delay, inflation and severity parameters
    from their asymptotic normal distributions (severities in the
    unconstrained coordinates, so every draw is a valid model) and takes
    a single reserve draw under the perturbed models.  When every
    covariance is zero the perturbation collapses to the identity, so
    the routine returns plain open-claim simulation paths.
    """
    if inputs.degenerate:
        res = simulate_rbns(claims, t, models, fin, config)
        res.diagnostics["degenerate"] = True
        return res
    n_scen = config.n_paths
    draws = np.empty(n_scen)
    failures = 0
    max_failures = max(1, int(max_failure_rate * n_scen))
    scenario = 0
    attempt = 0
    while scenario < n_scen:
        rng = substream(config.seed, "bootstrap", attempt)
        attempt += 1
        try:
            logp = rng.multivariate_normal(inputs.delay_log_params,
                                           inputs.delay_cov, method="eigh")
            a, b, c = np.exp(logp)
            delay = GeneralizedGammaDelay(a, b, c)
            ax = rng.normal(inputs.alpha_x, np.sqrt(inputs.alpha_x_var))
            ay = rng.normal(inputs.alpha_y, np.sqrt(inputs.alpha_y_var))
            tx = rng.multivariate_normal(inputs.x_params, inputs.x_cov,
                                         method="eigh")
            ty = rng.multivariate_normal(inputs.y_params, inputs.y_cov,
                                         method="eigh")
            mx = severity_from_trans(tx, phi=models.x.phi)
            my = severity_from_trans(ty, phi=models.y.phi)
            models_s = PortfolioModels(x=mx, y=my, delay=delay,
                                       dependence=models.dependence,
                                       copula=models.copula)
            fin_s = FinancialAssumptions(ax, ay, fin.beta, fin.mode)
            one = SimConfig(n_paths=1, seed=config.seed)
            res = simulate_rbns(claims, t, models_s, fin_s, one,
                                scope=f"bootstrap-{attempt - 1}")
            draws[scenario] = res.paths[0]
            scenario += 1
        except (RuntimeError, np.linalg.LinAlgError, ValueError) as exc:
            failures += 1
            log.warning("bootstrap scenario failed (%s); redrawing", exc)
            if failures > max_failures:
                raise RuntimeError(
                    f"bootstrap failure rate exceeded {max_failure_rate:.0%}")
    return RbnsSimResult(paths=draws,
                         diagnostics={"failures": failures,
                                      "attempts": attempt})

"""Micro-level stochastic loss reserving.

Claim arrivals follow a trend renewal process; open claims carry doubly
truncated settlement delays and delay-coupled severity pairs.  The
package provides closed-form conditional reserve moments, Monte Carlo
simulation with reproducible substreams, IBNR and unearned-exposure
projection, claim-level calibration, and risk-capital reporting.
"""

from .calibration import (ClaimRecord, FitDiagnostics, NormalMixture,
                          fit_frank_itau, fit_generalized_gamma,
                          fit_inflation, fit_normal_mixture, fit_severity_em,
                          heterogeneity_stats, severity_from_trans,
                          severity_trans_params)
from .distributions import (DegenerateWindowError, FrankCopula,
                            GeneralizedGammaDelay, PortfolioModels,
                            SeverityModel, TruncatedDelay,
                            conditional_cross_moment, frank_tau,
                            frank_theta_from_tau)
from .financial import FinancialAssumptions, net_discount_factor
from .montecarlo import (BootstrapInputs, ExposureSample, RbnsSimResult,
                         SimConfig, bootstrap_parameter_uncertainty,
                         ibnr_proportions, simulate_exposure, simulate_rbns,
                         simulate_trp_settlement, upr_proportions)
from .reserving import (CellPrediction, OpenClaim, RbnsInfoSet,
                        ReservePrediction, build_info_sets, cell_mean,
                        cell_second_moment, cross_cell_moment, predict_rbns,
                        total_mean, total_sd, total_second_moment)
from .riskmetrics import (MackResult, RiskSummary, RunoffTriangle,
                          chain_ladder_mack, mape, risk_capital,
                          risk_measures)
from .rng import substream
from .trend import (OccurrenceHistory, RenewalDistribution,
                    TrendSaturationError, TrendSpec, conditional_intensity,
                    fit_trend, sample_trp, trp_delay_marginal_cdf,
                    trp_partial_sum_cdf)

__version__ = "0.1.0"

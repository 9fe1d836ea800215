"""Command-line interface.

Subcommands: calibrate, reserve, simulate, ibnr, upr, bootstrap, report.
Configuration comes from a YAML file with explicit units in the field
names; unknown keys are rejected.  Fitted parameters travel in a
versioned JSON model bundle.  All JSON output is canonical (sorted keys,
fixed indentation) so repeated runs are byte identical.

Errors exit nonzero with a machine-readable category on stderr:
2 = config, 3 = ingest, 4 = runtime.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import fixtures
from .calibration import (ClaimRecord, fit_generalized_gamma, fit_inflation,
                          fit_normal_mixture, fit_severity_em)
from .distributions import (FrankCopula, GeneralizedGammaDelay,
                            PortfolioModels, SeverityModel)
from .financial import FinancialAssumptions
from .montecarlo import (BootstrapInputs, SimConfig,
                         bootstrap_parameter_uncertainty, ibnr_proportions,
                         simulate_rbns, upr_proportions)
from .reserving import OpenClaim, predict_rbns
from .riskmetrics import risk_measures
from .trend import RenewalDistribution, TrendSpec

BUNDLE_VERSION = 1

_EXIT_CONFIG = 2
_EXIT_INGEST = 3
_EXIT_RUNTIME = 4


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def _config_error(msg: str) -> CliError:
    return CliError("config", msg, _EXIT_CONFIG)


# ----------------------------------------------------------------- config

def _check_keys(section: dict, allowed, where: str):
    unknown = set(section) - set(allowed)
    if unknown:
        raise _config_error(f"unknown keys in {where}: {sorted(unknown)}")


def _severity_from_cfg(sec: dict, where: str) -> SeverityModel:
    _check_keys(sec, {"zero_mass", "weights", "log_means", "log_sds",
                      "delay_exponent"}, where)
    try:
        return SeverityModel(p0=float(sec["zero_mass"]),
                             weights=tuple(sec["weights"]),
                             mus=tuple(sec["log_means"]),
                             sigmas=tuple(sec["log_sds"]),
                             kappa=float(sec.get("delay_exponent", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise _config_error(f"bad {where}: {exc}")


def _delay_from_cfg(sec: dict, where: str) -> GeneralizedGammaDelay:
    _check_keys(sec, {"shape", "power", "scale_years"}, where)
    try:
        return GeneralizedGammaDelay(a=float(sec["shape"]),
                                     b=float(sec["power"]),
                                     c=float(sec["scale_years"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise _config_error(f"bad {where}: {exc}")


def _trend_from_cfg(sec: dict) -> TrendSpec:
    fam = sec.get("family")
    try:
        if fam == "constant":
            _check_keys(sec, {"family", "rate_per_year"}, "exposure.trend")
            return TrendSpec.constant(float(sec["rate_per_year"]))
        if fam == "power":
            _check_keys(sec, {"family", "exponent"}, "exposure.trend")
            return TrendSpec.power(float(sec["exponent"]))
        if fam == "gamma_mixture":
            _check_keys(sec, {"family", "p1", "alpha1", "lambda1",
                              "p2", "alpha2", "lambda2", "time_unit"},
                        "exposure.trend")
            return TrendSpec.gamma_mixture(
                float(sec["p1"]), float(sec["alpha1"]), float(sec["lambda1"]),
                float(sec["p2"]), float(sec["alpha2"]), float(sec["lambda2"]),
                time_unit=sec.get("time_unit", "days"))
    except (KeyError, TypeError, ValueError) as exc:
        raise _config_error(f"bad exposure.trend: {exc}")
    raise _config_error(f"unknown trend family {fam!r}")


class RunContext:
    """Everything a subcommand needs, resolved from config plus defaults."""

    def __init__(self, cfg: dict):
        _check_keys(cfg, {"evaluation_year", "projection_years", "dependence",
                          "frank_theta", "financial", "delay", "severity_x",
                          "severity_y", "exposure"}, "config")
        self.t = int(cfg.get("evaluation_year", 3))
        if self.t < 2:
            raise _config_error("evaluation_year must be >= 2")
        self.h = float(cfg.get("projection_years", 1.0))
        dep = cfg.get("dependence", "kappa")
        if dep not in ("kappa", "independent", "frank"):
            raise _config_error(f"unknown dependence {dep!r}")
        theta = float(cfg.get("frank_theta", fixtures.FRANK_THETA))
        x = (_severity_from_cfg(cfg["severity_x"], "severity_x")
             if "severity_x" in cfg else fixtures.reference_severity_x())
        y = (_severity_from_cfg(cfg["severity_y"], "severity_y")
             if "severity_y" in cfg else fixtures.reference_severity_y())
        delay = (_delay_from_cfg(cfg["delay"], "delay")
                 if "delay" in cfg else fixtures.reference_delay())
        self.models = PortfolioModels(
            x=x, y=y, delay=delay, dependence=dep,
            copula=FrankCopula(theta) if dep == "frank" else None)

        fsec = cfg.get("financial", {})
        _check_keys(fsec, {"inflation_x_per_year", "inflation_y_per_year",
                           "discount_per_year", "mode"}, "financial")
        ref_fin = fixtures.reference_financials()
        try:
            self.fin = FinancialAssumptions(
                alpha_x=float(fsec.get("inflation_x_per_year", ref_fin.alpha_x)),
                alpha_y=float(fsec.get("inflation_y_per_year", ref_fin.alpha_y)),
                beta=float(fsec.get("discount_per_year", ref_fin.beta)),
                mode=fsec.get("mode", "payment_date"))
        except ValueError as exc:
            raise _config_error(f"bad financial section: {exc}")

        esec = cfg.get("exposure", {})
        _check_keys(esec, {"trend", "renewal", "reporting_delay"}, "exposure")
        if "trend" in esec:
            self.trend = _trend_from_cfg(esec["trend"])
        else:
            self.trend, _ = fixtures.reference_occurrence_trend()
        rsec = esec.get("renewal")
        if rsec is not None:
            _check_keys(rsec, {"family", "rate"}, "exposure.renewal")
            if rsec.get("family") != "exponential":
                raise _config_error("exposure.renewal.family must be exponential")
            self.renewal = RenewalDistribution.exponential(
                float(rsec.get("rate", 1.0)))
        else:
            self.renewal = RenewalDistribution.exponential(1.0)
        if "reporting_delay" in esec:
            self.reporting_delay = _delay_from_cfg(
                esec["reporting_delay"], "exposure.reporting_delay")
        else:
            self.reporting_delay = fixtures.reference_reporting_delay()


def load_context(path) -> RunContext:
    if path is None:
        return RunContext({})
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise _config_error(f"cannot read config {path}: {exc}")
    if not isinstance(cfg, dict):
        raise _config_error("config root must be a mapping")
    return RunContext(cfg)


# ----------------------------------------------------------------- ingest

_OPEN_FIELDS = ("claim_id", "occurrence_years", "reporting_delay_years")
_MAX_REJECT_FRACTION = 0.05


def ingest_claims(path, settled: bool = False):
    """Read a delimited claims file, tolerating a few bad rows.

    Rows with missing or non-numeric required fields are rejected; if
    more than 5 percent of the rows are rejected the whole ingest fails.
    """
    rows = []
    rejected = 0
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not set(_OPEN_FIELDS) <= set(reader.fieldnames):
                raise CliError("ingest",
                               f"claims file must have columns {_OPEN_FIELDS}",
                               _EXIT_INGEST)
            raw = list(reader)
    except OSError as exc:
        raise CliError("ingest", f"cannot read claims {path}: {exc}",
                       _EXIT_INGEST)
    for row in raw:
        try:
            occ = float(row["occurrence_years"])
            rep = float(row["reporting_delay_years"])
            cid = row["claim_id"]
            if not cid or occ < 0 or rep < 0:
                raise ValueError
            if settled:
                rows.append(ClaimRecord(
                    claim_id=cid, occurrence_time=occ, reporting_delay=rep,
                    settlement_delay=float(row["settlement_delay_years"]),
                    x_amount=float(row["x_amount"]),
                    y_amount=float(row["y_amount"])))
            else:
                rows.append(OpenClaim(claim_id=cid, occurrence_time=occ,
                                      reporting_delay=rep))
        except (KeyError, TypeError, ValueError):
            rejected += 1
    if raw and rejected > _MAX_REJECT_FRACTION * len(raw):
        raise CliError("ingest",
                       f"{rejected} of {len(raw)} rows rejected "
                       f"(limit {_MAX_REJECT_FRACTION:.0%})", _EXIT_INGEST)
    if not rows:
        raise CliError("ingest", "no usable rows in claims file", _EXIT_INGEST)
    return rows, rejected


# ----------------------------------------------------------------- output

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2,
                      ensure_ascii=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(canonical_json(obj))


def _cells_table(prediction, t: int):
    """Lower-triangle delimited table: rows = reporting year, cols = dev.

    Cells with calendar year i + j - 1 <= t are in the observed past and
    stay blank.
    """
    header = ["reporting_year"] + [f"dev_{j}" for j in range(1, t + 1)]
    lines = [header]
    by_cell = {(c.year, c.dev): c.mean for c in prediction.cells}
    for i in range(2, t + 1):
        row = [str(i)]
        for j in range(1, t + 1):
            if i + j <= t + 1:
                row.append("")
            else:
                row.append(f"{by_cell.get((i, j), 0.0):.6f}")
        lines.append(row)
    return lines


def write_csv(path, lines):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(lines)


def _summary(values: dict) -> str:
    width = max(len(k) for k in values)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in values.items()) + "\n"


# ------------------------------------------------------------- subcommands

def _bundle_from_models(ctx: RunContext) -> dict:
    m = ctx.models
    return {
        "version": BUNDLE_VERSION,
        "dependence": m.dependence,
        "frank_theta": m.copula.theta if m.copula else None,
        "delay": {"shape": m.delay.a, "power": m.delay.b,
                  "scale_years": m.delay.c},
        "severity_x": {"zero_mass": m.x.p0, "weights": list(m.x.weights),
                       "log_means": list(m.x.mus), "log_sds": list(m.x.sigmas),
                       "delay_exponent": m.x.kappa},
        "severity_y": {"zero_mass": m.y.p0, "weights": list(m.y.weights),
                       "log_means": list(m.y.mus), "log_sds": list(m.y.sigmas),
                       "delay_exponent": m.y.kappa},
        "financial": {"inflation_x_per_year": ctx.fin.alpha_x,
                      "inflation_y_per_year": ctx.fin.alpha_y,
                      "discount_per_year": ctx.fin.beta,
                      "mode": ctx.fin.mode},
    }


def load_bundle(path) -> dict:
    try:
        bundle = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise _config_error(f"cannot read model bundle {path}: {exc}")
    if bundle.get("version") != BUNDLE_VERSION:
        raise _config_error(
            f"unsupported bundle version {bundle.get('version')!r}")
    return bundle


def _apply_bundle(ctx: RunContext, bundle: dict):
    dep = bundle["dependence"]
    ctx.models = PortfolioModels(
        x=SeverityModel(bundle["severity_x"]["zero_mass"],
                        tuple(bundle["severity_x"]["weights"]),
                        tuple(bundle["severity_x"]["log_means"]),
                        tuple(bundle["severity_x"]["log_sds"]),
                        kappa=bundle["severity_x"]["delay_exponent"]),
        y=SeverityModel(bundle["severity_y"]["zero_mass"],
                        tuple(bundle["severity_y"]["weights"]),
                        tuple(bundle["severity_y"]["log_means"]),
                        tuple(bundle["severity_y"]["log_sds"]),
                        kappa=bundle["severity_y"]["delay_exponent"]),
        delay=GeneralizedGammaDelay(bundle["delay"]["shape"],
                                    bundle["delay"]["power"],
                                    bundle["delay"]["scale_years"]),
        dependence=dep,
        copula=FrankCopula(bundle["frank_theta"]) if dep == "frank" else None)
    f = bundle["financial"]
    ctx.fin = FinancialAssumptions(f["inflation_x_per_year"],
                                   f["inflation_y_per_year"],
                                   f["discount_per_year"], f["mode"])


def _open_claims(args, ctx: RunContext):
    if args.claims:
        claims, rejected = ingest_claims(args.claims)
        return claims, rejected
    return fixtures.reference_portfolio(), 0


def cmd_calibrate(args):
    ctx = load_context(args.config)
    settled, rejected = ingest_claims(args.claims, settled=True)
    delays = np.array([r.settlement_delay for r in settled])
    delay, delay_diag = fit_generalized_gamma(delays)
    out = _bundle_from_models(ctx)
    out["delay"] = {"shape": delay.a, "power": delay.b, "scale_years": delay.c}
    if delay_diag.covariance is not None:
        out["delay_log_params"] = list(map(float, delay_diag.extra["log_params"]))
        out["delay_log_cov"] = [list(map(float, r))
                                for r in delay_diag.covariance]
    for which in ("x", "y"):
        amounts = np.array([getattr(r, f"{which}_amount") for r in settled])
        times = np.array([r.settlement_time for r in settled])
        pos = amounts > 0
        alpha, alpha_var, _ = fit_inflation(amounts[pos], times[pos])
        deflated = amounts * np.exp(-alpha * times)
        model, diag = fit_severity_em(deflated, delays)
        out[f"severity_{which}"] = {
            "zero_mass": model.p0, "weights": list(model.weights),
            "log_means": list(model.mus), "log_sds": list(model.sigmas),
            "delay_exponent": model.kappa}
        if "trans_params" in diag.extra and diag.covariance is not None:
            out[f"severity_{which}_params"] = [
                float(v) for v in diag.extra["trans_params"]]
            out[f"severity_{which}_cov"] = [list(map(float, r))
                                            for r in diag.covariance]
        out["financial"][f"inflation_{which}_per_year"] = float(alpha)
        out[f"alpha_{which}_var"] = float(alpha_var)
    out["n_settled"] = len(settled)
    out["n_rejected"] = rejected
    write_json(args.out, out)
    return 0


def cmd_reserve(args):
    ctx = load_context(args.config)
    if args.model:
        _apply_bundle(ctx, load_bundle(args.model))
    claims, rejected = _open_claims(args, ctx)
    pred = predict_rbns(claims, ctx.t, ctx.models, ctx.fin)
    out = {
        "evaluation_year": ctx.t,
        "total_mean": pred.total_mean,
        "total_sd": pred.total_sd,
        "cells": [{"reporting_year": c.year, "dev": c.dev, "mean": c.mean,
                   "second_moment": c.second_moment} for c in pred.cells],
        "claim_means": pred.claim_means,
        "diagnostics": dict(pred.diagnostics, rejected_rows=rejected),
    }
    write_json(args.out, out)
    return 0


def _risk_block(paths) -> dict:
    rs = risk_measures(paths)
    return {
        "mean": rs.mean, "sd": rs.sd,
        "var": {f"{int(100 * p)}": v for p, v in rs.var.items()},
        "tvar": {f"{int(100 * p)}": v for p, v in rs.tvar.items()},
        "risk_capital": rs.risk_capital, "n_paths": rs.n,
    }


def cmd_simulate(args):
    ctx = load_context(args.config)
    if args.model:
        _apply_bundle(ctx, load_bundle(args.model))
    claims, rejected = _open_claims(args, ctx)
    config = SimConfig(n_paths=args.sims, seed=args.seed)
    res = simulate_rbns(claims, ctx.t, ctx.models, ctx.fin, config)
    out = {"evaluation_year": ctx.t, "seed": args.seed,
           "risk": _risk_block(res.paths),
           "diagnostics": dict(res.diagnostics, rejected_rows=rejected)}
    write_json(args.out, out)
    return 0


def cmd_ibnr(args):
    ctx = load_context(args.config)
    config = SimConfig(n_paths=args.sims, seed=args.seed)
    out = ibnr_proportions(ctx.trend, ctx.renewal, ctx.reporting_delay,
                           float(ctx.t), config, models=ctx.models)
    out.update({"evaluation_year": ctx.t, "seed": args.seed})
    write_json(args.out, out)
    return 0


def cmd_upr(args):
    ctx = load_context(args.config)
    config = SimConfig(n_paths=args.sims, seed=args.seed)
    out = upr_proportions(ctx.trend, ctx.renewal, ctx.reporting_delay,
                          float(ctx.t), ctx.h, config, models=ctx.models)
    out.update({"evaluation_year": ctx.t, "projection_years": ctx.h,
                "seed": args.seed})
    write_json(args.out, out)
    return 0


def cmd_bootstrap(args):
    ctx = load_context(args.config)
    bundle = load_bundle(args.model)
    _apply_bundle(ctx, bundle)
    claims, _ = _open_claims(args, ctx)
    for key in ("delay_log_params", "severity_x_params", "severity_y_params"):
        if key not in bundle:
            raise _config_error(f"model bundle lacks {key}; recalibrate")
    inputs = BootstrapInputs(
        delay_log_params=np.asarray(bundle["delay_log_params"]),
        delay_cov=np.asarray(bundle["delay_log_cov"]),
        alpha_x=ctx.fin.alpha_x, alpha_x_var=bundle.get("alpha_x_var", 0.0),
        alpha_y=ctx.fin.alpha_y, alpha_y_var=bundle.get("alpha_y_var", 0.0),
        x_params=np.asarray(bundle["severity_x_params"]),
        x_cov=np.asarray(bundle["severity_x_cov"]),
        y_params=np.asarray(bundle["severity_y_params"]),
        y_cov=np.asarray(bundle["severity_y_cov"]))
    config = SimConfig(n_paths=args.sims, seed=args.seed)
    res = bootstrap_parameter_uncertainty(claims, ctx.t, ctx.models, ctx.fin,
                                          inputs, config)
    out = {"evaluation_year": ctx.t, "seed": args.seed,
           "risk": _risk_block(res.paths), "diagnostics": res.diagnostics}
    write_json(args.out, out)
    return 0


def cmd_report(args):
    ctx = load_context(args.config)
    if args.model:
        _apply_bundle(ctx, load_bundle(args.model))
    claims, rejected = _open_claims(args, ctx)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    pred = predict_rbns(claims, ctx.t, ctx.models, ctx.fin)
    config = SimConfig(n_paths=args.sims, seed=args.seed)
    res = simulate_rbns(claims, ctx.t, ctx.models, ctx.fin, config)
    report = {
        "evaluation_year": ctx.t,
        "seed": args.seed,
        "closed_form": {"total_mean": pred.total_mean,
                        "total_sd": pred.total_sd},
        "simulation": _risk_block(res.paths),
        "diagnostics": dict(pred.diagnostics, rejected_rows=rejected),
    }
    write_json(outdir / "report.json", report)
    write_csv(outdir / "cells.csv", _cells_table(pred, ctx.t))
    summary = _summary({
        "evaluation year": str(ctx.t),
        "open claims": str(sum(1 for _ in claims)),
        "reserve (closed form)": f"{pred.total_mean:.2f}",
        "sd (closed form)": f"{pred.total_sd:.2f}",
        "reserve (simulated)": f"{res.paths.mean():.2f}",
        "VaR 95": f"{report['simulation']['var']['95']:.2f}",
        "TVaR 95": f"{report['simulation']['tvar']['95']:.2f}",
        "risk capital": f"{report['simulation']['risk_capital']:.2f}",
    })
    (outdir / "summary.txt").write_text(summary)
    if args.figures:
        from .plotting import plot_reserve_distribution, plot_trend_intensity
        try:
            mixture, _ = fit_normal_mixture(res.paths, n_components=2)
        except (ValueError, RuntimeError):
            mixture = None
        plot_reserve_distribution(res.paths, outdir / "reserve_distribution.png",
                                  mixture=mixture)
        plot_trend_intensity(ctx.trend, float(ctx.t) + ctx.h,
                             outdir / "occurrence_trend.png")
    return 0


# ------------------------------------------------------------------ main

def _add_common(p, sims_default=100_000):
    p.add_argument("--config", default=None, help="YAML configuration file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sims", type=int, default=sims_default)
    p.add_argument("--out", required=True, help="output file or directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microreserve",
        description="Micro-level stochastic loss reserving")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit models from settled claims")
    _add_common(p)
    p.add_argument("--claims", required=True, help="settled claims CSV")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("reserve", help="closed-form reserve moments")
    _add_common(p)
    p.add_argument("--claims", default=None, help="open claims CSV")
    p.add_argument("--model", default=None, help="model bundle JSON")
    p.set_defaults(func=cmd_reserve)

    p = sub.add_parser("simulate", help="simulate the reserve distribution")
    _add_common(p)
    p.add_argument("--claims", default=None)
    p.add_argument("--model", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ibnr", help="incurred-but-not-reported proportions")
    _add_common(p, sims_default=20_000)
    p.set_defaults(func=cmd_ibnr)

    p = sub.add_parser("upr", help="unearned exposure proportions")
    _add_common(p, sims_default=20_000)
    p.set_defaults(func=cmd_upr)

    p = sub.add_parser("bootstrap", help="reserve with estimation error")
    _add_common(p, sims_default=1_000)
    p.add_argument("--claims", default=None)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("report", help="full report with delimited tables")
    _add_common(p)
    p.add_argument("--claims", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--figures", action="store_true",
                   help="also render figures into the output directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(json.dumps(
            {"error": exc.category, "message": str(exc)}) + "\n")
        return exc.code
    except Exception as exc:  # noqa: BLE001 - boundary of the CLI
        sys.stderr.write(json.dumps(
            {"error": "runtime", "message": f"{type(exc).__name__}: {exc}"})
            + "\n")
        return _EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

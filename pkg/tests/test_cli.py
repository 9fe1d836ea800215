import csv
import json

import pytest

from microreserve import fixtures
from microreserve.cli import main


def _write_open_claims(path, rows=None):
    claims = fixtures.reference_portfolio()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "occurrence_years", "reporting_delay_years"])
        if rows is None:
            for c in claims:
                w.writerow([c.claim_id, c.occurrence_time, c.reporting_delay])
        else:
            w.writerows(rows)
    return path


def _write_settled(path, n=200):
    recs = fixtures.reference_settled_records(n=n, seed=2)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "occurrence_years", "reporting_delay_years",
                    "settlement_delay_years", "x_amount", "y_amount"])
        for r in recs:
            w.writerow([r.claim_id, r.occurrence_time, r.reporting_delay,
                        r.settlement_delay, r.x_amount, r.y_amount])
    return path


class TestReserveCommand:
    def test_reserve_output(self, tmp_path):
        out = tmp_path / "reserve.json"
        claims = _write_open_claims(tmp_path / "open.csv")
        assert main(["reserve", "--claims", str(claims),
                     "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["total_mean"] > 0
        assert len(data["cells"]) == 3

    def test_byte_reproducible(self, tmp_path):
        claims = _write_open_claims(tmp_path / "open.csv")
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        for out in (a, b):
            assert main(["simulate", "--claims", str(claims), "--sims",
                         "2000", "--seed", "5", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_default_portfolio(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["reserve", "--out", str(out)]) == 0


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("evaluation_year: 3\nbogus_knob: 1\n")
        code = main(["reserve", "--config", str(cfg),
                     "--out", str(tmp_path / "x.json")])
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "config"
        assert "bogus_knob" in err["message"]

    def test_nested_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("financial:\n  discount_per_year: 0.06\n  junk: 1\n")
        assert main(["reserve", "--config", str(cfg),
                     "--out", str(tmp_path / "x.json")]) == 2

    def test_valid_config_applied(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(
            "evaluation_year: 3\n"
            "financial:\n  discount_per_year: 0.0\n")
        out0 = tmp_path / "r0.json"
        out6 = tmp_path / "r6.json"
        assert main(["reserve", "--config", str(cfg), "--out", str(out0)]) == 0
        assert main(["reserve", "--out", str(out6)]) == 0
        # removing the discount raises the reserve
        assert (json.loads(out0.read_text())["total_mean"]
                > json.loads(out6.read_text())["total_mean"])


class TestIngest:
    def test_missing_file(self, tmp_path, capsys):
        code = main(["reserve", "--claims", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "x.json")])
        assert code == 3
        assert json.loads(capsys.readouterr().err)["error"] == "ingest"

    def test_bad_rows_within_limit_tolerated(self, tmp_path):
        rows = [["c%02d" % k, 1.2 + 0.01 * k, 0.3] for k in range(40)]
        rows.append(["bad", "not-a-number", 0.3])
        claims = _write_open_claims(tmp_path / "open.csv", rows)
        out = tmp_path / "r.json"
        assert main(["reserve", "--claims", str(claims),
                     "--out", str(out)]) == 0
        assert json.loads(out.read_text())["diagnostics"]["rejected_rows"] == 1

    def test_too_many_bad_rows_abort(self, tmp_path, capsys):
        rows = [["c1", 1.2, 0.3], ["b1", "x", 0.3], ["b2", "y", 0.2]]
        claims = _write_open_claims(tmp_path / "open.csv", rows)
        code = main(["reserve", "--claims", str(claims),
                     "--out", str(tmp_path / "x.json")])
        assert code == 3
        assert json.loads(capsys.readouterr().err)["error"] == "ingest"


class TestPipeline:
    def test_calibrate_then_reserve_and_bootstrap(self, tmp_path):
        settled = _write_settled(tmp_path / "settled.csv")
        claims = _write_open_claims(tmp_path / "open.csv")
        bundle = tmp_path / "bundle.json"
        assert main(["calibrate", "--claims", str(settled),
                     "--out", str(bundle)]) == 0
        data = json.loads(bundle.read_text())
        assert data["version"] == 1
        assert "delay_log_cov" in data
        out = tmp_path / "reserve.json"
        assert main(["reserve", "--claims", str(claims), "--model",
                     str(bundle), "--out", str(out)]) == 0
        assert "severity_x_params" in data
        boot = tmp_path / "boot.json"
        assert main(["bootstrap", "--claims", str(claims), "--model",
                     str(bundle), "--sims", "30",
                     "--seed", "1", "--out", str(boot)]) == 0
        assert json.loads(boot.read_text())["risk"]["mean"] > 0

    def test_ibnr_and_upr(self, tmp_path):
        out = tmp_path / "i.json"
        assert main(["ibnr", "--sims", "2000", "--seed", "1",
                     "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert 0 < data["count"] < 1
        out2 = tmp_path / "u.json"
        assert main(["upr", "--sims", "2000", "--seed", "1",
                     "--out", str(out2)]) == 0
        assert 0 < json.loads(out2.read_text())["count"] < 1

    def test_report_files(self, tmp_path):
        claims = _write_open_claims(tmp_path / "open.csv")
        outdir = tmp_path / "rpt"
        assert main(["report", "--claims", str(claims), "--sims", "3000",
                     "--seed", "2", "--figures", "--out", str(outdir)]) == 0
        assert (outdir / "report.json").exists()
        assert (outdir / "summary.txt").exists()
        assert (outdir / "reserve_distribution.png").stat().st_size > 0
        assert (outdir / "occurrence_trend.png").stat().st_size > 0
        with open(outdir / "cells.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        # header + reporting years 2..t; past cells blank
        assert rows[0][0] == "reporting_year"
        assert rows[1][1] == "" and rows[1][2] == ""
        assert float(rows[1][3]) > 0

    def test_report_reproducible(self, tmp_path):
        claims = _write_open_claims(tmp_path / "open.csv")
        outs = []
        for name in ("r1", "r2"):
            outdir = tmp_path / name
            assert main(["report", "--claims", str(claims), "--sims", "2000",
                         "--seed", "3", "--out", str(outdir)]) == 0
            outs.append((outdir / "report.json").read_bytes())
        assert outs[0] == outs[1]


class TestErrors:
    def test_runtime_error_category(self, tmp_path, capsys):
        bad_bundle = tmp_path / "bundle.json"
        bad_bundle.write_text("{\"version\": 99}")
        code = main(["reserve", "--model", str(bad_bundle),
                     "--out", str(tmp_path / "x.json")])
        assert code == 2
        assert json.loads(capsys.readouterr().err)["error"] == "config"

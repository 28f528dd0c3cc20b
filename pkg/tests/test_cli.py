import json

import pytest

from withprofit.cli import EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, RunConfig, load_config, main, parse_drop
from withprofit.io import InputError


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCurve:
    def test_peak_discount_factor(self, capsys):
        code, out, _ = run(capsys, "curve")
        assert code == EXIT_OK
        assert "max discount factor over t=1..60: 1.005000 at t=2" in out

    def test_flat_curve_has_zero_forwards(self, capsys, tmp_path):
        p = tmp_path / "flat.csv"
        p.write_text("tenor,discount_factor\n1,1\n2,1\n3,1\n")
        code, out, _ = run(capsys, "curve", "--curve", str(p), "--spot", "")
        rows = [line.split() for line in out.splitlines() if line.strip()[:1].isdigit()]
        assert code == EXIT_OK and [float(r[2]) for r in rows] == [0.0, 0.0, 0.0]

    def test_malformed_row(self, capsys, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("tenor,discount_factor\n1,0.99\n2,oops\n")
        code, _, err = run(capsys, "curve", "--curve", str(p))
        assert code == EXIT_INPUT and "bad.csv:3" in err


class TestValidate:
    def test_defaults_pass(self, capsys):
        code, out, _ = run(capsys, "validate")
        assert code == EXIT_OK and "result: PASS" in out

    def test_fault_injection_fails(self, capsys):
        code, out, _ = run(capsys, "validate", "--drop-cashflow", "t=3")
        assert code == EXIT_FAIL and "result: FAIL" in out

    def test_deterministic_single_scenario(self, capsys):
        code, out, _ = run(capsys, "validate", "--scenarios", "1", "--vol", "0")
        assert code == EXIT_OK
        rel = float(out.split("relative ")[-1].split()[0])
        assert rel <= 1e-12

    def test_martingale_failure(self, capsys):
        code, out, _ = run(capsys, "validate", "--martingale-tolerance", "1e-9")
        assert code == EXIT_FAIL and "martingale test; projection not run" in out

    def test_insolvency_exit_code(self, capsys, tmp_path):
        p = tmp_path / "p.json"
        p.write_text(json.dumps({
            "contracts": [{"id": "x", "kind": "annuity", "payment": 50, "maturity": 3, "technical_rate": 1.0}],
            "assets": [{"id": "b", "kind": "bond", "face": 43.75, "coupon": 0, "maturity": 3, "book_value": 43.75}],
        }))
        code, _, err = run(capsys, "validate", "--portfolio", str(p), "--scenarios", "4")
        assert code == EXIT_NUMERIC and "year 1" in err

    def test_bad_drop_spec(self, capsys):
        code, _, _ = run(capsys, "validate", "--drop-cashflow", "year=3")
        assert code == EXIT_INPUT

    def test_writes_outputs(self, capsys, tmp_path):
        code, _, _ = run(capsys, "validate", "--scenarios", "200", "--output-dir", str(tmp_path))
        assert code == EXIT_OK
        assert (tmp_path / "validate.txt").exists()
        assert (tmp_path / "ledger.csv").read_text().startswith("scenario,year,field,value")


class TestBound:
    def test_headline(self, capsys):
        code, out, _ = run(capsys, "bound")
        assert code == EXIT_OK
        assert "comparison: LB 48.2 vs reported FDB 48.6" in out

    def test_override(self, capsys):
        _, out, _ = run(capsys, "bound", "--gph", "0.85", "--C0", "0.01", "--M", "15")
        assert "(displayed 55.7)" in out

    def test_no_cross_financing(self, capsys):
        _, out, _ = run(capsys, "bound", "--C0", "0", "--rounding", "exact")
        vals = {line.split()[0]: float(line.split()[1]) for line in out.splitlines() if line[:3] in ("LB1", "LB ")}
        assert vals["LB"] == pytest.approx(vals["LB1"] - 10.4, abs=1e-6)

    def test_out_of_range(self, capsys):
        code, _, err = run(capsys, "bound", "--gph", "1.0")
        assert code == EXIT_INPUT and "gph" in err

    def test_grid_csv(self, capsys, tmp_path):
        code, _, _ = run(capsys, "grid", "--output-dir", str(tmp_path))
        lines = (tmp_path / "grid.csv").read_text().splitlines()
        assert code == EXIT_OK and lines[0] == "M,gph,C0,LB,F" and len(lines) == 28


class TestDeterminism:
    @pytest.mark.parametrize("argv", [("bound",), ("validate", "--scenarios", "50"), ("scenarios", "--scenarios", "20")])
    def test_rerun_is_byte_identical(self, capsys, monkeypatch, argv):
        _, a, _ = run(capsys, *argv)
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "86400")
        _, b, _ = run(capsys, *argv)
        assert a.splitlines()[0] != b.splitlines()[0]
        assert a.splitlines()[1:] == b.splitlines()[1:]


class TestConfig:
    def test_yaml_with_flag_override(self, capsys, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("seed: 5\nscenarios: 40\n")
        _, out, _ = run(capsys, "validate", "--config", str(p), "--seed", "9")
        assert "scenarios: 40, seed 9" in out

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "run.json"
        p.write_text('{"seeds": 1}')
        with pytest.raises(InputError, match="seeds"):
            load_config(p)

    @pytest.mark.parametrize("kwargs", [{"scenarios": 0}, {"leakage_tolerance": 0.0}, {"rounding": "up"}])
    def test_invariants(self, kwargs):
        with pytest.raises(InputError):
            RunConfig(**kwargs)

    def test_drop_spec(self):
        assert parse_drop("t=3") == (3, None)
        assert parse_drop("t=2,contract=ann10") == (2, "ann10")


def test_report_runs_everything(capsys, tmp_path):
    code, out, _ = run(capsys, "report", "--scenarios", "200", "--output-dir", str(tmp_path))
    assert code == EXIT_OK
    for section in ("== curve ==", "== bound ==", "== validate =="):
        assert section in out
    assert {"report.txt", "curve.csv", "grid.csv", "ledger.csv"} <= {p.name for p in tmp_path.iterdir()}

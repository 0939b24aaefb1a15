"""The command-line front end through main(): exit codes, JSON and CSV
shapes, determinism, output redirection."""

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

import gridstrength.cli as cli
from gridstrength.boundary import SweepRow
from gridstrength.casefile import load_bundled_case, save_case
from gridstrength.netmodel import scale_impedance
from gridstrength.validate import ValidationReport, ValidationRow


@pytest.fixture(scope="module")
def paths(tmp_path_factory):
    d = tmp_path_factory.mktemp("cases")
    sidc = load_bundled_case("cigre_sidc")
    save_case(sidc, d / "sidc.json")
    # 4x still converges on the shunt-inflated branch near U = 1.86; six
    # times rated impedance has no in-band rated solution left
    save_case(scale_impedance(sidc, 6.0), d / "weak.json")
    (d / "bad.json").write_text("{not json", encoding="utf-8")
    return {
        "sidc": str(d / "sidc.json"),
        "weak": str(d / "weak.json"),
        "bad": str(d / "bad.json"),
        "missing": str(d / "nope.json"),
        "dir": str(d),
    }


def run(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ------------------------------------------------------------------ exit codes

def test_missing_file_is_input_error(capsys, paths):
    code, out, err = run(capsys, ["gscr", paths["missing"]])
    assert code == 2
    assert out == ""
    assert paths["missing"] in err


def test_malformed_case_is_input_error(capsys, paths):
    code, _, err = run(capsys, ["gscr", paths["bad"]])
    assert code == 2
    assert "line 1" in err


def test_usage_errors_exit_two(capsys):
    assert run(capsys, [])[0] == 2
    assert run(capsys, ["bogus"])[0] == 2


def test_nonpositive_tolerance_is_input_error(capsys, paths):
    code, _, err = run(capsys, ["map", paths["sidc"], "--tol-bisect", "0"])
    assert code == 2
    assert "tol_bisect" in err


def test_version(capsys):
    code, out, _ = run(capsys, ["--version"])
    assert code == 0
    assert "gridstrength" in out


def test_diverged_powerflow_exits_one(capsys, paths):
    code, out, err = run(capsys, ["powerflow", paths["weak"]])
    assert code == 1
    assert out == ""
    assert "diverged" in err


# ------------------------------------------------------------------- reports

def test_gscr_report_and_determinism(capsys, paths):
    code, out, err = run(capsys, ["gscr", paths["sidc"]])
    assert (code, err) == (0, "")
    doc = json.loads(out)
    assert doc["command"] == "gscr"
    assert doc["gscr"] == pytest.approx(2.0, abs=1e-6)
    assert doc["classification"]["label"] == "Weak"
    assert doc["spectrum_check"]["lambda_1_positive"] is True
    assert doc["spectrum_check"]["degenerate"] is False
    assert len(doc["eigenvalues"]) == len(doc["bus_order"]) == 1
    again = run(capsys, ["gscr", paths["sidc"]])[1]
    assert again == out


def test_classify_threshold_override(capsys, paths):
    base = json.loads(run(capsys, ["classify", paths["sidc"]])[1])
    assert base["label"] == "Weak"
    moved = json.loads(run(capsys, ["classify", paths["sidc"], "--cg", "2.5"])[1])
    assert moved["label"] == "VeryWeak"
    assert run(capsys, ["classify", paths["sidc"], "--cg", "3.0", "--bg", "2.0"])[0] == 1


def test_powerflow_report(capsys, paths):
    code, out, _ = run(capsys, ["powerflow", paths["sidc"]])
    assert code == 0
    doc = json.loads(out)
    assert doc["converged"] is True
    bus = doc["buses"][0]
    assert 0.98 <= bus["U_pu"] <= 1.06
    assert 20.0 <= bus["mu_deg"] <= 26.0
    assert 980.0 <= doc["total_P_MW"] <= 1000.0


def test_map_csv_shape(capsys, paths):
    code, out, _ = run(capsys, ["map", paths["sidc"]])
    assert code == 0
    assert "\r" not in out
    assert out.endswith("\n")
    lines = out.rstrip("\n").split("\n")
    header = lines[0].split(",")
    assert header[0] == "lambda"
    assert header[-1] == "sigma_min"
    assert len(header) == 6
    lams = []
    for line in lines[1:]:
        cols = line.split(",")
        assert len(cols) == 6
        lams.append(float(cols[0]))
    assert lams == sorted(lams)
    assert lams[-1] == pytest.approx(1.0, abs=2e-3)


def test_out_file_instead_of_stdout(capsys, paths, tmp_path):
    inline = run(capsys, ["gscr", paths["sidc"]])[1]
    target = tmp_path / "report.json"
    code, out, _ = run(capsys, ["gscr", paths["sidc"], "--out", str(target)])
    assert code == 0
    assert out == ""
    assert target.read_text(encoding="utf-8") == inline


def test_find_cgscr_report(capsys, paths):
    code, out, _ = run(capsys, ["find-cgscr", paths["sidc"]])
    assert code == 0
    doc = json.loads(out)
    assert doc["kind"] == "CgSCR"
    assert 1.9 <= doc["value"] <= 2.1
    assert doc["scale_star"] == pytest.approx(1.0, abs=5e-3)
    assert doc["condition_residual"] <= 1e-3
    assert len(doc["per_converter_mu_deg"]) == 1
    assert "aggregation" not in doc


def test_find_bgscr_report(capsys, paths):
    code, out, _ = run(capsys, ["find-bgscr", paths["sidc"], "--agg", "first"])
    assert code == 0
    doc = json.loads(out)
    assert doc["kind"] == "BgSCR"
    assert 2.9 <= doc["value"] <= 3.1
    assert doc["aggregation"] == "first"
    assert doc["per_converter_mu_deg"][0] == pytest.approx(30.0, abs=0.1)


def test_sweep_csv_wiring(capsys, paths, monkeypatch):
    rows = [SweepRow(ratio=0.25, cgscr=2.01, bgscr=3.02),
            SweepRow(ratio=4.0, cgscr=1.99, bgscr=2.98)]
    seen = {}

    def fake_sweep(case, ratios, aggregation="mean", jobs=1):
        seen["ratios"] = tuple(ratios)
        seen["jobs"] = jobs
        return rows

    monkeypatch.setattr(cli, "sweep_dual_infeed", fake_sweep)
    code, out, _ = run(capsys, ["sweep", paths["sidc"], "--jobs", "3"])
    assert code == 0
    assert out == "ratio,CgSCR,BgSCR\n0.25,2.01,3.02\n4,1.99,2.98\n"
    assert seen["ratios"] == (0.25, 0.5, 1.0, 2.0, 4.0)
    assert seen["jobs"] == 3


def fake_row(passed, expected=1.0):
    return ValidationRow(scenario="case1", quantity="q", expected=expected,
                         computed=1.0, deviation=0.0 if passed else math.inf,
                         tolerance=1.0, passed=passed, source="benchmark: fake")


@pytest.mark.parametrize("script", ["run_validation.py", "sweep_dual.py", "make_cases.py"])
def test_scripts_parse_and_show_help(script):
    path = Path(__file__).resolve().parent.parent / "scripts" / script
    done = subprocess.run([sys.executable, str(path), "--help"],
                         capture_output=True, text=True, timeout=60)
    assert done.returncode == 0
    assert "usage" in done.stdout.lower()


def test_validate_exit_mapping(capsys, monkeypatch):
    monkeypatch.setattr(cli, "validate_suite",
                        lambda jobs=1, aggregation="mean": ValidationReport(rows=(fake_row(True),)))
    code, out, _ = run(capsys, ["validate"])
    assert code == 0
    assert json.loads(out)["overall"] is True

    monkeypatch.setattr(cli, "validate_suite",
                        lambda jobs=1, aggregation="mean": ValidationReport(
                            rows=(fake_row(False, expected=math.nan),)))
    code, out, _ = run(capsys, ["validate"])
    assert code == 1
    doc = json.loads(out)
    assert doc["overall"] is False
    assert doc["rows"][0]["expected"] is None
    assert doc["rows"][0]["deviation"] is None

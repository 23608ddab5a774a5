import csv
import io
import json
import subprocess
import sys

import pytest

from helpers import rel
from qstokes.cli import main, parse_complex, parse_grid
from qstokes.qcore import Base


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def records(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_parse_complex():
    assert parse_complex("0.5") == 0.5
    assert parse_complex("0.5,-0.25") == complex(0.5, -0.25)
    with pytest.raises(Exception):
        parse_complex("1+2j")


def test_parse_grid():
    g = parse_grid("-1,1,0,0.5,3,2")
    assert len(g.points()) == 6
    with pytest.raises(Exception):
        parse_grid("0,1,0,1,0,3")
    with pytest.raises(Exception):
        parse_grid("0,1,0,1")


def test_eval_Aq_at_zero(capsys):
    code, out, _ = run(["eval", "--fn", "Aq", "--q", "0.5", "--x", "0"], capsys)
    assert code == 0
    (r,) = records(out)
    assert r["value"] == [1.0, 0.0] and r["function"] == "Aq"


def test_eval_theta_zero(capsys):
    code, out, _ = run(["eval", "--fn", "theta", "--q", "0.5", "--x", "-1"], capsys)
    assert code == 0
    v = records(out)[0]["value"]
    assert abs(complex(*v)) < 1e-12


def test_eval_eq_pole(capsys):
    code, _, err = run(["eval", "--fn", "eq", "--q", "0.5", "--x", "2"], capsys)
    assert code == 2
    assert "q^-1" in err


def test_eval_phi_with_parameters(capsys):
    code, out, _ = run(["eval", "--fn", "phi", "--q", "0.5", "--lower", "0", "--x", "0"], capsys)
    assert code == 0 and records(out)[0]["value"] == [1.0, 0.0]
    code, _, err = run(["eval", "--fn", "phi", "--q", "0.5", "--upper", "0", "--upper", "0", "--x", "0.1"], capsys)
    assert code == 2 and "resum" in err


def test_eval_records_round_trip(capsys):
    code, out, _ = run(["eval", "--fn", "Aiq", "--q", "0.4,0.1", "--x", "0.7,0.3", "--x", "-1.2"], capsys)
    assert code == 0
    from qstokes.qcore import qairy_Aiq

    for r in records(out):
        again = qairy_Aiq(Base(complex(*r["q"])), complex(*r["x"]))
        assert rel(again, complex(*r["value"])) < 1e-15


def test_resum_record(capsys):
    code, out, _ = run(["resum", "--q", "0.4", "--lambda", "0.9", "--x", "1.3"], capsys)
    assert code == 0
    assert records(out)[0]["value"][0] == pytest.approx(0.0847148153831069, rel=1e-12)


def test_resum_rf0(capsys):
    code, out, _ = run(["resum", "--kind", "rf0", "--r", "3", "--q", "0.4", "--lambda", "0.9", "--x", "0.6"], capsys)
    assert code == 0
    assert records(out)[0]["value"][0] == pytest.approx(7.65370244523975, rel=1e-12)


def test_verify_pass(capsys):
    code, out, _ = run(["verify", "--id", "qexp_pair", "--q", "0.5", "--x", "0.3"], capsys)
    assert code == 0 and records(out)[0]["pass"] is True


def test_verify_random_points(capsys):
    code, out, _ = run(["verify", "--id", "ram_qairy", "--q", "0.4", "--random", "20", "--seed", "3"], capsys)
    assert code == 0
    recs = records(out)
    assert len(recs) == 20 and all(r["pass"] for r in recs)


def test_verify_grid_skips_excluded(capsys):
    code, out, err = run(["verify", "--id", "two_f_zero", "--q", "0.4", "--lambda", "0.9",
                          "--grid=-0.9,1.1,0,0,3,1"], capsys)
    assert code == 0 and len(records(out)) == 2 and "skipped 1" in err


def test_verify_excluded_point(capsys):
    code, _, err = run(["verify", "--id", "two_f_zero", "--q", "0.4", "--x", "-0.9", "--lambda", "0.9"], capsys)
    assert code == 2 and "excluded" in err


def test_verify_failure_exit_code(capsys):
    code, out, _ = run(["verify", "--id", "main_matrix", "--row", "1", "--q", "0.4", "--x", "1.3"], capsys)
    assert code == 1 and records(out)[0]["pass"] is False


def test_bad_q_is_usage_error(capsys):
    code, _, err = run(["eval", "--fn", "Aq", "--q", "1.2", "--x", "0.1"], capsys)
    assert code == 2


def test_unknown_option_is_usage_error(capsys):
    assert main(["eval", "--fn", "nope", "--x", "1"]) == 2


def test_scan_rows(capsys):
    code, out, _ = run(["scan", "--fn", "resum_2f0", "--q", "0.4", "--lambda", "0.9", "--grid", "0.5,1.5,0.1,0.5,3,3"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9 and all(r["status"] == "ok" for r in rows)
    assert list(rows[0]) == ["re_x", "im_x", "re_val", "im_val", "status"]


def test_scan_crossing_excluded_spiral(capsys):
    code, out, _ = run(["scan", "--fn", "resum_2f0", "--q", "0.4", "--lambda", "0.9", "--grid=-1.8,0.9,0,0,4,1"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["status"] for r in rows] == ["ok", "excluded", "excluded", "ok"]


def test_scan_stokes_witness(tmp_path):
    files = []
    for lam in ("0.9", "0,1.3"):
        f = tmp_path / f"c21_{lam}.csv"
        assert main(["scan", "--fn", "C21", "--q", "0.4", "--lambda", lam, "--grid", "0.5,1.5,0.2,0.6,4,3", "-o", str(f)]) == 0
        files.append(list(csv.DictReader(f.open())))
    diffs = [
        rel(complex(float(a["re_val"]), float(a["im_val"])), complex(float(b["re_val"]), float(b["im_val"])))
        for a, b in zip(*files)
    ]
    assert max(diffs) > 1e-6


def test_audit_command(capsys):
    code, out, _ = run(["audit", "--id", "two_f_zero", "--q", "0.4", "--lambda", "0.9"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["unique"] and d["resolved_name"] == "section7_theorem" and d["seed"] == 0


def test_suite_reports_honest_failure_and_exclusion(capsys):
    code, out, _ = run(["suite", "--q", "0.5", "--points", "4"], capsys)
    summary = json.loads(out.splitlines()[-1])
    assert code == 1
    fams = {f["family"]: f for f in summary["families"]}
    assert len(fams) >= 9
    assert fams["main_matrix(row1)"]["passed"] == 0
    assert all(f["passed"] == f["points"] for k, f in fams.items() if k != "main_matrix(row1)")
    code, out, _ = run(["suite", "--q", "0.5", "--points", "4", "--exclude", "main_matrix(row1)"], capsys)
    assert code == 0 and json.loads(out)["all_pass"]


def test_suite_tight_tolerance_fails(capsys):
    code, out, _ = run(["suite", "--q", "0.5", "--points", "3", "--tol", "1e-15", "--exclude", "main_matrix(row1)"], capsys)
    assert code == 1
    assert not json.loads(out)["all_pass"]


def test_suite_domain_guard(capsys):
    code, _, err = run(["suite", "--q", "0.95"], capsys)
    assert code == 2 and "precision domain" in err


def test_suite_is_deterministic(capsys):
    _, a, _ = run(["suite", "--q", "0.5", "--points", "3", "--seed", "5"], capsys)
    _, b, _ = run(["suite", "--q", "0.5", "--points", "3", "--seed", "5"], capsys)
    assert a == b and json.loads(a)["seed"] == 5


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nq = 0.4\nlambda = 0.9\n")
    code, out, _ = run(["--config", str(cfg), "resum", "--x", "1.3"], capsys)
    assert code == 0
    assert records(out)[0]["value"][0] == pytest.approx(0.0847148153831069, rel=1e-12)


def test_config_file_malformed(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("q 0.4\n")
    assert main(["--config", str(cfg), "resum", "--x", "1.3"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qstokes", "eval", "--fn", "Eq", "--q", "0.5", "--x", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["value"] == [1.0, 0.0]

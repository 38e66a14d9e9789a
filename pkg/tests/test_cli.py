import csv
import io
import json
import subprocess
import sys

import pytest

from neutralgeom.cli import CSV_COLUMNS, main
from neutralgeom.residuals import ResidualReport


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_builtin(capsys, tmp_path):
    code, out, _ = run(capsys, "generate", "--builtin", "i-st")
    assert code == 0
    data = json.loads(out)
    assert data["family"] == "i" and data["verdicts"]["biconservative"] is True
    path = tmp_path / "g.json"
    assert run(capsys, "generate", "--builtin", "i-st", "-o", str(path))[0] == 0
    assert json.loads(path.read_text()) == data


def test_generate_bad_specs(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"family": "i", "psi": "s + t"}')
    code, _, err = run(capsys, "generate", "--spec", str(bad))
    assert code == 1 and "DegenerateH" in err
    bad.write_text('{"family": "i",\n "psi": }')
    code, _, err = run(capsys, "generate", "--spec", str(bad))
    assert code == 1 and "line 2" in err
    code, _, err = run(capsys, "generate", "--spec", str(tmp_path / "missing.json"))
    assert code == 1
    code, _, err = run(capsys, "generate", "--builtin", "nope")
    assert code == 1


def test_usage_errors_exit_1(capsys):
    for argv in (["classify", "--builtin", "i-st", "--grid", "3x3"],
                 ["classify", "--builtin", "i-st", "--tol", "bogus=1"],
                 ["classify", "--builtin", "i-st", "--expect", "pretty"],
                 ["frobnicate"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1
    capsys.readouterr()


def test_classify_I3(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "classify", "--builtin", "iii-I3", "--grid", "9x9", "-o", str(path),
                       "--expect", "biharmonic", "--expect", "flat=false")
    assert code == 0
    assert "biharmonic      true" in out
    rep = ResidualReport.from_dict(json.loads(path.read_text()))
    assert rep.grid_shape == (9, 9)
    assert rep.verdicts()["proper"] is True
    assert rep.metadata["family"] == "iii"


def test_classify_verdict_failure(capsys):
    code, out, err = run(capsys, "classify", "--builtin", "i-exp", "--grid", "7x7",
                         "--expect", "biharmonic")
    assert code == 2
    assert "biharmonic" in err
    assert json.loads(out)["grid"]["shape"] == [7, 7]


def test_classify_rect_and_tol(capsys):
    code, out, _ = run(capsys, "classify", "--builtin", "i-st", "--grid", "5x5",
                       "--rect=-0.5,0.5,0,1", "--tol", "biconservative=0")
    data = json.loads(out)
    assert code == 0
    assert data["tolerances"]["biconservative"] == 0.0
    assert min(data["grid"]["s"]) == -0.5 and max(data["grid"]["t"]) == 1.0


def test_classify_fd(capsys):
    code, out, _ = run(capsys, "classify", "--builtin", "ii-trig", "--grid", "5x5", "--jets", "fd",
                       "--expect", "flat")
    assert code == 0
    assert json.loads(out)["metadata"]["jets"] == "fd"


def test_sample_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "sample", "--builtin", "iii-I3", "--grid", "5x5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 26
    centre = next(r for r in rows[1:] if float(r[0]) == 0.0 and float(r[1]) == 0.0)
    assert float(centre[6]) == pytest.approx(1.0, abs=1e-12)
    assert float(centre[7]) == pytest.approx(1.0, abs=1e-8)
    path = tmp_path / "s.csv"
    run(capsys, "sample", "--builtin", "iii-I3", "--grid", "5x5", "-o", str(path))
    assert path.read_text() == out


def test_sample_flat_has_blank_L(capsys):
    _, out, _ = run(capsys, "sample", "--builtin", "i-st", "--grid", "5x5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert all(r["L_or_blank"] == "" for r in rows)


def test_selftest_zero_scale_fails(capsys):
    code, out, _ = run(capsys, "selftest", "--tol-scale", "0", "--grid", "9")
    assert code == 2
    assert out.count("[FAIL]") >= 9


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "neutralgeom", "classify", "--builtin", "ii-trig",
                           "--grid", "5x5", "--expect", "flat"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr

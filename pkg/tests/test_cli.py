import json
import subprocess
import sys

import pytest

from bbprep.cli import main
from bbprep.code import BB_72
from bbprep.dem import read_dem


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build_code(capsys):
    code, out, _ = run(capsys, "build-code", "--spec", "72")
    assert code == 0
    assert "n_data      72" in out and "k           8" in out
    assert "row weights [6]" in out and "column weights [3]" in out


def test_build_code_from_json(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(BB_72.to_dict()))
    code, out, _ = run(capsys, "build-code", "--spec", str(path))
    assert code == 0 and "k           8" in out


@pytest.mark.parametrize("spec", ["nonexistent", "bad.json"])
def test_bad_spec_exits_2(capsys, tmp_path, monkeypatch, spec):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "bad.json").write_text("{not json")
    code, _, err = run(capsys, "build-code", "--spec", spec)
    assert code == 2 and err.startswith("error:")


def test_build_dem_roundtrip(capsys, tmp_path):
    out_path = tmp_path / "m.dem"
    code, out, _ = run(capsys, "build-dem", "--spec", "72", "--out", str(out_path))
    assert code == 0 and out.startswith("1584 events, 252 detectors, 8 observables")
    assert len(read_dem(out_path)) == 1584


def test_build_dem_unmerged_and_dump(capsys, tmp_path):
    circ = tmp_path / "c.txt"
    code, out, _ = run(capsys, "build-dem", "--spec", "72", "--cycles", "2", "--unmerged", "--dump-circuit", str(circ))
    assert code == 0
    assert out.splitlines()[0] == "detectors 108"
    assert len(out.splitlines()) == 2 + 98 * 36 * 2
    assert "CX" in circ.read_text()


def test_invalid_rate_exits_2(capsys):
    code, _, err = run(capsys, "build-dem", "--spec", "72", "--p", "0.7")
    assert code == 2 and "error" in err


def test_coverage(capsys):
    code, out, _ = run(capsys, "coverage", "--code", "72")
    assert code == 0
    row = out.splitlines()[1].split()
    assert row[-3:] == ["1584", "100.00%", "100.00%"]


def test_bench_is_deterministic(capsys):
    argv = ["bench", "--spec", "72", "--p", "0.001", "--shots", "120", "--seed", "4", "--scale-factor", "2,4"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b and len(a.strip().splitlines()) == 5


def test_bench_bad_factor_exits_2(capsys):
    code, _, err = run(capsys, "bench", "--spec", "72", "--shots", "5", "--scale-factor", "0.5")
    assert code == 2 and "factor" in err


def test_decode_with_preprocessing(capsys, tmp_path):
    dem_path = tmp_path / "m.dem"
    run(capsys, "build-dem", "--spec", "72", "--out", str(dem_path))
    event = read_dem(dem_path).events[300]
    syn = tmp_path / "s.txt"
    syn.write_text(" ".join(f"D{d}" for d in event.detectors))
    code, out, _ = run(capsys, "decode", "--spec", "72", "--syndrome", str(syn), "--scale-factor", "2")
    assert code == 0
    res = json.loads(out)
    assert res["flipped_detectors"] == list(event.detectors)
    assert res["bp_converged"] is True and res["events"] == [300]
    assert res["preprocessed_events"] == 1 and res["observable_flips"] == list(event.observables)


def test_decode_from_dem_file(capsys, tmp_path):
    dem_path = tmp_path / "m.dem"
    run(capsys, "build-dem", "--spec", "72", "--out", str(dem_path))
    syn = tmp_path / "s.txt"
    syn.write_text("0" * 252)
    code, out, _ = run(capsys, "decode", "--dem", str(dem_path), "--syndrome", str(syn))
    assert code == 0 and json.loads(out)["bp_iterations"] == 0
    code, _, err = run(capsys, "decode", "--dem", str(dem_path), "--syndrome", str(syn), "--scale-factor", "2")
    assert code == 2 and "--spec" in err


@pytest.mark.parametrize("text", ["D999", "D3 D39 D75"])
def test_decode_bad_syndrome_exits_2(capsys, tmp_path, text):
    # out of range, and a detector set no combination of events produces
    syn = tmp_path / "s.txt"
    syn.write_text(text)
    code, _, _ = run(capsys, "decode", "--spec", "72", "--syndrome", str(syn))
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bbprep", "build-code", "--spec", "90"], capture_output=True, text=True)
    assert proc.returncode == 0 and "n_data      90" in proc.stdout

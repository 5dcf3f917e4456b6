import json
import subprocess
import sys

import numpy as np
import pytest

from momentum_lmm.cli import run


def _run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = run([*argv, "--out", str(out)])
    return code, out


def test_locus_example(tmp_path):
    code, out = _run(tmp_path, "locus", "--family", "ghvb", "--momentum", "1.8", "--samples", "512")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "theta,re,im"
    assert len(lines) == 513


def test_solve_example_footer(tmp_path):
    code, out = _run(tmp_path, "solve", "--problem", "toy2x2", "--family", "ab", "--order", "2", "--steps", "26")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x0,x1"
    assert len(lines) == 1 + 27 + 1
    # 26 steps amplify the outside-region mode only ~3.7x, far below the 1e12 flag
    assert lines[-1] == "#diverged=false"
    assert float(lines[-2].split(",")[0]) == 3.0


def test_solve_flags_real_blowup(tmp_path):
    code, out = _run(tmp_path, "solve", "--problem", "toy2x2", "--family", "ab", "--order", "2",
                     "--steps", "1040", "--t1", "120")
    assert code == 0
    assert out.read_text().splitlines()[-1] == "#diverged=true"


def test_order_example(tmp_path):
    code, out = _run(tmp_path, "order", "--problem", "test-eq", "--lambda", "-1", "--family", "ghvb",
                     "--momentum", "1.5", "--steps", "20,40,80,160,320,640", name="q.json")
    assert code == 0
    data = json.loads(out.read_text())
    assert len(data["q"]) == 5
    assert abs(data["q"][-1] - 2) < 0.1
    assert data["formal_order"] == 2


@pytest.mark.parametrize("argv", [
    ["locus", "--family", "hb", "--order", "2", "--beta", "0.8"],
    ["region", "--family", "ab", "--order", "2", "--resolution", "21"],
    ["solve", "--problem", "test-eq", "--lambda", "-1+2i", "--family", "nesterov", "--order", "2",
     "--beta", "0.5", "--steps", "30"],
    ["compare", "--problem", "toy2x2", "--t1", "3", "--methods", "euler,ab2,hb2:0.8,ghvb1.8", "--steps", "26"],
])
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_deterministic_output(tmp_path, argv, fmt):
    a = tmp_path / f"a.{fmt}"
    b = tmp_path / f"b.{fmt}"
    assert run([*argv, "--out", str(a)]) == 0
    assert run([*argv, "--out", str(b)]) == 0
    raw = a.read_bytes()
    assert raw == b.read_bytes()
    assert b"\r" not in raw
    if fmt == "json":
        text = raw.decode("utf-8")
        assert text == json.dumps(json.loads(text), sort_keys=True, indent=1) + "\n"


def test_csv_floats_are_shortest_repr(tmp_path):
    code, out = _run(tmp_path, "locus", "--family", "ab", "--order", "1", "--samples", "3")
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    for row in rows:
        for cell in row:
            assert repr(float(cell)) == cell


def test_region_triplets(tmp_path):
    code, out = _run(tmp_path, "region", "--family", "ab", "--order", "1",
                     "--re", "-2.5,0.5", "--im", "-1.5,1.5", "--resolution", "61")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "re,im,stable"
    assert len(lines) == 1 + 61 * 61
    for line in lines[1:]:
        re, im, s = line.split(",")
        inside = abs(complex(float(re), float(im)) + 1) <= 1 + 1e-9
        assert s == ("1" if inside else "0")


def test_compare_rows(tmp_path):
    code, out = _run(tmp_path, "compare", "--problem", "toy2x2", "--t1", "3",
                     "--methods", "euler,ab2,hb2:0.8,ghvb1.8", "--steps", "26")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "method,final_error,final_norm,diverged"
    errs = {line.split(",")[0]: float(line.split(",")[1]) for line in lines[1:]}
    assert errs["GHVB 1.8"] < 0.05 and errs["HB2 0.8"] < 0.05 and errs["AB1"] < 0.15
    assert errs["AB2"] > 1.0


def test_magnitude_command(tmp_path):
    grid = np.zeros((8, 8, 4))
    grid[2, 3, 1] = 5.0
    src = tmp_path / "grid.npy"
    np.save(src, grid)
    code, out = _run(tmp_path, "magnitude", "--input", str(src), name="m.json")
    assert code == 0
    assert json.loads(out.read_text())["score"] == 5.0
    src_json = tmp_path / "grid.json"
    src_json.write_text(json.dumps(grid.tolist()))
    out2 = tmp_path / "m.csv"
    assert run(["magnitude", "--input", str(src_json), "--out", str(out2)]) == 0
    assert out2.read_text() == "score\n5.0\n"


def test_solve_diffusion_schedule(tmp_path):
    sched = tmp_path / "sched.json"
    sched.write_text(json.dumps([0.05, 0.2, 0.5, 0.8, 0.95]))
    code, out = _run(tmp_path, "solve", "--problem", "diffusion", "--schedule", str(sched),
                     "--family", "ghvb", "--momentum", "1.5", "--x0", "1,-1", "--lambda", "0.3")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x0,x1"
    assert len(lines) == 1 + 5 + 1
    assert lines[-1] == "#diverged=false"


@pytest.mark.parametrize("argv, flag", [
    (["locus", "--family", "hb", "--order", "2"], "--beta"),
    (["locus", "--family", "ghvb"], "--momentum"),
    (["locus", "--family", "ab", "--order", "2", "--samples", "1"], "--samples"),
    (["locus", "--family", "ab", "--order", "9"], "--order"),
    (["order", "--problem", "test-eq", "--family", "ab", "--order", "1", "--steps", "40,20"], "--steps"),
    (["solve", "--problem", "toy2x2", "--family", "ab", "--order", "1"], "--steps"),
    (["solve", "--problem", "diffusion", "--family", "ab", "--order", "1"], "--schedule"),
    (["compare", "--problem", "toy2x2", "--methods", "euler,rk4", "--steps", "5"], "--methods"),
    (["region", "--family", "ab", "--order", "1", "--re", "1,0,3"], "--re"),
])
def test_bad_arguments_exit_2_and_name_flag(tmp_path, capsys, argv, flag):
    code, _ = _run(tmp_path, *argv)
    assert code == 2
    assert flag in capsys.readouterr().err


def test_missing_required_flag_exit_2(tmp_path, capsys):
    assert run(["locus", "--family", "ab", "--order", "1"]) == 2
    assert "--out" in capsys.readouterr().err


def test_io_failure_exit_1(tmp_path):
    out = tmp_path / "missing" / "dir" / "x.csv"
    assert run(["locus", "--family", "ab", "--order", "1", "--out", str(out)]) == 1


def test_missing_input_exit_1(tmp_path):
    assert run(["magnitude", "--input", str(tmp_path / "nope.npy"), "--out", str(tmp_path / "m.json")]) == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "l.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "momentum_lmm", "locus", "--family", "ab", "--order", "2",
         "--samples", "8", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(out.read_text().splitlines()) == 9

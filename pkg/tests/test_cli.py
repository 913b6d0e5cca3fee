"""End-to-end CLI checks: exit codes and byte determinism."""

import json
import subprocess
import sys

from gifslab import fileio

PY = [sys.executable, "-m", "gifslab"]


def run(args, cwd):
    return subprocess.run(PY + args, cwd=cwd, capture_output=True, text=True)


def bundled(name):
    return str(fileio.bundled_system_path(name))


def tree_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_validate_exit_codes(tmp_path):
    r = run(["validate", "--system", bundled("averaging_fde.json"), "--out", "ok"], tmp_path)
    assert r.returncode == 0, r.stderr
    report = json.loads((tmp_path / "ok" / "validate.json").read_text())
    assert report["e1_ok"] and report["lambda"] == 0.5

    r = run(["validate", "--system", bundled("unstable_gifs.json"), "--out", "bad"], tmp_path)
    assert r.returncode == 1

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    r = run(["validate", "--system", str(broken), "--out", "x"], tmp_path)
    assert r.returncode == 2

    unknown = tmp_path / "unknown.json"
    obj = json.loads(fileio.bundled_system_path("doubling.json").read_text())
    obj["surprise"] = True
    unknown.write_text(json.dumps(obj))
    r = run(["validate", "--system", str(unknown), "--out", "y"], tmp_path)
    assert r.returncode == 2


def test_attract_outputs_and_determinism(tmp_path):
    args = [
        "attract", "--system", bundled("mixed_sign.json"),
        "--eps", str(1 / 128),
    ]
    r1 = run(args + ["--out", "a1"], tmp_path)
    assert r1.returncode == 0, r1.stderr
    for name in ("attractor.pbm", "attractor_extended.pbm", "projection.pbm", "attractor_trace.json"):
        assert (tmp_path / "a1" / name).exists()
    r2 = run(args + ["--out", "a2"], tmp_path)
    assert r2.returncode == 0
    assert tree_bytes(tmp_path / "a1") == tree_bytes(tmp_path / "a2")


def test_attract_unstable_exit1(tmp_path):
    r = run(["attract", "--system", bundled("unstable_gifs.json"), "--out", "u"], tmp_path)
    assert r.returncode == 1


def test_attract_no_convergence_exit3(tmp_path):
    r = run(
        [
            "attract", "--system", bundled("mixed_sign.json"),
            "--eps", str(1 / 128), "--max-iter", "2", "--out", "n",
        ],
        tmp_path,
    )
    assert r.returncode == 3


def test_chaos_outputs_and_determinism(tmp_path):
    args = [
        "chaos", "--system", bundled("doubling.json"),
        "--steps", "4000", "--eps", str(1 / 16), "--tail-start", "100",
    ]
    r1 = run(args + ["--out", "c1"], tmp_path)
    assert r1.returncode == 0, r1.stderr
    info = json.loads((tmp_path / "c1" / "chaos.json").read_text())
    assert info["occupied_cells"] == 256
    r2 = run(args + ["--out", "c2"], tmp_path)
    assert tree_bytes(tmp_path / "c1") == tree_bytes(tmp_path / "c2")


def test_chaos_single_step(tmp_path):
    r = run(
        [
            "chaos", "--system", bundled("doubling.json"),
            "--steps", "1", "--burn-in", "0", "--tail-start", "0",
            "--eps", str(1 / 8), "--out", "c",
        ],
        tmp_path,
    )
    assert r.returncode == 0, r.stderr
    info = json.loads((tmp_path / "c" / "chaos.json").read_text())
    assert info["occupied_cells"] == 1  # one window per step


def test_ergodic_report(tmp_path):
    args = [
        "ergodic", "--system", bundled("doubling.json"),
        "--steps", "21000", "--observable", "coord:0",
        "--observable", "const:7", "--observable", "window_prod",
    ]
    r1 = run(args + ["--out", "e1"], tmp_path)
    assert r1.returncode == 0, r1.stderr
    rep = json.loads((tmp_path / "e1" / "ergodic.json").read_text())
    assert rep["averages"]["const:7"] == 7.0
    assert abs(rep["averages"]["coord:0"] - 0.5) < 0.05
    assert abs(rep["visitation"]["lower_half"] - 0.5) < 0.05
    assert rep["seed"] == 0x5EED5EED
    r2 = run(args + ["--out", "e2"], tmp_path)
    assert tree_bytes(tmp_path / "e1") == tree_bytes(tmp_path / "e2")


def test_measure_command(tmp_path):
    args = [
        "measure", "--system", bundled("doubling.json"),
        "--tol", "2e-3", "--prune-cell", str(1 / 16),
    ]
    r1 = run(args + ["--out", "m1"], tmp_path)
    assert r1.returncode == 0, r1.stderr
    trace = json.loads((tmp_path / "m1" / "measure_trace.json").read_text())
    assert trace["converged"]
    assert abs(trace["moments"]["mean_0"] - 0.5) < 5e-3
    assert abs(trace["moments"]["prod_01"] - 0.25) < 5e-3
    r2 = run(args + ["--out", "m2"], tmp_path)
    assert tree_bytes(tmp_path / "m1") == tree_bytes(tmp_path / "m2")


def test_measure_constant_map(tmp_path):
    sysfile = tmp_path / "const.json"
    sysfile.write_text(
        json.dumps(
            {
                "domain": {"lo": [0.0], "hi": [1.0]},
                "degree": 2,
                "maps": [
                    {"blocks": [[[0.0]], [[0.0]]], "offset": [0.3]}
                ],
                "weights": {"kind": "constant", "values": [1.0]},
            }
        )
    )
    r = run(["measure", "--system", str(sysfile), "--out", "m"], tmp_path)
    assert r.returncode == 0, r.stderr
    csv = (tmp_path / "m" / "measure.csv").read_text().splitlines()
    assert len(csv) == 2  # header + single atom


def test_fde_command(tmp_path):
    r = run(
        ["fde", "--system", bundled("averaging_fde_spec.json"), "--trials", "50", "--out", "f"],
        tmp_path,
    )
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "f" / "fde.json").read_text())
    assert rep["coefficients"] == [1, 1, 5, 9, 29, 65, 181, 441, 1165]
    assert rep["closed_form_max_err"] < 1e-10
    assert rep["direct_iteration_max_err"] < 1e-12

    r = run(["fde", "--system", bundled("unstable_fde_spec.json"), "--out", "fb"], tmp_path)
    assert r.returncode == 1

import json
import subprocess
import sys

import numpy as np
import pytest

from relinv.cli import main
from relinv.image_integral import ImageGrid, blob_image, load_pgm, save_pgm
from relinv.projective_core import format_points
from relinv.reports import parse_kv
from relinv.sampling import make_rng, random_config


@pytest.fixture
def files(tmp_path):
    paths = {}
    paths["cross"] = tmp_path / "cross.txt"
    paths["cross"].write_text("# cross-section\n0 -1\n1 1\n1 0\n0 0\n")
    paths["five"] = tmp_path / "five.txt"
    paths["five"].write_text(format_points(random_config(make_rng(80), 5)))
    paths["collinear"] = tmp_path / "collinear.txt"
    paths["collinear"].write_text("0 0\n1 1\n2 2\n0 1\n")
    paths["garbage"] = tmp_path / "garbage.txt"
    paths["garbage"].write_text("1 2\nthree four\n")
    paths["blob"] = tmp_path / "blob.pgm"
    save_pgm(paths["blob"], blob_image(64))
    paths["zero"] = tmp_path / "zero.pgm"
    save_pgm(paths["zero"], ImageGrid(np.zeros((8, 8))))
    paths["g"] = tmp_path / "g.txt"
    paths["g"].write_text("1.02 0.05 -0.03\n0.04 0.98 0.02\n0.06 -0.05 1.0\n")
    paths["horizon"] = tmp_path / "horizon.txt"
    paths["horizon"].write_text("1 0 0\n0 1 0\n-3 0 1\n")
    return {k: str(v) for k, v in paths.items()}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_invariants_cross_section(capsys, files):
    code, out, _ = run(capsys, "invariants", files["cross"])
    assert code == 0
    fields = parse_kv(out)
    assert fields == {"n": "4", "jinv": "1"}


def test_invariants_verify(capsys, files):
    code, out, _ = run(capsys, "invariants", files["five"], "--verify", "100")
    fields = parse_kv(out)
    assert code == 0 and fields["verify_trials"] == "100"
    assert float(fields["max_drift"]) < 1e-8
    assert {"I1_5", "I2_5", "jinv"} <= fields.keys()


def test_invariants_weight_and_json(capsys, files):
    code, out, _ = run(capsys, "invariants", files["five"], "--weight", "-1", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["relative_invariant"] == pytest.approx(data["jinv"])


def test_invariants_error_codes(capsys, files):
    code, _, err = run(capsys, "invariants", files["collinear"])
    assert code == 3 and "delta_123" in err
    code, _, err = run(capsys, "invariants", files["garbage"])
    assert code == 2 and "line 2" in err
    code, _, _ = run(capsys, "invariants", files["five"], "--weight", "1", "--expr", "I9_9")
    assert code == 2


def test_check_trial_accounting(capsys):
    code, out, _ = run(capsys, "check", "frame", "--trials", "1", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["pass"]
    assert all(r["trials"] == 1 for r in data["reports"])


def test_check_injected_fault(capsys):
    code, out, _ = run(capsys, "check", "cocycle", "--inject-fault", "--trials", "5")
    assert code == 1
    assert "counterexample: " in out and "g1=" in out


def test_check_all_passes(capsys, tmp_path):
    target = tmp_path / "report.txt"
    code, out, _ = run(capsys, "check", "all", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_text().rstrip().endswith("pass: true")


def test_image_invariant_zero_and_determinism(capsys, files):
    code, out, _ = run(capsys, "image-invariant", files["zero"], "--samples", "5000")
    assert code == 0 and parse_kv(out)["value"] == "0.0"
    _, first, _ = run(capsys, "image-invariant", files["blob"], "--samples", "20000", "--seed", "5")
    _, second, _ = run(capsys, "image-invariant", files["blob"], "--samples", "20000", "--seed", "5")
    assert first == second


def test_image_invariant_warp(capsys, files):
    code, out, _ = run(capsys, "image-invariant", files["blob"], "--samples", "100000", "--warp", files["g"])
    assert code == 0 and "invariance: pass" in out
    code, _, _ = run(capsys, "image-invariant", files["blob"], "--warp", files["horizon"])
    assert code == 4


def test_image_invariant_bad_inputs(capsys, files, tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    assert run(capsys, "image-invariant", str(bad))[0] == 2
    assert run(capsys, "image-invariant", files["blob"], "--n", "5", "--alpha", "0,0,0,0,9")[0] == 2


def test_warp_command(capsys, files, tmp_path):
    out = tmp_path / "w.pgm"
    assert run(capsys, "warp", files["blob"], files["g"], "--output", str(out))[0] == 0
    img = load_pgm(out)
    assert img.width == 64 and img.intensities.max() > 0.5


def test_help_lists_defaults():
    result = subprocess.run([sys.executable, "-m", "relinv.cli", "image-invariant", "--help"],
                            capture_output=True, text=True, check=True)
    assert "default: 12648430" in result.stdout and "0xC0FFEE" in result.stdout
    assert "default: 100000" in result.stdout

import json
import subprocess
import sys

import numpy as np
import pytest

from cxtomo import io
from cxtomo import cli
from cxtomo.cli import RunConfig, main, run
from cxtomo.errors import DegenerateField, NonConvergent, ValidationError, ZeroClusterUnresolved

SMALL = ["--ntheta", "32", "--ns", "65"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def sino_path(workdir):
    p = workdir / "g.bin"
    assert main(["forward", "--family", "euclidean-lines", "--phantom", "gaussian", *SMALL, "--out", str(p)]) == 0
    return p


def test_forward_radial_rows(sino_path):
    sino = io.read_sinogram(sino_path)
    assert sino.values.shape == (32, 65)
    assert np.max(np.ptp(sino.values, axis=0)) < 1e-8


def test_invert_with_reference(workdir, sino_path, capsys):
    out, rep = workdir / "g.pgm", workdir / "g-report.json"
    code = main(["invert", str(sino_path), "--grid", "32", "--out", str(out), "--reference", "gaussian",
                 "--report", str(rep)])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("invert: wrote") and "l2_rel=" in line
    meta = json.loads(io.sidecar_path(out).read_text())
    assert meta["l2_rel"] <= 0.05 and meta["family"] == "euclidean-lines"
    assert json.loads(rep.read_text())["l2_rel"] == meta["l2_rel"]


def test_outputs_deterministic(workdir, sino_path):
    a, b = workdir / "a.pgm", workdir / "b.pgm"
    assert main(["invert", str(sino_path), "--grid", "32", "--out", str(a), "--threads", "1"]) == 0
    assert main(["invert", str(sino_path), "--grid", "32", "--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert io.raw_path(a).read_bytes() == io.raw_path(b).read_bytes()
    s2 = workdir / "g2.bin"
    main(["forward", "--family", "euclidean-lines", "--phantom", "gaussian", *SMALL, "--out", str(s2), "--threads", "4"])
    assert s2.read_bytes() == sino_path.read_bytes()


def test_attenuated_pipeline(workdir):
    s, img = workdir / "att.bin", workdir / "att.pgm"
    assert main(["forward-att", "--family", "lines", *SMALL, "--out", str(s)]) == 0
    assert io.read_sinogram(s).kind == "attenuated"
    assert main(["invert-att", str(s), "--grid", "24", "--out", str(img), "--reference", "gaussian"]) == 0
    assert json.loads(io.sidecar_path(img).read_text())["l2_rel"] < 0.05


def test_non_builtin_family_banner(workdir, capsys):
    spec = {"name": "json-lines", "A": [[1, 0, 0, 0]], "B": [[1, 0, 0, 0]],
            "s_pol": [[0, 0.5, 1, 0], [0, -0.5, 0, 1]], "t_pol": [[0.5, 0, 1, 0], [0.5, 0, 0, 1]],
            "s_range": [-1, 1], "t_range": [-1, 1]}
    fam = workdir / "fam.json"
    fam.write_text(json.dumps(spec))
    s = workdir / "json.bin"
    assert main(["forward-att", "--family", str(fam), "--ntheta", "8", "--ns", "17", "--out", str(s)]) == 0
    assert "warning" in capsys.readouterr().err


def test_verify_report(workdir, capsys):
    rep = workdir / "verify.json"
    assert main(["verify", "--family", "euclidean-lines", "--report", str(rep)]) == 0
    d = json.loads(rep.read_text())
    assert d["passed"] and all(c["passed"] for c in d["checks"] if c["name"].startswith("typeh."))


def test_phantom_render(workdir):
    out = workdir / "ph.pgm"
    assert main(["phantom", "--phantom", "two-bumps", "--grid", "20", "--out", str(out)]) == 0
    assert io.read_pgm(out).shape == (20, 20)


@pytest.mark.parametrize("argv", [
    ["forward", "--ntheta", "7", "--out", "x.bin"],
    ["forward", "--ns", "10", "--out", "x.bin"],
    ["forward", "--family", "nope", *SMALL, "--out", "x.bin"],
    ["forward", "--phantom", "nope", *SMALL, "--out", "x.bin"],
    ["invert", "missing.bin", "--out", "x.pgm"],
    ["forward", *SMALL],
])
def test_validation_exit_code(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 2 and err["error"]


def test_same_paths_rejected(sino_path, capsys):
    assert main(["invert", str(sino_path), "--out", str(sino_path)]) == 2


def test_family_mismatch_exit(sino_path, workdir, capsys):
    assert main(["invert", str(sino_path), "--family", "hyperbolic", "--out", str(workdir / "h.pgm")]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "GridMismatch"


@pytest.mark.parametrize("exc", [NonConvergent("gap"), DegenerateField("rho"), ZeroClusterUnresolved("x")])
def test_numerical_exit_code(exc, monkeypatch, capsys):
    def boom(cfg):
        raise exc
    monkeypatch.setattr(cli, "run", boom)
    assert main(["phantom", "--out", "unused.pgm"]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == type(exc).__name__


def test_run_config_validation():
    with pytest.raises(ValidationError):
        run(RunConfig("bogus"))
    with pytest.raises(ValidationError):
        RunConfig("invert", input="a", out="a").validate()


def test_module_entry_point(workdir):
    out = workdir / "m.pgm"
    proc = subprocess.run([sys.executable, "-m", "cxtomo", "phantom", "--grid", "8", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()

import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cxtomo import io
from cxtomo.errors import ValidationError
from cxtomo.inversion import ReconImage, disc_mask, pixel_grid
from cxtomo.phantoms import (AttenuationMap, Bump, Phantom, error_metrics, eval_phantom, gaussian_truncation,
                             load_phantom, save_phantom)
from cxtomo.transforms import SGrid, Sinogram


def image_of(p, n=64, delta=0.05):
    mask = disc_mask(n, delta)
    vals = np.zeros((n, n))
    vals[mask] = p(pixel_grid(n)[mask])
    return ReconImage(n, vals, mask, delta)


# ----- phantoms -----

def test_mollifier_center():
    p = Phantom((Bump(0.1 + 0.2j, 0.3, 2.5, "mollifier"),))
    assert eval_phantom(p, 0.1 + 0.2j) == pytest.approx(2.5)


def test_outside_support(mollifier):
    assert eval_phantom(mollifier, 0.2 + 0.26j) == 0
    assert eval_phantom(mollifier, -0.6) == 0


def test_overlapping_sum():
    b1 = Bump(0j, 0.3, 1.0, "mollifier")
    b2 = Bump(0.1, 0.2, 0.5, "mollifier")
    p = Phantom((b1, b2))
    z = np.array([0.05, 0.1j, -0.2])
    assert np.allclose(p(z), b1(z) + b2(z), rtol=0, atol=1e-15)


def test_gaussian_truncation_tail():
    b = Bump(0j, 0.15, 1.0, "gaussian")
    assert b.truncation == pytest.approx(gaussian_truncation(0.15))
    assert b.tail <= 1e-14 * (1 + 1e-9)


def test_short_truncation_warns():
    with pytest.warns(UserWarning):
        Bump(0j, 0.2, 1.0, "gaussian", truncation=0.5)


def test_support_rules():
    with pytest.raises(ValidationError):
        Phantom((Bump(0.6, 0.4, 1.0, "mollifier"),))
    with pytest.raises(ValidationError):
        Phantom((Bump(0.0, 0.3, 1.0, "mollifier"),), support_radius=0.2)
    with pytest.raises(ValidationError):
        Bump(0j, -1.0)
    with pytest.raises(ValidationError):
        Bump(0j, 0.2, kind="box")


def test_attenuation_bundle():
    a = load_phantom("attenuation-gaussian", attenuation=True)
    assert isinstance(a, AttenuationMap)
    assert eval_phantom(a, 0j) == pytest.approx(0.5)
    assert a.support_radius <= 0.95


def test_unknown_phantom():
    with pytest.raises(ValidationError):
        load_phantom("nope")


def test_mollifier_smoothness():
    # 4th differences stay bounded across the support edge: no jump
    b = Bump(0j, 0.5, 1.0, "mollifier")
    h = 1e-3
    x = np.arange(0.3, 0.7, h)
    d4 = np.diff(b(x.astype(complex)), 4) / h**4
    inner = np.abs(d4[x[:-4] < 0.45]).max()
    assert np.all(np.isfinite(d4))
    assert np.abs(d4).max() <= 10 * max(inner, 1.0)
    assert np.abs(d4[x[:-4] > 0.5]).max() == 0


@settings(max_examples=30)
@given(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4), st.floats(0.05, 0.4), st.floats(-3, 3))
def test_json_roundtrip(cx, cy, r, amp):
    import tempfile, os
    p = Phantom((Bump(complex(cx, cy), r, amp, "mollifier"),))
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "p.json")
        save_phantom(p, path)
        q = load_phantom(path)
    z = np.linspace(-0.9, 0.9, 41) * (1 + 0.5j)
    assert np.array_equal(p(z), q(z))


def test_json_attenuation_type(tmp_path):
    a = load_phantom("attenuation-gaussian", attenuation=True)
    path = tmp_path / "a.json"
    save_phantom(a, path)
    assert json.loads(path.read_text())["type"] == "attenuation"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert isinstance(load_phantom(str(path)), AttenuationMap)


# ----- error metrics -----

def test_metrics_exact(gaussian):
    assert error_metrics(image_of(gaussian), gaussian) == (0.0, 0.0)


def test_metrics_zero_image(gaussian):
    img = image_of(load_phantom("zero"))
    assert error_metrics(img, gaussian) == (1.0, 1.0)


def test_metrics_offset(mollifier):
    img = image_of(mollifier)
    peak = img.values[img.mask].max()
    vals = img.values.copy()
    vals[img.mask] += 0.01 * peak
    l2, linf = error_metrics(ReconImage(img.n, vals, img.mask, img.delta), mollifier)
    assert linf == pytest.approx(0.01 * peak / peak)
    assert l2 > 0


def test_recon_image_validation():
    mask = disc_mask(8)
    vals = np.ones((8, 8))
    with pytest.raises(ValidationError):
        ReconImage(8, vals, mask)
    with pytest.raises(ValidationError):
        ReconImage(8, np.zeros((7, 8)), mask)


# ----- sinogram files -----

def test_sinogram_roundtrip(tmp_path, lines):
    grid = SGrid.uniform(lines, 6, 11, t_step=0.01)
    vals = np.random.default_rng(0).standard_normal((6, 11))
    path = tmp_path / "s.bin"
    io.write_sinogram(Sinogram(grid, vals, "attenuated", lines.name), path)
    back = io.read_sinogram(path)
    assert np.array_equal(back.values, vals)
    assert back.kind == "attenuated" and back.family_name == lines.name
    assert back.grid.same_as(grid)


def test_sinogram_layout(tmp_path, lines):
    grid = SGrid.uniform(lines, 4, 9)
    vals = np.arange(36, dtype=float).reshape(4, 9)
    path = tmp_path / "s.bin"
    io.write_sinogram(Sinogram(grid, vals, "plain", lines.name), path)
    raw = path.read_bytes()
    head, body = raw.split(b"end\n", 1)
    lines_ = head.decode().splitlines()
    assert lines_[:6] == ["format=sinogram-v1", "family=euclidean-lines", "kind=plain", "ntheta=4", "ns=9",
                          "srange=-1.0,1.0"]
    assert np.array_equal(np.frombuffer(body, "<f8"), vals.ravel())


def test_sinogram_truncated(tmp_path, lines):
    path = tmp_path / "s.bin"
    io.write_sinogram(Sinogram(SGrid.uniform(lines, 4, 9), np.zeros((4, 9))), path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValidationError):
        io.read_sinogram(path)


def test_sinogram_bad_format(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"format=other\nend\n")
    with pytest.raises(ValidationError):
        io.read_sinogram(path)


# ----- images -----

def test_pgm_mapping(tmp_path, mollifier):
    img = image_of(mollifier, 32)
    path = tmp_path / "im.pgm"
    side = io.write_image(img, path, {"note": 1})
    raw = io.read_pgm(path)
    assert raw.shape == (32, 32)
    back = side["vmin"] + (side["vmax"] - side["vmin"]) * raw / 65535
    span = side["vmax"] - side["vmin"]
    assert np.max(np.abs(back - img.values)[img.mask]) <= 0.5 * span / 65535 + 1e-15
    assert np.all(raw[~img.mask] == 0)
    meta = json.loads(io.sidecar_path(path).read_text())
    assert meta["n"] == 32 and meta["note"] == 1
    assert np.array_equal(np.load(io.raw_path(path)), img.values)


def test_pgm_header(tmp_path):
    img = image_of(load_phantom("gaussian"), 16)
    path = tmp_path / "g.pgm"
    io.write_image(img, path)
    assert path.read_bytes().startswith(b"P5\n16 16\n65535\n")
    assert len(path.read_bytes()) == len(b"P5\n16 16\n65535\n") + 2 * 256

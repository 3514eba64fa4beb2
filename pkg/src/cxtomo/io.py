"""File formats: sinogram-v1, 16-bit PGM images and JSON sidecars.

sinogram-v1
    UTF-8 header of ``key=value`` lines, in this order::

        format=sinogram-v1
        family=<name>
        kind=plain|attenuated
        ntheta=<int>
        ns=<int>
        srange=<lo>,<hi>
        t_step=<float>|none
        end

    followed by ``ntheta * ns`` IEEE-754 little-endian float64 values in
    row-major order (row k holds angle ``2 pi k / ntheta``).  Floats in the
    header use ``repr`` so they round-trip exactly.  Readers ignore unknown
    keys before ``end``.

PGM
    Binary P5, maxval 65535, big-endian samples.  Row ``iy`` of the file
    holds ``y = x[iy]`` with ``x = linspace(-1, 1, n)``.  Pixel values map
    linearly: ``value = vmin + (vmax - vmin) * p / 65535``; ``vmin`` and
    ``vmax`` are stored in the sidecar JSON.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .transforms import SGrid, Sinogram

SINOGRAM_FORMAT = "sinogram-v1"


def write_sinogram(sino: Sinogram, path) -> None:
    g = sino.grid
    lo, hi = g.s_nodes[0], g.s_nodes[-1]
    header = [
        f"format={SINOGRAM_FORMAT}",
        f"family={sino.family_name}",
        f"kind={sino.kind}",
        f"ntheta={g.ntheta}",
        f"ns={g.ns}",
        f"srange={float(lo)!r},{float(hi)!r}",
        f"t_step={'none' if g.t_step is None else repr(float(g.t_step))}",
        "end",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(sino.values, dtype="<f8").tobytes())


def read_sinogram(path) -> Sinogram:
    with open(path, "rb") as fh:
        meta = {}
        while True:
            line = fh.readline()
            if not line:
                raise ValidationError(f"{path}: header ends before 'end'")
            line = line.decode("utf-8").rstrip("\n")
            if line == "end":
                break
            if "=" not in line:
                raise ValidationError(f"{path}: malformed header line {line!r}")
            k, v = line.split("=", 1)
            meta[k] = v
        payload = fh.read()
    if meta.get("format") != SINOGRAM_FORMAT:
        raise ValidationError(f"{path}: not a {SINOGRAM_FORMAT} file")
    try:
        ntheta, ns = int(meta["ntheta"]), int(meta["ns"])
        lo, hi = (float(v) for v in meta["srange"].split(","))
        t_step = meta.get("t_step", "none")
        t_step = None if t_step == "none" else float(t_step)
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"{path}: bad header ({exc})") from None
    if len(payload) != 8 * ntheta * ns:
        raise ValidationError(f"{path}: expected {8 * ntheta * ns} data bytes, found {len(payload)}")
    vals = np.frombuffer(payload, dtype="<f8").reshape(ntheta, ns).astype(float)
    grid = SGrid(2 * np.pi * np.arange(ntheta) / ntheta, np.linspace(lo, hi, ns), t_step)
    return Sinogram(grid, vals, meta.get("kind", "plain"), meta.get("family", ""))


def write_pgm(values: np.ndarray, mask: np.ndarray, path) -> dict:
    """Write a 16-bit PGM; returns the value mapping for the sidecar."""
    v = np.asarray(values, dtype=float)
    inside = v[mask] if np.any(mask) else v.ravel()
    vmin, vmax = (float(inside.min()), float(inside.max())) if inside.size else (0.0, 0.0)
    span = vmax - vmin
    p = np.zeros(v.shape) if span == 0 else (v - vmin) / span * 65535
    p = np.clip(np.rint(p), 0, 65535).astype(">u2")
    p[~mask] = 0
    n_rows, n_cols = v.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n_cols} {n_rows}\n65535\n".encode("ascii"))
        fh.write(p.tobytes())
    return {"vmin": vmin, "vmax": vmax, "mapping": "value = vmin + (vmax - vmin) * p / 65535"}


def read_pgm(path) -> np.ndarray:
    """Raw 16-bit samples of a P5 file written by :func:`write_pgm`."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or parts[2] != b"65535":
        raise ValidationError(f"{path}: not a 16-bit P5 file")
    w, h = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(h, w).astype(np.uint16)


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_image(img, path, extra: dict | None = None) -> dict:
    """Write ``path`` (PGM), ``path.json`` (sidecar) and ``path.npy`` (float64 values)."""
    path = Path(path)
    side = write_pgm(img.values, img.mask, path)
    side.update({"n": img.n, "delta": img.delta, "grid": "x = y = linspace(-1, 1, n); row iy holds y = x[iy]",
                 "mask": "|z| <= 1 - delta"})
    if extra:
        side.update(extra)
    write_json(side, sidecar_path(path))
    np.save(raw_path(path), img.values)
    return side


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def raw_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".npy")

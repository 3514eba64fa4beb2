"""Smooth compactly supported densities and attenuation maps."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ValidationError

TAIL = 1e-14
DEFAULT_DELTA = 0.05


def gaussian_truncation(sigma: float, tail: float = TAIL) -> float:
    """Radius beyond which ``exp(-r^2 / sigma^2)`` is below ``tail``."""
    return sigma * math.sqrt(-math.log(tail))


@dataclass(frozen=True)
class Bump:
    """One radial bump.

    ``kind='mollifier'``: ``amplitude * exp(1 - 1 / (1 - r^2))`` for
    ``r = |z - c| / radius < 1``.  ``kind='gaussian'``:
    ``amplitude * exp(-|z - c|^2 / radius^2)`` cut off at ``truncation``.
    """

    center: complex
    radius: float
    amplitude: float = 1.0
    kind: str = "gaussian"
    truncation: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if self.kind not in ("gaussian", "mollifier"):
            raise ValidationError(f"unknown bump kind {self.kind!r}")
        if not self.radius > 0:
            raise ValidationError("bump radius must be positive")
        if self.kind == "gaussian":
            if self.truncation is None:
                object.__setattr__(self, "truncation", gaussian_truncation(self.radius))
            elif not self.truncation > 0:
                raise ValidationError("truncation must be positive")
            elif self.tail > TAIL:
                warnings.warn(f"gaussian bump truncated where its tail is {self.tail:.2e}", stacklevel=3)

    @property
    def tail(self) -> float:
        """Relative value of a gaussian bump at its truncation radius."""
        if self.kind != "gaussian":
            return 0.0
        return math.exp(-((self.truncation / self.radius) ** 2))

    @property
    def effective_radius(self) -> float:
        return self.radius if self.kind == "mollifier" else self.truncation

    def __call__(self, z):
        d2 = np.abs(np.asarray(z) - self.center) ** 2
        if self.kind == "mollifier":
            q = d2 / self.radius**2
            out = np.zeros(np.shape(d2))
            m = q < 1
            out[m] = np.exp(1 - 1 / (1 - q[m]))
        else:
            out = np.where(d2 < self.truncation**2, np.exp(-d2 / self.radius**2), 0.0)
        return self.amplitude * out

    def to_dict(self) -> dict:
        d = {"center": [self.center.real, self.center.imag], "radius": self.radius,
             "amplitude": self.amplitude, "kind": self.kind}
        if self.kind == "gaussian":
            d["truncation"] = self.truncation
        return d


@dataclass(frozen=True)
class Phantom:
    """Sum of bumps with a declared support radius ``<= 1 - delta``."""

    bumps: tuple
    support_radius: Optional[float] = None
    delta: float = DEFAULT_DELTA
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        reach = max((abs(b.center) + b.effective_radius for b in self.bumps), default=0.0)
        if self.support_radius is None:
            object.__setattr__(self, "support_radius", reach)
        elif reach > self.support_radius + 1e-12:
            raise ValidationError(f"bumps reach radius {reach:.6g} beyond support_radius {self.support_radius}")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")
        if self.support_radius > 1 - self.delta + 1e-12:
            raise ValidationError(f"support radius {self.support_radius:.6g} exceeds 1 - delta = {1 - self.delta:.6g}")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape)
        for b in self.bumps:
            out = out + b(z)
        return out

    def scaled(self, factor: float) -> "Phantom":
        with warnings.catch_warnings():
            # the truncation was already accepted when self was built
            warnings.simplefilter("ignore")
            bumps = [Bump(b.center, b.radius, b.amplitude * factor, b.kind, b.truncation) for b in self.bumps]
        return type(self)(tuple(bumps), self.support_radius, self.delta, self.name)

    def to_dict(self) -> dict:
        return {"type": "attenuation" if isinstance(self, AttenuationMap) else "phantom",
                "delta": self.delta, "support_radius": self.support_radius,
                "bumps": [b.to_dict() for b in self.bumps]}


class AttenuationMap(Phantom):
    """Real attenuation coefficient ``a(z)``; same structure as Phantom."""


def eval_phantom(p: Phantom, z):
    """Value of the phantom at ``z`` (scalar or array)."""
    out = p(np.asarray(complex(z) if np.isscalar(z) else getattr(z, "z", z)))
    return float(out) if np.ndim(out) == 0 else out


def error_metrics(img, reference) -> tuple:
    """Masked relative L2 and Linf errors of an image against a phantom."""
    mask = img.mask
    if not np.any(mask):
        raise ValidationError("image mask is empty")
    ref = np.asarray(reference(img.z[mask]), dtype=float)
    diff = img.values[mask] - ref
    l2 = np.linalg.norm(diff) / np.linalg.norm(ref)
    linf = np.max(np.abs(diff)) / np.max(np.abs(ref))
    return float(l2), float(linf)


# --------------------------------------------------------------------------
# bundled phantoms and JSON I/O
# --------------------------------------------------------------------------

def _attenuation_gaussian():
    # cut at 0.9 so the support stays inside 1 - delta; the tail there is 1.6e-9
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bump = Bump(0j, 0.2, 0.5, "gaussian", truncation=0.9)
    return AttenuationMap((bump,), name="attenuation-gaussian")


def _bundled():
    return {
        "gaussian": lambda: Phantom((Bump(0j, 0.15, 1.0, "gaussian"),), name="gaussian"),
        "mollifier": lambda: Phantom((Bump(0.2 + 0j, 0.25, 1.0, "mollifier"),), name="mollifier"),
        "two-bumps": lambda: Phantom((Bump(-0.3 + 0.2j, 0.2, 1.0, "mollifier"),
                                      Bump(0.25 - 0.1j, 0.1, 0.6, "gaussian")), name="two-bumps"),
        "attenuation-gaussian": _attenuation_gaussian,
        "zero": lambda: Phantom((), 0.0, name="zero"),
    }


BUNDLED = tuple(_bundled())


def from_dict(d: dict, attenuation: Optional[bool] = None):
    """Build a Phantom or AttenuationMap from its JSON object."""
    if "bumps" not in d:
        raise ValidationError("phantom definition needs a 'bumps' list")
    bumps = []
    for b in d["bumps"]:
        c = b.get("center", [0.0, 0.0])
        bumps.append(Bump(complex(c[0], c[1]), float(b["radius"]), float(b.get("amplitude", 1.0)),
                          b.get("kind", "gaussian"), b.get("truncation")))
    is_att = (d.get("type") == "attenuation") if attenuation is None else attenuation
    cls = AttenuationMap if is_att else Phantom
    return cls(tuple(bumps), d.get("support_radius"), float(d.get("delta", DEFAULT_DELTA)), d.get("name", ""))


def load_phantom(spec, attenuation: bool = False):
    """Resolve a bundled name or a JSON file into a Phantom/AttenuationMap."""
    if isinstance(spec, Phantom):
        return spec
    table = _bundled()
    if spec in table:
        p = table[spec]()
        if attenuation and not isinstance(p, AttenuationMap):
            p = AttenuationMap(p.bumps, p.support_radius, p.delta, p.name)
        return p
    path = Path(spec)
    if not path.exists():
        raise ValidationError(f"no bundled phantom or file named {spec!r} (bundled: {', '.join(BUNDLED)})")
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh), attenuation=True if attenuation else None)


def save_phantom(p: Phantom, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(p.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

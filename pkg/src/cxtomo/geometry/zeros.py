"""Zeros of the Beltrami coefficient ``xi / rho`` in the unit lambda-disc.

For a type-H family ``lam -> (xi / rho)(z, lam)`` is a finite Blaschke
product times a unimodular constant.  Zeros are counted by the argument
principle on ``|lam| = 1``, located from the contour moments
``sum m_i lam_i**k`` via Newton's identities, then polished by Newton
iteration on the ratio itself.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError, NonIntegerWinding, TypeHViolation, ZeroClusterUnresolved
from .family import DiscPoint, PolarizedFamily, as_complex
from .fields import mu_ratio

N_CONTOUR = 2048
MAX_DOUBLINGS = 3
INTEGER_TOL = 1e-6
CLUSTER_TOL = 1e-6
NEWTON_TOL = 1e-10
NEWTON_MAXIT = 100
ZETA_TOL = 1e-8
PROBE = 1.0 + 0.0j


@dataclass(frozen=True)
class ZeroSet:
    """Blaschke data ``(lam_i, m_i)`` and ``zeta`` of the ratio at one point.

    ``zeros`` is ordered by the default selection rule: increasing modulus,
    ties broken by increasing argument in ``[0, 2 pi)``.
    """

    zeros: tuple
    unimodular_factor: complex
    at_point: Optional[DiscPoint] = None
    residuals: tuple = ()

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.zeros)

    def select(self, index: Optional[int] = None) -> complex:
        """Zero used by the reconstruction; ``index`` overrides the default."""
        i = 0 if index is None else index
        if not 0 <= i < len(self.zeros):
            raise IndexError(f"zero index {i} out of range ({len(self.zeros)} distinct zeros)")
        return self.zeros[i][0]

    def blaschke(self, lam):
        """``zeta * prod((lam - lam_i) / (1 - conj(lam_i) lam))**m_i``."""
        lam = np.asarray(lam, dtype=complex)
        out = np.full(lam.shape, self.unimodular_factor, dtype=complex)
        for li, m in self.zeros:
            out = out * ((lam - li) / (1 - np.conj(li) * lam)) ** m
        return out


def _order_key(lam: complex):
    arg = float(np.angle(lam)) % (2 * np.pi) if lam != 0 else 0.0
    return (round(abs(lam), 9), arg)


# --------------------------------------------------------------------------
# contour machinery; F(idx, lam) evaluates the ratio for batch members idx
# --------------------------------------------------------------------------

BatchFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _nodes(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


def _log_derivative(vals: np.ndarray) -> np.ndarray:
    """``(dR/dphi) / (i R)`` on the unit circle by spectral differentiation."""
    n = vals.shape[-1]
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    dv = np.fft.ifft(np.fft.fft(vals, axis=-1) * (1j * k), axis=-1)
    return dv / (1j * vals)


def _contour(F: BatchFn, m: int, n_nodes: int, max_doublings: int = MAX_DOUBLINGS):
    """Integer winding numbers and the log-derivative samples for every member."""
    counts = np.zeros(m, dtype=int)
    dlogs: list = [None] * m
    pending = np.arange(m)
    n = n_nodes
    last = None
    for _ in range(max_doublings + 1):
        lam = _nodes(n)
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(F(pending, lam[None, :]), (pending.size, n))
            dl = _log_derivative(vals)
        wind = dl.mean(axis=-1)
        rounded = np.rint(wind.real)
        ok = np.isfinite(wind) & (np.abs(wind - rounded) < INTEGER_TOL)
        for j in np.flatnonzero(ok):
            counts[pending[j]] = int(rounded[j])
            dlogs[pending[j]] = (n, dl[j])
        last = wind[~ok]
        pending = pending[~ok]
        if pending.size == 0:
            return counts, dlogs
        n *= 2
    raise NonIntegerWinding(f"argument-principle value {last[0]!r} is not integer-close after {n // 2} nodes")


def _power_sums(dlogs, members, kmax: int) -> np.ndarray:
    """Contour moments ``sum m_i lam_i**k``, k = 1..kmax, for each member."""
    out = np.zeros((len(members), kmax), dtype=complex)
    by_n = {}
    for row, i in enumerate(members):
        by_n.setdefault(dlogs[i][0], []).append(row)
    for n, rows in by_n.items():
        D = np.stack([dlogs[members[r]][1] for r in rows])
        lam = _nodes(n)
        P = lam[None, :] ** np.arange(1, kmax + 1)[:, None]
        out[rows] = D @ P.T / n
    return out


def _roots_from_power_sums(p: np.ndarray) -> np.ndarray:
    """Roots of the monic polynomials with the given power sums (rows of p).

    Newton's identities give the elementary symmetric functions; the roots
    are the eigenvalues of the companion matrices.
    """
    M, K = p.shape
    e = np.zeros((M, K + 1), dtype=complex)
    e[:, 0] = 1.0
    for k in range(1, K + 1):
        acc = np.zeros(M, dtype=complex)
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[:, k - i] * p[:, i - 1]
        e[:, k] = acc / k
    coef = e * (-1.0) ** np.arange(K + 1)
    comp = np.zeros((M, K, K), dtype=complex)
    comp[:, 0, :] = -coef[:, 1:]
    if K > 1:
        idx = np.arange(K - 1)
        comp[:, idx + 1, idx] = 1.0
    return np.linalg.eigvals(comp)


def _cluster(roots: np.ndarray):
    """Merge roots closer than CLUSTER_TOL into (centroid, multiplicity)."""
    out = []
    used = np.zeros(roots.size, dtype=bool)
    for i in range(roots.size):
        if used[i]:
            continue
        grp = (~used) & (np.abs(roots - roots[i]) < CLUSTER_TOL)
        used |= grp
        out.append((roots[grp].mean(), int(grp.sum())))
    return out


def _merge_polished(owner, cand, mult):
    """Merge simple roots that Newton drove onto a common multiple root."""
    keep = np.ones(cand.size, dtype=bool)
    mult = mult.copy()
    for i in np.unique(owner):
        sel = np.flatnonzero((owner == i) & keep)
        if sel.size < 2:
            continue
        for j, a in enumerate(sel):
            if not keep[a]:
                continue
            for b in sel[j + 1:]:
                if keep[b] and abs(cand[a] - cand[b]) < CLUSTER_TOL:
                    mult[a] += mult[b]
                    keep[b] = False
    return owner[keep], cand[keep], mult[keep]


def _eval_at(F: BatchFn, idx: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Ratio at scattered points; near the origin use the Cauchy mean value."""
    lam = np.asarray(lam, dtype=complex)
    out = np.empty(lam.shape, dtype=complex)
    small = np.abs(lam) < 1e-8
    if np.any(~small):
        out[~small] = F(idx[~small], lam[~small])
    if np.any(small):
        q = 1e-3 * _nodes(16)
        out[small] = F(idx[small], lam[small][:, None] + q[None, :]).mean(axis=-1)
    return out


def _derivative_at(F: BatchFn, idx: np.ndarray, lam: np.ndarray) -> np.ndarray:
    r = np.where(np.abs(lam) < 2e-3, 4e-3, 1e-3)
    r = np.minimum(r, 0.5 * (1 - np.abs(lam)))
    q = _nodes(16)
    vals = F(idx, lam[:, None] + r[:, None] * q[None, :])
    return np.sum(vals * np.conj(q), axis=-1) / (16 * r)


def _polish(F: BatchFn, idx: np.ndarray, lam: np.ndarray) -> np.ndarray:
    lam = lam.astype(complex).copy()
    step = np.full(lam.shape, np.inf)
    active = np.ones(lam.shape, dtype=bool)
    for _ in range(NEWTON_MAXIT):
        if not np.any(active):
            break
        a = np.flatnonzero(active)
        with np.errstate(all="ignore"):
            val = F(idx[a], lam[a])
            der = _derivative_at(F, idx[a], lam[a])
            d = val / der
        d = np.where(val == 0, 0, d)
        if not np.all(np.isfinite(d)):
            raise ZeroClusterUnresolved("Newton step is not finite")
        lam[a] -= d
        step[a] = np.abs(d)
        active[a] = step[a] > 1e-14 * np.maximum(1.0, np.abs(lam[a]))
        if np.any(np.abs(lam[a]) >= 1):
            raise ZeroClusterUnresolved("Newton iterate left the unit disc")
    if np.any(step > NEWTON_TOL):
        raise ZeroClusterUnresolved(f"Newton did not reach {NEWTON_TOL:g} in {NEWTON_MAXIT} iterations")
    return lam


def _solve(F: BatchFn, m: int, n_nodes: int, points=None) -> list:
    counts, dlogs = _contour(F, m, n_nodes)
    if np.any(counts < 0):
        raise TypeHViolation("ratio has more poles than zeros in the unit disc")

    # candidate zeros per member, flattened as (member, lam, multiplicity)
    owner, cand, mult = [], [], []
    for K in sorted(set(counts.tolist()) - {0}):
        members = np.flatnonzero(counts == K)
        roots = _roots_from_power_sums(_power_sums(dlogs, members, K))
        for i, rr in zip(members, roots):
            for lam_c, mm in _cluster(rr):
                owner.append(i)
                cand.append(lam_c)
                mult.append(mm)
    owner = np.asarray(owner, dtype=int)
    cand = np.asarray(cand, dtype=complex)
    mult = np.asarray(mult, dtype=int)

    simple = mult == 1
    if np.any(simple):
        cand[simple] = _polish(F, owner[simple], cand[simple])
    if np.any(simple):
        owner, cand, mult = _merge_polished(owner, cand, mult)
    cand[np.abs(cand) < 1e-12] = 0.0
    if np.any(np.abs(cand) >= 1):
        raise ZeroClusterUnresolved("located zero is not inside the unit disc")
    resid = np.abs(_eval_at(F, owner, cand)) if owner.size else np.zeros(0)
    bad = (mult > 1) & (resid > 1e-9)
    if np.any(bad):
        raise ZeroClusterUnresolved("clustered zero does not annihilate the ratio")

    probe_vals = F(np.arange(m), np.full(m, PROBE))
    out = []
    for i in range(m):
        sel = owner == i
        zs = sorted(zip(cand[sel], mult[sel], resid[sel]), key=lambda t: _order_key(t[0]))
        den = np.prod([((PROBE - l) / (1 - np.conj(l) * PROBE)) ** k for l, k, _ in zs]) if zs else 1.0
        zeta = complex(probe_vals[i] / den)
        if abs(abs(zeta) - 1) > ZETA_TOL:
            raise TypeHViolation(f"unimodular factor has modulus {abs(zeta)!r}")
        pt = None if points is None else points[i]
        out.append(ZeroSet(tuple((complex(l), int(k)) for l, k, _ in zs), zeta, pt,
                           tuple(float(r) for _, _, r in zs)))
    return out


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------

def _family_batch(family: PolarizedFamily, zs: np.ndarray) -> BatchFn:
    def F(idx, lam):
        zz = zs[idx].reshape(idx.shape + (1,) * (np.ndim(lam) - idx.ndim))
        return mu_ratio(family, zz, lam)
    return F


def _function_batch(fn) -> BatchFn:
    def F(idx, lam):
        return np.asarray(fn(np.asarray(lam, dtype=complex)), dtype=complex) * np.ones(np.shape(lam))
    return F


def winding_number(fn, n_nodes: int = N_CONTOUR) -> float:
    """Raw argument-principle integral of ``fn`` over the unit circle."""
    vals = np.asarray(fn(_nodes(n_nodes)), dtype=complex)[None, :]
    return complex(_log_derivative(vals).mean()).real


def count_zeros_fn(fn, n_nodes: int = N_CONTOUR) -> int:
    """Zero count of a holomorphic ``fn`` (vectorized in lam) in the unit disc."""
    counts, _ = _contour(_function_batch(fn), 1, n_nodes)
    return int(counts[0])


def find_zeros_fn(fn, n_nodes: int = N_CONTOUR) -> ZeroSet:
    """Blaschke data of a holomorphic self-map ``fn`` of the unit disc."""
    return _solve(_function_batch(fn), 1, n_nodes)[0]


def count_zeros(family: PolarizedFamily, z, n_nodes: int = N_CONTOUR) -> int:
    """Number of zeros (with multiplicity) of ``lam -> xi/rho(z, lam)`` in the disc."""
    zs = np.atleast_1d(as_complex(z))
    counts, _ = _contour(_family_batch(family, zs), 1, n_nodes)
    return int(counts[0])


class ZeroCache:
    """Thread-safe per-point cache of ZeroSets.

    Keys are the family name and ``z`` rounded to 1e-12; zero sets are never
    reused across distinct points.
    """

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(family, z):
        return (family.name, round(z.real * 1e12), round(z.imag * 1e12))

    def get(self, family, z):
        with self._lock:
            return self._data.get(self.key(family, z))

    def put(self, family, z, zs: ZeroSet):
        with self._lock:
            self._data[self.key(family, z)] = zs

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        with self._lock:
            return len(self._data)


DEFAULT_CACHE = ZeroCache()


def find_zeros(family: PolarizedFamily, z, n_nodes: int = N_CONTOUR, cache: Optional[ZeroCache] = DEFAULT_CACHE) -> ZeroSet:
    """Blaschke zeros, multiplicities and unimodular factor at one point."""
    pt = z if isinstance(z, DiscPoint) else DiscPoint.from_complex(as_complex(z))
    zc = pt.z
    if cache is not None:
        hit = cache.get(family, zc)
        if hit is not None:
            return hit
    out = _solve(_family_batch(family, np.array([zc])), 1, n_nodes, points=[pt])[0]
    if cache is not None:
        cache.put(family, zc, out)
    return out


def find_zeros_batch(family: PolarizedFamily, zs, n_nodes: int = N_CONTOUR, chunk: int = 256) -> list:
    """``find_zeros`` for many points, processed in fixed-size chunks."""
    zs = np.asarray(zs, dtype=complex).ravel()
    if np.any(np.abs(zs) >= 1):
        raise DomainError("points must lie inside the unit disc")
    out = []
    for start in range(0, zs.size, chunk):
        part = zs[start:start + chunk]
        out.extend(_solve(_family_batch(family, part), part.size, n_nodes))
    return out

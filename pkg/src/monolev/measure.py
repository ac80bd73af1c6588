"""Compactly supported finite measures on the real line.

A :class:`DiscretizedMeasure` is a finite list of atoms plus a density
tabulated on a uniform grid.  The density is read as the piecewise-linear
interpolant of its node values, so trapezoidal sums are exact integrals of
that interpolant; the same convention drives moments, the Cauchy transform,
CDFs and inverse-CDF sampling.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as spi

from .errors import (DomainMismatch, EmptyMeasure, InputError, NegativeMass,
                     NotProbability, OrderTooHigh)
from .functions import BlackBox, Polynomial, Resolvent, TestFunction

DEFAULT_GRID_POINTS = 2001
MAX_MOMENT_ORDER = 32


@dataclass(frozen=True, eq=False)
class DiscretizedMeasure:
    """Atoms plus a gridded density (trapezoidal mass convention).

    Attributes
    ----------
    atom_pos, atom_mass : ndarray
        Atom positions (sorted) and their non-negative masses.
    grid_lo, grid_hi : float
        End points of the density grid.  Ignored when ``density`` is empty.
    density : ndarray
        Non-negative density values at ``linspace(grid_lo, grid_hi, n)``.
    is_probability : bool
        Whether the measure was normalised to total mass one.
    """

    atom_pos: np.ndarray
    atom_mass: np.ndarray
    grid_lo: float = 0.0
    grid_hi: float = 0.0
    density: np.ndarray = np.zeros(0)
    is_probability: bool = True

    @property
    def has_density(self) -> bool:
        return self.density.size > 1

    @cached_property
    def x(self) -> np.ndarray:
        if not self.has_density:
            return np.zeros(0)
        return np.linspace(self.grid_lo, self.grid_hi, self.density.size)

    @property
    def h(self) -> float:
        return (self.grid_hi - self.grid_lo) / (self.density.size - 1) if self.has_density else 0.0

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights of the grid nodes."""
        if not self.has_density:
            return np.zeros(0)
        w = np.full(self.density.size, self.h)
        w[0] = w[-1] = self.h / 2
        return w

    @property
    def atom_total(self) -> float:
        return float(self.atom_mass.sum())

    @property
    def density_mass(self) -> float:
        return float(self.weights @ self.density) if self.has_density else 0.0

    @property
    def total_mass(self) -> float:
        return moment(self, 0)

    @property
    def support(self) -> tuple:
        """Smallest interval holding all atoms and the density grid."""
        pts = list(self.atom_pos)
        if self.has_density:
            nz = np.flatnonzero(self.density > 0)
            if nz.size:
                x = self.x
                pts += [x[max(nz[0] - 1, 0)], x[min(nz[-1] + 1, x.size - 1)]]
        if not pts:
            return (0.0, 0.0)
        return (float(min(pts)), float(max(pts)))

    @property
    def scale(self) -> float:
        lo, hi = self.support
        return max(1.0, abs(lo), abs(hi))

    def nodes(self):
        """Quadrature nodes and weights representing the whole measure."""
        if self.has_density:
            keep = self.density > 0
            return (np.concatenate([self.atom_pos, self.x[keep]]),
                    np.concatenate([self.atom_mass, (self.weights * self.density)[keep]]))
        return self.atom_pos.copy(), self.atom_mass.copy()

    def translated(self, b: float) -> "DiscretizedMeasure":
        """Image under ``x -> x + b``."""
        return DiscretizedMeasure(self.atom_pos + b, self.atom_mass, self.grid_lo + b,
                                  self.grid_hi + b, self.density, self.is_probability)

    def scaled(self, c: float) -> "DiscretizedMeasure":
        return DiscretizedMeasure(self.atom_pos, self.atom_mass * c, self.grid_lo,
                                  self.grid_hi, self.density * c, False)

    def __repr__(self):
        lo, hi = self.support
        return (f"DiscretizedMeasure(atoms={len(self.atom_pos)}, grid_points={self.density.size}, "
                f"support=[{lo:.4g}, {hi:.4g}], mass={self.total_mass:.6g})")


def make_measure(atoms: Sequence = (), density=None, grid=None, probability: bool = True,
                 sampling: str = "cell", merge_tol: float = 0.0) -> DiscretizedMeasure:
    """Build a measure from atoms and an optional density table.

    Parameters
    ----------
    atoms : sequence of (position, mass)
    density : array_like or callable, optional
        Node values on the grid, or a function sampled onto it.  Callables
        are sampled by ``sampling``: ``"cell"`` stores the average over each
        node's trapezoid cell (so the grid mass equals the integral even for
        integrable end-point singularities), ``"point"`` evaluates at the
        nodes and zeroes non-finite values.
    grid : (lo, hi) or (lo, hi, n)
        Required with ``density``; ``n`` defaults to the table length or
        :data:`DEFAULT_GRID_POINTS`.
    probability : bool
        Renormalise to total mass one.
    merge_tol : float
        Atoms closer than this are merged.
    """
    atoms = [(float(p), float(m)) for p, m in atoms]
    pos = np.array([p for p, _ in atoms], dtype=float)
    mass = np.array([m for _, m in atoms], dtype=float)
    if np.any(mass < 0):
        raise NegativeMass("atom masses must be non-negative")
    if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(mass)):
        raise InputError("atoms must be finite")

    lo = hi = 0.0
    dens = np.zeros(0)
    if density is not None:
        if grid is None:
            raise InputError("a density needs grid bounds")
        lo, hi = float(grid[0]), float(grid[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise InputError(f"bad grid bounds {grid}")
        if callable(density):
            n = int(grid[2]) if len(grid) > 2 else DEFAULT_GRID_POINTS
            dens = _sample_callable(density, lo, hi, n, sampling)
        else:
            dens = np.asarray(density, dtype=float).copy()
            if len(grid) > 2 and int(grid[2]) != dens.size:
                raise InputError("density length does not match grid n")
        if dens.size < 2:
            raise InputError("density grid needs at least two points")
        if np.any(~np.isfinite(dens)):
            raise InputError("density values must be finite")
        if np.any(dens < 0):
            raise NegativeMass("density values must be non-negative")

    order = np.argsort(pos, kind="stable")
    pos, mass = _merge_atoms(pos[order], mass[order], merge_tol)
    keep = mass > 0
    pos, mass = pos[keep], mass[keep]

    mu = DiscretizedMeasure(pos, mass, lo, hi, dens, False)
    total = mu.total_mass
    if total <= 0:
        raise EmptyMeasure("measure has no mass")
    if probability:
        mu = DiscretizedMeasure(pos, mass / total, lo, hi, dens / total, True)
    return mu


def _merge_atoms(pos, mass, tol):
    if pos.size < 2:
        return pos, mass
    out_p, out_m = [pos[0]], [mass[0]]
    for p, m in zip(pos[1:], mass[1:]):
        if p - out_p[-1] <= tol:
            tot = out_m[-1] + m
            if tot > 0:
                out_p[-1] = (out_p[-1] * out_m[-1] + p * m) / tot
            out_m[-1] = tot
        else:
            out_p.append(p)
            out_m.append(m)
    return np.array(out_p), np.array(out_m)


def _sample_callable(f: Callable, lo: float, hi: float, n: int, sampling: str) -> np.ndarray:
    x = np.linspace(lo, hi, n)
    if sampling == "point":
        with np.errstate(all="ignore"):
            v = np.asarray(f(x), dtype=float)
        return np.where(np.isfinite(v), v, 0.0)
    if sampling != "cell":
        raise InputError(f"unknown sampling mode {sampling!r}")
    h = (hi - lo) / (n - 1)
    a = np.clip(x - h / 2, lo, hi)
    b = np.clip(x + h / 2, lo, hi)
    g = lambda s: float(f(s))
    vals = np.empty(n)
    for i in range(n):
        vals[i] = spi.quad(g, a[i], b[i], limit=100)[0] / (b[i] - a[i])
    return np.maximum(vals, 0.0)


def moment(mu: DiscretizedMeasure, k: int) -> float:
    """k-th raw moment: atom sum plus trapezoidal integral of ``x**k`` density."""
    if k < 0 or int(k) != k:
        raise InputError("moment order must be a non-negative integer")
    if k > MAX_MOMENT_ORDER:
        raise OrderTooHigh(f"order {k} exceeds {MAX_MOMENT_ORDER}")
    val = float(np.sum(mu.atom_mass * mu.atom_pos ** k))
    if mu.has_density:
        val += float(mu.weights @ (mu.x ** k * mu.density))
    return val


def cauchy_transform(mu: DiscretizedMeasure, z) -> np.ndarray:
    """``int 1/(z - x) dmu(x)`` for ``Im z > 0``, exact for the interpolated density."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    if mu.atom_pos.size:
        for i in range(0, flat.size, 4096):
            zz = flat[i:i + 4096, None]
            out[i:i + 4096] = (mu.atom_mass / (zz - mu.atom_pos)).sum(axis=1)
    if mu.has_density:
        out += _density_cauchy(mu.x, mu.density, flat)
    return out.reshape(z.shape)


def _density_cauchy(x, d, z):
    # segment k carries l(y) = d_k + s_k (y - x_k); its integral of l(y)/(z-y) is
    # l(z) * log((z - x_k)/(z - x_{k+1})) - s_k h.
    nz = np.flatnonzero(d > 0)
    if nz.size == 0:
        return np.zeros(z.shape, complex)
    i0, i1 = max(nz[0] - 1, 0), min(nz[-1] + 1, d.size - 1)
    x, d = x[i0:i1 + 1], d[i0:i1 + 1]
    h = x[1] - x[0]
    s = np.diff(d) / h
    xl, dl = x[:-1], d[:-1]
    out = np.empty(z.shape, complex)
    step = max(1, 2_000_000 // max(xl.size, 1))
    for i in range(0, z.size, step):
        zz = z[i:i + step, None]
        logs = np.log1p(h / (zz - x[1:]))
        out[i:i + step] = ((dl + s * (zz - xl)) * logs).sum(axis=1)
    out -= d[-1] - d[0]
    return out


def integrate(mu: DiscretizedMeasure, f: TestFunction, full_output: bool = False):
    """Integrate a test function against ``mu``.

    Polynomials and black boxes use the trapezoidal rule on the density
    grid (so ``integrate(mu, x**k) == moment(mu, k)``); resolvents use the
    exact Cauchy integral of the interpolated density.  With
    ``full_output`` the pair ``(value, abserr)`` is returned, ``abserr``
    being a Richardson estimate from the half-resolution grid.
    """
    lo, hi = mu.support
    f.check_domain(lo, hi)
    err = 0.0
    if isinstance(f, Resolvent):
        z = f.pole
        val = cauchy_transform(mu, z) if z.imag > 0 else np.conj(cauchy_transform(mu, np.conj(z)))
        val = complex(val)
    else:
        val = np.sum(mu.atom_mass * f(mu.atom_pos)) if mu.atom_pos.size else 0.0
        if mu.has_density:
            fx = f(mu.x)
            if not np.all(np.isfinite(fx[mu.density > 0])):
                raise DomainMismatch("test function not finite on the support")
            fine = mu.weights @ (fx * mu.density)
            val = val + fine
            if mu.density.size >= 5 and (mu.density.size - 1) % 2 == 0:
                w2 = np.full((mu.density.size + 1) // 2, 2 * mu.h)
                w2[0] = w2[-1] = mu.h
                coarse = w2 @ (fx * mu.density)[::2]
                err = abs(fine - coarse) / 3
        val = complex(val) if np.iscomplexobj(val) else float(val)
    return (val, err) if full_output else val


# ---------------------------------------------------------------------------
# CDF, quantiles and sampling
# ---------------------------------------------------------------------------

class _Pieces:
    """Alternating atoms and linear-density segments, ordered on the line."""

    def __init__(self, mu: DiscretizedMeasure):
        pts = [mu.atom_pos]
        if mu.has_density:
            pts.append(mu.x)
        b = np.unique(np.concatenate(pts)) if pts else np.zeros(1)
        if b.size == 0:
            b = np.zeros(1)
        am = np.zeros(b.size)
        if mu.atom_pos.size:
            am[np.searchsorted(b, mu.atom_pos)] += mu.atom_mass
        L = np.diff(b)
        if mu.has_density:
            dl = np.interp(b[:-1], mu.x, mu.density, left=0.0, right=0.0)
            dr = np.interp(b[1:], mu.x, mu.density, left=0.0, right=0.0)
            mid = 0.5 * (b[:-1] + b[1:])
            outside = (mid < mu.grid_lo) | (mid > mu.grid_hi)
            dl[outside] = dr[outside] = 0.0
        else:
            dl = dr = np.zeros(L.size)
        seg = 0.5 * (dl + dr) * L
        mass = np.empty(2 * b.size - 1)
        mass[0::2] = am
        mass[1::2] = seg
        self.b, self.L, self.dl, self.dr = b, L, dl, dr
        self.mass = mass
        self.cum = np.concatenate([[0.0], np.cumsum(mass)])
        self.total = self.cum[-1]
        # first moments of each piece
        k = np.divide(dr - dl, L, out=np.zeros_like(L), where=L > 0)
        m1 = np.empty_like(mass)
        m1[0::2] = am * b
        m1[1::2] = b[:-1] * (dl * L + k * L ** 2 / 2) + dl * L ** 2 / 2 + k * L ** 3 / 3
        self.k = k
        self.cum1 = np.concatenate([[0.0], np.cumsum(m1)])

    def locate(self, v):
        """Piece index and residual mass inside the piece for cumulative mass v."""
        v = np.clip(v, 0.0, self.total)
        idx = np.searchsorted(self.cum, v, side="right") - 1
        idx = np.clip(idx, 0, self.mass.size - 1)
        # skip empty pieces that searchsorted may land on at their boundary
        return idx, v - self.cum[idx]

    def _seg_offset(self, j, r):
        dl, k, L = self.dl[j], self.k[j], self.L[j]
        disc = np.sqrt(np.maximum(dl * dl + 2 * k * r, 0.0))
        denom = dl + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(denom > 0, 2 * r / denom, 0.0)
        return np.clip(s, 0.0, L)

    def quantile(self, p):
        idx, r = self.locate(np.asarray(p, float) * self.total)
        out = np.empty(idx.shape)
        atom = idx % 2 == 0
        out[atom] = self.b[idx[atom] // 2]
        j = idx[~atom] // 2
        out[~atom] = self.b[j] + self._seg_offset(j, r[~atom])
        return out

    def partial_mean(self, p):
        """``int x dmu`` over the lower ``p``-fraction of the mass."""
        idx, r = self.locate(np.asarray(p, float) * self.total)
        out = self.cum1[idx].copy()
        atom = idx % 2 == 0
        out[atom] += r[atom] * self.b[idx[atom] // 2]
        j = idx[~atom] // 2
        s = self._seg_offset(j, r[~atom])
        dl, k, b0 = self.dl[j], self.k[j], self.b[j]
        out[~atom] += b0 * (dl * s + k * s ** 2 / 2) + dl * s ** 2 / 2 + k * s ** 3 / 3
        return out

    def cdf(self, x):
        x = np.asarray(x, float)
        i = np.searchsorted(self.b, x, side="right") - 1
        out = np.zeros(x.shape)
        inside = i >= 0
        ii = np.minimum(i[inside], self.b.size - 1)
        base = self.cum[2 * ii + 1]  # everything up to and including atom ii
        s = x[inside] - self.b[ii]
        if self.L.size:
            jj = np.minimum(ii, self.L.size - 1)
            within = ii < self.L.size
            out[inside] = base + np.where(within, self.dl[jj] * s + self.k[jj] * s ** 2 / 2, 0.0)
        else:
            out[inside] = base
        return np.minimum(out, self.total)


def _pieces(mu):
    cache = mu.__dict__.get("_pieces_cache")
    if cache is None:
        cache = _Pieces(mu)
        mu.__dict__["_pieces_cache"] = cache
    return cache


def cdf(mu: DiscretizedMeasure, x) -> np.ndarray:
    """Distribution function ``mu((-inf, x])`` (right-continuous)."""
    return _pieces(mu).cdf(x)


def quantile(mu: DiscretizedMeasure, p) -> np.ndarray:
    """Generalised inverse of the normalised CDF."""
    return _pieces(mu).quantile(p)


def equal_mass_nodes(mu: DiscretizedMeasure, n: int):
    """Collapse ``mu`` into ``n`` equal-mass nodes placed at conditional means.

    Preserves the total mass and the mean exactly.
    """
    pc = _pieces(mu)
    edges = np.linspace(0.0, 1.0, n + 1)
    pm = pc.partial_mean(edges)
    w = np.full(n, pc.total / n)
    return np.diff(pm) / w, w


def sample(mu: DiscretizedMeasure, n: int, rng=None) -> np.ndarray:
    """Draw ``n`` samples by inverse-CDF transform; deterministic given the seed."""
    if not mu.is_probability:
        raise NotProbability("sampling needs a probability measure")
    rng = np.random.default_rng(rng)
    return quantile(mu, rng.random(n))


def kolmogorov_distance(samples, mu: DiscretizedMeasure) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``mu``."""
    s = np.sort(np.asarray(samples, float))
    n = s.size
    F = cdf(mu, s)
    Fm = F - _atom_mass_at(mu, s)  # left limits
    up = np.arange(1, n + 1) / n - F
    down = Fm - np.arange(0, n) / n
    return float(max(up.max(), down.max(), 0.0))


def _atom_mass_at(mu, s):
    out = np.zeros(s.shape)
    if mu.atom_pos.size:
        i = np.searchsorted(mu.atom_pos, s)
        i = np.clip(i, 0, mu.atom_pos.size - 1)
        hit = mu.atom_pos[i] == s
        out[hit] = mu.atom_mass[i[hit]]
    return out


# ---------------------------------------------------------------------------
# combination and comparison
# ---------------------------------------------------------------------------

def regrid(mu: DiscretizedMeasure, lo: float, hi: float, n: int) -> np.ndarray:
    """Density of ``mu`` linearly interpolated onto a new grid (zero outside)."""
    x = np.linspace(lo, hi, n)
    if not mu.has_density:
        return np.zeros(n)
    return np.interp(x, mu.x, mu.density, left=0.0, right=0.0)


def mix(measures: Sequence[DiscretizedMeasure], weights: Sequence[float],
        probability: bool = True, atom_tol: float = 1e-12) -> DiscretizedMeasure:
    """Weighted sum of measures on a common grid."""
    weights = np.asarray(weights, float)
    dens = [m for m in measures if m.has_density]
    grid = None
    d = None
    if dens:
        g0 = (dens[0].grid_lo, dens[0].grid_hi, dens[0].density.size)
        same = all((m.grid_lo, m.grid_hi, m.density.size) == g0 for m in dens)
        if same:
            grid = g0
        else:
            lo = min(m.grid_lo for m in dens)
            hi = max(m.grid_hi for m in dens)
            h = min(m.h for m in dens)
            grid = (lo, hi, int(np.ceil((hi - lo) / h)) + 1)
        d = np.zeros(grid[2])
        for m, w in zip(measures, weights):
            if m.has_density:
                d += w * (m.density if same else regrid(m, *grid))
    atoms = [(p, w * a) for m, w in zip(measures, weights) for p, a in zip(m.atom_pos, m.atom_mass)]
    scale = max([1.0] + [m.scale for m in measures])
    return make_measure(atoms, d, grid, probability=probability, merge_tol=atom_tol * scale)


def l1_distance(mu: DiscretizedMeasure, nu: DiscretizedMeasure, atom_tol: float = 1e-6) -> float:
    """Total-variation style distance: L1 of the densities plus atom mismatch.

    Atoms closer than ``atom_tol`` (relative to the scale) are paired.
    """
    dist = 0.0
    if mu.has_density or nu.has_density:
        xs = np.unique(np.concatenate([m.x for m in (mu, nu) if m.has_density]))
        f = np.interp(xs, mu.x, mu.density, left=0, right=0) if mu.has_density else 0 * xs
        g = np.interp(xs, nu.x, nu.density, left=0, right=0) if nu.has_density else 0 * xs
        dist += float(np.trapezoid(np.abs(f - g), xs))
    tol = atom_tol * max(mu.scale, nu.scale)
    pos = np.concatenate([mu.atom_pos, nu.atom_pos])
    sgn = np.concatenate([mu.atom_mass, -nu.atom_mass])
    order = np.argsort(pos, kind="stable")
    pos, sgn = pos[order], sgn[order]
    i = 0
    while i < pos.size:
        j = i + 1
        while j < pos.size and pos[j] - pos[j - 1] <= tol:
            j += 1
        dist += abs(sgn[i:j].sum())
        i = j
    return dist


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def to_dict(mu: DiscretizedMeasure) -> dict:
    out = {"atoms": [[float(p), float(m)] for p, m in zip(mu.atom_pos, mu.atom_mass)]}
    if mu.has_density:
        out["grid"] = {"lo": mu.grid_lo, "hi": mu.grid_hi, "n": int(mu.density.size)}
        out["density"] = [float(v) for v in mu.density]
    return out


def from_dict(d: dict, probability: bool = True) -> DiscretizedMeasure:
    atoms = d.get("atoms", [])
    density = d.get("density")
    grid = None
    if density is not None:
        g = d.get("grid")
        if g is None:
            raise InputError("measure with density needs a grid")
        grid = (g["lo"], g["hi"], g.get("n", len(density)))
    return make_measure(atoms, density, grid, probability=probability)


def dumps(mu: DiscretizedMeasure) -> str:
    return json.dumps(to_dict(mu))


def loads(text: str, probability: bool = True) -> DiscretizedMeasure:
    return from_dict(json.loads(text), probability)


def to_csv(mu: DiscretizedMeasure) -> str:
    """CSV with ``# atom pos mass`` comment lines and ``x,density`` columns."""
    buf = io.StringIO()
    for p, m in zip(mu.atom_pos, mu.atom_mass):
        buf.write(f"# atom {float(p)!r} {float(m)!r}\n")
    buf.write("x,density\n")
    for x, v in zip(mu.x, mu.density):
        buf.write(f"{float(x)!r},{float(v)!r}\n")
    return buf.getvalue()


def from_csv(text: str, probability: bool = True) -> DiscretizedMeasure:
    atoms, xs, ds = [], [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "atom":
                atoms.append((float(parts[1]), float(parts[2])))
            continue
        if line.startswith("x,"):
            continue
        x, v = line.split(",")
        xs.append(float(x))
        ds.append(float(v))
    if len(xs) >= 2:
        return make_measure(atoms, ds, (xs[0], xs[-1], len(xs)), probability=probability)
    return make_measure(atoms, probability=probability)


# ---------------------------------------------------------------------------
# standard measures
# ---------------------------------------------------------------------------

def dirac(a: float = 0.0) -> DiscretizedMeasure:
    return make_measure([(a, 1.0)])


def bernoulli(lo: float = -1.0, hi: float = 1.0, p: float = 0.5) -> DiscretizedMeasure:
    """Two-point law ``(1-p) delta_lo + p delta_hi``."""
    return make_measure([(lo, 1 - p), (hi, p)])


def arcsine(t: float = 1.0, n: int = DEFAULT_GRID_POINTS) -> DiscretizedMeasure:
    """Arcsine law on ``(-sqrt(2t), sqrt(2t))`` with density ``1/(pi sqrt(2t - x^2))``.

    The grid extends two cells past each end point (which stay nodes), so
    the tabulated density returns to zero inside the grid.
    """
    b = np.sqrt(2 * t)
    h = 2 * b / (n - 5)
    return make_measure(density=lambda x: arcsine_density(x, t), grid=(-b - 2 * h, b + 2 * h, n))


def arcsine_density(x, t: float = 1.0):
    x = np.asarray(x, float)
    out = np.zeros(x.shape)
    inside = x * x < 2 * t
    out[inside] = 1.0 / (np.pi * np.sqrt(2 * t - x[inside] ** 2))
    return out

"""Cauchy transforms on the upper half-plane and their inversion.

Evaluators are small immutable objects exposing vectorised ``G`` (Cauchy
transform) and ``H = 1/G`` (reciprocal Cauchy transform) for ``Im z > 0``,
plus an interval guaranteed to contain the support of the underlying
measure.  :func:`stieltjes_invert` turns any evaluator back into a
:class:`~monolev.measure.DiscretizedMeasure`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import measure as ms
from . import semigroup as sg
from .errors import (EvaluatorUndefined, LowerHalfPlane, MassDeficit,
                     NegativeDensityExcess, NumericalError, StepFailure)


class CauchyEvaluator:
    """Base class; subclasses override ``G`` or ``H`` (or both).

    ``boundary_exact`` marks evaluators that stay accurate arbitrarily
    close to the real axis, which lets inversion use a much smaller
    smoothing height.
    """

    boundary_exact = False

    def lattice(self):
        """``(x0, h)`` of a natural grid for the density, or ``None``."""
        return None

    def G(self, z):
        return 1.0 / self.H(z)

    def H(self, z):
        return 1.0 / self.G(z)

    def support_bound(self) -> tuple:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FromMeasure(CauchyEvaluator):
    mu: ms.DiscretizedMeasure

    boundary_exact = True

    def G(self, z):
        return ms.cauchy_transform(self.mu, z)

    def support_bound(self):
        return self.mu.support

    def lattice(self):
        return (self.mu.grid_lo, self.mu.h) if self.mu.has_density else None


@dataclass(frozen=True)
class ClosedFormBM(CauchyEvaluator):
    """Arcsine marginals: ``H_t(z) = sqrt(z^2 - 2t)`` on the Pick branch."""

    t: float

    def H(self, z):
        w = np.sqrt(np.asarray(z, complex) ** 2 - 2 * self.t)
        return np.where(w.imag < 0, -w, w)

    def support_bound(self):
        b = np.sqrt(2 * self.t)
        return (-b, b)


@dataclass(frozen=True)
class ClosedFormDrift(CauchyEvaluator):
    """Point-mass marginals of the pure drift: ``H_t(z) = z + a t``."""

    a: float
    t: float

    def H(self, z):
        return np.asarray(z, complex) + self.a * self.t

    def support_bound(self):
        p = -self.a * self.t
        return (p, p)


@dataclass(frozen=True, eq=False)
class FromFlow(CauchyEvaluator):
    """``H_t`` obtained by integrating the flow of a characteristic pair."""

    pair: sg.CharacteristicPair
    t: float

    def H(self, z):
        z = np.asarray(z, complex)
        if self.t == 0:
            return z
        try:
            return sg.flow_H(self.pair, z, self.t)
        except StepFailure as e:
            raise EvaluatorUndefined(f"flow did not converge: {e}") from e

    def support_bound(self):
        return sg.support_bound(self.pair, self.t)


@dataclass(frozen=True, eq=False)
class Shifted(CauchyEvaluator):
    """``H(z) = H_base(z) - y``: the transform of ``delta_y |> base``."""

    base: CauchyEvaluator
    y: float

    def H(self, z):
        return self.base.H(z) - self.y

    @property
    def boundary_exact(self):
        return self.base.boundary_exact

    def lattice(self):
        lat = self.base.lattice()
        return None if lat is None else (lat[0] + self.y, lat[1])

    def support_bound(self):
        lo, hi = self.base.support_bound()
        return (lo + min(self.y, 0.0), hi + max(self.y, 0.0))


def _single_atom(ev):
    """Position of the lone atom behind ``ev``, if it is a point mass table."""
    if isinstance(ev, FromMeasure) and not ev.mu.has_density and ev.mu.atom_pos.size == 1:
        return float(ev.mu.atom_pos[0])
    return None


@dataclass(frozen=True, eq=False)
class Composed(CauchyEvaluator):
    """``H(z) = H_outer(H_inner(z))``: the transform of ``outer |> inner``.

    In general the composition is not accurate arbitrarily close to the
    axis.  It inherits exactness when it is a translation of one factor:
    an inner point mass at ``b`` translates ``outer`` by ``b`` and an
    outer point mass at ``0`` leaves ``inner`` unchanged.
    """

    outer: CauchyEvaluator
    inner: CauchyEvaluator

    def H(self, z):
        w = self.inner.H(z)
        # inner is a Pick function; guard round-off right at the axis
        w = w.real + 1j * np.maximum(w.imag, np.asarray(z).imag)
        return self.outer.H(w)

    def _translation(self):
        b = _single_atom(self.inner)
        if b is not None:
            return self.outer, b
        if _single_atom(self.outer) == 0.0:
            return self.inner, 0.0
        return None

    @property
    def boundary_exact(self):
        t = self._translation()
        return t is not None and t[0].boundary_exact

    def lattice(self):
        t = self._translation()
        lat = None if t is None else t[0].lattice()
        return None if lat is None else (lat[0] + t[1], lat[1])

    def support_bound(self):
        lo1, hi1 = self.outer.support_bound()
        lo2, hi2 = self.inner.support_bound()
        return (min(lo1, 0.0) + lo2, max(hi1, 0.0) + hi2)


def _checked(z, extend):
    z = np.asarray(z, complex)
    if np.any(z.imag == 0) or (not extend and np.any(z.imag < 0)):
        raise LowerHalfPlane("evaluation point must satisfy Im z > 0")
    return z


def eval_G(ev: CauchyEvaluator, z, extend: bool = False):
    """Cauchy transform at ``z``.

    With ``extend=True`` points in the lower half-plane are served through
    ``G(conj z) = conj G(z)``.
    """
    z = _checked(z, extend)
    lower = z.imag < 0
    zz = np.where(lower, np.conj(z), z)
    g = np.asarray(ev.G(zz), complex)
    return np.where(lower, np.conj(g), g)


def eval_H(ev: CauchyEvaluator, z, extend: bool = False):
    """Reciprocal Cauchy transform ``1 / G`` at ``z``."""
    z = _checked(z, extend)
    lower = z.imag < 0
    zz = np.where(lower, np.conj(z), z)
    h = np.asarray(ev.H(zz), complex)
    return np.where(lower, np.conj(h), h)


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

def default_grid(bound: tuple, n: int = ms.DEFAULT_GRID_POINTS, lattice=None) -> tuple:
    """Padded grid over ``bound``; aligned to ``lattice = (x0, h)`` when given.

    Alignment keeps nodes of a tabulated density on the new grid, so an
    exact inversion reproduces the table instead of re-interpolating it.
    """
    lo, hi = bound
    width = hi - lo
    pad = max(0.1 * width, 0.02 * max(1.0, abs(lo), abs(hi)))
    if lattice is not None:
        x0, h = lattice
        i0 = np.floor((lo - pad - x0) / h)
        i1 = np.ceil((hi + pad - x0) / h)
        m = int(i1 - i0) + 1
        if 2 <= m <= 4 * n:
            return (x0 + i0 * h, x0 + i1 * h, m)
    return (lo - pad, hi + pad, n)


EXACT_EPS_FACTOR = 0.01


def _ladder(h, levels=4):
    return h * 4.0 ** -np.arange(levels)


def _refine_atoms(Hfun, u0, ladder, lo, hi):
    """Newton-refine candidate atom positions and measure their masses.

    ``Hfun(z, idx)`` evaluates the reciprocal transform for candidates
    ``idx``.  Near an atom ``H(z) ~ (z - u)/m``, so a Newton step at height
    ``eps`` lands on the real zero ``u``.  Returns positions, the masses
    ``eps * (-Im G(u + i eps))`` and the residues ``Re 1/H'(u + i eps)`` for
    every ladder level.  Both tend to the atom mass; the residue converges
    much faster when ``H`` is analytic across the axis at ``u``.
    """
    u = np.asarray(u0, float).copy()
    idx = np.arange(u.size)
    masses = np.empty((len(ladder), u.size))
    residues = np.empty((len(ladder), u.size))
    for j, eps in enumerate(ladder):
        d = eps / 2
        for it in range(3):
            z = np.concatenate([u + 1j * eps, u + d + 1j * eps, u - d + 1j * eps])
            Hz, Hp, Hm = np.split(Hfun(z, np.tile(idx, 3)), 3)
            dH = (Hp - Hm) / (2 * d)
            with np.errstate(all="ignore"):
                if it == 2:
                    # the iterate has settled: read off mass and residue here
                    masses[j] = eps * (-(1.0 / Hz).imag)
                    residues[j] = np.real(1.0 / dH)
                # Newton from u + i eps towards the real zero of H
                new = np.real((u + 1j * eps) - Hz / dH)
            new = np.where(np.isfinite(new), new, u)
            u = np.clip(new, np.maximum(u - 2 * ladder[0], lo), np.minimum(u + 2 * ladder[0], hi))
    return u, masses, residues


def _extrapolate(v, ladder):
    return v[-1] + (v[-1] - v[-2]) * ladder[-1] / (ladder[-2] - ladder[-1])


def _atoms_from_masses(u, masses, ladder, mass_floor, rel_tol=0.05, residues=None):
    """Accept candidates whose ladder masses settle above ``mass_floor``.

    The reported mass is the extrapolated residue when it agrees with the
    extrapolated ladder mass to ``rel_tol``, else the ladder mass itself.
    """
    m_last, m_prev = masses[-1], masses[-2]
    limit = _extrapolate(masses, ladder)
    stable = np.abs(m_last - m_prev) <= rel_tol * np.maximum(np.abs(m_last), 1e-300)
    ok = stable & (limit > mass_floor) & np.isfinite(limit)
    if residues is not None:
        r = _extrapolate(residues, ladder)
        agree = np.isfinite(r) & (np.abs(r - limit) <= rel_tol * np.abs(limit))
        limit = np.where(agree, r, limit)
    return u[ok], limit[ok]


def _candidates(vals, thresh):
    """Local maxima of ``vals`` above ``thresh``."""
    v = np.concatenate([[-np.inf], vals, [-np.inf]])
    peak = (v[1:-1] >= v[:-2]) & (v[1:-1] > v[2:]) & (vals > thresh)
    return np.flatnonzero(peak)


def _dedupe(u, m, tol):
    if u.size == 0:
        return u, m
    o = np.argsort(u)
    u, m = u[o], m[o]
    keep = np.concatenate([[True], np.diff(u) > tol])
    return u[keep], m[keep]


def detect_atoms(ev: CauchyEvaluator, interval: tuple, ladder=None, mass_floor: float = 1e-4,
                 n_scan: int = ms.DEFAULT_GRID_POINTS):
    """Atoms of the measure behind ``ev`` inside ``interval``.

    A position ``u`` is reported when ``eps * (-Im G(u + i eps))`` settles to
    a limit above ``mass_floor`` as ``eps`` runs down ``ladder`` (default
    ``h, h/4, h/16, h/64`` with ``h`` the scan spacing).  The mass is the
    linear extrapolation of the last two ladder levels.
    """
    lo, hi = interval
    x = np.linspace(lo, hi, n_scan)
    h = x[1] - x[0] if n_scan > 1 else 1e-3
    ladder = _ladder(h) if ladder is None else np.asarray(ladder, float)
    scan = ev.G(x + 1j * ladder[0])
    res = _find_atoms(lambda z, idx: ev.H(z), x, scan, ladder, mass_floor, lo, hi)
    return [(float(p), float(m)) for p, m in zip(*res)]


def _find_atoms(Hfun, x, scan_G, ladder, mass_floor, lo, hi):
    vals = ladder[0] * (-np.asarray(scan_G).imag)
    c = _candidates(vals, mass_floor)
    if c.size == 0:
        return np.zeros(0), np.zeros(0)
    u, masses, res = _refine_atoms(Hfun, x[c], ladder, lo, hi)
    u, m = _atoms_from_masses(u, masses, ladder, mass_floor, residues=res)
    return _dedupe(u, m, ladder[0])


def stieltjes_invert(ev: CauchyEvaluator, grid=None, eps=None, mass_floor: float = 1e-4,
                     renorm_tol: float = 1e-3, clip_tol: float = 1e-4, full_output: bool = False):
    """Recover the probability measure behind ``ev``.

    The density is ``-(1/pi) Im G(x + i eps)`` at two heights (default
    ``2h`` and ``h`` for grid spacing ``h``) with the detected atoms'
    contributions removed, combined by Richardson extrapolation to cancel
    the first-order smoothing bias and clipped at zero.  Evaluators marked
    ``boundary_exact`` use heights ``EXACT_EPS_FACTOR`` times smaller when
    the grid is aligned with their own tabulation (the default grid is).

    With ``full_output`` the result is ``(measure, info)`` where ``info``
    holds the recovered mass before renormalisation and the clipped mass.

    Raises
    ------
    MassDeficit
        Recovered mass differs from one by more than ``renorm_tol``.
    NegativeDensityExcess
        Clipping removed more than ``clip_tol`` mass.
    """
    base, y = (ev.base, ev.y) if isinstance(ev, Shifted) else (ev, 0.0)
    out = invert_shift_family(base, [y], grid, eps, mass_floor, renorm_tol, clip_tol,
                              full_output=True)[0]
    return out if full_output else out[0]


def family_grid(base: CauchyEvaluator, ys, n: int = ms.DEFAULT_GRID_POINTS) -> tuple:
    lo, hi = base.support_bound()
    ys = np.asarray(ys, float)
    # only the unshifted member reproduces the base's own tabulation, so
    # alignment pays off only when it is in the family
    lat = base.lattice() if np.any(ys == 0) else None
    return default_grid((lo + min(ys.min(), 0.0), hi + max(ys.max(), 0.0)), n, lat)


def _on_lattice(base, lo, h):
    """Whether the base's tabulation sits on the grid nodes (or there is none)."""
    lat = base.lattice()
    if lat is None:
        return True
    x0, hl = lat
    if abs(h - hl) > 1e-9 * hl:
        return False
    k = (lo - x0) / hl
    return bool(abs(k - np.round(k)) < 1e-6)


def _exact_members(base, ys, lo, h):
    """Members whose inversion may use the small smoothing height.

    Atomic bases are accurate at any height.  A tabulated density is
    reproduced exactly only by the unshifted member on an aligned grid; a
    shifted kernel would resolve the kinks of the table instead of the
    measure it approximates.
    """
    if not base.boundary_exact:
        return np.zeros(ys.size, bool)
    if base.lattice() is None:
        return np.ones(ys.size, bool)
    return (ys == 0) & _on_lattice(base, lo, h)


def invert_shift_family(base: CauchyEvaluator, ys, grid=None, eps=None, mass_floor: float = 1e-4,
                        renorm_tol: float = 1e-3, clip_tol: float = 1e-4, full_output: bool = False):
    """Invert ``Shifted(base, y)`` for many ``y`` on one shared grid.

    ``H_base`` is evaluated once on the grid; every shift then costs only
    array arithmetic plus a batched atom refinement.  Returns one
    probability measure per shift.
    """
    ys = np.asarray(ys, float)
    if grid is None:
        grid = family_grid(base, ys)
    lo, hi, n = float(grid[0]), float(grid[1]), int(grid[2])
    x = np.linspace(lo, hi, n)
    h = x[1] - x[0]
    exact = _exact_members(base, ys, lo, h) if eps is None else np.zeros(ys.size, bool)
    heights = {}
    if eps is not None:
        heights[False] = (float(eps[0]), float(eps[1]))
    else:
        if not exact.all():
            heights[False] = (2 * h, h)
        if exact.any():
            heights[True] = (2 * EXACT_EPS_FACTOR * h, EXACT_EPS_FACTOR * h)
    Hh = {}
    for key, (e1, e2) in heights.items():
        Hb = base.H(np.concatenate([x + 1j * e1, x + 1j * e2]))
        Hh[key] = (Hb[:n], Hb[n:])
    # atoms are scanned at height h whatever the smoothing height, so that
    # atoms between grid nodes are still seen
    if False in heights and heights[False][1] == h:
        Hs = Hh[False][1]
    else:
        Hs = base.H(x + 1j * h)

    cand_u, cand_k = [], []
    for k, y in enumerate(ys):
        vals = h * (-(1.0 / (Hs - y)).imag)
        c = _candidates(vals, mass_floor)
        cand_u.append(x[c])
        cand_k.append(np.full(c.size, k))
    cu = np.concatenate(cand_u) if cand_u else np.zeros(0)
    ck = np.concatenate(cand_k).astype(int) if cand_k else np.zeros(0, int)
    atoms = [[] for _ in ys]
    if cu.size:
        # exact evaluators get a deeper ladder: positions must be sharp
        # enough to subtract the atoms at the small smoothing height
        ladder = _ladder(h, 8 if base.boundary_exact else 4)
        u, masses, res = _refine_atoms(lambda z, idx: base.H(z) - ys[ck[idx]], cu, ladder, lo, hi)
        for k in range(ys.size):
            sel = ck == k
            uu, mm = _atoms_from_masses(u[sel], masses[:, sel], ladder, mass_floor,
                                        residues=res[:, sel])
            uu, mm = _dedupe(uu, mm, ladder[0])
            atoms[k] = list(zip(uu, mm))

    out = []
    for k, y in enumerate(ys):
        key = bool(exact[k]) if bool(exact[k]) in Hh else False
        (e1, e2), (H1, H2) = heights[key], Hh[key]
        r = _assemble(x, h, H1 - y, H2 - y, e1, e2, atoms[k], renorm_tol, clip_tol, grid)
        out.append(r if full_output else r[0])
    return out


def _assemble(x, h, Hy1, Hy2, e1, e2, atoms, renorm_tol, clip_tol, grid):
    def dens(Hy, e):
        g = 1.0 / Hy
        z = x + 1j * e
        for u, m in atoms:
            g = g - m / (z - u)
        return -g.imag / np.pi

    d1, d2 = dens(Hy1, e1), dens(Hy2, e2)
    d = (e1 * d2 - e2 * d1) / (e1 - e2)
    w = np.full(x.size, h)
    w[0] = w[-1] = h / 2
    neg = -float(w @ np.minimum(d, 0.0))
    if neg > clip_tol:
        raise NegativeDensityExcess(f"clipping removed {neg:.3g} mass")
    d = np.maximum(d, 0.0)
    total = float(w @ d) + sum(m for _, m in atoms)
    if abs(total - 1.0) > renorm_tol:
        raise MassDeficit(f"recovered mass {total:.6g} on grid [{grid[0]:.4g}, {grid[1]:.4g}]")
    mu = ms.make_measure(atoms, d, (x[0], x[-1], x.size), probability=True)
    return mu, {"mass": total, "clipped": neg}

"""Monotone convolution of probability measures.

The primary route is the mixture ``mu |> nu = int (delta_y |> nu) dmu(y)``
where each shift kernel has reciprocal Cauchy transform ``H_nu(z) - y``.
All kernels share one evaluation of ``H_nu`` on a common grid.  The
composition ``H_mu(H_nu(z))`` is kept as an independent cross-check.
"""
from __future__ import annotations

import numpy as np

from . import measure as ms
from . import transform as tr
from .errors import InputError, NodeBudgetExceeded, NotProbability

MIXTURE_NODES = 512
NODE_BUDGET = 10_000


def _check(mu, name):
    if not mu.is_probability:
        raise NotProbability(f"{name} must be a probability measure")


def shift_convolve(y: float, nu: ms.DiscretizedMeasure, grid=None, **kw) -> ms.DiscretizedMeasure:
    """``delta_y |> nu`` by inverting ``H_nu(z) - y``."""
    _check(nu, "nu")
    if not nu.has_density and nu.atom_pos.size == 1:
        # H = z - b - y: a single atom, no inversion needed
        return ms.dirac(float(nu.atom_pos[0]) + y)
    return tr.stieltjes_invert(tr.Shifted(tr.FromMeasure(nu), float(y)), grid, **kw)


def mixture_nodes(mu: ms.DiscretizedMeasure, accuracy: float | None = None):
    """Quadrature nodes ``(y_i, w_i)`` of ``mu``: atoms exactly, density collapsed.

    The density part becomes equal-mass nodes at conditional means; their
    number is ``MIXTURE_NODES`` or, when ``accuracy`` is given, enough to
    bound the collapse error by ``accuracy`` (support width over count).

    Raises
    ------
    NodeBudgetExceeded
        More than ``NODE_BUDGET`` nodes would be needed.
    """
    ys, ws = [mu.atom_pos], [mu.atom_mass]
    if mu.has_density and mu.density_mass > 0:
        lo, hi = mu.support
        n = MIXTURE_NODES
        if accuracy is not None:
            if accuracy <= 0:
                raise InputError("accuracy must be positive")
            n = int(np.ceil((hi - lo) / accuracy))
        if n > NODE_BUDGET:
            raise NodeBudgetExceeded(f"{n} mixture nodes requested, budget is {NODE_BUDGET}")
        part = ms.DiscretizedMeasure(np.zeros(0), np.zeros(0), mu.grid_lo, mu.grid_hi,
                                     mu.density, False)
        y, w = ms.equal_mass_nodes(part, max(n, 1))
        ys.append(y)
        ws.append(w)
    return np.concatenate(ys), np.concatenate(ws)


def mono_convolve(mu: ms.DiscretizedMeasure, nu: ms.DiscretizedMeasure, grid=None,
                  accuracy: float | None = None, **kw) -> ms.DiscretizedMeasure:
    """Monotone convolution ``mu |> nu`` as a mixture of shift kernels.

    Parameters
    ----------
    mu, nu : DiscretizedMeasure
        Compactly supported probability measures.
    grid : tuple, optional
        ``(lo, hi, n)`` shared by all kernels; by default the support bound
        of ``nu`` widened by the node range, padded.
    accuracy : float, optional
        Target L1 error of the node collapse of ``mu``'s density.
    """
    _check(mu, "mu")
    _check(nu, "nu")
    if not nu.has_density and nu.atom_pos.size == 1:
        # H_mu(z - b): mu translated by b
        return mu.translated(float(nu.atom_pos[0]))
    if not mu.has_density and mu.atom_pos.size == 1:
        return shift_convolve(float(mu.atom_pos[0]), nu, grid, **kw)
    ys, ws = mixture_nodes(mu, accuracy)
    kernels = tr.invert_shift_family(tr.FromMeasure(nu), ys, grid, **kw)
    k0 = kernels[0]
    x, wq = k0.x, k0.weights
    dens = np.zeros(x.size)
    atoms = []
    n_atomic = mu.atom_pos.size
    for i, (k, w) in enumerate(zip(kernels, ws)):
        dens += w * k.density
        if i < n_atomic:
            atoms += [(p, w * m) for p, m in zip(k.atom_pos, k.atom_mass)]
    # atoms moving continuously with y add up to density: spread each one
    # over the cell between its neighbours in the adjacent kernels
    moving = kernels[n_atomic:]
    for j, k in enumerate(moving):
        if k.atom_pos.size == 0:
            continue
        prev = moving[j - 1].atom_pos if j > 0 else np.zeros(0)
        nxt = moving[j + 1].atom_pos if j + 1 < len(moving) else np.zeros(0)
        a, b = _cell(k.atom_pos, prev, nxt)
        dens += _deposit(a, b, ws[n_atomic + j] * k.atom_mass, x, wq)
    return ms.make_measure(atoms, dens, (x[0], x[-1], x.size), probability=True,
                           merge_tol=1e-12 * max(mu.scale, nu.scale))


def _cell(p, prev, nxt):
    """Half-way points to the nearest atoms of the neighbouring kernels."""
    def half(other):
        if other.size == 0:
            return None
        j = np.abs(p[:, None] - other[None, :]).argmin(axis=1)
        return (p + other[j]) / 2
    hp, hn = half(prev), half(nxt)
    if hp is None and hn is None:
        return p, p
    hp = 2 * p - hn if hp is None else hp
    hn = 2 * p - hp if hn is None else hn
    return np.minimum(hp, hn), np.maximum(hp, hn)


def _deposit(a, b, mass, x, wq, sub: int = 16):
    """Spread masses uniformly over ``[a, b]`` onto grid nodes (hat weights)."""
    u = (np.arange(sub) + 0.5) / sub
    pos = (a[:, None] + (b - a)[:, None] * u).ravel()
    m = np.repeat(mass / sub, sub)
    h = x[1] - x[0]
    s = np.clip((pos - x[0]) / h, 0.0, x.size - 1.0)
    i = np.minimum(np.floor(s).astype(int), x.size - 2)
    f = s - i
    out = np.zeros(x.size)
    np.add.at(out, i, m * (1 - f))
    np.add.at(out, i + 1, m * f)
    return out / wq


def composed_convolve(mu: ms.DiscretizedMeasure, nu: ms.DiscretizedMeasure, grid=None,
                      **kw) -> ms.DiscretizedMeasure:
    """``mu |> nu`` by inverting ``H_mu(H_nu(z))`` directly."""
    _check(mu, "mu")
    _check(nu, "nu")
    return tr.stieltjes_invert(tr.Composed(tr.FromMeasure(mu), tr.FromMeasure(nu)), grid, **kw)


def route_gap(mu, nu, **kw) -> float:
    """L1 distance between the mixture and composition routes."""
    return ms.l1_distance(mono_convolve(mu, nu, **kw), composed_convolve(mu, nu))


def noncommutativity_gap(mu, nu, k: int = 3) -> float:
    """``|m_k(mu |> nu) - m_k(nu |> mu)|``."""
    return abs(ms.moment(mono_convolve(mu, nu), k) - ms.moment(mono_convolve(nu, mu), k))

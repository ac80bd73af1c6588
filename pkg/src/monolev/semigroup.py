"""Monotone convolution semigroups generated by a characteristic pair.

A pair ``(a, rho)`` defines the Pick function
``A(z) = a + int 1/(x - z) drho(x)``.  The reciprocal Cauchy transform of
the marginal at time ``t`` is the time-``t`` map of the holomorphic flow
``w' = A(w)``; equivalently ``w = H_t(z)`` solves
``int_z^w dzeta / A(zeta) = t``.  The pure drift ``(a, 0)`` therefore
flows to ``H_t(z) = z + a t`` and has marginals ``delta_{-a t}``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import measure as ms
from .errors import InputError, LowerHalfPlane, OutsideDomain, RadiusTooSmall
from .functions import Polynomial, Resolvent, TestFunction
from .ode import solve

FLOW_RTOL = 1e-10
# the backward flow contracts towards the axis, amplifying step errors by |dH^{-1}/dw|
INVERSE_RTOL = 1e-12
IM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class CharacteristicPair:
    """Drift parameter ``a`` and finite compactly supported measure ``rho``."""

    a: float
    rho: Optional[ms.DiscretizedMeasure] = None

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        if self.rho is not None and self.rho.total_mass <= 0:
            object.__setattr__(self, "rho", None)
        if self.a == 0 and self.rho is None:
            raise InputError("trivial characteristic pair (a, rho) = (0, 0)")

    @property
    def rho_mass(self) -> float:
        return 0.0 if self.rho is None else self.rho.total_mass

    @property
    def rho_support(self) -> tuple:
        return (0.0, 0.0) if self.rho is None else self.rho.support

    def digest(self) -> str:
        """Stable content hash, used as a cache key."""
        h = hashlib.sha256(repr(self.a).encode())
        if self.rho is not None:
            for arr in (self.rho.atom_pos, self.rho.atom_mass, self.rho.density):
                h.update(np.ascontiguousarray(arr).tobytes())
            h.update(repr((self.rho.grid_lo, self.rho.grid_hi)).encode())
        return h.hexdigest()[:16]

    def family(self) -> dict:
        """Recognise the drift, Brownian and Poisson families."""
        rho = self.rho
        if rho is None:
            return {"family": "drift", "a": self.a}
        if not rho.has_density and rho.atom_pos.size == 1:
            p, m = float(rho.atom_pos[0]), float(rho.atom_mass[0])
            if p == 0.0:
                return {"family": "brownian", "a": self.a, "diffusion": m}
            if p == 1.0 and np.isclose(self.a, -m, rtol=1e-12, atol=0):
                return {"family": "poisson", "lambda": 2 * m}
        return {"family": "general", "a": self.a}

    def to_dict(self) -> dict:
        return {"a": self.a, "rho": ms.to_dict(self.rho) if self.rho is not None else {"atoms": []}}

    @classmethod
    def from_dict(cls, d: dict) -> "CharacteristicPair":
        rho = d.get("rho")
        r = None
        if rho and (rho.get("atoms") or rho.get("density") is not None):
            r = ms.from_dict(rho, probability=False)
        return cls(d.get("a", 0.0), r)


def drift_pair(a: float) -> CharacteristicPair:
    return CharacteristicPair(a, None)


def brownian_pair(a: float = 0.0, diffusion: float = 1.0) -> CharacteristicPair:
    return CharacteristicPair(a, ms.make_measure([(0.0, diffusion)], probability=False))


def poisson_pair(lam: float = 1.0) -> CharacteristicPair:
    return CharacteristicPair(-lam / 2, ms.make_measure([(1.0, lam / 2)], probability=False))


def _upper(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise LowerHalfPlane("argument must lie in the open upper half-plane")
    return z


def _A(pair: CharacteristicPair, w):
    if pair.rho is None:
        return np.full(np.shape(w), pair.a, dtype=complex)
    return pair.a - ms.cauchy_transform(pair.rho, w)


def eval_A(pair: CharacteristicPair, z):
    """Pick function ``a + int 1/(x - z) drho(x)`` on the upper half-plane."""
    return _A(pair, _upper(z))


def flow_H(pair: CharacteristicPair, z, t, rtol: float = FLOW_RTOL, record: bool = False):
    """``H_t(z)``: integrate ``w' = A(w)`` from ``w(0) = z`` up to time ``t``.

    Vectorised over ``z`` (and ``t`` when it is an array).  With
    ``record=True`` the :class:`~monolev.ode.Solution` is returned instead,
    giving access to the accepted trajectory points.
    """
    z = _upper(z)
    sol = solve(lambda w: _A(pair, w), z, t, rtol=rtol, monotone_im=True, record=record)
    return sol if record else sol.w


def inverse_flow_H(pair: CharacteristicPair, z, t, rtol: float = INVERSE_RTOL,
                   im_floor: float = IM_FLOOR, on_fail: str = "raise"):
    """``H_t^{-1}(z)`` by integrating ``w' = -A(w)``.

    The backward flow lowers ``Im w``; if it reaches ``im_floor`` before
    time ``t`` the point is not in ``H_t(C+)``.  ``on_fail="nan"`` returns
    NaN for such points instead of raising :class:`OutsideDomain`.
    """
    z = _upper(z)
    sol = solve(lambda w: -_A(pair, w), z, t, rtol=rtol, im_floor=im_floor)
    w = sol.w.copy()
    if np.any(sol.failed):
        if on_fail == "raise":
            bad = np.asarray(z)[sol.failed].ravel()[0]
            raise OutsideDomain(f"{bad} is not in the image H_t(C+) (t={t})")
        w[sol.failed] = np.nan
    return w


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def abel_residual(pair: CharacteristicPair, z: complex, t: float, rtol: float = FLOW_RTOL) -> float:
    """``|int dzeta/A(zeta) - t|`` along the computed trajectory from ``z``.

    The integral is accumulated with Gauss-Legendre rules on the straight
    segments between accepted flow points.  ``1/A`` is holomorphic on the
    upper half-plane, so each segment integral depends only on its end
    points and the residual certifies the computed ``H_t(z)``.
    """
    sol = flow_H(pair, np.array([z]), t, rtol=rtol, record=True)
    path = sol.trajectory(0)
    if path.size < 2:
        return abs(t)
    a, b = path[:-1, None], path[1:, None]
    mid, half = (a + b) / 2, (b - a) / 2
    nodes = mid + half * _GL_X
    total = np.sum(half[:, 0] * ((1.0 / _A(pair, nodes)) @ _GL_W))
    return float(abs(total - t))


def support_bound(pair: CharacteristicPair, t: float) -> tuple:
    """Interval guaranteed to contain the support of the marginal at time ``t``.

    With ``[k_lo, k_hi]`` the hull of ``supp rho`` and ``0``, a real start
    point further than ``B = |a| t + sqrt(a^2 t^2 + 2 rho(R) t)`` from the
    hull keeps the real flow away from the hull up to time ``t``, so
    ``H_t`` is real and non-zero there.
    """
    lo, hi = pair.rho_support
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    a, m = abs(pair.a), pair.rho_mass
    B = a * t + np.sqrt(a * a * t * t + 2 * m * t)
    return (lo - B, hi + B)


def marginal(pair: CharacteristicPair, t: float, grid=None, **kw) -> ms.DiscretizedMeasure:
    """The marginal law at time ``t`` by Stieltjes inversion of the flow."""
    from .transform import FromFlow, stieltjes_invert
    if t < 0:
        raise InputError("time must be non-negative")
    if t == 0:
        return ms.dirac(0.0)
    if pair.rho is None:
        # pure drift: H_t(z) = z + a t
        return ms.dirac(-pair.a * t)
    return stieltjes_invert(FromFlow(pair, t), grid, **kw)


# ---------------------------------------------------------------------------
# state generator and Schurmann triple
# ---------------------------------------------------------------------------

def _taylor_quotient(f: TestFunction, x, x0: float = 0.0, delta: float = 1e-4):
    """``(f(x) - f(x0) - (x - x0) f'(x0)) / (x - x0)^2`` with ``f''(x0)/2`` near ``x0``."""
    x = np.asarray(x, float)
    if isinstance(f, Polynomial) and x0 == 0.0:
        return f.taylor_quotient()(x)
    d = x - x0
    near = np.abs(d) < delta
    out = np.empty(x.shape, dtype=complex)
    dd = np.where(near, 1.0, d)
    out[...] = (f(x) - f(x0) - d * f.d1(x0)) / dd ** 2
    if np.any(near):
        out[near] = f.d2(x0) / 2
    return _realify(out)


def _realify(v):
    v = np.asarray(v)
    if np.iscomplexobj(v) and np.all(v.imag == 0):
        return v.real
    return v


def _rho_integral(pair, g):
    rho = pair.rho
    if rho is None:
        return 0.0
    x, w = rho.nodes()
    return np.sum(w * g(x))


def L_apply(pair: CharacteristicPair, f: TestFunction, delta: float | None = None):
    """Generator of the convolution semigroup of states.

    ``L f = -a f'(0) + int (f(x) - f(0) - x f'(0)) / x^2 drho(x)``; on
    monomials this reduces to ``0, -a, int x^{k-2} drho`` for
    ``k = 0, 1, >= 2``.
    """
    if delta is None:
        delta = 1e-4 * (pair.rho.scale if pair.rho is not None else 1.0)
    val = -pair.a * f.d1(0.0) + _rho_integral(pair, lambda x: _taylor_quotient(f, x, 0.0, delta))
    v = complex(val)
    return v.real if v.imag == 0 else v


class SchurmannTriple:
    """The triple ``(pi, eta, L)`` on the node set of ``rho``.

    ``H = L^2(R, rho)`` is represented by the quadrature nodes of ``rho``
    (its atoms and density grid); ``pi(f)`` is multiplication by ``f`` at
    the nodes, ``eta(f)`` the difference quotient ``(f(x) - f(0))/x`` (with
    ``f'(0)`` at ``x = 0``), ``eps(f) = f(0)``.
    """

    def __init__(self, pair: CharacteristicPair):
        self.pair = pair
        if pair.rho is None:
            self.nodes, self.weights = np.zeros(0), np.zeros(0)
        else:
            self.nodes, self.weights = pair.rho.nodes()
        self._zero_tol = 1e-12 * (pair.rho.scale if pair.rho is not None else 1.0)

    def pi(self, f: TestFunction) -> np.ndarray:
        return np.diag(f(self.nodes))

    def eta(self, f: TestFunction) -> np.ndarray:
        x = self.nodes
        if isinstance(f, Polynomial):
            return _realify(np.asarray(f.difference_quotient()(x)))
        zero = np.abs(x) <= self._zero_tol
        xs = np.where(zero, 1.0, x)
        out = np.asarray((f(x) - f(0.0)) / xs, dtype=complex)
        if np.any(zero):
            out[zero] = f.d1(0.0)
        return _realify(out)

    def eps(self, f: TestFunction):
        return f(0.0)

    def L(self, f: TestFunction):
        return L_apply(self.pair, f)

    def inner(self, u, v):
        return np.sum(self.weights * np.conj(u) * v)


def schurmann_verify(pair: CharacteristicPair, f: TestFunction, g: TestFunction):
    """Residuals of the cocycle and coboundary identities for ``f, g``.

    Returns ``(cocycle, coboundary)`` where ``cocycle`` is the max-norm of
    ``eta(fg) - pi(f) eta(g) - eta(f) eps(g)`` on the node set and
    ``coboundary`` is ``|L(fg) - eps(f) L(g) - <eta(conj f), eta(g)> - L(f) eps(g)|``.
    """
    T = SchurmannTriple(pair)
    fg = f * g
    lhs = T.eta(fg)
    rhs = f(T.nodes) * T.eta(g) + T.eta(f) * T.eps(g)
    cocycle = float(np.max(np.abs(lhs - rhs))) if T.nodes.size else 0.0
    cob = T.L(fg) - (T.eps(f) * T.L(g) + T.inner(T.eta(f.conj()), T.eta(g)) + T.L(f) * T.eps(g))
    return cocycle, float(abs(cob))


def moments_via_contour(pair: CharacteristicPair, t: float, k, radius: float | None = None,
                        n_points: int = 128, shift: float = 0.0):
    """Moments ``(1/2 pi i) oint z^k G(z) dz`` of the time-``t`` marginal.

    ``G = 1/(H_t - shift)``, i.e. with ``shift = x`` the moments of the
    transition kernel from ``x``.  The trapezoidal rule on a circle of
    radius ``radius`` (default twice the support bound) is evaluated on the
    upper half and doubled through ``G(conj z) = conj G(z)``.  ``shift``
    may be an array; ``k`` an int or sequence (at most 16).
    """
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    if np.any(ks > 16) or np.any(ks < 0):
        raise InputError("contour moments are limited to 0 <= k <= 16")
    shift = np.asarray(shift, dtype=float)
    lo, hi = support_bound(pair, t)
    bound = max(abs(lo), abs(hi)) + float(np.max(np.abs(shift), initial=0.0))
    if radius is None:
        radius = 2.0 * max(bound, 0.5)
    if radius < 2 * bound:
        raise RadiusTooSmall(f"radius {radius} below twice the support bound {bound}")
    theta = np.pi * (np.arange(n_points // 2) + 0.5) / (n_points // 2)
    zc = radius * np.exp(1j * theta)
    Ht = flow_H(pair, zc, t) if t > 0 else zc
    G = 1.0 / (Ht[None, :] - shift.reshape(-1, 1))
    zk = zc[None, :] ** (ks[:, None] + 1)
    m = (2.0 / n_points) * np.real(G[:, None, :] * zk[None, :, :]).sum(axis=-1)
    m0 = (2.0 / n_points) * np.real(G * zc).sum(axis=-1)
    if np.any(np.abs(m0 - 1) > 1e-4):
        raise RadiusTooSmall(f"zeroth moment {m0} deviates from 1")
    m = m.reshape(shift.shape + ks.shape)
    if np.ndim(k) == 0:
        m = m[..., 0]
    return float(m) if m.ndim == 0 else m

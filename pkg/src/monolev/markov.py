"""Transition kernels, the Markov semigroup and path sampling.

The transition kernel from ``x`` over time ``t`` is ``delta_x |> mu_t``,
whose reciprocal Cauchy transform is ``H_t(z) - x``.  ``T_t f(x)`` is the
integral of ``f`` against it.  Two fast paths avoid the inversion:
resolvents ``1/(z - y)`` map to ``1/(H_t(z) - x)`` and polynomials are
integrated through contour moments of ``1/(H_t - x)``.
"""
from __future__ import annotations

import threading

import numpy as np

from . import measure as ms
from . import semigroup as sg
from . import transform as tr
from .errors import InputError, OutsideDomain
from .functions import BlackBox, Polynomial, Resolvent, TestFunction

STATE_GRID = 512


def _check_t(t):
    if t < 0:
        raise InputError("time must be non-negative")


def kernel(pair: sg.CharacteristicPair, t: float, x: float, grid=None, **kw) -> ms.DiscretizedMeasure:
    """``delta_x |> mu_t``; ``delta_x`` itself at ``t = 0``."""
    _check_t(t)
    if t == 0:
        return ms.dirac(float(x))
    if pair.rho is None:
        return ms.dirac(float(x) - pair.a * t)
    return tr.stieltjes_invert(tr.Shifted(tr.FromFlow(pair, t), float(x)), grid, **kw)


def kernels(pair: sg.CharacteristicPair, t: float, xs, grid=None, **kw) -> list:
    """Kernels for many start points, sharing one evaluation of ``H_t``."""
    _check_t(t)
    xs = np.asarray(xs, float)
    if t == 0:
        return [ms.dirac(float(x)) for x in xs]
    if pair.rho is None:
        return [ms.dirac(float(x) - pair.a * t) for x in xs]
    return tr.invert_shift_family(tr.FromFlow(pair, t), xs, grid, **kw)


class KernelCache:
    """Memo of kernels keyed by ``(pair digest, t, x)``.

    Reads need no lock; concurrent misses may compute the same kernel twice
    and the last write wins, which is harmless since results are
    deterministic.
    """

    def __init__(self):
        self._store = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._store)

    def get_many(self, pair, t, xs, grid=None):
        key0 = (pair.digest(), float(t), None if grid is None else tuple(grid))
        xs = [float(x) for x in np.atleast_1d(xs)]
        missing = [x for x in xs if (key0, x) not in self._store]
        if missing:
            new = kernels(pair, t, missing, grid)
            with self._lock:
                for x, k in zip(missing, new):
                    self._store[(key0, x)] = k
        return [self._store[(key0, x)] for x in xs]

    def get(self, pair, t, x, grid=None):
        return self.get_many(pair, t, [x], grid)[0]


def apply_T(pair: sg.CharacteristicPair, t: float, f: TestFunction, x, method: str = "auto"):
    """``T_t f(x) = int f d(delta_x |> mu_t)``, vectorised over ``x``.

    ``method="auto"`` uses the resolvent and polynomial fast paths when
    they apply and kernel quadrature otherwise; ``"kernel"`` forces the
    quadrature route.
    """
    _check_t(t)
    xa = np.asarray(x, float)
    if t == 0:
        return f(xa)
    if method == "auto" and isinstance(f, Resolvent):
        z = complex(f.pole)
        if z.imag > 0:
            return 1.0 / (complex(sg.flow_H(pair, np.array([z]), t)[0]) - xa)
        return np.conj(1.0 / (complex(sg.flow_H(pair, np.array([np.conj(z)]), t)[0]) - xa))
    if method == "auto" and isinstance(f, Polynomial):
        return _poly_T(pair, t, f, xa)
    ks = kernels(pair, t, xa.ravel())
    vals = [ms.integrate(k, f) for k in ks]
    out = np.array(vals).reshape(xa.shape)
    return out if out.ndim else out[()]


def _poly_T(pair, t, f: Polynomial, x):
    c = np.asarray(f.coeffs)
    if c.size == 1:
        return np.full(x.shape, c[0]) if x.ndim else c[0]
    m = sg.moments_via_contour(pair, t, list(range(c.size)), shift=x.ravel(),
                               n_points=max(128, 8 * c.size))
    m = np.asarray(m).reshape(x.size, c.size)
    out = (m @ c).reshape(x.shape)
    if np.isrealobj(c):
        out = out.real
    return out if out.ndim else out[()]


def T_function(pair: sg.CharacteristicPair, t: float, f: TestFunction) -> TestFunction:
    """``T_t f`` as a test function of the start point."""
    return BlackBox(lambda y: apply_T(pair, t, f, y), name=f"T[{t}]f")


def script_L(pair: sg.CharacteristicPair, f: TestFunction, x, delta: float | None = None):
    """Generator of the transition semigroup.

    ``Lf(x) = -a f'(x) + int [f(y) - f(x) - (y - x) f'(x)] / (x - y)^2 drho(y)``
    with ``f''(x)/2`` on the diagonal ``|x - y| < delta``
    (default ``1e-4`` times the scale of ``rho``).
    """
    if delta is None:
        delta = 1e-4 * (pair.rho.scale if pair.rho is not None else 1.0)
    xa = np.atleast_1d(np.asarray(x, float))
    out = []
    for xi in xa:
        v = -pair.a * f.d1(xi) + sg._rho_integral(pair, lambda y: sg._taylor_quotient(f, y, xi, delta))
        out.append(v)
    out = sg._realify(np.array(out, dtype=complex)).reshape(np.shape(x))
    return out if out.ndim else out[()]


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

_default_cache = KernelCache()


def _state_grid(pair, t, n_states):
    lo, hi = sg.support_bound(pair, t)
    if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, n_states)


def _step(pair, dt, X, u, t_now, n_states, cache):
    """Draw ``X' ~ delta_X |> mu_dt`` using kernels on a state grid.

    The quantile functions of neighbouring grid kernels are blended
    linearly in ``X`` with a common uniform ``u``, which keeps the
    conditional mean exact whenever it is affine in ``X``.
    """
    if dt == 0:
        return X.copy()
    s = _state_grid(pair, t_now, n_states)
    ks = cache.get_many(pair, dt, s)
    if s.size == 1:
        # a single state: translate its kernel
        return ms.quantile(ks[0], u) - s[0] + X
    h = s[1] - s[0]
    pos = np.clip((X - s[0]) / h, 0.0, s.size - 1.0)
    j = np.minimum(np.floor(pos).astype(int), s.size - 2)
    lam = pos - j
    # states outside the grid (round-off only) are translated from the edge
    off = X - (s[0] + pos * h)
    out = np.empty_like(X)
    for jj in np.unique(j):
        sel = j == jj
        q0 = ms.quantile(ks[jj], u[sel])
        q1 = ms.quantile(ks[jj + 1], u[sel])
        out[sel] = (1 - lam[sel]) * q0 + lam[sel] * q1 + off[sel]
    return out


def sample_path(pair: sg.CharacteristicPair, times, n_paths: int, rng=None,
                n_states: int = STATE_GRID, cache: KernelCache | None = None) -> np.ndarray:
    """Sample the classical Markov process at increasing ``times``.

    ``X(t_1) ~ mu_{t_1}`` and ``X(t_{i+1}) ~ delta_{X(t_i)} |> mu_{t_{i+1} - t_i}``.
    Kernels are computed on a grid of ``n_states`` start points spanning
    the support bound of the current marginal and cached.

    Returns
    -------
    ndarray
        Shape ``(n_paths, len(times))``.
    """
    times = np.asarray(times, float)
    if times.ndim != 1 or times.size == 0:
        raise InputError("times must be a non-empty 1-d sequence")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise InputError("times must be non-negative and increasing")
    rng = np.random.default_rng(rng)
    cache = _default_cache if cache is None else cache
    out = np.empty((n_paths, times.size))
    X = np.zeros(n_paths)
    t_prev = 0.0
    for i, t in enumerate(times):
        u = rng.random(n_paths)
        if i == 0:
            if t > 0:
                X = ms.quantile(sg.marginal(pair, t), u)
        else:
            X = _step(pair, t - t_prev, X, u, t_prev, n_states, cache)
        out[:, i] = X
        t_prev = t
    return out


# ---------------------------------------------------------------------------
# martingale identity
# ---------------------------------------------------------------------------

def martingale_residual(pair: sg.CharacteristicPair, z: complex, s: float, t: float, T: float) -> float:
    """``|H_{t-s}(H_t^{-1}(z)) - H_s^{-1}(z)|`` for ``0 <= s <= t <= T``.

    ``z`` must lie in ``H_T(C+)``; otherwise :class:`OutsideDomain` is raised.
    """
    if not 0 <= s <= t <= T:
        raise InputError("need 0 <= s <= t <= T")
    z = np.array([complex(z)])
    if z[0].imag <= 0:
        raise OutsideDomain("z must lie in the upper half-plane")
    sg.inverse_flow_H(pair, z, T)
    if s == t:
        return 0.0
    wt = sg.inverse_flow_H(pair, z, t) if t > 0 else z
    lhs = sg.flow_H(pair, wt, t - s)
    rhs = sg.inverse_flow_H(pair, z, s) if s > 0 else z
    return float(abs(lhs[0] - rhs[0]))


def random_image_points(pair: sg.CharacteristicPair, T: float, n: int, rng=None) -> np.ndarray:
    """``n`` points of ``H_T(C+)``, obtained by flowing random upper points."""
    rng = np.random.default_rng(rng)
    w = rng.uniform(-2, 2, n) + 1j * rng.uniform(0.2, 2, n)
    return sg.flow_H(pair, w, T) if T > 0 else w

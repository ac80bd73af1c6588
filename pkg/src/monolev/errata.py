"""Printed generator formulas compared against a finite-difference oracle.

The oracle differentiates the transition semigroup numerically,
``(T_h f(x) - f(x)) / h`` with one Richardson step, using the exact
polynomial route of :func:`~monolev.markov.apply_T`.  It is independent of
any closed form for the generator, so it can arbitrate between the
implemented generator and the alternative printed forms below.
"""
from __future__ import annotations

import numpy as np

from . import markov as mk
from . import semigroup as sg
from .functions import Polynomial, TestFunction


def generator_oracle(pair: sg.CharacteristicPair, f: Polynomial, x, h: float = 1e-3):
    """``d/dt T_t f(x)`` at ``t = 0`` by Richardson-extrapolated forward differences."""
    x = np.asarray(x, float)
    d1 = (mk.apply_T(pair, h, f, x) - f(x)) / h
    d2 = (mk.apply_T(pair, h / 2, f, x) - f(x)) / (h / 2)
    return 2 * d2 - d1


def _rho_atoms(pair):
    if pair.rho is None:
        return np.zeros(0), np.zeros(0)
    return pair.rho.nodes()


def printed_general(pair: sg.CharacteristicPair, f: TestFunction, x):
    """``-a f'(x) + int (f(x) - f(y) - (x - y) f'(x)) / (x - y)^2 drho(y)``.

    On the diagonal the integrand tends to ``-f''(x)/2``.
    """
    x = np.atleast_1d(np.asarray(x, float))
    ys, ws = _rho_atoms(pair)
    out = -pair.a * f.d1(x)
    for y, w in zip(ys, ws):
        d = x - y
        near = np.abs(d) < 1e-8
        dd = np.where(near, 1.0, d)
        q = (f(x) - f(y) - d * f.d1(x)) / dd ** 2
        out = out + w * np.where(near, -f.d2(x) / 2, q)
    return out


def printed_brownian(f: TestFunction, x, a: float = 0.0):
    """``(f(x) - f(0) - x (1 + a x) f'(x)) / x^2`` for ``x != 0``."""
    x = np.asarray(x, float)
    return (f(x) - f(0.0) - x * (1 + a * x) * f.d1(x)) / x ** 2


def printed_poisson(lam: float, f: TestFunction, x):
    """``(lam/2) (f(x) - f(1) - x f'(x)) / (x - 1)^2`` for ``x != 1``."""
    x = np.asarray(x, float)
    return lam / 2 * (f(x) - f(1.0) - x * f.d1(x)) / (x - 1) ** 2


def drift_printed_gap(a: float, z: complex, t: float) -> float:
    """``|H_t(z) - (z - a t)|``: the flow against the printed drift transform."""
    w = sg.flow_H(sg.drift_pair(a), np.array([z]), t)[0]
    return float(abs(w - (z - a * t)))


def poisson_printed_residual(lam: float, z: complex, t: float) -> float:
    """Residual of ``-(lam/2)(w - z) - (lam/2) log((w - 1)/(z - 1)) = t`` at ``w = H_t(z)``."""
    w = sg.flow_H(sg.poisson_pair(lam), np.array([z]), t)[0]
    return float(abs(-lam / 2 * (w - z) - lam / 2 * np.log((w - 1) / (z - 1)) - t))


def poisson_corrected_residual(lam: float, z: complex, t: float) -> float:
    """Residual of ``(2/lam)(log(w/z) - (w - z)) = t``, the antiderivative of ``1/A``."""
    w = sg.flow_H(sg.poisson_pair(lam), np.array([z]), t)[0]
    return float(abs(2 / lam * (np.log(w / z) - (w - z)) - t))


def brownian_drift_residual(a: float, z: complex, t: float) -> float:
    """Residual of ``a (w - z) + log((a w - 1)/(a z - 1)) = a^2 t`` at ``w = H_t(z)``."""
    w = sg.flow_H(sg.brownian_pair(a), np.array([z]), t)[0]
    return float(abs(a * (w - z) + np.log((a * w - 1) / (a * z - 1)) - a * a * t))


ERRATA_FUNCTIONS = (Polynomial([0, 0, 1]), Polynomial([0, 0, 1, 1]), Polynomial([0, 1, 0, 0, 1]))
ERRATA_POINTS = np.array([-0.7, 0.4, 1.3])


def generator_report(x=ERRATA_POINTS, fs=ERRATA_FUNCTIONS) -> list:
    """Compare printed, implemented and oracle generators.

    Returns one record per printed formula with the largest gap of the
    printed form to the oracle, the gap after flipping its sign (``0``
    means the mismatch is a pure factor ``-1``), and the gap of the
    implemented generator.
    """
    bm, bmd, po = sg.brownian_pair(), sg.brownian_pair(a=0.5), sg.poisson_pair(1.0)
    cases = [
        ("proposition_general[brownian]", bm, lambda f: printed_general(bm, f, x)),
        ("proposition_general[poisson]", po, lambda f: printed_general(po, f, x)),
        ("brownian", bm, lambda f: printed_brownian(f, x)),
        ("brownian_with_drift[a=0.5]", bmd, lambda f: printed_brownian(f, x, a=0.5)),
        ("poisson[lambda=1]", po, lambda f: printed_poisson(1.0, f, x)),
    ]
    out = []
    for name, pair, printed in cases:
        gp = gflip = gi = 0.0
        for f in fs:
            orc = generator_oracle(pair, f, x)
            pv = printed(f)
            iv = mk.script_L(pair, f, x)
            gp = max(gp, float(np.max(np.abs(pv - orc))))
            gflip = max(gflip, float(np.max(np.abs(pv + orc))))
            gi = max(gi, float(np.max(np.abs(iv - orc))))
        out.append({"formula": name, "printed_gap": gp, "printed_gap_after_sign_flip": gflip,
                    "implemented_gap": gi})
    return out

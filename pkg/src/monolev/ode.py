"""Adaptive Dormand-Prince 5(4) integration of elementwise complex ODEs.

Every component of the state is an independent scalar problem
``w' = f(w)`` with its own end time, step size and error control, but all
components advance together through one vectorised evaluation of ``f`` per
stage.  This is what makes a Stieltjes inversion over a few thousand grid
points affordable: each point follows its own trajectory off the real axis.
"""
from __future__ import annotations

import numpy as np

from .errors import StepFailure

# Dormand & Prince (1980) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_BSTAR = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])
_E = _B - _BSTAR


class Solution:
    """Result of :func:`solve`.

    ``w`` holds the end states; ``failed`` flags components stopped by the
    ``im_floor`` guard (their ``w`` is the last accepted state and ``s`` the
    time reached).  With ``record=True``, ``trajectory(i)`` returns the
    accepted states of component ``i`` including the start point.
    """

    def __init__(self, w, s, failed, steps, history):
        self.w = w
        self.s = s
        self.failed = failed
        self.steps = steps
        self._history = history

    def trajectory(self, i: int) -> np.ndarray:
        if self._history is None:
            raise ValueError("solve was called without record=True")
        w0, hist = self._history
        pts = [w0[i]]
        for idx, w in hist:
            j = np.searchsorted(idx, i)
            if j < idx.size and idx[j] == i:
                pts.append(w[j])
        return np.array(pts)


def solve(f, z0, t_end, rtol: float = 1e-10, atol: float = 1e-14,
          monotone_im: bool = False, im_floor: float | None = None,
          record: bool = False, max_iter: int = 100_000) -> Solution:
    """Integrate ``w' = f(w)`` from ``w(0) = z0`` up to ``t_end`` (elementwise).

    Parameters
    ----------
    f : callable
        Vectorised right-hand side acting on a complex array.
    z0 : array_like
        Initial states.
    t_end : float or array_like
        Non-negative integration horizons, broadcast against ``z0``.
    monotone_im : bool
        Reject steps that lower ``Im w`` by more than 1e-12 (forward Pick
        flows raise the imaginary part).
    im_floor : float, optional
        Stop a component, flagging it as failed, once an accepted step
        brings ``Im w`` below this value or the step size underflows.
    """
    z0 = np.asarray(z0, dtype=complex)
    shape = z0.shape
    w = z0.ravel().copy()
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), shape).ravel().copy()
    if np.any(t_end < 0):
        raise ValueError("integration horizon must be non-negative")
    n = w.size
    s = np.zeros(n)
    failed = np.zeros(n, dtype=bool)
    steps = np.zeros(n, dtype=int)
    history = [] if record else None

    k1 = f(w) if n else w.copy()
    d1 = np.abs(k1)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(d1 > 0, 0.01 * np.maximum(np.abs(w), 1e-3) / d1, 1.0)
    h = np.minimum(np.where(np.isfinite(h), h, 1e-6), np.maximum(t_end, 1e-300))

    done_tol = 1e-14 * np.maximum(1.0, t_end)
    for _ in range(max_iter):
        active = np.flatnonzero((t_end - s > done_tol) & ~failed)
        if active.size == 0:
            break
        ww, kk = w[active], k1[active]
        hh = np.minimum(h[active], t_end[active] - s[active])
        ks = [kk]
        with np.errstate(all="ignore"):
            for row in _A[1:]:
                inc = sum(a * k for a, k in zip(row, ks) if a != 0.0)
                ks.append(f(ww + hh * inc))
            w5 = ww + hh * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
            k7 = f(w5)
            ks.append(k7)
            err_vec = hh * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
            sc = atol + rtol * np.maximum(np.abs(ww), np.abs(w5))
            err = np.abs(err_vec) / sc
        finite = np.isfinite(w5) & np.isfinite(err) & np.isfinite(k7)
        ok = finite & (err <= 1.0)
        if monotone_im:
            ok &= w5.imag >= ww.imag - 1e-12
        with np.errstate(divide="ignore"):
            fac = np.where(err > 0, 0.9 * err ** -0.2, 5.0)
        fac = np.clip(fac, 0.2, 5.0)
        fac = np.where(ok, fac, np.minimum(fac, 0.5))
        fac = np.where(finite, fac, 0.25)

        acc = active[ok]
        w[acc] = w5[ok]
        k1[acc] = k7[ok]
        s[acc] += hh[ok]
        steps[acc] += 1
        h[active] = hh * fac
        if im_floor is not None:
            below = acc[w[acc].imag < im_floor]
            failed[below] = True
        if record:
            history.append((acc.copy(), w[acc].copy()))

        stalled = active[~ok & (hh * fac < 1e-15 * np.maximum(1.0, s[active]))]
        if stalled.size and im_floor is not None:
            # with a floor guard a stall marks an orbit running into the axis
            failed[stalled] = True
        elif stalled.size:
            i = stalled[0]
            raise StepFailure(f"step size underflow at s={s[i]:.6g}", last=w[i], time=s[i])
    else:
        raise StepFailure("iteration budget exhausted")

    hist = (z0.ravel().copy(), history) if record else None
    return Solution(w.reshape(shape), s.reshape(shape), failed.reshape(shape),
                    steps.reshape(shape), hist)

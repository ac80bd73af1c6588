"""Test functions integrated against measures and fed to generators.

Three kinds are supported: polynomials, resolvents ``y -> 1/(z - y)`` and
black boxes given by callables for ``f``, ``f'`` and ``f''``.  Products of
test functions are formed with ``*``; polynomial products stay polynomial,
anything else becomes a :class:`BlackBox` carrying product-rule derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DerivativeUnavailable, DomainMismatch, InputError


class TestFunction:
    """Common interface.  Subclasses evaluate elementwise on arrays."""

    __test__ = False  # keep pytest from collecting this class

    def __call__(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise DerivativeUnavailable(f"{type(self).__name__} has no first derivative")

    def d2(self, x):
        raise DerivativeUnavailable(f"{type(self).__name__} has no second derivative")

    def conj(self) -> "TestFunction":
        """The function ``x -> conj(f(x))`` for real ``x``."""
        raise NotImplementedError

    def of_matrix(self, m: np.ndarray) -> np.ndarray:
        """Functional calculus on a hermitian matrix via its eigenbasis."""
        lam, v = np.linalg.eigh(m)
        return (v * self(lam)) @ v.conj().T

    def check_domain(self, lo: float, hi: float) -> None:
        pass

    def __mul__(self, other: "TestFunction") -> "TestFunction":
        if isinstance(self, Polynomial) and isinstance(other, Polynomial):
            return Polynomial(P.polymul(self.coeffs, other.coeffs))
        return _product(self, other)


@dataclass(frozen=True)
class Polynomial(TestFunction):
    """Polynomial with ascending coefficients ``c[0] + c[1] x + ...``."""

    coeffs: tuple

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs))
        if c.size == 0:
            c = np.zeros(1)
        object.__setattr__(self, "coeffs", tuple(c.tolist()))

    @classmethod
    def monomial(cls, k: int) -> "Polynomial":
        c = np.zeros(k + 1)
        c[k] = 1.0
        return cls(c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_real(self) -> bool:
        return all(np.imag(c) == 0 for c in self.coeffs)

    def _c(self):
        c = np.asarray(self.coeffs)
        return c.real if self.is_real else c.astype(complex)

    def __call__(self, x):
        return P.polyval(x, self._c())

    def d1(self, x):
        return P.polyval(x, P.polyder(self._c(), 1))

    def d2(self, x):
        return P.polyval(x, P.polyder(self._c(), 2))

    def conj(self):
        return Polynomial(np.conj(np.asarray(self.coeffs)))

    def taylor_quotient(self) -> "Polynomial":
        """``(f(x) - f(0) - x f'(0)) / x**2`` as an exact polynomial."""
        return Polynomial(self._c()[2:])

    def difference_quotient(self) -> "Polynomial":
        """``(f(x) - f(0)) / x`` as an exact polynomial."""
        return Polynomial(self._c()[1:])

    def of_matrix(self, m):
        out = np.zeros_like(m, dtype=complex if not self.is_real else m.dtype)
        for c in reversed(self._c()):
            out = out @ m + c * np.eye(m.shape[0])
        return out


@dataclass(frozen=True)
class Resolvent(TestFunction):
    """``f(x) = 1 / (z - x)`` with ``z`` off the real axis."""

    pole: complex

    def __post_init__(self):
        if np.imag(self.pole) == 0:
            raise InputError("resolvent pole must lie off the real axis")

    def __call__(self, x):
        return 1.0 / (self.pole - np.asarray(x))

    def d1(self, x):
        return 1.0 / (self.pole - np.asarray(x)) ** 2

    def d2(self, x):
        return 2.0 / (self.pole - np.asarray(x)) ** 3

    def conj(self):
        return Resolvent(np.conj(self.pole))

    def of_matrix(self, m):
        return np.linalg.inv(self.pole * np.eye(m.shape[0]) - m)


@dataclass(frozen=True)
class BlackBox(TestFunction):
    """Arbitrary function given by evaluators.

    ``domain`` bounds the interval on which the evaluators are trusted;
    integrating against a measure whose support leaves it raises
    :class:`DomainMismatch`.
    """

    f: Callable
    df: Optional[Callable] = None
    d2f: Optional[Callable] = None
    domain: tuple = (-np.inf, np.inf)
    name: str = field(default="blackbox", compare=False)

    def __call__(self, x):
        return self.f(np.asarray(x))

    def d1(self, x):
        if self.df is None:
            raise DerivativeUnavailable(f"{self.name}: no first derivative")
        return self.df(np.asarray(x))

    def d2(self, x):
        if self.d2f is None:
            raise DerivativeUnavailable(f"{self.name}: no second derivative")
        return self.d2f(np.asarray(x))

    def conj(self):
        c = lambda g: None if g is None else (lambda x: np.conj(g(x)))
        return BlackBox(c(self.f), c(self.df), c(self.d2f), self.domain, self.name + "*")

    def check_domain(self, lo, hi):
        if lo < self.domain[0] or hi > self.domain[1]:
            raise DomainMismatch(
                f"{self.name} defined on {self.domain}, support is [{lo}, {hi}]")


def _product(f: TestFunction, g: TestFunction) -> BlackBox:
    def d1(x):
        return f.d1(x) * g(x) + f(x) * g.d1(x)

    def d2(x):
        return f.d2(x) * g(x) + 2 * f.d1(x) * g.d1(x) + f(x) * g.d2(x)

    lo = max(_domain(f)[0], _domain(g)[0])
    hi = min(_domain(f)[1], _domain(g)[1])
    return BlackBox(lambda x: f(x) * g(x), d1, d2, (lo, hi), "product")


def _domain(f):
    return getattr(f, "domain", (-np.inf, np.inf))


def constant(c: float = 1.0) -> Polynomial:
    return Polynomial([c])


def cosine() -> BlackBox:
    return BlackBox(np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), name="cos")

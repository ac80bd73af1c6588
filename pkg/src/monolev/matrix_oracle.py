"""Finite-dimensional iterated monotone products.

Factor ``i`` carries a hermitian matrix ``X_i`` and a unit vector
``omega_i``.  On the tensor product the ``i``-th operator is embedded as
``1 x ... x 1 x X_i x P x ... x P`` with ``P`` the projection onto the
later factors' ``omega``; the state is the vector state of
``Omega = omega_1 x ... x omega_n``.  With Jacobi matrices as factors
the marginals reproduce the first ``2d - 1`` moments of given measures,
so sums of embedded operators give an exact-arithmetic oracle for the
monotone convolution and its identities.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from . import convolution as cv
from . import measure as ms
from .errors import (DimensionCapExceeded, InputError, MomentBreakdown, NotCompressible,
                     NoWitnessFound, SingularResolvent)
from .functions import Polynomial, Resolvent, TestFunction

DIM_CAP = 4096
MAX_NODES = 16


@dataclass(frozen=True, eq=False)
class FactorSpace:
    """A hermitian matrix with a unit state vector (default ``e_1``)."""

    operator: np.ndarray
    omega: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.operator))
        if X.shape[0] != X.shape[1]:
            raise InputError("factor operator must be square")
        if np.max(np.abs(X - X.conj().T), initial=0.0) > 1e-12:
            raise InputError("factor operator must be hermitian")
        w = np.eye(X.shape[0])[0] if self.omega is None else np.asarray(self.omega)
        if w.shape != (X.shape[0],) or abs(np.linalg.norm(w) - 1) > 1e-12:
            raise InputError("omega must be a unit vector of matching dimension")
        object.__setattr__(self, "operator", X)
        object.__setattr__(self, "omega", w)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    @property
    def projection(self) -> np.ndarray:
        return np.outer(self.omega, self.omega.conj())

    def state(self, Y: np.ndarray) -> complex:
        return self.omega.conj() @ Y @ self.omega

    def H(self, z):
        """Reciprocal Cauchy transform of the factor's distribution."""
        return 1.0 / self.state(np.linalg.inv(z * np.eye(self.dim) - self.operator))

    def distribution(self) -> ms.DiscretizedMeasure:
        """Spectral measure of ``operator`` in the state ``omega``."""
        lam, v = np.linalg.eigh(self.operator)
        w = np.abs(v.conj().T @ self.omega) ** 2
        keep = w > 1e-15
        return ms.make_measure(list(zip(lam[keep], w[keep])), merge_tol=1e-12 * max(1.0, np.abs(lam).max()))


class MatrixModel:
    """Iterated monotone product of factor spaces, in list order.

    Raises
    ------
    DimensionCapExceeded
        The total dimension exceeds ``DIM_CAP``.
    """

    def __init__(self, factors):
        self.factors = list(factors)
        if not self.factors:
            raise InputError("a model needs at least one factor")
        self.dims = [f.dim for f in self.factors]
        self.dim = int(np.prod(self.dims))
        if self.dim > DIM_CAP:
            raise DimensionCapExceeded(f"total dimension {self.dim} exceeds {DIM_CAP}")

    def __len__(self):
        return len(self.factors)

    @cached_property
    def Omega(self) -> np.ndarray:
        return reduce(np.kron, [f.omega for f in self.factors])

    def embed(self, i: int, X: np.ndarray) -> np.ndarray:
        """``J_i(X) = 1 x ... x X x P x ... x P``."""
        parts = [np.eye(d) for d in self.dims[:i]] + [np.asarray(X)]
        parts += [f.projection for f in self.factors[i + 1:]]
        return reduce(np.kron, parts)

    @cached_property
    def operators(self) -> list:
        return [self.embed(i, f.operator) for i, f in enumerate(self.factors)]

    @cached_property
    def sum_operator(self) -> np.ndarray:
        return sum(self.operators)

    def state(self, Z: np.ndarray) -> complex:
        return self.Omega.conj() @ Z @ self.Omega

    def split(self, m: int = 1):
        """The two blocks ``factors[:m]`` and ``factors[m:]`` as models."""
        if not 0 < m < len(self):
            raise InputError("split point must leave two non-empty blocks")
        return MatrixModel(self.factors[:m]), MatrixModel(self.factors[m:])

    def reversed(self) -> "MatrixModel":
        return MatrixModel(self.factors[::-1])


# ---------------------------------------------------------------------------
# construction from measures
# ---------------------------------------------------------------------------

def jacobi_matrix(mu: ms.DiscretizedMeasure, d: int, strict: bool = False) -> np.ndarray:
    """Tridiagonal Jacobi matrix of ``mu`` of size ``d``.

    Lanczos with full reorthogonalisation on the quadrature nodes of
    ``mu``.  If the recursion breaks down early (fewer than ``d`` support
    points) the smaller exact matrix is returned, or
    :class:`MomentBreakdown` is raised when ``strict``.
    """
    x, w = mu.nodes()
    keep = w > 0
    x, w = x[keep], w[keep] / w[keep].sum()
    q = np.sqrt(w)
    Q = [q]
    alpha, beta = [], []
    tol = 1e-10 * max(1.0, np.abs(x).max(initial=0.0))
    for k in range(d):
        v = x * Q[-1]
        alpha.append(Q[-1] @ v)
        if k == d - 1:
            break
        for _ in range(2):
            for qq in Q:
                v = v - (qq @ v) * qq
        b = np.linalg.norm(v)
        if b <= tol:
            if strict:
                raise MomentBreakdown(f"measure has only {k + 1} support points, {d} requested")
            break
        beta.append(b)
        Q.append(v / b)
    return np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)


def model_from_measures(measures, d: int, strict: bool = False) -> MatrixModel:
    """Jacobi-matrix factors for ``measures``, embedded in list order."""
    if not 1 <= d <= MAX_NODES:
        raise InputError(f"nodes per factor must be in 1..{MAX_NODES}")
    for mu in measures:
        if not mu.is_probability:
            raise InputError("factor measures must be probability measures")
    return MatrixModel([FactorSpace(jacobi_matrix(mu, d, strict)) for mu in measures])


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def _random_poly(rng, X, degree=3):
    """Random element of the non-unital algebra generated by ``X``."""
    c = rng.standard_normal(degree) + 1j * rng.standard_normal(degree)
    out = np.zeros_like(X, dtype=complex)
    Xk = np.eye(X.shape[0])
    for ck in c:
        Xk = Xk @ X
        out = out + ck * Xk
    return out


def _opnorm(A):
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def check_monotone_independence(model: MatrixModel, trials: int = 50, rng=None):
    """Largest residuals of the two monotone independence conditions.

    (a) ``||XYZ - Phi(Y) XZ||`` with ``X, Y, Z`` from algebras ``i, j, k``,
    ``j > max(i, k)``.  (b) ``|Phi(X_1..X_n Y Z_m..Z_1) - prod Phi|`` for
    index chains decreasing towards a smallest middle index.

    Returns
    -------
    tuple of float
        ``(residual_a, residual_b)``.
    """
    n = len(model)
    if n < 2:
        raise InputError("independence needs at least two factors")
    rng = np.random.default_rng(rng)
    ops = model.operators
    ra = rb = 0.0
    for _ in range(trials):
        j = int(rng.integers(1, n))
        i, k = (int(v) for v in rng.integers(0, j, 2))
        X, Y, Z = (_random_poly(rng, ops[m]) for m in (i, j, k))
        ra = max(ra, _opnorm(X @ Y @ Z - model.state(Y) * X @ Z))

        jm = int(rng.integers(0, n - 1))
        above = np.arange(jm + 1, n)
        left = np.sort(rng.choice(above, rng.integers(0, above.size + 1), replace=False))[::-1]
        right = np.sort(rng.choice(above, rng.integers(0, above.size + 1), replace=False))[::-1]
        Xs = [_random_poly(rng, ops[m]) for m in left]
        Ym = _random_poly(rng, ops[jm])
        Zs = [_random_poly(rng, ops[m]) for m in right]
        word = Xs + [Ym] + Zs[::-1]
        lhs = model.state(reduce(np.matmul, word))
        rhs = np.prod([model.state(W) for W in word])
        rb = max(rb, abs(lhs - rhs))
    return ra, rb


def _compress(model: MatrixModel, Z: np.ndarray, m: int = 1) -> np.ndarray:
    """``(1 x <omega_2|) Z (1 x |omega_2>)`` for the block split at ``m``."""
    b1, b2 = model.split(m)
    V = np.kron(np.eye(b1.dim), b2.Omega.reshape(-1, 1))
    return V.conj().T @ Z @ V


def conditional_E1(model: MatrixModel, Z: np.ndarray, m: int = 1, check: bool = True) -> np.ndarray:
    """Conditional expectation onto the first block.

    ``PZP = W x P_2`` with ``P = 1 x P_2``; returns ``W``.  When the first
    block is a single factor, ``W`` must commute with its operator (its
    Jacobi matrix is cyclic, so the commutant is the generated algebra);
    otherwise :class:`NotCompressible` is raised.
    """
    W = _compress(model, Z, m)
    if check and m == 1:
        X = model.factors[0].operator
        gap = _opnorm(W @ X - X @ W)
        if gap > 1e-10 * max(1.0, _opnorm(W)) * max(1.0, _opnorm(X)):
            raise NotCompressible(f"compression leaves the first algebra (commutator {gap:.2e})")
    return W


def _random_word(rng, model, length=4):
    ops = model.operators
    idx = rng.integers(0, len(model), length)
    return reduce(np.matmul, [_random_poly(rng, ops[i], 2) for i in idx])


def conditional_expectation_checks(model: MatrixModel, trials: int = 100, rng=None) -> dict:
    """Residuals of the conditional expectation properties on a two-factor model.

    Keys ``a`` (bimodule property), ``b`` (state preservation), ``c``
    (left inverse of the embedding), ``d`` (smallest Choi eigenvalue,
    negated, clipped at zero) and ``e`` (unit preservation).
    """
    rng = np.random.default_rng(rng)
    if len(model) != 2:
        raise InputError("conditional expectation checks need a two-factor model")
    f1 = model.factors[0]
    res = dict.fromkeys("abcde", 0.0)
    for _ in range(trials):
        Y = _random_word(rng, model)
        A, C = _random_poly(rng, f1.operator), _random_poly(rng, f1.operator)
        JA, JC = model.embed(0, A), model.embed(0, C)
        res["a"] = max(res["a"], _opnorm(_compress(model, JA @ Y @ JC) - A @ _compress(model, Y) @ C))
        res["b"] = max(res["b"], abs(f1.state(_compress(model, Y)) - model.state(Y)))
        res["c"] = max(res["c"], _opnorm(_compress(model, JA) - A))
    n = model.dim
    choi = np.zeros((n * f1.dim, n * f1.dim), complex)
    for i in range(n):
        for j in range(n):
            Eij = np.zeros((n, n))
            Eij[i, j] = 1.0
            choi[i * f1.dim:(i + 1) * f1.dim, j * f1.dim:(j + 1) * f1.dim] = _compress(model, Eij)
    res["d"] = max(0.0, -float(np.linalg.eigvalsh(choi).min()))
    res["e"] = _opnorm(_compress(model, np.eye(n)) - np.eye(f1.dim))
    return res


def _resolvent(S, z):
    M = z * np.eye(S.shape[0]) - S
    if np.linalg.cond(M) > 1e12:
        raise SingularResolvent(f"z = {z} is (numerically) in the spectrum")
    return np.linalg.inv(M)


def resolvent_identity_residual(model: MatrixModel, z: complex, m: int = 1) -> float:
    """``||E_1((z - X_1 - X_2)^-1) - (H_{X_2}(z) - X_1)^-1||``.

    ``X_1`` and ``X_2`` are the sums over the blocks split at ``m``.
    """
    b1, b2 = model.split(m)
    X1 = b1.sum_operator
    lhs = _compress(model, _resolvent(model.sum_operator, z), m)
    H2 = 1.0 / b2.state(_resolvent(b2.sum_operator, z))
    rhs = _resolvent(X1, H2)
    return _opnorm(lhs - rhs)


def H_of_sum(model: MatrixModel, z: complex) -> complex:
    return 1.0 / model.state(_resolvent(model.sum_operator, z))


def H_composition_residual(model: MatrixModel, z: complex) -> float:
    """``|H_{X_1 + ... + X_n}(z) - H_{X_1}(...H_{X_n}(z))|``, last factor innermost."""
    if np.imag(z) <= 0:
        raise InputError("z must lie in the upper half-plane")
    if len(model) == 1:
        return 0.0
    w = complex(z)
    for f in reversed(model.factors):
        w = f.H(w)
    return float(abs(H_of_sum(model, z) - w))


def corollary_T_residual(model: MatrixModel, f: TestFunction, m: int = 1) -> float:
    """``||E_1(f(X_1 + X_2)) - (Tf)(X_1)||`` with ``Tf`` from shift kernels.

    ``(Tf)(x) = int f d(delta_x |> nu)`` with ``nu`` the distribution of
    the second block, computed by :func:`~monolev.convolution.shift_convolve`
    at each eigenvalue of ``X_1``.
    """
    if not isinstance(f, (Polynomial, Resolvent)):
        raise InputError("corollary check needs a polynomial or resolvent")
    b1, b2 = model.split(m)
    nu = FactorSpace(b2.sum_operator, b2.Omega).distribution()
    lhs = _compress(model, f.of_matrix(model.sum_operator), m)
    lam, V = np.linalg.eigh(b1.sum_operator)
    Tf = np.array([ms.integrate(cv.shift_convolve(x, nu), f) for x in lam])
    rhs = (V * Tf) @ V.conj().T
    return _opnorm(lhs - rhs)


def moments_of_sum(model: MatrixModel, k):
    """``Phi((X_1 + ... + X_n)^k)`` by dense matrix powers."""
    ks = np.atleast_1d(k)
    S = model.sum_operator
    out = []
    for kk in ks:
        out.append(model.state(np.linalg.matrix_power(S, int(kk))).real)
    return out[0] if np.ndim(k) == 0 else np.array(out)


def sum_distribution(model: MatrixModel) -> ms.DiscretizedMeasure:
    """Exact spectral distribution of the sum in the state ``Omega``."""
    return FactorSpace(model.sum_operator, model.Omega).distribution()


def trace_failure_demo(model: MatrixModel, trials: int = 200, rng=None):
    """Witness that the state is not a trace on a two-factor product.

    Searches ``X`` in the first algebra and ``Y_1, Y_2`` in the second for
    a large ``|Phi(X Y_1 Y_2) - Phi(Y_2 X Y_1)|``, starting from
    ``X = X_1, Y_1 = Y_2 = X_2``.

    Returns
    -------
    (X, Y1, Y2, gap)

    Raises
    ------
    NoWitnessFound
        The gap never exceeds ``1e-12``, as happens when the second state
        is multiplicative.
    """
    if len(model) != 2:
        raise InputError("trace failure demo needs a two-factor model")
    rng = np.random.default_rng(rng)
    J1, J2 = model.operators

    def gap(X, Y1, Y2):
        return abs(model.state(X @ Y1 @ Y2) - model.state(Y2 @ X @ Y1))

    best = (J1, J2, J2, gap(J1, J2, J2))
    for _ in range(trials):
        X, Y1, Y2 = _random_poly(rng, J1), _random_poly(rng, J2), _random_poly(rng, J2)
        g = gap(X, Y1, Y2)
        if g > best[3]:
            best = (X, Y1, Y2, g)
    if best[3] <= 1e-12:
        raise NoWitnessFound("state of the second factor is multiplicative on its algebra")
    return best

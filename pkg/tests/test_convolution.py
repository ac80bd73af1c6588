import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monolev import convolution as cv
from monolev import matrix_oracle as mo
from monolev import measure as ms
from monolev.errors import InputError, NodeBudgetExceeded, NotProbability

_A = ms.arcsine(1.0)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_dirac_with_dirac(a, b):
    mu = cv.mono_convolve(ms.dirac(a), ms.dirac(b))
    assert mu.atom_pos.size == 1
    assert mu.atom_pos[0] == pytest.approx(a + b, abs=1e-9)


def test_identity_on_either_side(bernoulli):
    for mu in (bernoulli, _A):
        assert ms.l1_distance(cv.mono_convolve(mu, ms.dirac(0.0)), mu) <= 1e-3
        assert ms.l1_distance(cv.mono_convolve(ms.dirac(0.0), mu), mu) <= 1e-3


def test_shift_convolve_examples(bernoulli):
    assert ms.l1_distance(cv.shift_convolve(0.0, _A), _A) <= 1e-3
    k = cv.shift_convolve(0.3, ms.dirac(0.5))
    assert k.atom_pos.tolist() == [pytest.approx(0.8)]
    k = cv.shift_convolve(1.0, bernoulli)
    r = np.sqrt(5)
    assert k.atom_pos == pytest.approx([(1 - r) / 2, (1 + r) / 2], abs=1e-8)
    assert k.atom_mass == pytest.approx([0.2763932, 0.7236068], abs=1e-6)


def test_bernoulli_square_matches_matrix_oracle(bernoulli):
    t0 = time.perf_counter()
    mu = cv.mono_convolve(bernoulli, bernoulli)
    assert time.perf_counter() - t0 < 5
    ref = mo.moments_of_sum(mo.model_from_measures([bernoulli, bernoulli], 2), range(5))
    got = [ms.moment(mu, k) for k in range(5)]
    assert got == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("mu, nu", [
    (ms.bernoulli(0.0, 1.0, 0.3), _A), (_A, ms.bernoulli(0.0, 1.0, 0.3)),
    (ms.bernoulli(), ms.bernoulli(-0.5, 2.0, 0.2))])
def test_mean_additivity(mu, nu):
    m = ms.moment(cv.mono_convolve(mu, nu), 1)
    assert m == pytest.approx(ms.moment(mu, 1) + ms.moment(nu, 1), abs=1e-6)


def test_second_moment_additivity(bernoulli):
    # for centred factors the variances add as well
    mu = cv.mono_convolve(bernoulli, _A)
    assert ms.moment(mu, 2) == pytest.approx(1 + ms.moment(_A, 2), abs=1e-5)


def test_affine_in_first_argument():
    mu = ms.make_measure([(-1.0, 0.3), (0.5, 0.7)])
    lhs = cv.mono_convolve(mu, _A)
    rhs = ms.mix([cv.mono_convolve(ms.dirac(-1.0), _A), cv.mono_convolve(ms.dirac(0.5), _A)],
                 [0.3, 0.7])
    assert ms.l1_distance(lhs, rhs) <= 1e-3


def test_associativity_on_samples():
    a, b = 0.4, -0.3
    lhs = cv.mono_convolve(cv.mono_convolve(ms.dirac(a), _A), ms.dirac(b))
    rhs = cv.mono_convolve(ms.dirac(a), cv.mono_convolve(_A, ms.dirac(b)))
    assert ms.l1_distance(lhs, rhs) <= 1e-3


@pytest.mark.parametrize("mu, nu", [
    (ms.bernoulli(), ms.bernoulli()), (ms.bernoulli(), _A), (ms.dirac(0.5), ms.dirac(-1.0)),
    (_A, ms.dirac(0.0)), (ms.dirac(0.0), _A)])
def test_route_agreement(mu, nu):
    assert cv.route_gap(mu, nu) <= 2e-3


def test_not_commutative():
    B01, D1 = ms.bernoulli(0.0, 1.0), ms.dirac(1.0)
    gap = cv.noncommutativity_gap(B01, D1, 3)
    fwd = mo.moments_of_sum(mo.model_from_measures([B01, D1], 2), 3)
    bwd = mo.moments_of_sum(mo.model_from_measures([D1, B01], 2), 3)
    assert gap > 0.01
    assert gap == pytest.approx(abs(fwd - bwd), abs=1e-6)


def test_density_first_argument_matches_oracle_moments():
    mu = cv.mono_convolve(_A, ms.bernoulli())
    ref = mo.moments_of_sum(mo.model_from_measures([_A, ms.bernoulli()], 4), range(5))
    got = [ms.moment(mu, k) for k in range(5)]
    assert got == pytest.approx(ref, abs=2e-3)


def test_mixture_nodes_and_budget():
    y, w = cv.mixture_nodes(_A)
    assert y.size == cv.MIXTURE_NODES
    assert w.sum() == pytest.approx(1.0)
    with pytest.raises(NodeBudgetExceeded):
        cv.mixture_nodes(_A, accuracy=1e-5)
    with pytest.raises(InputError):
        cv.mixture_nodes(_A, accuracy=0.0)


def test_requires_probability_measures(bernoulli):
    with pytest.raises(NotProbability):
        cv.mono_convolve(ms.make_measure([(0, 2.0)], probability=False), bernoulli)

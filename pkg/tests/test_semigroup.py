import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monolev import measure as ms
from monolev import semigroup as sg
from monolev.errors import InputError, LowerHalfPlane, OutsideDomain, RadiusTooSmall
from monolev.functions import Polynomial, Resolvent, constant

upper = st.builds(complex, st.floats(-3, 3), st.floats(0.05, 3))
PAIRS = {"brownian": sg.brownian_pair(), "drift": sg.drift_pair(0.7),
         "poisson": sg.poisson_pair(1.0)}


def test_trivial_pair_rejected():
    with pytest.raises(InputError):
        sg.CharacteristicPair(0.0, None)


def test_family_recognition():
    assert PAIRS["brownian"].family()["family"] == "brownian"
    assert PAIRS["drift"].family() == {"family": "drift", "a": 0.7}
    assert sg.CharacteristicPair.from_dict(
        {"a": -0.5, "rho": {"atoms": [[1, 0.5]]}}).family() == {"family": "poisson", "lambda": 1.0}


def test_pair_dict_round_trip():
    p = sg.CharacteristicPair.from_dict(PAIRS["poisson"].to_dict())
    assert p.digest() == PAIRS["poisson"].digest()


def test_eval_A_examples():
    assert sg.eval_A(PAIRS["drift"], 1j) == pytest.approx(0.7)
    assert sg.eval_A(PAIRS["brownian"], 1j) == pytest.approx(1j)
    assert sg.eval_A(PAIRS["poisson"], 2j) == pytest.approx(-0.4 + 0.2j)
    with pytest.raises(LowerHalfPlane):
        sg.eval_A(PAIRS["brownian"], -1j)


@given(upper, st.floats(0, 2))
def test_brownian_flow_closed_form(z, t):
    w = sg.flow_H(PAIRS["brownian"], np.array([z]), t)[0]
    ref = np.sqrt(z * z - 2 * t)
    ref = ref if ref.imag >= 0 else -ref
    assert abs(w - ref) <= 1e-8


@given(upper, st.floats(0, 3))
def test_drift_flow_is_z_plus_at(z, t):
    w = sg.flow_H(PAIRS["drift"], np.array([z]), t)[0]
    assert abs(w - (z + 0.7 * t)) <= 1e-10


def test_flow_at_time_zero_is_identity():
    z = np.array([1 + 1j, -2 + 0.1j])
    assert np.array_equal(sg.flow_H(PAIRS["poisson"], z, 0.0), z)


@pytest.mark.parametrize("name", list(PAIRS))
@pytest.mark.parametrize("t", [0.25, 1.0])
def test_abel_residual(name, t):
    for z in (1j, 0.5 + 0.3j, -1 + 2j):
        assert sg.abel_residual(PAIRS[name], z, t) <= 1e-6


def test_abel_residual_examples():
    assert sg.abel_residual(PAIRS["drift"], 1 + 1j, 1.0) <= 1e-12
    assert sg.abel_residual(PAIRS["brownian"], 1j, 1.0) <= 1e-8
    assert sg.abel_residual(PAIRS["poisson"], 2j, 0.5) <= 1e-6


@pytest.mark.parametrize("name", list(PAIRS))
@given(z=upper, s=st.floats(0.01, 1), t=st.floats(0.01, 1))
def test_semigroup_law(name, z, s, t):
    p = PAIRS[name]
    z = np.array([z])
    assert abs(sg.flow_H(p, z, s + t) - sg.flow_H(p, sg.flow_H(p, z, t), s))[0] <= 1e-7


@pytest.mark.parametrize("name", list(PAIRS))
def test_imaginary_part_nondecreasing(name):
    sol = sg.flow_H(PAIRS[name], np.array([0.3 + 0.1j, -1 + 1j]), 1.0, record=True)
    for i in range(2):
        assert np.all(np.diff(sol.trajectory(i).imag) >= -1e-12)


@pytest.mark.parametrize("name", list(PAIRS))
def test_generator_consistency_first_order(name):
    p = PAIRS[name]
    z = np.array([0.4 + 1j, -1 + 0.7j])
    err = [np.max(np.abs((sg.flow_H(p, z, h) - z) / h - sg.eval_A(p, z))) for h in (1e-3, 1e-4)]
    if max(err) < 1e-10:
        return  # A constant along the flow: the difference quotient is exact
    assert np.log10(err[0] / err[1]) >= 0.9


@pytest.mark.parametrize("name", list(PAIRS))
@given(z=upper)
def test_inverse_flow_round_trip(name, z):
    p = PAIRS[name]
    w = sg.flow_H(p, np.array([z]), 1.0)
    assert abs(sg.inverse_flow_H(p, w, 1.0)[0] - z) <= 1e-8


def test_inverse_flow_closed_forms():
    z = np.array([0.5 + 1j])
    assert sg.inverse_flow_H(PAIRS["brownian"], z, 1.0)[0] == pytest.approx(np.sqrt(z[0] ** 2 + 2))
    assert sg.inverse_flow_H(PAIRS["drift"], z, 1.0)[0] == pytest.approx(z[0] - 0.7)


def test_inverse_flow_outside_image():
    # sqrt(z^2 - 2) maps C+ onto C+ minus the slit [0, i sqrt 2]
    with pytest.raises(OutsideDomain):
        sg.inverse_flow_H(PAIRS["brownian"], np.array([0.5j]), 1.0)
    w = sg.inverse_flow_H(PAIRS["brownian"], np.array([0.5j, 2j]), 1.0, on_fail="nan")
    assert np.isnan(w[0]) and np.isfinite(w[1])


@pytest.mark.parametrize("name", list(PAIRS))
def test_injectivity(name, rng):
    p = PAIRS[name]
    z1 = rng.uniform(-2, 2, 100) + 1j * rng.uniform(0.05, 2, 100)
    z2 = rng.uniform(-2, 2, 100) + 1j * rng.uniform(0.05, 2, 100)
    d = np.abs(sg.flow_H(p, z1, 1.0) - sg.flow_H(p, z2, 1.0))
    assert np.all(d >= 1e-9 * np.abs(z1 - z2))


def test_marginal_examples():
    assert sg.marginal(PAIRS["poisson"], 0.0).atom_pos.tolist() == [0.0]
    mu = sg.marginal(PAIRS["drift"], 1.3)
    assert mu.atom_pos == pytest.approx([-0.91], abs=1e-6)
    mu = sg.marginal(PAIRS["brownian"], 1.0)
    sel = np.abs(mu.x) <= 0.95 * np.sqrt(2)
    assert np.max(np.abs(mu.density[sel] - ms.arcsine_density(mu.x[sel]))) <= 2e-3


def test_support_bound_contains_support():
    for p in PAIRS.values():
        lo, hi = sg.support_bound(p, 1.0)
        mu = sg.marginal(p, 1.0)
        # pad for the smoothing of inverse-square-root edges by the inversion
        pad = 0.05 * (hi - lo)
        outside = 1 - float(ms.cdf(mu, hi + pad) - ms.cdf(mu, lo - pad))
        assert outside <= 1e-3


@pytest.mark.parametrize("name", list(PAIRS))
def test_L_case_formula(name):
    p = PAIRS[name]
    assert sg.L_apply(p, constant(1.0)) == 0.0
    assert sg.L_apply(p, Polynomial([0, 1])) == pytest.approx(-p.a)
    for k in range(2, 6):
        ref = 0.0 if p.rho is None else ms.integrate(p.rho, Polynomial.monomial(k - 2))
        assert sg.L_apply(p, Polynomial.monomial(k)) == pytest.approx(ref, abs=1e-12)


def test_L_brownian_examples():
    assert sg.L_apply(PAIRS["brownian"], Polynomial([0, 0, 1])) == pytest.approx(1.0)
    assert sg.L_apply(PAIRS["brownian"], Polynomial([0, 0, 0, 1])) == pytest.approx(0.0)


@pytest.mark.parametrize("name", list(PAIRS))
@pytest.mark.parametrize("deg", [1, 2, 3, 4])
def test_L_is_the_semigroup_derivative(name, deg):
    p = PAIRS[name]
    L = sg.L_apply(p, Polynomial.monomial(deg))
    err = [abs(sg.moments_via_contour(p, h, deg) / h - L) for h in (1e-2, 1e-3)]
    assert err[1] <= 10 * 1e-3 * max(1.0, abs(L)) or err[1] < 1e-9
    if err[0] > 1e-9:
        assert np.log10(err[0] / err[1]) >= 0.9


FS = [Polynomial([0, 1]), Polynomial([0, 0, 1]), constant(1.0), Polynomial([1, -2, 0, 1]),
      Resolvent(2j), Resolvent(-1 + 0.5j)]


@pytest.mark.parametrize("name", list(PAIRS))
def test_schurmann_identities(name):
    for f in FS:
        for g in FS:
            coc, cob = sg.schurmann_verify(PAIRS[name], f, g)
            assert coc <= 1e-12 and cob <= 1e-12


def test_schurmann_examples():
    p = PAIRS["poisson"]
    x = Polynomial([0, 1])
    coc, cob = sg.schurmann_verify(p, x, x)
    assert cob <= 1e-12
    assert abs(sg.L_apply(p, Polynomial([0, 0, 1])) - p.rho_mass) <= 1e-12
    assert sg.schurmann_verify(p, x, constant(1.0))[0] == 0.0


def test_schurmann_pi_is_multiplicative():
    T = sg.SchurmannTriple(PAIRS["poisson"])
    f, g = Polynomial([1, 2]), Resolvent(1j)
    assert np.allclose(T.pi(f * g), T.pi(f) @ T.pi(g))


def test_contour_moments():
    assert sg.moments_via_contour(PAIRS["poisson"], 1.0, 0) == pytest.approx(1.0, abs=1e-6)
    assert sg.moments_via_contour(PAIRS["brownian"], 1.0, 2) == pytest.approx(1.0, abs=1e-4)
    assert sg.moments_via_contour(PAIRS["drift"], 2.0, 1) == pytest.approx(-1.4, abs=1e-8)
    with pytest.raises(RadiusTooSmall):
        sg.moments_via_contour(PAIRS["brownian"], 1.0, 2, radius=1.0)
    with pytest.raises(InputError):
        sg.moments_via_contour(PAIRS["brownian"], 1.0, 17)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monolev import measure as ms
from monolev import semigroup as sg
from monolev import transform as tr
from monolev.errors import LowerHalfPlane, MassDeficit

upper = st.builds(complex, st.floats(-4, 4), st.floats(0.01, 4))


_A = ms.arcsine(1.0)


def evaluators():
    B, A = ms.bernoulli(), _A
    return [tr.FromMeasure(A), tr.FromMeasure(B), tr.ClosedFormBM(0.7), tr.ClosedFormDrift(0.7, 1.0),
            tr.FromFlow(sg.poisson_pair(1.0), 0.5), tr.Shifted(tr.FromMeasure(B), 1.0),
            tr.Composed(tr.FromMeasure(B), tr.FromMeasure(A))]


def test_eval_examples():
    assert tr.eval_G(tr.FromMeasure(ms.dirac(0.0)), 1j) == pytest.approx(-1j)
    assert tr.eval_G(tr.FromMeasure(ms.bernoulli()), 2j) == pytest.approx(-0.4j)
    assert tr.eval_G(tr.ClosedFormBM(0.5), 1j) == pytest.approx(-1j / np.sqrt(2))
    assert tr.eval_H(tr.FromMeasure(ms.dirac(0.4)), 1 + 1j) == pytest.approx(0.6 + 1j)
    assert tr.eval_H(tr.FromMeasure(ms.bernoulli()), 2j) == pytest.approx(2.5j)


def test_lower_half_plane_rejected():
    with pytest.raises(LowerHalfPlane):
        tr.eval_G(tr.ClosedFormBM(1.0), -1j)
    with pytest.raises(LowerHalfPlane):
        tr.eval_H(tr.ClosedFormBM(1.0), 0.5)


@given(upper)
def test_pick_property(z):
    for ev in evaluators():
        H = tr.eval_H(ev, z)
        assert H.imag >= z.imag - 1e-9 * abs(z)
        assert tr.eval_G(ev, z).imag < 0


@given(upper)
def test_conjugate_symmetry(z):
    for ev in evaluators():
        assert tr.eval_G(ev, np.conj(z), extend=True) == np.conj(tr.eval_G(ev, z))


@given(upper, st.floats(-3, 3))
def test_shift_subtracts_from_H(z, y):
    base = tr.FromMeasure(_A)
    assert tr.eval_H(tr.Shifted(base, y), z) == pytest.approx(tr.eval_H(base, z) - y, abs=1e-12)


def test_decay_at_infinity(arcsine):
    R = 10 * np.sqrt(2)
    z = R * np.exp(1j * np.linspace(0.1, np.pi - 0.1, 16))
    v = np.abs(z * ms.cauchy_transform(arcsine, z) - 1)
    # the 1/z term vanishes (mean zero); what remains is m2 / |z|^2
    assert np.all(v <= 2 * ms.moment(arcsine, 2) / R ** 2)


@pytest.mark.parametrize("name", ["dirac", "bernoulli", "arcsine"])
def test_round_trip(name):
    mu = {"dirac": ms.dirac(0.0), "bernoulli": ms.bernoulli(), "arcsine": ms.arcsine(1.0)}[name]
    back = tr.stieltjes_invert(tr.FromMeasure(mu))
    assert ms.l1_distance(back, mu) <= 1e-3


def test_dirac_round_trip_is_single_atom():
    back = tr.stieltjes_invert(tr.FromMeasure(ms.dirac(0.0)))
    assert back.atom_pos.size == 1
    assert back.atom_pos[0] == pytest.approx(0.0, abs=1e-9)
    assert back.atom_mass[0] == pytest.approx(1.0, abs=1e-6)


def test_closed_form_bm_inversion():
    mu, info = tr.stieltjes_invert(tr.ClosedFormBM(1.0), full_output=True)
    sel = np.abs(mu.x) <= 0.95 * np.sqrt(2)
    err = np.abs(mu.density[sel] - ms.arcsine_density(mu.x[sel], 1.0))
    assert err.max() <= 2e-3
    assert abs(info["mass"] - 1) <= 1e-4
    assert mu.atom_pos.size == 0


def test_shift_by_zero_is_identity():
    base = tr.FromFlow(sg.brownian_pair(), 1.0)
    a = tr.stieltjes_invert(base)
    b = tr.stieltjes_invert(tr.Shifted(base, 0.0))
    assert ms.l1_distance(a, b) <= 1e-3


def test_detect_atoms_examples():
    got = tr.detect_atoms(tr.Shifted(tr.FromMeasure(ms.dirac(0.5)), 0.25), (-2, 2))
    assert len(got) == 1
    assert got[0][0] == pytest.approx(0.75, abs=1e-8)
    assert got[0][1] == pytest.approx(1.0, abs=1e-6)
    # poles of z / (z^2 - z - 1) with residues z / (2z - 1)
    got = sorted(tr.detect_atoms(tr.Shifted(tr.FromMeasure(ms.bernoulli()), 1.0), (-3, 3)))
    roots = np.array([(1 - np.sqrt(5)) / 2, (1 + np.sqrt(5)) / 2])
    assert [p for p, _ in got] == pytest.approx(roots, abs=1e-8)
    assert [m for _, m in got] == pytest.approx(roots / (2 * roots - 1), abs=1e-6)
    assert tr.detect_atoms(tr.ClosedFormBM(1.0), (-2, 2)) == []


def test_narrow_grid_is_a_mass_deficit():
    with pytest.raises(MassDeficit):
        tr.stieltjes_invert(tr.ClosedFormBM(1.0), grid=(-0.5, 0.5, 501))


def test_family_inversion_matches_single_inversions():
    base = tr.FromMeasure(ms.bernoulli())
    ys = [-0.5, 0.0, 0.8]
    fam = tr.invert_shift_family(base, ys)
    for y, k in zip(ys, fam):
        assert ms.l1_distance(k, tr.stieltjes_invert(tr.Shifted(base, y))) < 1e-6

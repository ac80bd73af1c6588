import numpy as np
import pytest

from monolev import errata as er
from monolev import markov as mk
from monolev import semigroup as sg
from monolev.functions import Polynomial

XS = er.ERRATA_POINTS


@pytest.fixture(scope="module")
def report():
    return {r["formula"]: r for r in er.generator_report()}


@pytest.mark.parametrize("pair", [sg.brownian_pair(), sg.poisson_pair(1.0), sg.brownian_pair(0.5)])
def test_implemented_generator_agrees_with_oracle(pair):
    for f in er.ERRATA_FUNCTIONS:
        gap = np.max(np.abs(mk.script_L(pair, f, XS) - er.generator_oracle(pair, f, XS)))
        assert gap <= 1e-4


def test_oracle_on_brownian_square():
    # T_t x^2 = x^2 + t, so the derivative is exactly one
    assert er.generator_oracle(sg.brownian_pair(), Polynomial([0, 0, 1]), XS) == \
        pytest.approx(np.ones(3), abs=1e-8)


def test_printed_brownian_is_a_sign_flip(report):
    r = report["brownian"]
    assert r["printed_gap"] > 1.0
    assert r["printed_gap_after_sign_flip"] <= 1e-8
    assert r["implemented_gap"] <= 1e-4


@pytest.mark.parametrize("name", ["proposition_general[brownian]", "proposition_general[poisson]",
                                  "brownian_with_drift[a=0.5]", "poisson[lambda=1]"])
def test_other_printed_forms_inconsistent(report, name):
    r = report[name]
    assert r["printed_gap"] > 1e-4
    assert r["implemented_gap"] <= 1e-4


@pytest.mark.parametrize("name", ["proposition_general[poisson]", "brownian_with_drift[a=0.5]",
                                  "poisson[lambda=1]"])
def test_sign_flip_alone_does_not_repair(report, name):
    assert report[name]["printed_gap_after_sign_flip"] > 1e-4


def test_drift_transform_sign():
    assert er.drift_printed_gap(0.7, 0.3 + 1j, 1.0) == pytest.approx(1.4, abs=1e-9)


def test_poisson_implicit_equation():
    z = 0.5 + 1j
    assert er.poisson_printed_residual(1.0, z, 0.5) > 1e-2
    assert er.poisson_corrected_residual(1.0, z, 0.5) <= 1e-8


def test_brownian_drift_equation_is_consistent():
    assert er.brownian_drift_residual(0.5, 0.2 + 1j, 0.8) <= 1e-8

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mirrorlamb.analytic2q import (
    TwoQubitCase, amplitudes_antinode, amplitudes_node, bias_factor, dip_positions, gamma_pm,
    r_antinode, r_mid, r_node,
)
from mirrorlamb.errors import ClassificationError, ConfigError, ValidityError
from mirrorlamb.model import ideal_array
from mirrorlamb.rddi import build_couplings
from mirrorlamb.solve import weakfield_steady
from mirrorlamb.spectra import scan

rate = st.floats(0.0, 2.0)


def test_antinode_examples():
    assert r_antinode(0.0, 1.0, 0.2) == pytest.approx(abs(1 - 0.8 / 0.44), abs=1e-12)
    assert r_antinode(0.0, 1.0, 0.2) == pytest.approx(0.8182, abs=1e-4)
    assert r_antinode(0.0, 1.0, 0.0) == 1.0
    assert r_antinode(1e6, 1.0, 0.2) == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(ValueError):
        r_antinode(0.0, 1.0, -0.1)


@given(st.floats(-10, 10), rate)
def test_antinode_simplified_form(delta, gphi):
    if abs(delta) + gphi < 1e-6:
        return
    expected = abs(1 - 4 / (2 + gphi - 1j * delta))
    assert r_antinode(delta, 1.0, gphi) == pytest.approx(expected, abs=1e-10)


def test_antinode_half_width_without_dephasing():
    # dip of half width 2 gamma0: |1 - 4/(2 - i delta)| has its half-depth
    # points where the Lorentzian weight drops to one half
    d = np.linspace(-20, 20, 4001)
    r = r_antinode(d, 1.0, 1e-9)
    # no dephasing: lossless, r = 1 everywhere except the removable point
    np.testing.assert_allclose(r, 1.0, atol=1e-6)
    amp = np.abs(amplitudes_antinode(d, 1.0, 0.0, 0.01)[0]) ** 2
    half = d[amp >= amp.max() / 2]
    assert half[-1] == pytest.approx(2.0, abs=0.02)


def test_gamma_pm():
    assert gamma_pm(1.0, 0.2, 0.1) == pytest.approx((0.65, 0.55))


def test_node_amplitude_limits():
    g1 = 0.2
    cs, ca = amplitudes_node(1.0, 1.0, g1, 1e-6, 1.0, 0.01)
    assert abs(ca) / abs(cs) < 1e-5
    # delta = -Delta12 with gphi1 = 0
    g2 = 1e-3
    cs, ca = amplitudes_node(-1.0, 1.0, 0.0, g2, 1.0, 0.01)
    assert abs(cs) ** 2 == pytest.approx(0.01**2 * g2**2 / 2, rel=1e-2)
    assert abs(cs) < 1e-3 * abs(ca)


@given(st.floats(-5, 5), rate)
def test_node_amplitude_mirror_symmetry(delta, g1):
    cs, _ = amplitudes_node(delta, 1.0, g1, 0.0, 1.0, 0.01)
    _, ca = amplitudes_node(-delta, 1.0, g1, 0.0, 1.0, 0.01)
    assert abs(cs) == pytest.approx(abs(ca), rel=1e-12, abs=1e-300)


def test_node_examples():
    d = np.linspace(-5, 5, 101)
    np.testing.assert_allclose(r_node(d, 1.0, 0.0, 0.0, 1.0), 1.0, atol=1e-15)
    assert r_node(0.0, 1.0, 0.2, 0.2, 1.0) == pytest.approx(1 - 0.4 / 1.24, abs=1e-12)
    assert r_node(0.0, 1.0, 0.2, 0.2, 1.0) == pytest.approx(0.6774, abs=1e-4)
    # dips at +-Delta12 when gphi2 is small, well below the centre and wings
    mid = r_node(0.0, 1.0, 0.2, 1e-3, 1.0)
    for d0 in (-1.0, 1.0):
        dip = r_node(d0, 1.0, 0.2, 1e-3, 1.0)
        assert dip < mid - 0.3 and dip < r_node(3 * d0, 1.0, 0.2, 1e-3, 1.0) - 0.25
        assert dip < r_node(0.9 * d0, 1.0, 0.2, 1e-3, 1.0) and dip < r_node(1.1 * d0, 1.0, 0.2, 1e-3, 1.0)


def test_eq26_at_zero_equals_rmid():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        g1, g2 = rng.uniform(0, 2, 2)
        d12 = rng.uniform(0.1, 2)
        assert r_node(0.0, 1.0, g1, g2, d12) == pytest.approx(abs(r_mid(1.0, g1, g2, d12)), abs=1e-12)


def test_dip_positions():
    assert dip_positions(1.0, 0.2, 0.0, 1.0) == (-1.0, 1.0)
    assert dip_positions(1.0, 1.0, 0.3, 1.0) == (-1.0, 1.0)
    dm, dp = dip_positions(1.0, 0.2, 0.1, 1.0)
    assert dp == pytest.approx(1 - 0.96 / 4 * 0.5, abs=1e-14)
    assert dp == pytest.approx(0.88, abs=1e-12) and dm == -dp
    with pytest.raises(ValidityError):
        dip_positions(1.0, 0.0, 0.1, 1.0)


def test_rmid_and_bias():
    assert r_mid(1.0, 0.2, 0.0, 1.0) == 1.0
    assert bias_factor(0.5, 0.5, 1.0) == pytest.approx(0.8, abs=1e-14)
    assert bias_factor(0.2, 0.2, 1.0) == pytest.approx(1 / 1.04, abs=1e-14)


@pytest.mark.parametrize("g", [0.2, 0.5])
def test_bias_from_inverting_approximate_law(g):
    # read gphi2 off r_mid with the approximation that drops gphi1 gphi2
    r = r_mid(1.0, g, g, 1.0)
    est = (1 - r) / (1 + r)
    assert est / g == pytest.approx(bias_factor(g, g, 1.0), rel=1e-12)


@settings(max_examples=50)
@given(rate, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_rmid_monotone(g1, a, b):
    lo, hi = sorted((a, b))
    assert r_mid(1.0, g1, hi, 1.0) <= r_mid(1.0, g1, lo, 1.0) + 1e-15


@pytest.mark.parametrize("x2,case,d12", [(1.0, "antinode_antinode", 0.0), (1.5, "antinode_antiphase", 0.0),
                                         (1.25, "antinode_node", 1.0), (1.75, "antinode_node_antiphase", -1.0),
                                         (2.25, "antinode_node", 1.0)])
def test_classification(x2, case, d12):
    c = TwoQubitCase.from_array(ideal_array([0.0, x2], [0.2, 0.1]))
    assert c.case == case
    assert c.delta12 == pytest.approx(d12, abs=1e-12)
    assert (c.gphi1, c.gphi2) == (0.2, 0.1)


@pytest.mark.parametrize("arr", [
    ideal_array([0.0, 1.3]), ideal_array([0.0, 1.0, 2.0]), ideal_array([0.0, 1.25], levels=3),
    ideal_array([0.0, 1.25], detunings=[0.0, 0.5]), ideal_array([0.3, 1.25]),
])
def test_classification_errors(arr):
    with pytest.raises(ClassificationError):
        TwoQubitCase.from_array(arr)


def test_case_validation():
    with pytest.raises(ConfigError):
        TwoQubitCase("antinode_nodes", 1.0, 0.2, 0.2, 1.0)
    with pytest.raises(ConfigError):
        TwoQubitCase("antinode_node", 1.0, -0.2, 0.2, 1.0)
    c = TwoQubitCase("antinode_antinode", 1.0, 0.2, 0.1, 0.0)
    with pytest.raises(ValidityError):
        c.r(0.0)
    with pytest.raises(ValidityError):
        c.dips()


@pytest.mark.parametrize("x2", [1.0, 1.25, 1.5, 1.75])
def test_amplitudes_match_weakfield(x2):
    g = (0.2, 0.2) if x2 in (1.0, 1.5) else (0.2, 0.1)
    arr = ideal_array([0.0, x2], list(g))
    case = TwoQubitCase.from_array(arr, rabi=0.01)
    cpl = build_couplings(arr)
    for d in (-1.5, -0.4, 0.0, 0.9):
        amp = weakfield_steady(arr, cpl, arr.probe(d, 0.01))
        cs, ca = case.amplitudes(d)
        assert abs(amp.c_s) == pytest.approx(abs(cs), rel=1e-10, abs=1e-15)
        assert abs(amp.c_a) == pytest.approx(abs(ca), rel=1e-10, abs=1e-15)


@pytest.mark.parametrize("pair", [(1.0, 1.5), (1.25, 1.75)])
def test_role_swap_gives_same_reflection(pair):
    d = np.linspace(-5, 5, 101)
    curves = []
    for x2 in pair:
        arr = ideal_array([0.0, x2], 0.2)
        case = TwoQubitCase.from_array(arr)
        full = scan(arr, d, 0.01, "full").r
        assert np.abs(full - case.r(d)).max() <= 1e-3
        curves.append(case.r(d))
    np.testing.assert_allclose(curves[0], curves[1], atol=1e-12)

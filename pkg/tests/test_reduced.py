import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mirrorlamb.analytic2q import r_node
from mirrorlamb.errors import ClassificationError, ConfigError
from mirrorlamb.model import ideal_array
from mirrorlamb.rddi import build_couplings
from mirrorlamb.reduced import (
    classify_and_group, predicted_splitting, reduced_spectrum, scheme_from_array,
)
from mirrorlamb.spectra import extract_features, scan

GRID = np.linspace(-6, 6, 1201)


def _projections(positions):
    """Full coupling matrices projected on the giant-atom states."""
    arr = ideal_array(positions)
    scheme = scheme_from_array(arr)
    c = build_couplings(arr)
    s = np.column_stack([scheme.collective_state(j) for j in range(len(scheme.groups))])
    return scheme, s.T @ c.gamma @ s, s.T @ c.delta @ s


def test_three_antinodes_single_group():
    s = classify_and_group([0.0, 1.0, 1.5])
    assert len(s.groups) == 1
    g = s.groups[0]
    assert g.kind == "antinode" and g.members == (0, 1, 2) and g.signs == (1, 1, -1)
    assert s.ket(0) == "(1/sqrt3)(|egg> + |geg> - |gge>)"
    # the collective state is bright with the full collective rate
    _, gam, _ = _projections([0.0, 1.0, 1.5])
    assert gam[0, 0] == pytest.approx(3.0, abs=1e-12)


def test_pair_is_identity_reduction():
    s = classify_and_group([0.0, 1.25])
    assert [g.tag + str(g.size) for g in s.groups] == ["A1", "B1"]
    assert s.exchange_matrix()[0, 1] == 1.0
    red = reduced_spectrum(s, [0.2, 0.1], 0.01, GRID)
    np.testing.assert_allclose(red.r, r_node(GRID, 1.0, 0.2, 0.1, 1.0), atol=1e-12)


def test_mirror_group_then_node():
    s, gam, dlt = _projections([0.0, 1.0, 2.0, 2.25])
    assert s.sizes == (3, 1)
    assert s.linewidths()[0] == pytest.approx(gam[0, 0], abs=1e-12)
    assert s.exchange_matrix()[0, 1] == pytest.approx(math.sqrt(3))
    assert dlt[0, 1] == pytest.approx(math.sqrt(3), abs=1e-12)
    assert "A1-B2 exchange 1.73205" in s.pretty()


def test_node_before_antinode_has_no_exchange():
    s, gam, dlt = _projections([0.25, 1.0])
    assert [g.kind for g in s.groups] == ["node", "antinode"]
    assert s.exchange_matrix()[0, 1] == 0.0
    assert abs(dlt[0, 1]) < 1e-12


on_grid = st.lists(st.integers(0, 12), min_size=1, max_size=8, unique=True)


@settings(max_examples=60, deadline=None)
@given(on_grid)
def test_effective_matrices_match_projections(quarters):
    xs = sorted(q / 4 for q in quarters)
    s, gam, dlt = _projections(xs)
    kinds = [g.kind for g in s.groups]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))  # alternation
    np.testing.assert_allclose(s.decay_matrix(), gam, atol=1e-12)
    np.testing.assert_allclose(s.exchange_matrix(), dlt, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(on_grid, st.sampled_from([0.0, 0.2]))
def test_reduction_fidelity(quarters, gphi):
    xs = sorted(q / 4 for q in quarters)
    arr = ideal_array(xs, gphi)
    grid = np.linspace(-6, 6, 241)
    red = reduced_spectrum(scheme_from_array(arr), gphi, 0.01, grid)
    full = scan(arr, grid, 0.01, "weakfield")
    assert np.abs(red.r - full.r).max() <= 1e-6


def test_reduction_fidelity_group_dephasing():
    xs = [0.0, 1.0, 2.0, 2.25, 2.75]
    deph = [0.3, 0.3, 0.3, 0.1, 0.1]
    arr = ideal_array(xs, deph)
    red = reduced_spectrum(scheme_from_array(arr), deph, 0.01, GRID)
    full = scan(arr, GRID, 0.01, "weakfield")
    assert np.abs(red.r - full.r).max() <= 1e-12


def test_mixed_dephasing_in_group_rejected():
    s = classify_and_group([0.0, 1.0, 1.25])
    with pytest.raises(ConfigError, match="mixes"):
        s.effective_matrix(0.0, [0.2, 0.1, 0.0])


def test_splitting_predictions():
    assert predicted_splitting(1, 1) == 2.0
    assert predicted_splitting(1, 5) == pytest.approx(2 * math.sqrt(5))
    assert predicted_splitting(3, 1) == pytest.approx(3.4641, abs=1e-4)
    with pytest.raises(ValueError):
        predicted_splitting(0, 2)


def test_six_qubit_scaling():
    # dephasing only on the mirror qubit keeps node modes visible
    xs = [0.0] + [1.25 + 0.5 * k for k in range(5)]
    arr = ideal_array(xs, [0.2] + [0.0] * 5)
    f = extract_features(scan(arr, GRID, 0.01, "weakfield"))
    assert f.delta_split == pytest.approx(2 * math.sqrt(5), rel=1e-2)


def test_off_grid_error_names_qubit():
    with pytest.raises(ClassificationError, match=r"qubit 2 at 1.755 lambda is 0.005 lambda"):
        classify_and_group([0.0, 1.755])


def test_snap():
    s = classify_and_group([0.0, 1.755], snap=True)
    assert s.positions == (0.0, 1.75)
    assert s.snapped == ((1, 1.755, 1.75),)
    assert "snapped qubit 2" in s.pretty()


def test_tolerance_boundary():
    classify_and_group([0.0, 1.25 + 5e-10])
    with pytest.raises(ClassificationError):
        classify_and_group([0.0, 1.25 + 1e-8])


def test_scheme_needs_identical_two_level_qubits():
    with pytest.raises(ConfigError):
        scheme_from_array(ideal_array([0.0, 1.25], levels=3))
    with pytest.raises(ConfigError):
        scheme_from_array(ideal_array([0.0, 1.25], detunings=[0.0, 0.1]))


def test_wavelength_scaling():
    s = classify_and_group([0.0, 2.5], lam=2.0)
    assert [g.kind for g in s.groups] == ["antinode", "node"]

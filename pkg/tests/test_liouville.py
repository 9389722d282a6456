import math
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mirrorlamb.config import load_config
from mirrorlamb.errors import ConfigError
from mirrorlamb.liouville import (
    HilbertSpace, NonLindbladWarning, build_effective_hamiltonian, build_master,
    build_master_multilevel, lindblad_min_eigenvalue, master_equation,
)
from mirrorlamb.model import QubitArray, QubitSpec, WaveguideSpec, ideal_array
from mirrorlamb.rddi import LevelCouplings, build_couplings, build_level_couplings
from mirrorlamb.solve import kernel_dimension, steady_state

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _random_rho(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


def _detuned_pair(eps=1e-3):
    w = 1000.0
    qs = (QubitSpec(w, 0.0, bare_decay=1.0, dephasing=(0.1,)),
          QubitSpec(w * (1 + eps), 1.3, bare_decay=1.2, dephasing=(0.3,)))
    return QubitArray(qs, WaveguideSpec(w / (2 * math.pi)))


def _generators():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonLindbladWarning)
        node = ideal_array([0.0, 1.25], [0.2, 0.1])
        det = _detuned_pair()
        three = ideal_array([0.0, 0.4, 1.7], 0.15)
        six = ideal_array([0.0, 0.25, 0.5, 1.0, 1.25, 1.6], 0.1)
        ml = ideal_array([0.0, 1.3], [(0.17, 0.28), (0.13, 0.25)], levels=3, anharmonicity=20.0)
        out = [build_master(a, build_couplings(a), a.probe(0.3, 0.2)) for a in (node, det, three, six)]
        out.append(build_master_multilevel(ml, build_level_couplings(ml), ml.probe(-0.4, 0.3)))
    return out


GENERATORS = _generators()


def test_sparse_above_threshold():
    assert not GENERATORS[0].is_sparse
    assert GENERATORS[3].is_sparse


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(GENERATORS))))
def test_trace_and_hermiticity_preserved(seed, which):
    sop = GENERATORS[which]
    rho = _random_rho(np.random.default_rng(seed), sop.dim)
    out = sop.apply(rho)
    norm = np.linalg.norm(rho)
    assert abs(np.trace(out)) <= 1e-12 * norm * sop.dim
    # L(rho^dagger) = (L rho)^dagger, here rho is Hermitian so L rho must be
    assert np.abs(out - out.conj().T).max() <= 1e-12 * norm * sop.dim
    # and for a non-Hermitian input
    rng = np.random.default_rng(seed + 1)
    x = rng.normal(size=(sop.dim, sop.dim)) + 1j * rng.normal(size=(sop.dim, sop.dim))
    np.testing.assert_allclose(sop.apply(x.conj().T), sop.apply(x).conj().T, atol=1e-12 * np.linalg.norm(x) * sop.dim)


def test_linearity():
    sop = GENERATORS[2]
    rng = np.random.default_rng(3)
    a, b = _random_rho(rng, sop.dim), _random_rho(rng, sop.dim)
    np.testing.assert_allclose(sop.apply(2 * a - 3j * b), 2 * sop.apply(a) - 3j * sop.apply(b), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 3.0), min_size=1, max_size=5))
def test_lindblad_form_identical_qubits(xs):
    c = build_couplings(ideal_array(xs))
    assert lindblad_min_eigenvalue(c.dissipator_coefficients()) >= -1e-12


def test_non_lindblad_reported():
    arr = _detuned_pair(-1e-3)
    with pytest.warns(NonLindbladWarning):
        me = master_equation(arr, build_couplings(arr))
    assert me.metadata["lindblad"] is False
    assert me.metadata["lindblad_min_eigenvalue"] < -1e-12


def test_identical_qubits_no_warning():
    arr = ideal_array([0.0, 1.3])
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonLindbladWarning)
        me = master_equation(arr, build_couplings(arr))
    assert me.metadata["lindblad"] is True


def test_single_undriven_qubit_relaxes_to_ground():
    arr = ideal_array([0.0])
    rho = steady_state(build_master(arr, build_couplings(arr), arr.probe(0.0, 0.0)))
    np.testing.assert_allclose(rho.data, [[1, 0], [0, 0]], atol=1e-12)


def test_basis_order():
    space = HilbertSpace((2, 3))
    assert space.dim == 6
    for k in range(6):
        assert space.index(space.levels(k)) == k
    # qubit 1 is the slowest index
    assert space.index((1, 0)) == 3


def test_antinode_dark_state_is_stationary():
    arr = ideal_array([0.0, 1.0])
    sop = build_master(arr, build_couplings(arr), arr.probe(0.0, 0.0))
    space = HilbertSpace(arr.dims)
    a = (space.basis((1, 0)) - space.basis((0, 1))) / math.sqrt(2)
    out = sop.apply(np.outer(a, a.conj()))
    assert np.abs(out).max() < 1e-13
    s = (space.basis((1, 0)) + space.basis((0, 1))) / math.sqrt(2)
    assert np.abs(sop.apply(np.outer(s, s.conj()))).max() > 1.0


def test_node_generator_single_excitation_block():
    g1, g2 = 0.2, 0.1
    arr = ideal_array([0.0, 1.25], [g1, g2])
    sop = build_master(arr, build_couplings(arr), arr.probe(0.0, 0.0))
    space = HilbertSpace(arr.dims)
    g = space.basis((0, 0))
    sites = [space.basis((1, 0)), space.basis((0, 1))]
    # L(|k><g|) = -i H_nh |k><g| on the single-excitation coherences
    m = np.zeros((2, 2), complex)
    for k in range(2):
        out = sop.apply(np.outer(sites[k], g))
        for j in range(2):
            m[j, k] = 1j * (sites[j] @ out @ g)
    u = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    msa = u.T @ m @ u
    gp, gm = (1 + g1 + g2) / 2, (1 + g1 - g2) / 2
    expected = np.array([[1 - 1j * gp, -1j * gm], [-1j * gm, -1 - 1j * gp]])
    np.testing.assert_allclose(msa, expected, atol=1e-13)


def test_multilevel_d2_equals_two_level():
    arr = _detuned_pair(2e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonLindbladWarning)
        probe = arr.probe(0.7, 0.3)
        a = build_master(arr, build_couplings(arr), probe).dense()
        b = build_master_multilevel(arr, build_level_couplings(arr), probe).dense()
    assert np.abs(a - b).max() <= 1e-12


@pytest.mark.filterwarnings("ignore::mirrorlamb.liouville.NonLindbladWarning")
def test_multilevel_restricted_to_qubit_subspace():
    arr2 = ideal_array([0.0, 1.3], 0.2)
    arr3 = ideal_array([0.0, 1.3], [(0.2, 0.4), (0.2, 0.5)], levels=3, anharmonicity=7.0)
    lc = build_level_couplings(arr3)
    g, d = lc.gamma.copy(), lc.delta.copy()
    g[1] = 0
    d[1] = 0
    lc0 = LevelCouplings(g, d, lc.gamma0, lc.omega)
    probe = arr2.probe(0.4, 0.3)
    l3 = build_master_multilevel(arr3, lc0, probe).dense()
    l2 = build_master(arr2, build_couplings(arr2), probe).dense()
    s3 = HilbertSpace((3, 3))
    keep = [s3.index((a, b)) for a in (0, 1) for b in (0, 1)]
    dim = 9
    idx = [r + c * dim for c in keep for r in keep]  # column stacking
    np.testing.assert_allclose(l3[np.ix_(idx, idx)], l2, atol=1e-12)


def _level2_population(alpha, rabi=0.1):
    arr = ideal_array([0.0, 1.25], 0.2, levels=3, anharmonicity=alpha, omega=1e4)
    rho = steady_state(build_master_multilevel(arr, build_level_couplings(arr), arr.probe(0.0, rabi)))
    space = HilbertSpace(arr.dims)
    return sum(rho.data[space.index(lv), space.index(lv)].real
               for lv in np.ndindex(3, 3) if 2 in lv)


def test_second_level_suppressed_by_anharmonicity():
    pops = [_level2_population(a) for a in (10.0, 100.0, 1000.0)]
    assert pops[0] > pops[1] > pops[2]
    assert pops[2] <= 1e-6


def test_transmon_configuration_builds_with_unique_steady_state():
    cfg = load_config(CONFIGS / "transmon_pair.json")
    arr = cfg.array
    with pytest.warns(NonLindbladWarning):
        sop = build_master_multilevel(arr, build_level_couplings(arr), arr.probe(0.0, 0.01))
    assert sop.dim == 9
    assert kernel_dimension(sop) == 1
    assert steady_state(sop).check()["ok"]


def test_dimension_mismatch():
    arr = ideal_array([0.0, 1.25])
    other = build_couplings(ideal_array([0.0]))
    with pytest.raises(ConfigError):
        build_master(arr, other, arr.probe(0.0, 0.01))
    with pytest.raises(ConfigError):
        build_master(ideal_array([0.0], levels=3), build_couplings(ideal_array([0.0])), arr.probe(0.0, 0.01))


def test_dump_triplets_round_trip(tmp_path):
    sop = GENERATORS[0]
    path = tmp_path / "gen.txt"
    sop.dump_triplets(path)
    rows = np.loadtxt(path, comments="#")
    n = sop.dim ** 2
    m = np.zeros((n, n), complex)
    m[rows[:, 0].astype(int), rows[:, 1].astype(int)] = rows[:, 2] + 1j * rows[:, 3]
    np.testing.assert_array_equal(m, sop.dense())


def test_effective_hamiltonian_antinode():
    arr = ideal_array([0.0, 1.0])
    h = build_effective_hamiltonian(arr, build_couplings(arr), arr.probe(0.0, 0.01), "antinode_antinode")
    assert h.labels == ("g", "s", "a")
    np.testing.assert_allclose(h.dissipative_part, np.diag([2.0, 0.0]), atol=1e-13)
    assert sorted(np.linalg.eigvalsh(h.dissipative_part)) == pytest.approx([0.0, 2.0], abs=1e-13)
    # only |s> is driven
    assert abs(h.drive[1]) < 1e-15


def test_effective_hamiltonian_dephased_linewidth():
    g = 0.3
    arr = ideal_array([0.0, 1.0], g)
    h = build_effective_hamiltonian(arr, build_couplings(arr), arr.probe(0.0, 0.01), "antinode_antinode")
    assert h.dissipative_part[0, 0].real == pytest.approx(2.0 + g)


def test_effective_hamiltonian_node_split():
    arr = ideal_array([0.0, 1.25])
    h = build_effective_hamiltonian(arr, build_couplings(arr), arr.probe(0.0, 0.01), "antinode_node")
    herm = 0.5 * (h.excited_block + h.excited_block.conj().T)
    e = np.linalg.eigvalsh(herm)
    assert e[1] - e[0] == pytest.approx(2.0, abs=1e-12)
    assert herm[0, 0].real == pytest.approx(1.0) and herm[1, 1].real == pytest.approx(-1.0)


def test_effective_hamiltonian_antiphase_swap():
    arr = ideal_array([0.0, 1.5])
    h = build_effective_hamiltonian(arr, build_couplings(arr), arr.probe(0.0, 0.01), "antinode_antiphase")
    np.testing.assert_allclose(h.dissipative_part, np.diag([0.0, 2.0]), atol=1e-13)


def test_effective_hamiltonian_case_mismatch():
    arr = ideal_array([0.0, 1.3])
    with pytest.raises(ConfigError):
        build_effective_hamiltonian(arr, build_couplings(arr), arr.probe(0.0, 0.01), "antinode_node")
    h = build_effective_hamiltonian(arr, build_couplings(arr), arr.probe(0.0, 0.01))
    assert h.matrix.shape == (3, 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 3.0), min_size=1, max_size=6), st.floats(0.0, 1.0))
def test_effective_dissipative_part_psd(xs, gphi):
    arr = ideal_array(xs, gphi)
    h = build_effective_hamiltonian(arr, build_couplings(arr), arr.probe(0.0, 0.01))
    assert np.linalg.eigvalsh(h.dissipative_part).min() >= -1e-12

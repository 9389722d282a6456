"""Master-equation generators and weak-field effective Hamiltonians.

Density matrices are vectorised by column stacking, ``vec(A rho B) =
(B^T kron A) vec(rho)``.  The tensor order is qubit 1 slowest.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .model import ProbeSpec, QubitArray, rabi_at
from .rddi import CouplingMatrices, LevelCouplings

__all__ = [
    "HilbertSpace",
    "Superoperator",
    "EffectiveHamiltonian",
    "NonLindbladWarning",
    "MasterEquation",
    "master_equation",
    "master_equation_multilevel",
    "build_master",
    "build_master_multilevel",
    "build_effective_hamiltonian",
    "lindblad_min_eigenvalue",
    "DENSE_MAX_DIM",
]

# largest Hilbert dimension for which generators are stored densely
DENSE_MAX_DIM = 32


class NonLindbladWarning(UserWarning):
    """Dissipator coefficient matrix is not positive semidefinite."""


@dataclass(frozen=True)
class HilbertSpace:
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or any(d < 2 for d in self.dims):
            raise ConfigError("every subsystem needs at least two levels")

    @property
    def n_qubits(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def index(self, levels) -> int:
        return int(np.ravel_multi_index(tuple(levels), self.dims))

    def levels(self, index: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(index, self.dims))

    def basis(self, levels) -> np.ndarray:
        v = np.zeros(self.dim, complex)
        v[self.index(levels)] = 1.0
        return v

    def embed(self, i: int, local) -> sp.csr_matrix:
        """Operator ``local`` acting on subsystem ``i``."""
        left = math.prod(self.dims[:i])
        right = math.prod(self.dims[i + 1 :])
        op = sp.csr_matrix(local)
        return sp.kron(sp.kron(sp.identity(left, format="csr"), op), sp.identity(right), format="csr")

    def jump(self, i: int, m: int, n: int) -> sp.csr_matrix:
        """``|m><n|`` on subsystem ``i``."""
        return _jump(self, i, m, n).copy()


@functools.lru_cache(maxsize=4096)
def _jump(space: HilbertSpace, i: int, m: int, n: int) -> sp.csr_matrix:
    local = np.zeros((space.dims[i], space.dims[i]))
    local[m, n] = 1.0
    return space.embed(i, local)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Vectorised generator ``d vec(rho)/dt = L vec(rho)``."""

    matrix: Any  # ndarray (dense) or scipy.sparse.csr_matrix
    space: HilbertSpace
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, complex)
        v = self.matrix @ rho.reshape(-1, order="F")
        return np.asarray(v).reshape(self.dim, self.dim, order="F")

    def dump_triplets(self, path) -> None:
        """Write non-zero entries as ``row col re im`` lines."""
        coo = sp.coo_matrix(self.matrix)
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# dim {self.dim ** 2} nnz {coo.nnz}\n")
            for k in order:
                v = coo.data[k]
                fh.write(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}\n")


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    """Non-Hermitian Hamiltonian on ground + single-excitation states.

    Row/column 0 is the collective ground state; the drive couples it to the
    excited states through ``matrix[0, k] = matrix[k, 0]``.
    """

    matrix: np.ndarray
    labels: tuple[str, ...]

    @property
    def excited_block(self) -> np.ndarray:
        return self.matrix[1:, 1:]

    @property
    def drive(self) -> np.ndarray:
        return self.matrix[1:, 0]

    @property
    def dissipative_part(self) -> np.ndarray:
        """``-(H - H^dagger) / 2i``, the decay-rate matrix of the excited block."""
        h = self.excited_block
        return -(h - h.conj().T) / 2j


def lindblad_min_eigenvalue(coeff: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian dissipator coefficient matrix."""
    herm = 0.5 * (coeff + coeff.conj().T)
    return float(np.linalg.eigvalsh(herm).min())


def _lindblad_check(coeff: np.ndarray, metadata: dict) -> None:
    lam = lindblad_min_eigenvalue(coeff)
    metadata["lindblad_min_eigenvalue"] = lam
    metadata["lindblad"] = lam >= -1e-12
    if lam < -1e-12:
        warnings.warn(
            f"dissipator coefficients are not positive semidefinite "
            f"(min eigenvalue {lam:.3e}): generator is not of Lindblad form",
            NonLindbladWarning,
            stacklevel=3,
        )


def _kron(a, b, dense):
    if dense:
        return np.kron(a, b)
    return sp.kron(a, b, format="csr")


def _commutator(op, eye, dense):
    """Superoperator of ``rho -> -i [op, rho]`` for Hermitian ``op``."""
    return -1j * (_kron(eye, op, dense) - _kron(op.T, eye, dense))


class MasterEquation:
    """Generator split into a probe-independent part and probe terms.

    ``generator(probe)`` adds the detuning and drive commutators to the
    cached static part (exchange, collective dissipators, dephasing), which
    keeps detuning scans cheap.
    """

    def __init__(self, array: QubitArray, space: HilbertSpace, static_h, lower, coeff, dephasing,
                 level_terms, metadata: dict):
        self.array = array
        self.space = space
        self.dense = space.dim <= DENSE_MAX_DIM
        dense = self.dense
        d = space.dim
        conv = (lambda m: sp.csr_matrix(m).toarray()) if dense else (lambda m: sp.csr_matrix(m))
        eye = np.eye(d) if dense else sp.identity(d, format="csr")
        h = conv(sp.csr_matrix(static_h, dtype=complex))
        gen = -1j * _kron(eye, h, dense) + 1j * _kron(h.conj(), eye, dense)
        low = [conv(op) for op in lower]
        for a, aa in enumerate(low):
            for b, ab in enumerate(low):
                c = coeff[a, b]
                if c != 0:
                    gen = gen + 2.0 * c * _kron(aa.conj(), ab, dense)
        for rate, proj in dephasing:
            if rate != 0:
                pr = conv(proj)
                gen = gen + rate * (2.0 * _kron(pr, pr, dense) - _kron(eye, pr, dense) - _kron(pr, eye, dense))
        self.static = gen
        # (qubit, level, [P_n, .], [sqrt(n) (s+ + s-), .])
        self.level_terms = [
            (i, n, _commutator(conv(proj), eye, dense), _commutator(conv(x), eye, dense))
            for i, n, proj, x in level_terms
        ]
        self.metadata = metadata

    def generator(self, probe: ProbeSpec) -> Superoperator:
        drive = _drive_amplitudes(self.array, probe)
        gen = self.static.copy()
        for i, n, s_proj, s_drive in self.level_terms:
            q = self.array.qubits[i]
            # H contains -delta_n P_n - Omega_i sqrt(n) (s+ + s-)
            gen = gen - (n * probe.omega_p - q.level_energy(n)) * s_proj
            if drive[i] != 0:
                gen = gen - drive[i] * s_drive
        if not self.dense:
            gen = sp.csr_matrix(gen)
            gen.eliminate_zeros()
        return Superoperator(gen, self.space, dict(self.metadata, probe=probe))


# standing-wave factors below this are round-off at a node
NODE_EPS = 1e-12


def _drive_amplitudes(array: QubitArray, probe: ProbeSpec) -> np.ndarray:
    c = np.cos(probe.k_p * array.positions)
    c[np.abs(c) < NODE_EPS] = 0.0
    return np.array([rabi_at(i, probe, array) for i in range(array.n)]) * c


def master_equation(array: QubitArray, couplings: CouplingMatrices) -> MasterEquation:
    """Probe-independent part of the two-level master equation."""
    if any(d != 2 for d in array.dims):
        raise ConfigError("build_master needs two-level qubits; use build_master_multilevel")
    if couplings.n != array.n:
        raise ConfigError(f"couplings are {couplings.n}x{couplings.n} but the array has {array.n} qubits")
    space = HilbertSpace(array.dims)
    n = array.n
    lower = [space.jump(i, 0, 1) for i in range(n)]
    raise_ = [op.T.tocsr() for op in lower]
    ee = [space.jump(i, 1, 1) for i in range(n)]
    exch = couplings.exchange_coefficients()
    coeff = couplings.dissipator_coefficients()
    h = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            # h_eff gets (Delta+ - i gamma-) - i (gamma+ + i Delta-) = Delta - i gamma
            w = exch[i, j] - 1j * coeff[i, j]
            if w != 0:
                h = h + w * (raise_[i] @ lower[j])
    dephasing = [(q.dephasing_rate(1), ee[i]) for i, q in enumerate(array.qubits)]
    terms = [(i, 1, ee[i], raise_[i] + lower[i]) for i in range(n)]
    metadata = {"kind": "two-level", "couplings": couplings}
    _lindblad_check(coeff, metadata)
    return MasterEquation(array, space, h, lower, coeff, dephasing, terms, metadata)


def build_master(array: QubitArray, couplings: CouplingMatrices, probe: ProbeSpec) -> Superoperator:
    """Generator of the two-level master equation.

    Terms: detuning ``i delta_i [s+_i s-_i, rho]``; exchange
    ``-i (Delta+_ij - i gamma-_ij) [s+_i s-_j, rho]`` (i = j included);
    drive ``i Omega_i cos(k_p x_i) [s+_i + s-_i, rho]``; collective
    dissipators ``(gamma+_ij + i Delta-_ij) L_ij``; pure dephasing
    ``gamma_i^phi L_i^phi``.
    """
    return master_equation(array, couplings).generator(probe)


def master_equation_multilevel(array: QubitArray, level_couplings: LevelCouplings) -> MasterEquation:
    """Probe-independent part of the multi-level master equation."""
    lc = level_couplings
    if lc.gamma.shape[1] != array.n:
        raise ConfigError("level couplings do not match the array size")
    if lc.n_transitions < max(array.dims) - 1:
        raise ConfigError("level couplings have fewer transitions than the array needs")
    space = HilbertSpace(array.dims)
    index = [(i, n) for i, q in enumerate(array.qubits) for n in range(1, q.levels)]
    lower = [space.jump(i, n - 1, n) for i, n in index]
    raise_ = [op.T.tocsr() for op in lower]

    dephasing = []
    terms = []
    for a, (i, n) in enumerate(index):
        proj = space.jump(i, n, n)
        dephasing.append((array.qubits[i].dephasing_rate(n), proj))
        terms.append((i, n, proj, math.sqrt(n) * (raise_[a] + lower[a])))

    size = len(index)
    exch = np.zeros((size, size), complex)
    coeff = np.zeros((size, size), complex)
    g, d = lc.gamma, lc.delta
    for a, (i, n) in enumerate(index):
        for b, (j, m) in enumerate(index):
            s = math.sqrt(n * m)
            exch[a, b] = s * 0.5 * ((d[m - 1, i, j] + d[n - 1, j, i]) - 1j * (g[m - 1, i, j] - g[n - 1, j, i]))
            coeff[a, b] = s * 0.5 * ((g[m - 1, i, j] + g[n - 1, j, i]) + 1j * (d[m - 1, i, j] - d[n - 1, j, i]))
    h = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for a in range(size):
        for b in range(size):
            w = exch[a, b] - 1j * coeff[a, b]
            if w != 0:
                h = h + w * (raise_[a] @ lower[b])
    metadata = {"kind": "multilevel", "level_couplings": lc, "transitions": index}
    _lindblad_check(coeff, metadata)
    return MasterEquation(array, space, h, lower, coeff, dephasing, terms, metadata)


def build_master_multilevel(array: QubitArray, level_couplings: LevelCouplings, probe: ProbeSpec) -> Superoperator:
    """Generator of the multi-level transmon master equation.

    Level ``n`` of qubit i rotates at ``delta_n^i = n omega_p - E_n^i`` with
    ``E_n = n omega - n(n-1) alpha / 2``; the drive is
    ``sqrt(n) Omega_i cos(k_p x_i)`` on every ladder transition.
    Cross-transition terms pair the |n-1> -> |n> transition of qubit i with
    the |m-1> -> |m> transition of qubit j (both scaled by sqrt(n m)):

    exchange   ``[(Delta_ij,m + Delta_ji,n) - i (gamma_ij,m - gamma_ji,n)] / 2``
    dissipator ``[(gamma_ij,m + gamma_ji,n) + i (Delta_ij,m - Delta_ji,n)] / 2``.

    Each excited level ``n`` dephases at ``gamma_{i,n}^phi``.
    """
    return master_equation_multilevel(array, level_couplings).generator(probe)


_CASE_OFFSETS = {
    "antinode_antinode": 0.0,
    "antinode_antiphase": 0.5,
    "antinode_node": 0.25,
    "antinode_node_antiphase": 0.75,
}


def _site_matrix(array: QubitArray, couplings: CouplingMatrices, probe: ProbeSpec) -> np.ndarray:
    n = array.n
    m = np.zeros((n + 1, n + 1), complex)
    block = couplings.delta - 1j * couplings.gamma
    for i, q in enumerate(array.qubits):
        block[i, i] += -(probe.omega_p - q.omega) - 1j * q.dephasing_rate(1)
    m[1:, 1:] = block
    drive = _drive_amplitudes(array, probe)
    m[0, 1:] = -drive
    m[1:, 0] = -drive
    return m


def build_effective_hamiltonian(
    array: QubitArray, couplings: CouplingMatrices, probe: ProbeSpec, case: str = "general"
) -> EffectiveHamiltonian:
    """Weak-field effective Hamiltonian (units of hbar).

    ``case="general"`` returns the site basis ``[g, e_1, ..., e_N]``.  The
    two-qubit labels (``antinode_antinode``, ``antinode_node`` and their
    ``_antiphase`` variants) return the ``[g, s, a]`` basis with
    ``s = (e_1 + e_2)/sqrt 2`` and ``a = (e_1 - e_2)/sqrt 2`` after checking
    that the positions match the label.
    """
    m = _site_matrix(array, couplings, probe)
    if case == "general":
        return EffectiveHamiltonian(m, ("g",) + tuple(f"e{i + 1}" for i in range(array.n)))
    if case not in _CASE_OFFSETS:
        raise ConfigError(f"unknown case {case!r}")
    if array.n != 2:
        raise ConfigError(f"case {case!r} needs exactly two qubits")
    x = array.positions / array.lambda_ref
    tol = 1e-6
    off1 = abs(x[0] - round(x[0]))
    frac2 = x[1] - math.floor(x[1])
    off2 = min(abs(frac2 - _CASE_OFFSETS[case]), abs(frac2 - _CASE_OFFSETS[case] - 1.0),
               abs(frac2 - _CASE_OFFSETS[case] + 1.0))
    if off1 > tol or off2 > tol:
        raise ConfigError(
            f"positions {x.tolist()} (in lambda) inconsistent with case {case!r}"
        )
    u = np.zeros((3, 3))
    u[0, 0] = 1.0
    r2 = 1.0 / math.sqrt(2.0)
    u[1:, 1:] = [[r2, r2], [r2, -r2]]  # columns: s, a in the site basis
    return EffectiveHamiltonian(u.T @ m @ u, ("g", "s", "a"))

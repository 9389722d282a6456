"""Steady states, time evolution and the weak-field linear solver."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import DegeneracyError, SingularityError, SolverError, StiffnessError
from .liouville import HilbertSpace, Superoperator, _site_matrix
from .model import ProbeSpec, QubitArray
from .rddi import CouplingMatrices

__all__ = [
    "DensityMatrix",
    "AmplitudeVector",
    "Trajectory",
    "kernel_dimension",
    "steady_state",
    "evolve",
    "weakfield_steady",
]

# generators up to this size also get an SVD kernel check
_SVD_MAX = 1024


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    data: np.ndarray
    space: HilbertSpace

    @classmethod
    def from_vector(cls, vec, space: HilbertSpace) -> "DensityMatrix":
        rho = np.asarray(vec, complex).reshape(space.dim, space.dim, order="F")
        rho = 0.5 * (rho + rho.conj().T)
        return cls(rho / np.trace(rho).real, space)

    @classmethod
    def pure(cls, state, space: HilbertSpace) -> "DensityMatrix":
        psi = np.asarray(state, complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), space)

    def vector(self) -> np.ndarray:
        return self.data.reshape(-1, order="F")

    def expect(self, op) -> complex:
        return complex(np.trace(np.asarray(op @ self.data)))

    def coherence(self, i: int, n: int = 1) -> complex:
        """``<sigma^i_{n-1,n}> = Tr(|n-1><n|_i rho)``."""
        op = self.space.jump(i, n - 1, n).tocoo()
        # Tr(|a><b| rho) = rho[b, a] summed over the embedded pairs
        return complex(np.sum(op.data * self.data[op.col, op.row]))

    def population(self, state) -> float:
        psi = np.asarray(state, complex)
        return float(np.real(psi.conj() @ self.data @ psi))

    def check(self, herm_tol=1e-12, trace_tol=1e-12, pos_tol=1e-8) -> dict:
        """Hermiticity, trace and positivity diagnostics."""
        herm = float(np.abs(self.data - self.data.conj().T).max())
        tr = abs(np.trace(self.data) - 1.0)
        lam = float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)).min())
        return {
            "hermiticity": herm,
            "trace_error": tr,
            "min_eigenvalue": lam,
            "ok": herm <= herm_tol and tr <= trace_tol and lam >= -pos_tol,
        }


@dataclass(frozen=True, eq=False)
class AmplitudeVector:
    """Weak-field amplitudes; ``sites[i]`` equals ``<sigma_i^->``."""

    c_g: complex
    sites: np.ndarray

    @property
    def c_s(self) -> complex:
        self._need_two()
        return (self.sites[0] + self.sites[1]) / math.sqrt(2.0)

    @property
    def c_a(self) -> complex:
        self._need_two()
        return (self.sites[0] - self.sites[1]) / math.sqrt(2.0)

    def _need_two(self):
        if self.sites.size != 2:
            raise ValueError("symmetric/antisymmetric amplitudes need two qubits")


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: list

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def _norm(mat) -> float:
    return float(spla.norm(mat)) if sp.issparse(mat) else float(np.linalg.norm(mat))


def _shift(mat) -> float:
    return 1e-9 * _norm(mat) / math.sqrt(mat.shape[0])


def _shifted_lu(mat, shift):
    return spla.splu((mat - shift * sp.identity(mat.shape[0], format="csc")).tocsc())


def _sparse_kernel_dim(mat, lu, shift, rtol) -> int:
    n = mat.shape[0]
    op = spla.LinearOperator((n, n), matvec=lu.solve, dtype=complex)
    vals = spla.eigs(mat, k=min(4, n - 2), sigma=shift, OPinv=op, which="LM", return_eigenvectors=False)
    return int(np.count_nonzero(np.abs(vals) <= rtol * _norm(mat)))


def kernel_dimension(sop: Superoperator, rtol: float = 1e-10) -> int:
    """Number of (numerically) zero modes of the generator."""
    if sop.is_sparse or sop.matrix.shape[0] > _SVD_MAX:
        mat = sp.csc_matrix(sop.matrix)
        shift = _shift(mat)
        return _sparse_kernel_dim(mat, _shifted_lu(mat, shift), shift, rtol)
    s = np.linalg.svd(sop.matrix, compute_uv=False)
    return int(np.count_nonzero(s <= rtol * s[0]))


def _trace_row(dim: int) -> np.ndarray:
    row = np.zeros(dim * dim, complex)
    row[np.arange(dim) * (dim + 1)] = 1.0
    return row


def steady_state(sop: Superoperator, check_kernel: bool = True, tol: float = 1e-10) -> DensityMatrix:
    """Unique stationary state ``L rho = 0`` with ``tr rho = 1``.

    Dense generators are solved by LU after replacing the (redundant)
    equation for ``rho_00`` with the trace condition.  Sparse generators use
    shifted inverse iteration on a sparse LU factorisation, which also
    serves the kernel check.
    """
    dim = sop.dim
    if sop.is_sparse:
        mat = sp.csc_matrix(sop.matrix)
        shift = _shift(mat)
        lu = _shifted_lu(mat, shift)
        if check_kernel:
            kd = _sparse_kernel_dim(mat, lu, shift, 1e-10)
            if kd != 1:
                raise DegeneracyError(kd)
        vec = _inverse_iteration(mat, lu, tol)
    else:
        if check_kernel:
            kd = kernel_dimension(sop)
            if kd != 1:
                raise DegeneracyError(kd)
        a = np.array(sop.matrix, complex)
        a[0, :] = _trace_row(dim)
        rhs = np.zeros(dim * dim, complex)
        rhs[0] = 1.0
        try:
            vec = la.solve(a, rhs)
        except la.LinAlgError as exc:
            raise DegeneracyError(kernel_dimension(sop), f"steady-state system singular: {exc}") from exc
    rho = DensityMatrix.from_vector(vec, sop.space)
    resid = np.linalg.norm(sop.matrix @ rho.vector())
    if resid > tol * _norm(sop.matrix):
        raise SolverError(f"steady-state residual {resid:.3e} exceeds {tol:g} * ||L||")
    return rho


def _inverse_iteration(mat, lu, tol, maxiter=50):
    n = mat.shape[0]
    dim = int(round(math.sqrt(n)))
    scale = _norm(mat)
    v = np.zeros(n, complex)
    v[0] = 1.0  # ground state projector as a start
    v += _trace_row(dim) / dim
    for _ in range(maxiter):
        v = lu.solve(v)
        v /= np.linalg.norm(v)
        if np.linalg.norm(mat @ v) <= 0.1 * tol * scale / math.sqrt(dim):
            break
    tr = _trace_row(dim) @ v
    if abs(tr) == 0:
        raise SolverError("inverse iteration converged to a traceless mode")
    return v / tr


def evolve(sop: Superoperator, rho0: DensityMatrix, t_final: float, tol: float = 1e-8, t_eval=None) -> Trajectory:
    """Integrate ``d rho/dt = L rho`` with the Dormand-Prince 5(4) pair."""
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    mat = sop.matrix

    def rhs(_t, y):
        return mat @ y

    sol = solve_ivp(
        rhs, (0.0, t_final), rho0.vector().astype(complex), method="RK45",
        rtol=tol, atol=tol, t_eval=t_eval,
    )
    if sol.status < 0:
        if "step size" in sol.message.lower():
            raise StiffnessError(f"{sol.message}; the generator is stiff, use steady_state instead")
        raise SolverError(sol.message)
    states = []
    trace_row = _trace_row(sop.dim)
    drift = 0.0
    tr0 = trace_row @ rho0.vector()
    for k in range(sol.y.shape[1]):
        y = sol.y[:, k]
        drift = max(drift, abs(trace_row @ y - tr0))
        rho = y.reshape(sop.dim, sop.dim, order="F")
        states.append(DensityMatrix(rho, sop.space))
    if drift > 10 * tol:
        raise SolverError(f"trace drift {drift:.3e} exceeds 10 * tol")
    return Trajectory(np.asarray(sol.t), states)


def weakfield_steady(array: QubitArray, couplings: CouplingMatrices, probe: ProbeSpec) -> AmplitudeVector:
    """Linear-response steady state in the single-excitation manifold.

    Solves ``M c = Omega`` where ``M = -delta_i + Delta_ij - i gamma_ij -
    i gamma_i^phi`` is the excited block of the effective Hamiltonian and
    ``Omega_i = Omega_p^i cos(k_p x_i)``.  The doubly excited states are
    dropped, so the amplitudes are exact to first order in the drive.
    """
    gamma_ref = array.qubits[array.reference].bare_decay
    if probe.rabi > 0.05 * gamma_ref:
        warnings.warn(
            f"probe Rabi frequency {probe.rabi:.3g} exceeds 0.05 gamma0; "
            "weak-field amplitudes may be inaccurate",
            stacklevel=2,
        )
    m = _site_matrix(array, couplings, probe)
    block = m[1:, 1:]
    rhs = -m[1:, 0]
    c = _solve_driven(block, rhs)
    return AmplitudeVector(1.0 + 0j, c)


def _krylov_basis(a, b, scale, rtol=1e-10):
    """Orthonormal basis of span{b, a b, a^2 b, ...} (Arnoldi, reorthogonalised)."""
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros((a.shape[0], 0), complex)
    q = [b / nb]
    for _ in range(a.shape[0] - 1):
        w = a @ q[-1]
        for _pass in range(2):
            for v in q:
                w = w - (v.conj() @ w) * v
        nw = np.linalg.norm(w)
        if nw <= rtol * scale:
            break
        q.append(w / nw)
    return np.column_stack(q)


def _solve_driven(block, rhs, scale=None, rtol=1e-13):
    """Solve ``block c = rhs`` on the part of the space the drive reaches.

    Modes the drive cannot reach (exactly dark, e.g. zero-linewidth node
    combinations) keep zero amplitude instead of making the system
    singular; the restricted system must itself be regular.  Singular
    values below ``rtol * scale`` count as zero, ``scale`` defaulting to
    ``max(|block|, 1)``.
    """
    block = np.asarray(block, complex)
    if scale is None:
        scale = max(float(np.abs(block).max()), 1.0)
    if np.linalg.svd(block, compute_uv=False)[-1] > rtol * scale:
        return la.solve(block, rhs)
    q = _krylov_basis(block, rhs, scale)
    if q.shape[1] == 0:
        return np.zeros(block.shape[0], complex)
    h = q.conj().T @ block @ q
    if np.linalg.svd(h, compute_uv=False)[-1] <= rtol * scale:
        raise SingularityError("weak-field system is singular: a driven mode has zero linewidth")
    return q @ la.solve(h, q.conj().T @ rhs)

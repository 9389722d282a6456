"""Mirror-modified dipole-dipole couplings.

The mirror at x = 0 adds an image of every qubit at -x, so each rate and
shift is the sum of a direct term (distance |x_i - x_j|) and an image term
(distance x_i + x_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResolutionError
from .model import QubitArray

__all__ = [
    "CouplingMatrices",
    "LevelCouplings",
    "gamma_ij",
    "delta_ij",
    "build_couplings",
    "build_level_couplings",
    "kk_check",
    "kk_grid",
]


def gamma_ij(xi, xj, kj, gamma0_ij):
    """Mutual (or, for i = j, spontaneous) decay rate."""
    return 0.5 * gamma0_ij * (np.cos(kj * (xi + xj)) + np.cos(kj * np.abs(xi - xj)))


def delta_ij(xi, xj, kj, gamma0_ij):
    """Exchange (or, for i = j, self) energy shift."""
    return 0.5 * gamma0_ij * (np.sin(kj * (xi + xj)) + np.sin(kj * np.abs(xi - xj)))


@dataclass(frozen=True)
class CouplingMatrices:
    """Decay and shift matrices of a two-level array.

    ``gamma[i, j]`` and ``delta[i, j]`` are evaluated at the wavenumber of
    qubit j, so they are not symmetric for non-identical qubits.
    """

    gamma: np.ndarray
    delta: np.ndarray
    gamma0: np.ndarray

    @property
    def n(self) -> int:
        return self.gamma.shape[0]

    @property
    def gamma_plus(self):
        return 0.5 * (self.gamma + self.gamma.T)

    @property
    def gamma_minus(self):
        return 0.5 * (self.gamma - self.gamma.T)

    @property
    def delta_plus(self):
        return 0.5 * (self.delta + self.delta.T)

    @property
    def delta_minus(self):
        return 0.5 * (self.delta - self.delta.T)

    def dissipator_coefficients(self) -> np.ndarray:
        """Hermitian matrix ``gamma_plus + i delta_minus`` multiplying L_ij."""
        return self.gamma_plus + 1j * self.delta_minus

    def exchange_coefficients(self) -> np.ndarray:
        """Hermitian matrix ``delta_plus - i gamma_minus`` of the exchange term."""
        return self.delta_plus - 1j * self.gamma_minus


@dataclass(frozen=True)
class LevelCouplings:
    """Per-transition coupling matrices of a transmon array.

    Index ``[n - 1, i, j]`` refers to the |n-1> -> |n> transition of qubit
    j.  Entries for transitions a qubit does not have are zero.
    """

    gamma: np.ndarray
    delta: np.ndarray
    gamma0: np.ndarray
    omega: np.ndarray  # [n - 1, j] transition frequencies

    @property
    def n_transitions(self) -> int:
        return self.gamma.shape[0]

    def level(self, n: int) -> CouplingMatrices:
        return CouplingMatrices(
            self.gamma[n - 1].copy(), self.delta[n - 1].copy(), self.gamma0[n - 1].copy()
        )


def _gamma0_matrix(array: QubitArray, omegas) -> np.ndarray:
    """``sqrt(gamma_i(w_j) gamma_j(w_j))`` for column frequencies ``omegas``."""
    n = array.n
    g0 = np.zeros((n, n))
    for j in range(n):
        rj = array.bare_rate(j, omegas[j])
        for i in range(n):
            g0[i, j] = np.sqrt(array.bare_rate(i, omegas[j]) * rj)
    return g0


def _assemble(array: QubitArray, omegas):
    x = array.positions
    k = np.asarray(array.waveguide.wavenumber(np.asarray(omegas, float)), float)
    g0 = _gamma0_matrix(array, omegas)
    xi, xj = x[:, None], x[None, :]
    kj = k[None, :]
    return gamma_ij(xi, xj, kj, g0), delta_ij(xi, xj, kj, g0), g0


def build_couplings(array: QubitArray) -> CouplingMatrices:
    """Coupling matrices for the fundamental transitions of ``array``."""
    omegas = [q.omega for q in array.qubits]
    gamma, delta, g0 = _assemble(array, omegas)
    return CouplingMatrices(gamma, delta, g0)


def build_level_couplings(array: QubitArray) -> LevelCouplings:
    """Coupling matrices for every transmon transition of ``array``.

    The |n-1> -> |n> transition of qubit j sits at ``omega_j - (n-1) alpha_j``.
    Matrix-element enhancements (sqrt(n)) are applied by the master-equation
    builder, not here.
    """
    n_tr = max(array.dims) - 1
    n = array.n
    gamma = np.zeros((n_tr, n, n))
    delta = np.zeros((n_tr, n, n))
    gamma0 = np.zeros((n_tr, n, n))
    omega = np.zeros((n_tr, n))
    for lvl in range(1, n_tr + 1):
        valid = np.array([lvl <= q.levels - 1 for q in array.qubits])
        w = np.array([q.transition_frequency(lvl) for q in array.qubits])
        bad = valid & (w <= 0)
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            raise DomainError(
                f"qubit {j + 1}: transition {lvl - 1}->{lvl} has non-positive "
                f"frequency {w[j]:.6g} (anharmonicity too large)"
            )
        # evaluate invalid columns at the fundamental frequency, then zero them
        w_eval = np.where(valid, w, [q.omega for q in array.qubits])
        g, d, g0 = _assemble(array, w_eval)
        mask = valid[None, :]
        gamma[lvl - 1] = np.where(mask, g, 0.0)
        delta[lvl - 1] = np.where(mask, d, 0.0)
        gamma0[lvl - 1] = np.where(mask, g0, 0.0)
        omega[lvl - 1] = np.where(valid, w, 0.0)
    return LevelCouplings(gamma, delta, gamma0, omega)


def kk_grid(omega_eval: float, period: float, periods: float = 40.0, points_per_period: int = 200):
    """Uniform grid centred on ``omega_eval`` spanning ``periods`` oscillations."""
    half = int(round(0.5 * periods * points_per_period))
    h = period / points_per_period
    return omega_eval + h * np.arange(-half, half + 1)


def _oscillation_period(omega, values):
    centred = values - values.mean()
    scale = np.abs(centred).max()
    if scale <= 1e-12 * max(np.abs(values).max(), 1e-300):
        return np.inf
    s = np.sign(centred[np.abs(centred) > 1e-9 * scale])
    crossings = np.count_nonzero(s[1:] != s[:-1])
    if crossings == 0:
        return np.inf
    return 2.0 * (omega[-1] - omega[0]) / crossings


def kk_check(omega, gamma_samples, omega_eval: float) -> float:
    """Reconstruct the shift at ``omega_eval`` from sampled decay rates.

    Evaluates ``(1/pi) P int gamma(w') / (omega_eval - w') dw'`` with the
    trapezoidal rule on a window truncated symmetrically around the
    singular point.  Subtracting ``gamma(omega_eval)`` removes the
    singularity (the principal value of ``1/(w - w')`` over a symmetric
    window vanishes); the node itself takes the limit ``-gamma'(omega_eval)``.

    Raises ResolutionError when the grid has fewer than 4 points per
    oscillation of the samples.
    """
    w = np.asarray(omega, float)
    f = np.asarray(gamma_samples, float)
    if w.ndim != 1 or w.shape != f.shape or w.size < 5:
        raise ValueError("omega and gamma_samples must be 1-D arrays of equal length >= 5")
    h = w[1] - w[0]
    if h <= 0 or not np.allclose(np.diff(w), h, rtol=1e-8, atol=0):
        raise ValueError("frequency grid must be uniform and increasing")
    c = int(round((omega_eval - w[0]) / h))
    if not 0 < c < w.size - 1 or abs(w[c] - omega_eval) > 1e-6 * h:
        raise ValueError("omega_eval must coincide with an interior grid point")
    m = min(c, w.size - 1 - c)
    w = w[c - m : c + m + 1]
    f = f[c - m : c + m + 1]
    period = _oscillation_period(w, f)
    if period / h < 4.0:
        raise ResolutionError(
            f"grid spacing {h:.4g} gives {period / h:.2f} points per oscillation (need >= 4)"
        )
    f0 = f[m]
    u = omega_eval - w
    integrand = np.empty_like(f)
    off = np.arange(f.size) != m
    integrand[off] = (f[off] - f0) / u[off]
    integrand[m] = -(f[m + 1] - f[m - 1]) / (2.0 * h)
    return float(np.trapezoid(integrand, w) / np.pi)

"""Closed-form weak-field results for two identical qubits.

Qubit 1 sits at the mirror-side antinode and qubit 2 either at another
antinode (x2 = lambda, or 1.5 lambda with the roles of |s> and |a>
swapped) or at a node (x2 = 1.25 lambda, or 1.75 lambda).  Rates are in
any common unit; ``delta`` is the probe detuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassificationError, ConfigError, ValidityError
from .model import QubitArray
from .rddi import build_couplings

__all__ = [
    "CASES",
    "TwoQubitCase",
    "r_antinode",
    "amplitudes_antinode",
    "amplitudes_node",
    "r_node",
    "dip_positions",
    "r_mid",
    "gamma_pm",
    "bias_factor",
]

# fractional part of x2 / lambda for each case (x1 on an integer multiple)
CASES = {
    "antinode_antinode": 0.0,
    "antinode_antiphase": 0.5,
    "antinode_node": 0.25,
    "antinode_node_antiphase": 0.75,
}


def gamma_pm(gamma0, gphi1, gphi2):
    """``((gamma0 + gphi1 + gphi2)/2, (gamma0 + gphi1 - gphi2)/2)``."""
    return 0.5 * (gamma0 + gphi1 + gphi2), 0.5 * (gamma0 + gphi1 - gphi2)


def r_antinode(delta, gamma0, gamma_phi):
    """Reflection for two qubits at antinodes with equal dephasing.

    The removable 0/0 at ``delta = gamma_phi = 0`` is filled with its limit,
    r = 1.
    """
    if np.any(np.asarray(gamma_phi) < 0):
        raise ValueError("gamma_phi must be >= 0")
    d = np.asarray(delta, float)
    g = np.broadcast_to(np.asarray(gamma_phi, float), d.shape)
    num = 4.0 * gamma0 * (g - 1j * d)
    den = 2 * gamma0 * g + g * g - d * d - 2j * d * (gamma0 + g)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.abs(1.0 - num / den)
    # continuous extension |1 - 4 gamma0 / (2 gamma0 + gamma_phi)| at the 0/0 point
    r = np.where((den == 0) & (num == 0), np.abs(1.0 - 4.0 * gamma0 / (2.0 * gamma0 + g)), r)
    return r if r.ndim else float(r)


def amplitudes_antinode(delta, gamma0, gamma_phi, omega_p):
    """``(c_s, c_a)`` in the antinode case; the antisymmetric state is dark."""
    d = np.asarray(delta, float)
    cs = -math.sqrt(2.0) * omega_p / (d + 1j * (2.0 * gamma0 + gamma_phi))
    return cs, np.zeros_like(cs)


def _node_den(delta, gamma0, gphi1, gphi2, delta12):
    gp, _ = gamma_pm(gamma0, gphi1, gphi2)
    d = np.asarray(delta, float)
    return (gamma0 + gphi1) * gphi2 - (d * d - delta12 * delta12) - 2j * d * gp


def amplitudes_node(delta, gamma0, gphi1, gphi2, delta12, omega_p):
    """Symmetric and antisymmetric amplitudes in the node case."""
    d = np.asarray(delta, float)
    den = _node_den(d, gamma0, gphi1, gphi2, delta12)
    pre = 1j * omega_p / math.sqrt(2.0)
    cs = pre * (gphi2 - 1j * (d + delta12)) / den
    ca = pre * (gphi2 - 1j * (d - delta12)) / den
    return cs, ca


def r_node(delta, gamma0, gphi1, gphi2, delta12):
    """Reflection with qubit 2 at a node."""
    d = np.asarray(delta, float)
    den = _node_den(d, gamma0, gphi1, gphi2, delta12)
    r = np.abs(1.0 - 2.0 * gamma0 * (gphi2 - 1j * d) / den)
    return r if r.ndim else float(r)


def dip_positions(gamma0, gphi1, gphi2, delta12):
    """First-order dip positions ``(delta_-, delta_+)`` of the node case.

    Only meaningful for ``gphi2 << gphi1``.
    """
    if gphi2 == 0:
        return -abs(delta12), abs(delta12)
    if gphi1 == 0:
        raise ValidityError("dip expansion needs gphi1 > 0 when gphi2 > 0")
    corr = (gamma0**2 - gphi1**2) / (4.0 * delta12**2) * (gphi2 / gphi1)
    dp = abs(delta12) * (1.0 - corr)
    return -dp, dp


def r_mid(gamma11, gphi1, gphi2, delta12):
    """Reflection at zero detuning in the node case."""
    return 1.0 - 2.0 * gamma11 * gphi2 / ((gamma11 + gphi1) * gphi2 + delta12**2)


def bias_factor(gphi1, gphi2, delta12):
    """Ratio of the dephasing read off ``r_mid`` (with ``gamma11 = gamma0``
    neglected against ``Delta12``) to the true one: ``D^2 / (D^2 + g1 g2)``."""
    return delta12**2 / (delta12**2 + gphi1 * gphi2)


@dataclass(frozen=True)
class TwoQubitCase:
    case: str
    gamma0: float
    gphi1: float
    gphi2: float
    delta12: float
    rabi: float = 0.01

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {sorted(CASES)}")
        for name in ("gamma0", "gphi1", "gphi2", "rabi"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def is_node(self) -> bool:
        return self.case in ("antinode_node", "antinode_node_antiphase")

    @classmethod
    def from_array(cls, array: QubitArray, rabi: float = 0.01, tol: float = 1e-6) -> "TwoQubitCase":
        """Classify a two-qubit array into one of the closed-form cases.

        Raises ClassificationError when the geometry or the qubits do not
        fit (non-identical qubits, transmon levels, off-grid positions).
        """
        if array.n != 2:
            raise ClassificationError(f"closed forms need two qubits, got {array.n}")
        q1, q2 = array.qubits
        if q1.levels != 2 or q2.levels != 2:
            raise ClassificationError("closed forms are for two-level qubits")
        if not (math.isclose(q1.omega, q2.omega, rel_tol=1e-12)
                and math.isclose(q1.bare_decay, q2.bare_decay, rel_tol=1e-12)):
            raise ClassificationError("closed forms need identical qubits")
        x = array.positions / array.lambda_ref
        if abs(x[0] - round(x[0])) > tol:
            raise ClassificationError(f"qubit 1 at {x[0]:.9g} lambda is not on a full-wavelength antinode")
        frac = (x[1] - x[0]) % 1.0
        case = None
        for name, off in CASES.items():
            dist = min(abs(frac - off), abs(frac - off - 1.0))
            if dist <= tol:
                case = name
        if case is None:
            raise ClassificationError(f"qubit 2 at {x[1]:.9g} lambda matches no closed-form case")
        g0 = q1.bare_decay
        cpl = build_couplings(array)
        return cls(case, g0, q1.dephasing_rate(1), q2.dephasing_rate(1), float(cpl.delta[0, 1]), rabi)

    def r(self, delta):
        if self.is_node:
            return r_node(delta, self.gamma0, self.gphi1, self.gphi2, self.delta12)
        if not math.isclose(self.gphi1, self.gphi2, rel_tol=1e-12, abs_tol=1e-15):
            raise ValidityError("antinode closed form needs equal dephasing on both qubits")
        return r_antinode(delta, self.gamma0, self.gphi1)

    def amplitudes(self, delta):
        """``(c_s, c_a)``; the antiphase cases return them swapped."""
        if self.is_node:
            cs, ca = amplitudes_node(delta, self.gamma0, self.gphi1, self.gphi2, abs(self.delta12), self.rabi)
        else:
            self.r(0.0)  # dephasing check
            cs, ca = amplitudes_antinode(delta, self.gamma0, self.gphi1, self.rabi)
        if self.case.endswith("antiphase"):
            return ca, cs
        return cs, ca

    def dips(self):
        if not self.is_node:
            raise ValidityError("dip positions are defined for the node cases")
        return dip_positions(self.gamma0, self.gphi1, self.gphi2, self.delta12)

    def r_mid(self) -> float:
        if not self.is_node:
            return float(self.r(0.0))
        return r_mid(self.gamma0, self.gphi1, self.gphi2, self.delta12)

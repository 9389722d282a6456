"""Physical parameters of a qubit array in front of a mirror.

Internal calculations use a unit system in which the bare decay rate of a
reference qubit is 1 and lengths are measured in the reference wavelength
``lambda_ref = 2*pi*v/omega_ref``.  Frequencies are kept absolute (in units
of the reference rate); probe detunings are measured from ``omega_ref``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import constants

from .errors import ConfigError, DomainError

__all__ = [
    "TransmonParams",
    "QubitSpec",
    "WaveguideSpec",
    "ProbeSpec",
    "UnitScale",
    "QubitArray",
    "coupling_strength",
    "eta",
    "rabi_at",
    "to_internal_units",
    "from_internal_units",
    "ideal_array",
]

# default absolute frequency (in units of gamma0) for idealised arrays
IDEAL_OMEGA = 1000.0


@dataclass(frozen=True)
class TransmonParams:
    """Circuit parameters entering the photon-qubit coupling.

    ``ej`` and ``ec`` only enter through their ratio, so any common energy
    unit works.  ``z0`` is the line impedance in ohm.
    """

    beta: float
    ej: float
    ec: float
    z0: float = 50.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if self.ej <= 0 or self.ec <= 0:
            raise ConfigError("ej and ec must be positive")
        if self.z0 <= 0:
            raise ConfigError("z0 must be positive")
        if self.ej / self.ec <= 1.0:
            warnings.warn(
                f"ej/ec = {self.ej / self.ec:.3g} is outside the transmon regime",
                stacklevel=3,
            )

    @property
    def charge_factor(self) -> float:
        """``beta * (E_J / 8 E_C)**(1/4)``; the Q factor is sqrt(2) e times this."""
        return self.beta * (self.ej / (8.0 * self.ec)) ** 0.25


def coupling_strength(circuit: TransmonParams, omega: float) -> float:
    """Photon-qubit coupling density g(omega) of a transmon, in SI units.

    ``pi * g**2`` is the bare decay rate in rad/s at angular frequency
    ``omega``.
    """
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    return (
        constants.e
        * circuit.charge_factor
        * math.sqrt(2.0 * circuit.z0 * omega / (math.pi * constants.hbar))
    )


@dataclass(frozen=True)
class QubitSpec:
    """One transmon of the array.

    Parameters
    ----------
    omega : float
        Angular frequency of the fundamental |0> -> |1> transition.
    position : float
        Distance from the mirror (the mirror sits at x = 0).
    bare_decay : float
        Bare decay rate ``pi g(omega)**2`` of the fundamental transition.
        Computed from ``circuit`` when omitted.
    dephasing : sequence of float
        Pure-dephasing rate for each excited level ``n = 1, 2, ...``.
        Missing upper-level entries default to the last given value.
    anharmonicity : float
        Amount by which each successive transition frequency shrinks.
    levels : int
        Number of transmon levels kept (2 for a qubit).
    circuit : TransmonParams, optional
        SI circuit parameters.
    """

    omega: float
    position: float
    bare_decay: float | None = None
    dephasing: tuple[float, ...] = (0.0,)
    anharmonicity: float = 0.0
    levels: int = 2
    circuit: TransmonParams | None = None

    def __post_init__(self):
        if isinstance(self.dephasing, (int, float)):
            object.__setattr__(self, "dephasing", (float(self.dephasing),))
        else:
            object.__setattr__(self, "dephasing", tuple(float(g) for g in self.dephasing))
        if not self.omega > 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if self.position < 0:
            raise ConfigError(f"position must be >= 0 (mirror at x = 0), got {self.position}")
        if int(self.levels) != self.levels or self.levels < 2:
            raise ConfigError(f"levels must be an integer >= 2, got {self.levels}")
        if not self.dephasing or any(g < 0 for g in self.dephasing):
            raise ConfigError("dephasing rates must be given and non-negative")
        if self.bare_decay is None:
            if self.circuit is None:
                raise ConfigError("either bare_decay or circuit must be given")
            g = coupling_strength(self.circuit, self.omega)
            object.__setattr__(self, "bare_decay", math.pi * g * g)
        if self.bare_decay < 0:
            raise ConfigError(f"bare_decay must be >= 0, got {self.bare_decay}")

    def dephasing_rate(self, n: int) -> float:
        """Dephasing rate of excited level ``n`` (1-based)."""
        if n < 1:
            raise ValueError("levels are counted from 1")
        return self.dephasing[min(n, len(self.dephasing)) - 1]

    def transition_frequency(self, n: int) -> float:
        """Frequency of the |n-1> -> |n> transition, ``omega - (n-1) alpha``."""
        return self.omega - (n - 1) * self.anharmonicity

    def level_energy(self, n: int) -> float:
        """Energy of level ``n`` over hbar, ``n omega - n(n-1) alpha / 2``."""
        return n * self.omega - 0.5 * n * (n - 1) * self.anharmonicity


@dataclass(frozen=True)
class WaveguideSpec:
    """Semi-infinite line with an antinode mirror at x = 0.

    When ``pinned_omega`` is set every wavenumber is evaluated at that
    frequency (narrow-band idealisation used for the exact node/antinode
    configurations); otherwise ``k = omega / wavespeed``.
    """

    wavespeed: float
    pinned_omega: float | None = None
    mirror: bool = field(default=True, init=False)

    def __post_init__(self):
        if not self.wavespeed > 0:
            raise ConfigError(f"wavespeed must be positive, got {self.wavespeed}")
        if self.pinned_omega is not None and not self.pinned_omega > 0:
            raise ConfigError("pinned_omega must be positive")

    @property
    def narrowband(self) -> bool:
        return self.pinned_omega is not None

    def wavenumber(self, omega):
        if self.pinned_omega is not None:
            return self.pinned_omega / self.wavespeed + 0.0 * np.asarray(omega)
        return np.asarray(omega) / self.wavespeed


@dataclass(frozen=True)
class ProbeSpec:
    """Continuous-wave probe seen by the outermost qubit."""

    omega_p: float
    rabi: float
    k_p: float

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ConfigError("probe frequency must be positive")
        if self.rabi < 0:
            raise ConfigError("probe Rabi frequency must be >= 0")


@dataclass(frozen=True)
class UnitScale:
    """Conversion factors from internal to SI units."""

    gamma_ref: float  # rad/s per internal rate unit
    lambda_ref: float  # metres per internal length unit


@dataclass(frozen=True)
class QubitArray:
    """Qubits plus waveguide: the complete physical configuration.

    ``reference`` is the 0-based index of the qubit whose frequency defines
    zero detuning and the unit wavelength.  ``scale`` is set on arrays in
    internal units and records how to get back to SI.
    """

    qubits: tuple[QubitSpec, ...]
    waveguide: WaveguideSpec
    reference: int = 0
    scale: UnitScale | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if not self.qubits:
            raise ConfigError("at least one qubit is required")
        if not 0 <= self.reference < len(self.qubits):
            raise ConfigError(f"reference qubit {self.reference} out of range")
        with_circuit = [q.circuit is not None for q in self.qubits]
        if any(with_circuit) and not all(with_circuit):
            raise ConfigError("circuit parameters must be given for all qubits or for none")
        rate_unit = 1.0 if self.scale is None else self.scale.gamma_ref
        for i, q in enumerate(self.qubits):
            if q.circuit is None:
                continue
            g = coupling_strength(q.circuit, q.omega * rate_unit)
            expected = math.pi * g * g
            got = q.bare_decay * rate_unit
            if abs(got - expected) > 1e-10 * expected:
                raise ConfigError(
                    f"qubit {i + 1}: bare_decay {got:.12g} inconsistent with circuit "
                    f"value {expected:.12g}"
                )

    @property
    def n(self) -> int:
        return len(self.qubits)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(q.levels for q in self.qubits)

    @property
    def omega_ref(self) -> float:
        return self.qubits[self.reference].omega

    @property
    def lambda_ref(self) -> float:
        omega = self.waveguide.pinned_omega or self.omega_ref
        return 2.0 * math.pi * self.waveguide.wavespeed / omega

    @property
    def outermost(self) -> int:
        """Index of the qubit farthest from the mirror (the probe reference)."""
        return int(np.argmax([q.position for q in self.qubits]))

    @property
    def positions(self) -> np.ndarray:
        return np.array([q.position for q in self.qubits])

    def bare_rate(self, i: int, omega: float) -> float:
        """Bare decay rate ``pi g_i(omega)**2`` of qubit ``i``.

        With circuit parameters ``g**2`` grows linearly with frequency.  A
        directly specified ``bare_decay`` is taken as frequency independent,
        and the pinned (narrow-band) waveguide freezes the rate as well.
        """
        q = self.qubits[i]
        if self.waveguide.narrowband or q.circuit is None:
            return q.bare_decay
        if omega <= 0:
            raise DomainError(f"transition frequency must be positive, got {omega}")
        return q.bare_decay * omega / q.omega

    def probe(self, detuning: float, rabi: float) -> ProbeSpec:
        """Probe at ``omega_ref + detuning`` with Rabi frequency ``rabi``."""
        omega_p = self.omega_ref + detuning
        return ProbeSpec(omega_p, rabi, float(self.waveguide.wavenumber(omega_p)))

    def with_qubits(self, qubits: Sequence[QubitSpec]) -> "QubitArray":
        return replace(self, qubits=tuple(qubits))

    def replace_each(self, **changes) -> "QubitArray":
        """Apply the same field changes to every qubit."""
        return self.with_qubits([replace(q, **changes) for q in self.qubits])


def eta(i: int, array: QubitArray) -> float:
    """Coupling ratio ``g_N / g_i`` between the outermost qubit N and qubit i."""
    qs = array.qubits
    has = [q.circuit is not None for q in qs]
    if any(has) and not all(has):
        raise ConfigError("circuit parameters must be given for all qubits or for none")
    if not all(has):
        return 1.0
    cn = qs[array.outermost].circuit
    ci = qs[i].circuit
    return (cn.ej * ci.ec / (ci.ej * cn.ec)) ** 0.25 * cn.beta / ci.beta


def rabi_at(i: int, probe: ProbeSpec, array: QubitArray) -> float:
    """Rabi frequency seen by qubit ``i`` (without the standing-wave factor)."""
    return probe.rabi / eta(i, array)


def to_internal_units(array: QubitArray, reference: int | None = None) -> QubitArray:
    """Convert an SI array into units of (gamma_ref, lambda_ref).

    Rates and frequencies are divided by the reference qubit's bare decay
    rate and positions by its wavelength.
    """
    if array.scale is not None:
        raise ConfigError("array is already in internal units")
    ref = array.reference if reference is None else reference
    array = replace(array, reference=ref)
    gamma = array.qubits[ref].bare_decay
    if not gamma > 0:
        raise ConfigError("reference qubit must have a positive bare decay rate")
    lam = array.lambda_ref
    qubits = [
        replace(
            q,
            omega=q.omega / gamma,
            position=q.position / lam,
            bare_decay=q.bare_decay / gamma,
            dephasing=tuple(g / gamma for g in q.dephasing),
            anharmonicity=q.anharmonicity / gamma,
        )
        for q in array.qubits
    ]
    wg = array.waveguide
    pinned = None if wg.pinned_omega is None else wg.pinned_omega / gamma
    waveguide = WaveguideSpec(wg.wavespeed / (lam * gamma), pinned)
    return QubitArray(tuple(qubits), waveguide, ref, UnitScale(gamma, lam))


def from_internal_units(array: QubitArray) -> QubitArray:
    """Inverse of :func:`to_internal_units`."""
    if array.scale is None:
        raise ConfigError("array is not in internal units")
    gamma, lam = array.scale.gamma_ref, array.scale.lambda_ref
    qubits = [
        replace(
            q,
            omega=q.omega * gamma,
            position=q.position * lam,
            bare_decay=q.bare_decay * gamma,
            dephasing=tuple(g * gamma for g in q.dephasing),
            anharmonicity=q.anharmonicity * gamma,
        )
        for q in array.qubits
    ]
    wg = array.waveguide
    pinned = None if wg.pinned_omega is None else wg.pinned_omega * gamma
    return QubitArray(
        tuple(qubits), WaveguideSpec(wg.wavespeed * lam * gamma, pinned), array.reference
    )


def ideal_array(
    positions: Sequence[float],
    dephasing=0.0,
    *,
    levels: int = 2,
    anharmonicity: float = 0.0,
    omega: float = IDEAL_OMEGA,
    detunings: Sequence[float] | None = None,
) -> QubitArray:
    """Identical qubits in internal units with a pinned (narrow-band) waveguide.

    ``dephasing`` is either one rate shared by all qubits or one entry per
    qubit (each entry a rate or a per-level sequence).
    """
    n = len(positions)
    if np.ndim(dephasing) == 0:
        deph = [(float(dephasing),)] * n
    else:
        if len(dephasing) != n:
            raise ConfigError("need one dephasing entry per qubit")
        deph = [tuple(np.atleast_1d(np.asarray(d, float))) for d in dephasing]
    offsets = [0.0] * n if detunings is None else list(detunings)
    qubits = tuple(
        QubitSpec(
            omega=omega + offsets[i],
            position=float(positions[i]),
            bare_decay=1.0,
            dephasing=deph[i],
            anharmonicity=anharmonicity,
            levels=levels,
        )
        for i in range(n)
    )
    return QubitArray(qubits, WaveguideSpec(omega / (2.0 * math.pi), pinned_omega=omega))

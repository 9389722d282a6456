"""Giant-atom reduction of arrays sitting exactly on nodes and antinodes.

With every qubit on a quarter-wavelength grid the mirror couplings factor:
``gamma_ij = gamma0 c_i c_j`` with ``c_i = cos(k x_i)`` (non-zero only on
antinodes) and ``Delta_ij = gamma0 c_< s_>`` with ``s = sin(k x)`` (non-zero
only on nodes), ``<``/``>`` denoting the qubit nearer to/farther from the
mirror.  Runs of same-kind qubits then act as single "giant atoms" built
from the signed collective states ``S_j = sum_i sign_i sigma_i / sqrt(n_j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassificationError, ConfigError, SingularityError
from .model import QubitArray
from .solve import _solve_driven
from .spectra import SpectrumCurve

__all__ = [
    "Group",
    "GiantAtomScheme",
    "classify_and_group",
    "scheme_from_array",
    "predicted_splitting",
    "reduced_spectrum",
    "POSITION_TOL",
]

POSITION_TOL = 1e-9  # in wavelengths


@dataclass(frozen=True)
class Group:
    kind: str  # "antinode" or "node"
    members: tuple[int, ...]  # 0-based qubit indices, increasing position
    signs: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def tag(self) -> str:
        return "A" if self.kind == "antinode" else "B"


@dataclass(frozen=True)
class GiantAtomScheme:
    """Ordered giant atoms of an on-grid array (internal units, gamma0 = 1).

    ``snapped`` lists ``(qubit, original, snapped)`` positions (in lambda)
    when the scheme was built with snapping.
    """

    groups: tuple[Group, ...]
    positions: tuple[float, ...]
    gamma0: float = 1.0
    snapped: tuple = ()

    @property
    def n_qubits(self) -> int:
        return len(self.positions)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(g.size for g in self.groups)

    def linewidths(self) -> np.ndarray:
        """Collective decay rate ``n_j gamma0`` of antinode groups, 0 for nodes."""
        return np.array([g.size * self.gamma0 if g.kind == "antinode" else 0.0 for g in self.groups])

    def decay_matrix(self) -> np.ndarray:
        """``sqrt(n_j n_j') gamma0`` between antinode groups (``n_j gamma0`` on the diagonal)."""
        v = np.array([math.sqrt(g.size) if g.kind == "antinode" else 0.0 for g in self.groups])
        return self.gamma0 * np.outer(v, v)

    def exchange_matrix(self) -> np.ndarray:
        """``sqrt(n_j n_j') gamma0`` for an antinode group j before a node group j'."""
        m = len(self.groups)
        ex = np.zeros((m, m))
        for j, a in enumerate(self.groups):
            if a.kind != "antinode":
                continue
            for jp in range(j + 1, m):
                b = self.groups[jp]
                if b.kind == "node":
                    ex[j, jp] = ex[jp, j] = self.gamma0 * math.sqrt(a.size * b.size)
        return ex

    def drive_vector(self) -> np.ndarray:
        """Collective drive of each group in units of the probe amplitude."""
        return np.array([math.sqrt(g.size) if g.kind == "antinode" else 0.0 for g in self.groups])

    def effective_matrix(self, detuning: float, dephasing) -> np.ndarray:
        """Non-Hermitian single-excitation block over the giant atoms."""
        deph = _group_dephasing(self, dephasing)
        h = self.exchange_matrix() - 1j * self.decay_matrix()
        h -= np.diag(detuning + 1j * deph)
        return h

    def collective_state(self, j: int) -> np.ndarray:
        """Single-excitation site amplitudes of giant atom ``j``."""
        g = self.groups[j]
        v = np.zeros(self.n_qubits)
        v[list(g.members)] = np.array(g.signs) / math.sqrt(g.size)
        return v

    def ket(self, j: int) -> str:
        """Text form of giant atom ``j``, e.g. ``(1/sqrt3)(|egg> + |geg> - |gge>)``."""
        g = self.groups[j]
        terms = []
        for k, (i, s) in enumerate(zip(g.members, g.signs)):
            label = "".join("e" if q == i else "g" for q in range(self.n_qubits))
            sign = ("-" if s < 0 else "") if k == 0 else (" - " if s < 0 else " + ")
            terms.append(f"{sign}|{label}>")
        body = "".join(terms)
        return body if g.size == 1 else f"(1/sqrt{g.size})({body})"

    def pretty(self) -> str:
        lines = []
        for j, g in enumerate(self.groups):
            members = ",".join(str(i + 1) for i in g.members)
            signs = " ".join("+" if s > 0 else "-" for s in g.signs)
            lw = f"  linewidth {g.size * self.gamma0:.6g}" if g.kind == "antinode" else ""
            lines.append(f"{g.tag}{j + 1} {g.kind:<8} qubits {members}  signs {signs}{lw}")
            lines.append(f"    {self.ket(j)}")
        dec = self.decay_matrix()
        ex = self.exchange_matrix()
        pairs = []
        for j in range(len(self.groups)):
            for jp in range(j + 1, len(self.groups)):
                a, b = self.groups[j], self.groups[jp]
                name = f"{a.tag}{j + 1}-{b.tag}{jp + 1}"
                if dec[j, jp]:
                    pairs.append(f"  {name} mutual decay {dec[j, jp]:.6g}")
                if ex[j, jp]:
                    pairs.append(f"  {name} exchange {ex[j, jp]:.6g}")
        if pairs:
            lines.append("couplings:")
            lines.extend(pairs)
        for i, x0, x1 in self.snapped:
            lines.append(f"snapped qubit {i + 1}: {x0:.9g} -> {x1:.9g} lambda")
        return "\n".join(lines)


def _group_dephasing(scheme: GiantAtomScheme, dephasing) -> np.ndarray:
    m = len(scheme.groups)
    d = np.asarray(dephasing, float)
    if d.ndim == 0:
        return np.full(m, float(d))
    if d.shape == (scheme.n_qubits,):
        out = np.empty(m)
        for j, g in enumerate(scheme.groups):
            vals = d[list(g.members)]
            if np.ptp(vals) > 1e-12 * max(1.0, abs(vals).max()):
                raise ConfigError(f"group {j + 1} mixes dephasing rates {vals.tolist()}; reduction needs them equal")
            out[j] = vals[0]
        return out
    if d.shape == (m,):
        return d.copy()
    raise ConfigError(f"dephasing must be a scalar, one value per group ({m}) or per qubit ({scheme.n_qubits})")


def classify_and_group(positions, lam: float = 1.0, tol: float = POSITION_TOL, snap: bool = False,
                       gamma0: float = 1.0) -> GiantAtomScheme:
    """Group qubits on exact antinodes (x = m lambda/2) and nodes (x = lambda/4 + m lambda/2).

    Off-grid positions raise ClassificationError unless ``snap`` is set, in
    which case they are rounded to the nearest quarter wavelength and
    reported in ``scheme.snapped``.
    """
    x = np.asarray(positions, float) / lam
    if x.ndim != 1 or x.size == 0:
        raise ConfigError("need at least one position")
    if np.any(x < -tol):
        raise ConfigError("positions must be >= 0 (mirror at x = 0)")
    quarters = np.rint(4.0 * x).astype(int)
    dist = np.abs(x - quarters / 4.0)
    snapped = []
    for i in range(x.size):
        if dist[i] > tol:
            if not snap:
                raise ClassificationError(
                    f"qubit {i + 1} at {x[i]:.12g} lambda is {dist[i]:.3g} lambda from the "
                    f"nearest node/antinode ({quarters[i] / 4:g} lambda)"
                )
            snapped.append((i, float(x[i]), quarters[i] / 4.0))
    order = np.argsort(x, kind="stable")
    if np.unique(quarters).size != quarters.size:
        raise ClassificationError("two qubits share a grid point")
    groups = []
    for i in order:
        k = int(quarters[i])
        kind = "antinode" if k % 2 == 0 else "node"
        # (-1)^(2x) on antinodes, (-1)^(2x - 1/2) on nodes
        sign = 1 if (k // 2) % 2 == 0 else -1
        if groups and groups[-1][0] == kind:
            groups[-1][1].append(int(i))
            groups[-1][2].append(sign)
        else:
            groups.append((kind, [int(i)], [sign]))
    pos = np.where(dist > tol, quarters / 4.0, x) if snap else x
    return GiantAtomScheme(
        tuple(Group(kd, tuple(m), tuple(s)) for kd, m, s in groups),
        tuple(float(v) for v in pos),
        gamma0,
        tuple(snapped),
    )


def scheme_from_array(array: QubitArray, snap: bool = False) -> GiantAtomScheme:
    """Scheme of an internal-units array of identical two-level qubits."""
    q0 = array.qubits[0]
    for q in array.qubits:
        if q.levels != 2:
            raise ConfigError("the reduction is for two-level qubits")
        if not (math.isclose(q.omega, q0.omega, rel_tol=1e-12)
                and math.isclose(q.bare_decay, q0.bare_decay, rel_tol=1e-12)):
            raise ConfigError("the reduction needs identical qubits")
    return classify_and_group(array.positions, array.lambda_ref, snap=snap, gamma0=q0.bare_decay)


def predicted_splitting(n1: int, n2: int, gamma0: float = 1.0) -> float:
    """Dephasing-free splitting ``2 sqrt(n1 n2) gamma0`` of an A(n1)-B(n2) pair."""
    if n1 < 1 or n2 < 1:
        raise ValueError("group sizes must be >= 1")
    return 2.0 * math.sqrt(n1 * n2) * gamma0


def reduced_spectrum(scheme: GiantAtomScheme, dephasing, rabi: float, grid) -> SpectrumCurve:
    """Weak-field reflection spectrum computed on the giant atoms."""
    if not rabi > 0:
        raise ConfigError("probe amplitude must be positive")
    grid = np.asarray(grid, float)
    drive = rabi * scheme.drive_vector()
    out = (2.0 * scheme.gamma0 / rabi) * scheme.drive_vector()
    r = np.empty(grid.size)
    base = scheme.effective_matrix(0.0, dephasing)
    for k, d in enumerate(grid):
        try:
            c = _solve_driven(base - d * np.eye(base.shape[0]), drive)
        except SingularityError as exc:
            raise SingularityError(f"reduced system singular at detuning {d:g}") from exc
        r[k] = abs(1.0 + 1j * (out @ c))
    meta = {"solver": "reduced", "rabi": float(rabi), "groups": [g.tag + str(g.size) for g in scheme.groups]}
    return SpectrumCurve(grid, r, metadata=meta)

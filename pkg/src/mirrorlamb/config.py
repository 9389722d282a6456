"""JSON run configurations.

A configuration describes one array plus probe settings::

    {
      "units": "internal",              # or "SI"
      "waveguide": {"wavespeed": 0.8948e8, "narrowband": false},
      "reference": 1,                   # qubit defining zero detuning (1-based)
      "wavelength_qubit": 2,            # qubit whose wavelength positions refer to
      "position_units": "lambda",       # or "m"
      "qubits": [{"omega": "2pi*4.755e9", "position": 0, "bare_decay": "2pi*17.2e6",
                  "dephasing": ["0.17 gamma0", "0.28 gamma0"], "anharmonicity": "2pi*406e6",
                  "levels": 3}],
      "probe": {"rabi": 0.01, "grid": "-6:6:1201"},
      "solver": "multilevel"
    }

Numbers may be written as plain values, ``"2pi*X"`` (angular frequency from
Hz) or ``"X gamma0"`` (multiples of the reference qubit's bare rate).  The
probe Rabi frequency and the grid are always in units of gamma0.  In
internal units qubit frequencies are offsets (``"detuning"``) from a common
carrier and the waveguide is narrow-band by default.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .model import (
    IDEAL_OMEGA, QubitArray, QubitSpec, TransmonParams, WaveguideSpec, to_internal_units,
)

__all__ = ["RunConfig", "load_config", "parse_config", "parse_grid", "DEFAULT_GRID"]

DEFAULT_GRID = "-6:6:1201"

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TWO_PI = re.compile(rf"^\s*2\s*(?:pi|π)\s*[*×x]?\s*({_NUM})\s*$")
_GAMMA0 = re.compile(rf"^\s*({_NUM})\s*\*?\s*(?:gamma0|γ0|γ₀)\s*$")

_TOP_KEYS = {"units", "waveguide", "reference", "wavelength_qubit", "position_units", "qubits",
             "probe", "solver", "name", "description", "sweep"}
_QUBIT_KEYS = {"omega", "detuning", "position", "bare_decay", "circuit", "dephasing",
               "anharmonicity", "levels"}


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: an internal-units array plus run settings."""

    array: QubitArray
    rabi: float
    grid: np.ndarray
    solver: str
    raw: dict
    sweep: dict | None = None

    def record(self) -> dict:
        """Physics-relevant content (what the manifest hash covers)."""
        from .spectra import array_record

        return {
            "array": array_record(self.array),
            "rabi": self.rabi,
            "grid": [float(self.grid[0]), float(self.grid[-1]), int(self.grid.size)],
            "solver": self.solver,
            "sweep": self.sweep,
        }


def parse_grid(text: str) -> np.ndarray:
    """``"MIN:MAX:POINTS"`` -> evenly spaced detunings."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid {text!r} must look like MIN:MAX:POINTS")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"grid {text!r}: {exc}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo or n < 2:
        raise ConfigError(f"grid {text!r} needs MIN < MAX and POINTS >= 2")
    return np.linspace(lo, hi, n)


def _value(v, path, gamma0=None):
    if isinstance(v, bool):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        x = float(v)
    elif isinstance(v, str):
        m = _TWO_PI.match(v)
        g = _GAMMA0.match(v)
        if m:
            x = 2.0 * math.pi * float(m.group(1))
        elif g:
            if gamma0 is None:
                raise ConfigError(f"{path}: 'gamma0' multiples need the reference bare_decay first")
            x = float(g.group(1)) * gamma0
        else:
            try:
                x = float(v)
            except ValueError:
                raise ConfigError(f"{path}: cannot parse {v!r} as a number") from None
    else:
        raise ConfigError(f"{path}: expected a number, got {type(v).__name__}")
    if not math.isfinite(x):
        raise ConfigError(f"{path}: value must be finite")
    return x


def _index(raw, key, n, default):
    v = raw.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= n:
        raise ConfigError(f"{key}: must be a qubit number between 1 and {n}, got {v!r}")
    return v - 1


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    """Validate ``raw`` and convert it to internal units."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {', '.join(sorted(unknown))}")
    units = raw.get("units", "internal")
    if units not in ("internal", "SI"):
        raise ConfigError(f"units: expected 'internal' or 'SI', got {units!r}")
    qraw = raw.get("qubits")
    if not isinstance(qraw, list) or not qraw:
        raise ConfigError("qubits: need a non-empty list of qubits")
    n = len(qraw)
    for k, q in enumerate(qraw):
        if not isinstance(q, dict):
            raise ConfigError(f"qubits[{k}]: expected an object")
        bad = set(q) - _QUBIT_KEYS
        if bad:
            raise ConfigError(f"qubits[{k}]: unknown field(s): {', '.join(sorted(bad))}")
    ref = _index(raw, "reference", n, 1)
    wl = _index(raw, "wavelength_qubit", n, ref + 1)
    array = _build_si(raw, qraw, ref, wl) if units == "SI" else _build_internal(raw, qraw, ref, wl)

    probe = raw.get("probe", {})
    if not isinstance(probe, dict):
        raise ConfigError("probe: expected an object")
    rabi = _value(probe.get("rabi", 0.01), "probe.rabi")
    if rabi < 0:
        raise ConfigError("probe.rabi: must be >= 0")
    grid = parse_grid(probe.get("grid", DEFAULT_GRID))
    solver = raw.get("solver", "full")
    if solver not in ("full", "weakfield", "multilevel"):
        raise ConfigError(f"solver: expected full, weakfield or multilevel, got {solver!r}")
    sweep = raw.get("sweep")
    if sweep is not None and not isinstance(sweep, dict):
        raise ConfigError("sweep: expected an object")
    return RunConfig(array, rabi, grid, solver, raw, sweep)


def _qubit_common(q, k, gamma0):
    deph = q.get("dephasing", [0.0])
    if not isinstance(deph, list):
        deph = [deph]
    if not deph:
        raise ConfigError(f"qubits[{k}].dephasing: need at least one rate")
    deph = tuple(_value(v, f"qubits[{k}].dephasing[{j}]", gamma0) for j, v in enumerate(deph))
    levels = q.get("levels", 2)
    if not isinstance(levels, int) or isinstance(levels, bool) or levels < 2:
        raise ConfigError(f"qubits[{k}].levels: must be an integer >= 2")
    return deph, levels


def _spec(k, **kw):
    try:
        return QubitSpec(**kw)
    except ConfigError as exc:
        raise ConfigError(f"qubits[{k}]: {exc}") from None


def _build_internal(raw, qraw, ref, wl):
    wg = raw.get("waveguide", {})
    narrow = wg.get("narrowband", True)
    if raw.get("position_units", "lambda") != "lambda":
        raise ConfigError("position_units: internal units take positions in lambda")
    qubits = []
    for k, q in enumerate(qraw):
        if "position" not in q:
            raise ConfigError(f"qubits[{k}].position: required")
        if "circuit" in q:
            raise ConfigError(f"qubits[{k}].circuit: circuit parameters need SI units")
        offset = _value(q.get("detuning", q.get("omega", 0.0)), f"qubits[{k}].detuning")
        deph, levels = _qubit_common(q, k, 1.0)
        qubits.append(_spec(
            k,
            omega=IDEAL_OMEGA + offset,
            position=_value(q["position"], f"qubits[{k}].position"),
            bare_decay=_value(q.get("bare_decay", 1.0), f"qubits[{k}].bare_decay", 1.0),
            dephasing=deph,
            anharmonicity=_value(q.get("anharmonicity", 0.0), f"qubits[{k}].anharmonicity", 1.0),
            levels=levels,
        ))
    omega_ref = qubits[ref].omega
    # unit length is the reference wavelength: v = omega_ref / (2 pi)
    waveguide = WaveguideSpec(omega_ref / (2.0 * math.pi), pinned_omega=omega_ref if narrow else None)
    if not narrow and wl != ref:
        # positions were given in units of the wavelength qubit's lambda
        f = omega_ref / qubits[wl].omega
        qubits = [replace(q, position=q.position * f) for q in qubits]
    return QubitArray(tuple(qubits), waveguide, ref)


def _build_si(raw, qraw, ref, wl):
    wg = raw.get("waveguide")
    if not isinstance(wg, dict) or "wavespeed" not in wg:
        raise ConfigError("waveguide.wavespeed: required in SI units")
    v = _value(wg["wavespeed"], "waveguide.wavespeed")
    pos_units = raw.get("position_units", "m")
    if pos_units not in ("m", "lambda"):
        raise ConfigError(f"position_units: expected 'm' or 'lambda', got {pos_units!r}")
    # the reference bare rate is needed for "gamma0" multiples
    ref_q = qraw[ref]
    gamma0 = None
    if "bare_decay" in ref_q:
        gamma0 = _value(ref_q["bare_decay"], f"qubits[{ref}].bare_decay")
    circuits = []
    omegas = []
    for k, q in enumerate(qraw):
        if "omega" not in q:
            raise ConfigError(f"qubits[{k}].omega: required in SI units")
        omegas.append(_value(q["omega"], f"qubits[{k}].omega"))
        c = q.get("circuit")
        if c is not None:
            if not isinstance(c, dict):
                raise ConfigError(f"qubits[{k}].circuit: expected an object")
            try:
                circuits.append(TransmonParams(
                    beta=_value(c.get("beta"), f"qubits[{k}].circuit.beta"),
                    ej=_value(c.get("ej"), f"qubits[{k}].circuit.ej"),
                    ec=_value(c.get("ec"), f"qubits[{k}].circuit.ec"),
                    z0=_value(c.get("z0", 50.0), f"qubits[{k}].circuit.z0"),
                ))
            except ConfigError as exc:
                raise ConfigError(f"qubits[{k}].circuit: {exc}") from None
        else:
            circuits.append(None)
    if gamma0 is None and circuits[ref] is not None:
        from .model import coupling_strength

        gamma0 = math.pi * coupling_strength(circuits[ref], omegas[ref]) ** 2
    lam_wl = 2.0 * math.pi * v / omegas[wl]
    qubits = []
    for k, q in enumerate(qraw):
        if "position" not in q:
            raise ConfigError(f"qubits[{k}].position: required")
        x = _value(q["position"], f"qubits[{k}].position")
        if pos_units == "lambda":
            x *= lam_wl
        deph, levels = _qubit_common(q, k, gamma0)
        bd = q.get("bare_decay")
        qubits.append(_spec(
            k,
            omega=omegas[k],
            position=x,
            bare_decay=None if bd is None else _value(bd, f"qubits[{k}].bare_decay", gamma0),
            dephasing=deph,
            anharmonicity=_value(q.get("anharmonicity", 0.0), f"qubits[{k}].anharmonicity", gamma0),
            levels=levels,
            circuit=circuits[k],
        ))
    narrow = wg.get("narrowband", False)
    waveguide = WaveguideSpec(v, pinned_omega=omegas[ref] if narrow else None)
    return to_internal_units(QubitArray(tuple(qubits), waveguide, ref))

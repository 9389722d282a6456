"""Reflection spectra and the features read off them."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.signal import find_peaks, peak_widths

from .errors import DomainError, MirrorLambError, ResolutionError
from .liouville import master_equation, master_equation_multilevel
from .model import ProbeSpec, QubitArray, eta
from .rddi import build_couplings, build_level_couplings
from .solve import DensityMatrix, steady_state, weakfield_steady

__all__ = [
    "SpectrumCurve",
    "SplitFeatures",
    "reflection_amplitude",
    "reflection",
    "reflection_multilevel",
    "scan",
    "extract_features",
    "array_record",
    "config_hash",
    "write_csv",
    "sidecar_json",
    "write_sidecar",
    "read_sidecar",
    "STRONG_DRIVE",
    "SOLVERS",
]

SOLVERS = ("full", "weakfield", "multilevel")

# above this Rabi frequency (units of gamma0) r is flagged in the metadata
STRONG_DRIVE = 0.5

CSV_HEADER = "detuning_over_gamma0,r,rho_ss,rho_aa"


@dataclass(frozen=True, eq=False)
class SpectrumCurve:
    """Reflection coefficient sampled on a detuning grid (units of gamma0).

    ``failures`` lists ``(index, detuning, message)`` for grid points whose
    solve failed; those points carry ``nan``.
    """

    detuning: np.ndarray
    r: np.ndarray
    rho_ss: np.ndarray | None = None
    rho_aa: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    failures: tuple = ()

    def __post_init__(self):
        d = np.array(self.detuning, float)
        r = np.array(self.r, float)
        if d.ndim != 1 or d.shape != r.shape:
            raise ValueError("detuning and r must be 1-D arrays of equal length")
        if d.size > 1 and not np.all(np.diff(d) > 0):
            raise ValueError("detuning grid must be strictly increasing")
        if np.any(r[np.isfinite(r)] < 0):
            raise ValueError("r must be non-negative")
        for name in ("rho_ss", "rho_aa"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, float)
                v.setflags(write=False)
                object.__setattr__(self, name, v)
        d.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "detuning", d)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "failures", tuple(tuple(f) for f in self.failures))

    @property
    def ok(self) -> bool:
        return not self.failures

    def detuning_si(self) -> np.ndarray:
        """Detuning in rad/s (needs ``gamma_ref`` in the metadata)."""
        return self.detuning * self.metadata["gamma_ref"]


@dataclass(frozen=True)
class SplitFeatures:
    """Dip structure of a spectrum.

    ``dips``, ``depths`` and ``widths`` list every dip found (ascending
    detuning); ``delta_minus``/``delta_plus`` are the two most prominent.
    ``widths`` are full widths at half depth, depth measured from the
    neighbouring maxima.
    """

    dips: tuple
    depths: tuple
    widths: tuple
    delta_minus: float
    delta_plus: float
    delta_split: float
    r_mid: float
    flags: tuple = ()

    @property
    def n_dips(self) -> int:
        return len(self.dips)


def reflection_amplitude(coherences, array: QubitArray, probe: ProbeSpec) -> complex:
    """Complex ``1 + i sum_i (2 eta_i gamma_i / Omega) cos(k_p x_i) <s_i^->``.

    ``gamma_i`` is the bare rate of qubit i at its own frequency.
    """
    if not probe.rabi > 0:
        raise DomainError("reflection needs a non-zero probe amplitude")
    c = np.asarray(coherences, complex)
    if c.shape != (array.n,):
        raise ValueError(f"expected {array.n} coherences, got shape {c.shape}")
    s = 0j
    for i, q in enumerate(array.qubits):
        g = array.bare_rate(i, q.omega)
        s += 2.0 * eta(i, array) * g / probe.rabi * math.cos(probe.k_p * q.position) * c[i]
    return 1.0 + 1j * s


def reflection(coherences, array: QubitArray, probe: ProbeSpec) -> float:
    """Reflection coefficient from the steady-state coherences."""
    return abs(reflection_amplitude(coherences, array, probe))


def reflection_multilevel(coherences, array: QubitArray, probe: ProbeSpec) -> float:
    """Reflection coefficient of a transmon array.

    ``coherences[i][n - 1]`` is ``<|n-1><n|>`` of qubit i.  Each transition
    enters with its own bare rate and a ``sqrt(n)`` matrix element; for
    two-level qubits this is :func:`reflection`.
    """
    if not probe.rabi > 0:
        raise DomainError("reflection needs a non-zero probe amplitude")
    if len(coherences) != array.n:
        raise ValueError(f"expected coherences for {array.n} qubits")
    s = 0j
    for i, q in enumerate(array.qubits):
        ci = np.atleast_1d(np.asarray(coherences[i], complex))
        if ci.size != q.levels - 1:
            raise ValueError(f"qubit {i + 1}: expected {q.levels - 1} transition coherences")
        pre = 2.0 * eta(i, array) / probe.rabi * math.cos(probe.k_p * q.position)
        for n in range(1, q.levels):
            g = array.bare_rate(i, q.transition_frequency(n))
            s += pre * g * math.sqrt(n) * ci[n - 1]
    return abs(1.0 + 1j * s)


def _pair_states(space):
    """``|s>`` and ``|a>`` vectors of a two-qubit space (levels 01 and 10)."""
    e1 = space.basis((1, 0))
    e2 = space.basis((0, 1))
    r2 = 1.0 / math.sqrt(2.0)
    return r2 * (e1 + e2), r2 * (e1 - e2)


def _point_full(me, array, probe, check_kernel):
    rho = steady_state(me.generator(probe), check_kernel=check_kernel)
    r = reflection([rho.coherence(i) for i in range(array.n)], array, probe)
    return r, _pops(rho)


def _point_multilevel(me, array, probe, check_kernel):
    rho = steady_state(me.generator(probe), check_kernel=check_kernel)
    coh = [[rho.coherence(i, n) for n in range(1, q.levels)] for i, q in enumerate(array.qubits)]
    return reflection_multilevel(coh, array, probe), _pops(rho)


def _pops(rho: DensityMatrix):
    if rho.space.n_qubits != 2:
        return None
    s, a = _pair_states(rho.space)
    return abs(rho.population(s)), abs(rho.population(a))


def _point_weak(cpl, array, probe):
    amp = weakfield_steady(array, cpl, probe)
    r = reflection(amp.sites, array, probe)
    pops = (abs(amp.c_s) ** 2, abs(amp.c_a) ** 2) if array.n == 2 else None
    return r, pops


def array_record(array: QubitArray) -> dict:
    """Plain-dict form of an array, used for hashing and sidecars."""
    rec = asdict(array)
    rec["waveguide"].pop("mirror", None)
    return rec


def config_hash(record) -> str:
    """sha256 of the canonical JSON form of ``record``."""
    if isinstance(record, QubitArray):
        record = array_record(record)
    text = json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(text.encode()).hexdigest()


def scan(array: QubitArray, grid, rabi: float, solver: str = "full", workers: int | None = 1,
         check_kernel: bool = True) -> SpectrumCurve:
    """Reflection spectrum of ``array`` over detunings ``grid`` (units of gamma0).

    Detunings are measured from the reference qubit's frequency.  Each grid
    point is solved independently; failures are recorded on the curve and
    do not stop the scan.  ``workers`` > 1 spreads points over a thread
    pool, results are always assembled in grid order.  With
    ``check_kernel`` the first point also verifies that the steady state is
    unique.
    """
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")
    grid = np.asarray(grid, float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    if solver == "full":
        me = master_equation(array, build_couplings(array))
        point = lambda k, pr: _point_full(me, array, pr, check_kernel and k == 0)  # noqa: E731
    elif solver == "multilevel":
        me = master_equation_multilevel(array, build_level_couplings(array))
        point = lambda k, pr: _point_multilevel(me, array, pr, check_kernel and k == 0)  # noqa: E731
    else:
        cpl = build_couplings(array)
        point = lambda k, pr: _point_weak(cpl, array, pr)  # noqa: E731

    def task(k):
        try:
            return point(k, array.probe(float(grid[k]), rabi)), None
        except (MirrorLambError, la.LinAlgError, ArithmeticError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and grid.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, range(grid.size)))
    else:
        results = [task(k) for k in range(grid.size)]

    r = np.full(grid.size, np.nan)
    pops = np.full((grid.size, 2), np.nan) if array.n == 2 else None
    failures = []
    for k, (res, err) in enumerate(results):
        if err is not None:
            failures.append((k, float(grid[k]), err))
            continue
        r[k] = res[0]
        if pops is not None:
            pops[k] = res[1]

    meta = {
        "solver": solver,
        "rabi": float(rabi),
        "config_hash": config_hash(array),
        "gamma_ref": array.scale.gamma_ref if array.scale is not None else 1.0,
        "detuning_reference": array.reference,
        "warnings": [],
    }
    if rabi > STRONG_DRIVE:
        meta["warnings"].append(
            f"strong drive (Omega_p = {rabi:g} gamma0): the coherent reflection formula "
            "ignores inelastic scattering, r may exceed 1"
        )
    return SpectrumCurve(
        grid, r,
        None if pops is None else pops[:, 0],
        None if pops is None else pops[:, 1],
        meta, tuple(failures),
    )


def _refine(x, y, k):
    """Vertex of the parabola through points k-1, k, k+1."""
    if k == 0 or k == len(y) - 1:
        return x[k], y[k]
    x0, x1, x2 = x[k - 1 : k + 2]
    y0, y1, y2 = y[k - 1 : k + 2]
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    if a <= 0:
        return x[k], y[k]
    xv = -b / (2 * a)
    if not x0 <= xv <= x2:
        return x[k], y[k]
    c = y0 - a * x0 * x0 - b * x0
    return xv, a * xv * xv + b * xv + c


def extract_features(curve: SpectrumCurve, prominence: float = 0.02, min_density: float = 8.0) -> SplitFeatures:
    """Dip positions, splitting, widths and ``r_mid`` of a spectrum.

    Dips are local minima at least ``prominence`` below the neighbouring
    maxima, refined by a three-point parabola.  Fewer than two dips give
    ``delta_split = 0`` and a ``"fewer_than_two_dips"`` flag.
    """
    x = curve.detuning
    y = curve.r
    if x.size < 3:
        raise ResolutionError("need at least three grid points")
    step = float(np.max(np.diff(x)))
    if step * min_density > 1.0 + 1e-9:
        raise ResolutionError(
            f"grid spacing {step:.4g} gamma0 is coarser than {min_density:g} points per gamma0"
        )
    flags = []
    finite = np.isfinite(y)
    if not finite.all():
        flags.append("missing_points")
        y = np.interp(x, x[finite], y[finite])
    peaks, _ = find_peaks(-y, prominence=prominence)
    dips, depths, widths, prom = [], [], [], []
    if peaks.size:
        # depth is measured from the lower of the maxima separating a dip
        # from its neighbours, so equal dips get equal widths
        bounds = np.concatenate(([0], peaks, [x.size - 1]))
        left_b = bounds[:-2]
        right_b = bounds[2:]
        ref = np.array([min(y[lo : p + 1].max(), y[p : hi + 1].max())
                        for lo, p, hi in zip(left_b, peaks, right_b)])
        prom = ref - y[peaks]
        w = peak_widths(-y, peaks, rel_height=0.5, prominence_data=(prom, left_b, right_b))
        idx = np.arange(x.size, dtype=float)
        left = np.interp(w[2], idx, x)
        right = np.interp(w[3], idx, x)
        for k, p in enumerate(peaks):
            xv, yv = _refine(x, y, p)
            dips.append(float(xv))
            depths.append(float(yv))
            widths.append(float(right[k] - left[k]))
    if len(dips) >= 2:
        top = np.sort(np.argsort(-np.asarray(depths), kind="stable")[-2:])
        dm, dp = dips[top[0]], dips[top[1]]
        split = abs(dp - dm)
        if len(dips) > 2:
            flags.append("more_than_two_dips")
    else:
        flags.append("fewer_than_two_dips")
        dm = dp = dips[0] if dips else float("nan")
        split = 0.0
    if x[0] <= 0.0 <= x[-1]:
        r_mid = float(np.interp(0.0, x, y))
    else:
        r_mid = float("nan")
        flags.append("zero_outside_grid")
    return SplitFeatures(tuple(dips), tuple(depths), tuple(widths), float(dm), float(dp),
                         float(split), r_mid, tuple(flags))


def _fmt(v) -> str:
    return "%.12g" % v


def write_csv(curve: SpectrumCurve, path) -> None:
    """CSV export; populations are ``nan`` when not available."""
    n = curve.detuning.size
    ss = curve.rho_ss if curve.rho_ss is not None else np.full(n, np.nan)
    aa = curve.rho_aa if curve.rho_aa is not None else np.full(n, np.nan)
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in zip(curve.detuning, curve.r, ss, aa):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def sidecar_json(curve: SpectrumCurve, features: SplitFeatures | None = None, config: dict | None = None) -> str:
    """JSON text with the curve, its metadata, features and configuration.

    Floats are written with ``repr`` precision so :func:`read_sidecar`
    recovers every value bit for bit.
    """
    doc = {
        "curve": {
            "detuning": curve.detuning,
            "r": curve.r,
            "rho_ss": curve.rho_ss,
            "rho_aa": curve.rho_aa,
            "failures": curve.failures,
        },
        "metadata": curve.metadata,
        "features": None if features is None else asdict(features),
        "config": config,
    }
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_sidecar(path, curve: SpectrumCurve, features=None, config=None) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(sidecar_json(curve, features, config))


def read_sidecar(path):
    """Returns ``(curve, features, config)`` from a sidecar file."""
    with open(path) as fh:
        doc = json.load(fh)
    c = doc["curve"]
    curve = SpectrumCurve(
        np.array(c["detuning"], float), np.array(c["r"], float),
        None if c["rho_ss"] is None else np.array(c["rho_ss"], float),
        None if c["rho_aa"] is None else np.array(c["rho_aa"], float),
        doc["metadata"], tuple(tuple(f) for f in c["failures"]),
    )
    f = doc["features"]
    feats = None
    if f is not None:
        feats = SplitFeatures(**{k: tuple(v) if isinstance(v, list) else v for k, v in f.items()})
    return curve, feats, doc["config"]

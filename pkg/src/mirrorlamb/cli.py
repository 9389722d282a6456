"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 solver error (including
per-point scan failures), 4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic2q import TwoQubitCase
from .config import DEFAULT_GRID, RunConfig, load_config, parse_grid
from .errors import ClassificationError, ConfigError, MirrorLambError, SolverError
from .model import ideal_array
from .rddi import build_level_couplings, kk_check, kk_grid
from .reduced import scheme_from_array, reduced_spectrum
from .spectra import (
    SOLVERS, config_hash, extract_features, scan, write_csv, write_sidecar, _fmt,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    grid: list
    solver: str
    outputs: list = field(default_factory=list)
    config_hash: str = ""

    def __post_init__(self):
        if not self.config_hash:
            self.config_hash = config_hash(self.config)

    def write(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(asdict(self), fh, sort_keys=True, indent=2, allow_nan=True)
            fh.write("\n")


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if getattr(args, "grid", None):
        changes["grid"] = parse_grid(args.grid)
    if getattr(args, "solver", None):
        changes["solver"] = args.solver
    if getattr(args, "rabi", None) is not None:
        if args.rabi < 0:
            raise ConfigError("--rabi must be >= 0")
        changes["rabi"] = args.rabi
    return replace(cfg, **changes) if changes else cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_failures(curve, label="") -> None:
    for k, d, msg in curve.failures:
        print(f"{label}point {k} (detuning {d:.6g}): {msg}", file=sys.stderr)


def _features_dict(feats) -> dict:
    return asdict(feats)


def cmd_spectrum(args) -> int:
    cfg = _resolve(args)
    curve = scan(cfg.array, cfg.grid, cfg.rabi, cfg.solver, workers=args.workers)
    feats = extract_features(curve) if np.isfinite(curve.r).sum() >= 3 else None
    out = _outdir(args)
    csv_path = out / "spectrum.csv"
    side_path = out / "spectrum.json"
    write_csv(curve, csv_path)
    record = cfg.record()
    write_sidecar(side_path, curve, feats, record)
    man = RunManifest("spectrum", record, _grid_spec(cfg.grid), cfg.solver, [csv_path.name, side_path.name])
    man.write(out / "manifest.json")
    if feats is not None:
        print(f"dips {', '.join(_fmt(d) for d in feats.dips) or '-'}  "
              f"delta_split {_fmt(feats.delta_split)}  r_mid {_fmt(feats.r_mid)}")
    if curve.failures:
        _report_failures(curve)
        print(f"{len(curve.failures)} of {curve.detuning.size} points failed", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _grid_spec(grid) -> list:
    return [float(grid[0]), float(grid[-1]), int(grid.size)]


def _parse_range(text, integer=False):
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"--range {text!r} must look like MIN:MAX:COUNT")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--range {text!r}: {exc}") from None
    if n < 1 or hi < lo:
        raise ConfigError(f"--range {text!r} needs MIN <= MAX and COUNT >= 1")
    vals = np.linspace(lo, hi, n)
    if integer:
        ints = np.rint(vals).astype(int)
        if np.any(np.abs(ints - vals) > 1e-9) or np.any(ints < 1):
            raise ConfigError(f"--range {text!r}: count sweeps need positive integer values")
        return ints
    return vals


def count_positions(n: int) -> list:
    """One qubit at the mirror and ``n - 1`` on successive nodes 1.25, 1.75, ... lambda."""
    return [0.0] + [1.25 + 0.5 * k for k in range(n - 1)]


def _sweep_array(cfg: RunConfig, axis: str, value, qubit: int):
    arr = cfg.array
    if axis == "power":
        return arr, float(value)
    if axis == "count":
        q1 = arr.qubits[0]
        qn = arr.qubits[1] if arr.n > 1 else q1
        deph = [q1.dephasing] + [qn.dephasing] * (int(value) - 1)
        return ideal_array(count_positions(int(value)), deph), cfg.rabi
    if not 0 <= qubit < arr.n:
        raise ConfigError(f"--qubit {qubit + 1} out of range for {arr.n} qubits")
    q = arr.qubits[qubit]
    if axis == "position":
        new = replace(q, position=float(value) * arr.lambda_ref)
    else:
        new = replace(q, dephasing=(float(value),) + tuple(q.dephasing[1:]))
    qs = list(arr.qubits)
    qs[qubit] = new
    return arr.with_qubits(qs), cfg.rabi


def cmd_sweep(args) -> int:
    cfg = _resolve(args)
    values = _parse_range(args.range, integer=args.axis == "count")
    qubit = (cfg.array.n if args.qubit is None else args.qubit) - 1
    out = _outdir(args)
    map_path = out / f"sweep_{args.axis}.csv"
    feat_path = out / f"sweep_{args.axis}_features.csv"
    failed = 0
    with open(map_path, "w", newline="\n") as fm, open(feat_path, "w", newline="\n") as ff:
        fm.write(f"{args.axis},detuning_over_gamma0,r\n")
        ff.write(f"{args.axis},delta_split,r_mid,n_dips,flags\n")
        for v in values:
            arr, rabi = _sweep_array(cfg, args.axis, v, qubit)
            curve = scan(arr, cfg.grid, rabi, cfg.solver, workers=args.workers)
            for d, r in zip(curve.detuning, curve.r):
                fm.write(f"{_fmt(v)},{_fmt(d)},{_fmt(r)}\n")
            feats = extract_features(curve)
            ff.write(f"{_fmt(v)},{_fmt(feats.delta_split)},{_fmt(feats.r_mid)},{feats.n_dips},"
                     f"{'|'.join(feats.flags)}\n")
            if curve.failures:
                failed += len(curve.failures)
                _report_failures(curve, f"{args.axis}={_fmt(v)} ")
    record = dict(cfg.record(), sweep={"axis": args.axis, "range": args.range, "qubit": qubit + 1})
    RunManifest("sweep", record, _grid_spec(cfg.grid), cfg.solver, [map_path.name, feat_path.name]).write(
        out / f"sweep_{args.axis}_manifest.json"
    )
    return EXIT_SOLVER if failed else EXIT_OK


@dataclass
class Check:
    name: str
    status: str  # pass | fail | no oracle
    deviation: float | None = None
    tolerance: float | None = None
    note: str = ""

    def line(self) -> str:
        dev = "" if self.deviation is None else f"  max deviation {self.deviation:.3e}"
        tol = "" if self.tolerance is None else f" (tol {self.tolerance:.1e})"
        note = f"  {self.note}" if self.note else ""
        return f"[{self.status.upper()}] {self.name}{dev}{tol}{note}"


def _limit(value, tol, name, note=""):
    return Check(name, "pass" if value <= tol else "fail", float(value), tol, note)


def run_validation(cfg: RunConfig, workers: int | None = 1) -> list:
    """All oracle checks applicable to ``cfg``."""
    arr = cfg.array
    checks = []
    rabi = cfg.rabi if 0 < cfg.rabi <= 0.05 else 0.01
    grid = cfg.grid
    try:
        case = TwoQubitCase.from_array(arr, rabi)
    except ClassificationError as exc:
        case = None
        checks.append(Check("closed forms", "no oracle", note=str(exc)))
    if case is not None:
        window = grid[(grid >= -5) & (grid <= 5)]
        curve = scan(arr, window, rabi, "full", workers=workers)
        if case.is_node or np.isclose(case.gphi1, case.gphi2):
            dev = float(np.nanmax(np.abs(curve.r - case.r(window))))
            label = "node reflection" if case.is_node else "antinode reflection"
            checks.append(_limit(dev, 1e-3, f"{label} vs full solver"))
        else:
            checks.append(Check("antinode reflection", "no oracle", note="unequal dephasing"))
        if case.is_node:
            full_mid = scan(arr, [0.0], rabi, "full").r[0]
            checks.append(_limit(abs(full_mid - case.r_mid()), 1e-3, "r_mid vs full solver"))
            ratio = case.gphi2 / case.gphi1 if case.gphi1 > 0 else (0.0 if case.gphi2 == 0 else np.inf)
            if ratio <= 0.5:
                feats = extract_features(scan(arr, grid, rabi, "weakfield", workers=workers))
                dm, dp = case.dips()
                if feats.n_dips >= 2:
                    # first-order expansion: error O((gphi2/gphi1)^2)
                    tol = float(np.max(np.diff(grid))) + abs(case.delta12) * ratio**2
                    dev = max(abs(feats.delta_minus - dm), abs(feats.delta_plus - dp))
                    checks.append(_limit(dev, tol, "dip positions vs first-order expansion"))
                else:
                    checks.append(Check("dip positions", "no oracle", note="fewer than two resolved dips"))
            else:
                checks.append(Check("dip positions", "no oracle",
                                    note=f"gphi2/gphi1 = {ratio:.3g} outside the expansion's range"))
    # giant-atom reduction
    if all(q.levels == 2 for q in arr.qubits) and arr.waveguide.narrowband:
        try:
            scheme = scheme_from_array(arr)
        except (ClassificationError, ConfigError) as exc:
            checks.append(Check("reduced scheme", "no oracle", note=str(exc)))
        else:
            deph = [q.dephasing_rate(1) for q in arr.qubits]
            try:
                red = reduced_spectrum(scheme, deph, rabi, grid)
            except ConfigError as exc:
                checks.append(Check("reduced scheme", "no oracle", note=str(exc)))
            else:
                full = scan(arr, grid, rabi, "weakfield", workers=workers)
                checks.append(_limit(float(np.nanmax(np.abs(red.r - full.r))), 1e-6,
                                     "reduced scheme vs full weak-field"))
    else:
        checks.append(Check("reduced scheme", "no oracle", note="needs two-level qubits on a narrow-band line"))
    checks.append(_kk_validation(arr))
    return checks


def _kk_validation(arr) -> Check:
    """Rebuild Delta_1j from gamma_1j sampled over frequency (qubit j farthest out)."""
    j = arr.outermost
    x1, xj = arr.qubits[0].position, arr.qubits[j].position
    v = arr.waveguide.wavespeed
    g0 = arr.qubits[0].bare_decay
    tau_sum = (x1 + xj) / v
    tau_diff = abs(x1 - xj) / v
    tau = max(tau_sum, tau_diff)
    w0 = arr.qubits[j].omega
    if tau == 0:
        return Check("Kramers-Kronig Delta_11", "pass", 0.0, 1e-2, note="qubit at the mirror: Delta vanishes")
    w = kk_grid(w0, 2 * np.pi / tau)
    gamma = 0.5 * g0 * (np.cos(w * tau_sum) + np.cos(w * tau_diff))
    expected = 0.5 * g0 * (np.sin(w0 * tau_sum) + np.sin(w0 * tau_diff))
    got = kk_check(w, gamma, w0)
    scale = max(abs(expected), 0.5 * g0)
    return _limit(abs(got - expected) / scale, 1e-2, f"Kramers-Kronig Delta_1{j + 1} from gamma_1{j + 1}",
                  note=f"reconstructed {got:.6g}, direct {expected:.6g}")


def cmd_validate(args) -> int:
    cfg = _resolve(args)
    checks = run_validation(cfg, workers=args.workers)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if c.status == "fail"]
    print(f"{len(checks) - len(failed)} of {len(checks)} checks passed or had no oracle")
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_dump_couplings(args) -> int:
    cfg = _resolve(args)
    lc = build_level_couplings(cfg.array)
    out = sys.stdout
    out.write("level,i,j,gamma_ij,delta_ij,gamma0_ij\n")
    for n in range(lc.n_transitions):
        for i in range(cfg.array.n):
            for j in range(cfg.array.n):
                out.write(f"{n + 1},{i + 1},{j + 1},{_fmt(lc.gamma[n, i, j])},"
                          f"{_fmt(lc.delta[n, i, j])},{_fmt(lc.gamma0[n, i, j])}\n")
    return EXIT_OK


def cmd_reduce(args) -> int:
    cfg = _resolve(args)
    scheme = scheme_from_array(cfg.array, snap=args.snap)
    print(scheme.pretty())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mirrorlamb", description="Reflection spectra of qubits in front of a mirror")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--grid", help=f"detuning grid MIN:MAX:POINTS in gamma0 (default {DEFAULT_GRID})")
        sp.add_argument("--solver", choices=SOLVERS)
        sp.add_argument("--rabi", type=float, help="probe Rabi frequency in gamma0")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        if out:
            sp.add_argument("--out", default=".", help="output directory")

    s = sub.add_parser("spectrum", help="one reflection spectrum")
    common(s)
    s.set_defaults(func=cmd_spectrum)
    s = sub.add_parser("sweep", help="spectra along one parameter axis")
    common(s)
    s.add_argument("--axis", required=True, choices=("position", "dephasing", "power", "count"))
    s.add_argument("--range", required=True, help="MIN:MAX:COUNT of the swept parameter")
    s.add_argument("--qubit", type=int, help="qubit changed by position/dephasing sweeps (default last)")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("validate", help="compare against closed forms and the reduced scheme")
    common(s, out=False)
    s.set_defaults(func=cmd_validate)
    s = sub.add_parser("dump-couplings", help="print coupling matrices as CSV")
    common(s, out=False)
    s.set_defaults(func=cmd_dump_couplings)
    s = sub.add_parser("reduce", help="print the giant-atom scheme")
    common(s, out=False)
    s.add_argument("--snap", action="store_true", help="round positions to the nearest quarter wavelength")
    s.set_defaults(func=cmd_reduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ClassificationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, MirrorLambError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

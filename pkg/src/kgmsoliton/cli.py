"""Command-line front end.

Subcommands
-----------
check   classify a model with the no-go checkers
solve   compute a profile and write it as CSV and JSON
verify  evaluate the scaling identities on a stored profile
scan    sweep up to two parameters and run any of the above per point

Exit codes
----------
0  NotExcluded (check), converged (solve), all residuals within tolerance (verify), scan written
1  bad input: malformed config, domain error, model hash mismatch
2  Excluded (check)
3  Inconclusive (check)
4  NoSolution or NoConvergence (solve)
5  at least one residual above tolerance (verify)

Config schema (JSON)::

    {
      "model":   {"omega": 1.0, "m": 0.0, "e": 0.0,
                  "potential": {"family": "Logarithmic", "mu2": 1.0, "g": 1.0}},
      "solver":  {"R_max": null, "grid_size": 4096, "nodes": 0, "bracket": null,
                  "tol": 0.01, "newton_tol": 1e-10, "damping": 1.0,
                  "max_newton": 40, "min_step": 1e-6},
      "checker": {"phi_range": null, "n": 512, "tol": 1e-10},
      "verify":  {"general": 1e-4, "amplitude": 1e-4, "power": 1e-4,
                  "stationarity": 1e-3, "ode": 0.01},
      "scan":    {"axes": [{"name": "p", "range": [1.1, 7.0], "steps": 60}],
                  "operations": ["classify"]}
    }

Only ``model`` is required.  A null ``phi_range`` means ``[0, 1000 s]`` with
``s = max(1, field scale)``.  ``--tol`` overrides the checker tolerance for
``check``, the solver tolerance for ``solve`` and every identity tolerance
for ``verify``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .nogo import Status, classify_general, classify_power_law, POWER_LAW_CASES
from .potentials import DomainError, Family, ModelConfig
from .profile import RadialProfile, model_hash
from .solver import GaugedOptions, QBallOptions, SolverError, solve_gauged, solve_qball
from .virial import identity_report

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXCLUDED = 2
EXIT_INCONCLUSIVE = 3
EXIT_NO_SOLUTION = 4
EXIT_RESIDUAL = 5

STATUS_EXIT = {
    Status.NOT_EXCLUDED: EXIT_OK,
    Status.EXCLUDED: EXIT_EXCLUDED,
    Status.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}

SCAN_AXES = ("omega", "gamma", "p", "g", "mu2", "e", "m")
SCAN_OPERATIONS = ("classify", "solve", "verify")


class ConfigError(ValueError):
    """Config text or field failed validation; ``where`` locates the problem."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


# -- config ---------------------------------------------------------------

@dataclass(frozen=True)
class SolverSection:
    R_max: Optional[float] = None
    grid_size: int = 4096
    nodes: int = 0
    bracket: Optional[tuple[float, float]] = None
    tol: float = 1e-2
    newton_tol: float = 1e-10
    damping: float = 1.0
    max_newton: int = 40
    min_step: float = 1e-6

    def qball(self) -> QBallOptions:
        return QBallOptions(R_max=self.R_max, grid_size=self.grid_size, nodes=self.nodes,
                            bracket=self.bracket, tol=self.tol)

    def gauged(self) -> GaugedOptions:
        return GaugedOptions(R_max=self.R_max, grid_size=self.grid_size, tol=self.newton_tol,
                             damping=self.damping, max_newton=self.max_newton,
                             min_step=self.min_step, qball=self.qball())


@dataclass(frozen=True)
class CheckerSection:
    # None selects a range scaled to the model
    phi_range: Optional[tuple[float, float]] = None
    n: int = 512
    tol: float = 1e-10


@dataclass(frozen=True)
class VerifySection:
    general: float = 1e-4
    amplitude: float = 1e-4
    power: float = 1e-4
    stationarity: float = 1e-3
    ode: float = 1e-2

    def limit(self, identity: str) -> float:
        return getattr(self, identity)


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.steps)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "range": [self.lo, self.hi], "steps": self.steps}


@dataclass(frozen=True)
class ScanRequest:
    axes: tuple[Axis, ...] = ()
    operations: tuple[str, ...] = ("classify",)

    def to_dict(self) -> dict[str, Any]:
        return {"axes": [a.to_dict() for a in self.axes], "operations": list(self.operations)}


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    solver: SolverSection = field(default_factory=SolverSection)
    checker: CheckerSection = field(default_factory=CheckerSection)
    verify: VerifySection = field(default_factory=VerifySection)
    scan: ScanRequest = field(default_factory=ScanRequest)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "solver": _plain(dataclasses.asdict(self.solver)),
            "checker": _plain(dataclasses.asdict(self.checker)),
            "verify": dataclasses.asdict(self.verify),
            "scan": self.scan.to_dict(),
        }

    def hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_model(self, model: ModelConfig) -> "RunConfig":
        return dataclasses.replace(self, model=model)


def _plain(d: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _number(val, where: str, *, integer: bool = False, positive: bool = False, allow_none: bool = False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(where, f"expected a number, got {val!r}")
    if integer:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(where, f"expected an integer, got {val!r}")
        val = int(val)
    else:
        val = float(val)
    if not math.isfinite(val):
        raise ConfigError(where, "must be finite")
    if positive and not val > 0:
        raise ConfigError(where, f"must be > 0, got {val}")
    return val


def _pair(val, where: str, allow_none: bool = False):
    if val is None and allow_none:
        return None
    if not isinstance(val, (list, tuple)) or len(val) != 2:
        raise ConfigError(where, f"expected a pair [lo, hi], got {val!r}")
    return (_number(val[0], f"{where}[0]"), _number(val[1], f"{where}[1]"))


def _mapping(data, where: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(where, f"expected an object, got {type(data).__name__}")
    return data


def _section(data, cls, where: str, fields: dict) -> Any:
    data = _mapping(data, where)
    extra = set(data) - set(fields)
    if extra:
        raise ConfigError(where, f"unknown keys {sorted(extra)}; allowed {sorted(fields)}")
    kwargs = {k: conv(data[k], f"{where}.{k}") for k, conv in fields.items() if k in data}
    return cls(**kwargs)


def _parse_solver(data) -> SolverSection:
    pos = lambda v, w: _number(v, w, positive=True)
    sec = _section(data, SolverSection, "solver", {
        "R_max": lambda v, w: _number(v, w, positive=True, allow_none=True),
        "grid_size": lambda v, w: _number(v, w, integer=True, positive=True),
        "nodes": lambda v, w: _number(v, w, integer=True),
        "bracket": lambda v, w: _pair(v, w, allow_none=True),
        "tol": pos, "newton_tol": pos, "damping": pos,
        "max_newton": lambda v, w: _number(v, w, integer=True, positive=True),
        "min_step": pos,
    })
    if sec.nodes < 0:
        raise ConfigError("solver.nodes", "must be >= 0")
    if sec.grid_size < 16:
        raise ConfigError("solver.grid_size", "must be >= 16")
    return sec


def _parse_checker(data) -> CheckerSection:
    sec = _section(data, CheckerSection, "checker", {
        "phi_range": lambda v, w: _pair(v, w, allow_none=True),
        "n": lambda v, w: _number(v, w, integer=True, positive=True),
        "tol": lambda v, w: _number(v, w, positive=True),
    })
    if sec.phi_range is not None and not 0.0 <= sec.phi_range[0] < sec.phi_range[1]:
        raise ConfigError("checker.phi_range", f"need 0 <= lo < hi, got {list(sec.phi_range)}")
    return sec


def _parse_verify(data) -> VerifySection:
    pos = lambda v, w: _number(v, w, positive=True)
    return _section(data, VerifySection, "verify", {k.name: pos for k in dataclasses.fields(VerifySection)})


def _parse_scan(data) -> ScanRequest:
    data = _mapping(data, "scan")
    extra = set(data) - {"axes", "operations"}
    if extra:
        raise ConfigError("scan", f"unknown keys {sorted(extra)}")
    raw_axes = data.get("axes", [])
    if not isinstance(raw_axes, list) or len(raw_axes) > 2:
        raise ConfigError("scan.axes", "expected a list of at most 2 axes")
    axes = []
    for i, ax in enumerate(raw_axes):
        where = f"scan.axes[{i}]"
        ax = _mapping(ax, where)
        if set(ax) != {"name", "range", "steps"}:
            raise ConfigError(where, "axis needs exactly the keys name, range, steps")
        if ax["name"] not in SCAN_AXES:
            raise ConfigError(f"{where}.name", f"{ax['name']!r} is not one of {list(SCAN_AXES)}")
        lo, hi = _pair(ax["range"], f"{where}.range")
        steps = _number(ax["steps"], f"{where}.steps", integer=True, positive=True)
        axes.append(Axis(ax["name"], lo, hi, steps))
    if len({a.name for a in axes}) != len(axes):
        raise ConfigError("scan.axes", "axis names must be distinct")
    ops = data.get("operations", ["classify"])
    if not isinstance(ops, list) or not ops or any(op not in SCAN_OPERATIONS for op in ops):
        raise ConfigError("scan.operations", f"expected a non-empty subset of {list(SCAN_OPERATIONS)}")
    ordered = tuple(op for op in SCAN_OPERATIONS if op in ops)
    return ScanRequest(tuple(axes), ordered)


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded config record; raises :class:`ConfigError`."""
    data = _mapping(data, "config")
    extra = set(data) - {"model", "solver", "checker", "verify", "scan"}
    if extra:
        raise ConfigError("config", f"unknown sections {sorted(extra)}")
    if "model" not in data:
        raise ConfigError("model", "missing required section")
    model_data = _mapping(data["model"], "model")
    for key in ("omega", "potential"):
        if key not in model_data:
            raise ConfigError(f"model.{key}", "missing required field")
    try:
        model = ModelConfig.from_dict(model_data)
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError("model", str(exc)) from None
    cfg = RunConfig(
        model=model,
        solver=_parse_solver(data.get("solver", {})),
        checker=_parse_checker(data.get("checker", {})),
        verify=_parse_verify(data.get("verify", {})),
        scan=_parse_scan(data.get("scan", {})),
    )
    for ax in cfg.scan.axes:
        _apply_axis(cfg.model, ax.name, ax.lo, f"scan.axes.{ax.name}")
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a config file; JSON syntax errors carry line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_config(data)


def _apply_axis(model: ModelConfig, name: str, value: float, where: str = "scan") -> ModelConfig:
    value = float(value)
    try:
        if name in ("omega", "e", "m"):
            return model.replace(**{name: value})
        pot = model.potential
        allowed = {Family.POWER_LAW: ("gamma", "p"), Family.QUARTIC: ("mu2", "g"),
                   Family.LOGARITHMIC: ("mu2", "g")}.get(pot.family, ())
        if name not in allowed:
            raise ConfigError(where, f"parameter {name!r} does not apply to family {pot.family.value}")
        return model.replace(potential=dataclasses.replace(pot, **{name: value}))
    except DomainError as exc:
        raise ConfigError(where, str(exc)) from None


# -- operations -----------------------------------------------------------

def check_report(cfg: RunConfig) -> dict[str, Any]:
    """Verdict record: closed-form table for power laws plus the sampled conditions."""
    model = cfg.model
    ck = cfg.checker
    general = classify_general(model, ck.phi_range, ck.n, ck.tol)
    status = general.aggregate.status
    case = None
    power = None
    pot = model.potential
    if pot.family is Family.POWER_LAW:
        pv = classify_power_law(pot.gamma, pot.p, model.m2, model.omega2)
        # the last case leans on the Gauss law at m = omega, which needs e != 0
        edge = pv.condition == POWER_LAW_CASES[4] and model.m2 == model.omega2 and not model.gauged
        if edge:
            pv = dataclasses.replace(pv, status=Status.NOT_EXCLUDED, condition="power_law_table")
        power = pv.to_dict()
        if pv.excluded:
            status = Status.EXCLUDED
            case = pv.condition
    if case is None and general.aggregate.excluded:
        case = general.aggregate.condition
    return {
        "model": model.to_dict(),
        "status": status.value,
        "case": case,
        "power_law": power,
        "general": general.to_dict(),
    }


def solve_profile(cfg: RunConfig) -> RadialProfile:
    if cfg.model.e == 0.0:
        return solve_qball(cfg.model, cfg.solver.qball())
    return solve_gauged(cfg.model, cfg.solver.gauged())


def profile_summary(profile: RadialProfile) -> dict[str, Any]:
    out = {
        "model": profile.model.to_dict(),
        "model_hash": model_hash(profile.model),
        "phi0": profile.phi0,
        "r_max": profile.r_max,
        "grid_size": len(profile.r),
        "ode_residual": profile.ode_residual,
        "nodes": profile.node_count(),
    }
    for key in ("coulomb_tail", "charge", "gauss_law_constant"):
        if key in profile.meta:
            out[key] = profile.meta[key]
    return out


def verify_report(profile: RadialProfile, tolerances: VerifySection) -> dict[str, Any]:
    """Identity residual table with a pass flag per row."""
    if profile.is_zero():
        rows = [{"identity": "trivial", "alpha": None, "beta": None, "residual": 0.0}]
        report = {"functionals": None, "action": 0.0, "rows": rows}
    else:
        report = identity_report(profile)
        ode = profile.ode_residual
        if math.isfinite(ode):
            report["rows"].append({"identity": "ode", "alpha": None, "beta": None, "residual": ode})
    ok = True
    for row in report["rows"]:
        limit = tolerances.limit(row["identity"]) if row["identity"] != "trivial" else 0.0
        row["tolerance"] = limit
        row["passed"] = bool(row["residual"] <= limit)
        ok &= row["passed"]
    report["passed"] = ok
    report["model_hash"] = model_hash(profile.model)
    return report


def load_profile(path, cfg: RunConfig) -> RadialProfile:
    """Read a profile file and confirm it belongs to the configured model."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return RadialProfile.from_csv(path, cfg.model)
    prof = RadialProfile.from_json(path)
    if model_hash(prof.model) != model_hash(cfg.model):
        raise ConfigError(str(path), f"model hash {model_hash(prof.model)} does not match "
                                     f"config model hash {model_hash(cfg.model)}")
    return prof


# -- scan -----------------------------------------------------------------

def scan_points(cfg: RunConfig) -> list[tuple[tuple[int, ...], dict[str, float]]]:
    """Grid points in row-major order (first axis slowest)."""
    axes = cfg.scan.axes
    pts = []
    for idx in itertools.product(*(range(a.steps) for a in axes)):
        params = {a.name: float(a.values()[i]) for a, i in zip(axes, idx)}
        pts.append((tuple(idx), params))
    return pts


def _scan_point(task) -> dict[str, Any]:
    idx, params, cfg_dict = task
    record: dict[str, Any] = {"index": list(idx), "parameters": params, "verdict": None,
                              "solved": False, "phi0": None, "residuals": None, "error": None}
    try:
        cfg = parse_config(cfg_dict)
        model = cfg.model
        for name, val in params.items():
            model = _apply_axis(model, name, val)
        cfg = cfg.with_model(model)
        ops = cfg.scan.operations
        if "classify" in ops:
            rep = check_report(cfg)
            record["verdict"] = {"status": rep["status"], "case": rep["case"]}
        if "solve" in ops or "verify" in ops:
            prof = solve_profile(cfg)
            record["solved"] = True
            record["phi0"] = prof.phi0
            record["residuals"] = {"ode_residual": prof.ode_residual}
            if "verify" in ops:
                rep = verify_report(prof, cfg.verify)
                record["residuals"]["max_identity"] = max(
                    (r["residual"] for r in rep["rows"] if r["identity"] != "ode"), default=0.0)
                record["residuals"]["passed"] = rep["passed"]
    except (SolverError, DomainError, ConfigError, ValueError) as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


_CSV_COLUMNS = ("index", "status", "case", "solved", "phi0", "ode_residual", "max_identity", "error")


def _csv_row(record: dict[str, Any], axes: Sequence[Axis]) -> list[str]:
    verdict = record["verdict"] or {}
    res = record["residuals"] or {}
    cells = [";".join(str(i) for i in record["index"])]
    cells += [_fmt(record["parameters"][a.name]) for a in axes]
    cells += [verdict.get("status", ""), verdict.get("case") or "", str(record["solved"]).lower(),
              _fmt(record["phi0"]), _fmt(res.get("ode_residual")), _fmt(res.get("max_identity")),
              record["error"] or ""]
    return cells


def _fmt(v) -> str:
    return "" if v is None else f"{v:.17g}"


def run_scan(cfg: RunConfig, out_dir, jobs: int = 1) -> dict[str, Any]:
    """Evaluate every grid point; records stream to disk in grid order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_dict = cfg.to_dict()
    tasks = [(idx, params, cfg_dict) for idx, params in scan_points(cfg)]
    header = {"tool": "kgmsoliton", "version": __version__, "config_hash": cfg.hash(),
              "config": cfg_dict, "points": len(tasks)}
    records = []
    with open(out_dir / "scan.jsonl", "w") as jl, open(out_dir / "scan.csv", "w", newline="") as fc:
        writer = csv.writer(fc)
        writer.writerow([_CSV_COLUMNS[0], *(a.name for a in cfg.scan.axes), *_CSV_COLUMNS[1:]])
        jl.write(json.dumps({"provenance": header}) + "\n")
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_scan_point, tasks)
                _drain(results, records, jl, fc, writer, cfg.scan.axes)
        else:
            _drain(map(_scan_point, tasks), records, jl, fc, writer, cfg.scan.axes)
    result = {"provenance": header, "records": records}
    (out_dir / "scan.json").write_text(json.dumps(result, indent=1, ensure_ascii=False))
    return result


def _drain(results, records, jl, fc, writer, axes) -> None:
    for rec in results:
        records.append(rec)
        jl.write(json.dumps(rec, ensure_ascii=False) + "\n")
        jl.flush()
        writer.writerow(_csv_row(rec, axes))
        fc.flush()


# -- command handlers -----------------------------------------------------

def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, default=_json_default, ensure_ascii=False))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _override_tol(cfg: RunConfig, command: str, tol: Optional[float]) -> RunConfig:
    if tol is None:
        return cfg
    if not tol > 0:
        raise ConfigError("--tol", "must be > 0")
    if command == "check":
        return dataclasses.replace(cfg, checker=dataclasses.replace(cfg.checker, tol=tol))
    if command == "solve":
        return dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, tol=tol, newton_tol=tol))
    if command == "verify":
        vals = {f.name: tol for f in dataclasses.fields(VerifySection)}
        return dataclasses.replace(cfg, verify=VerifySection(**vals))
    return cfg


def cmd_check(cfg: RunConfig, args) -> int:
    rep = check_report(cfg)
    _emit(rep)
    return STATUS_EXIT[Status(rep["status"])]


def cmd_solve(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        prof = solve_profile(cfg)
    except SolverError as exc:
        failure = {"status": type(exc).__name__, "message": str(exc),
                   "model": cfg.model.to_dict(), "trace": exc.trace}
        (out / "solve_failure.json").write_text(json.dumps(failure, indent=1, default=_json_default))
        _emit(failure)
        return EXIT_NO_SOLUTION
    prof.to_csv(out / "profile.csv")
    prof.to_json(out / "profile.json")
    summary = profile_summary(prof)
    summary["files"] = [str(out / "profile.csv"), str(out / "profile.json")]
    _emit(summary)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    prof = load_profile(args.profile, cfg)
    rep = verify_report(prof, cfg.verify)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(rep, indent=1, default=_json_default))
    _emit(rep)
    return EXIT_OK if rep["passed"] else EXIT_RESIDUAL


def cmd_scan(cfg: RunConfig, args) -> int:
    if args.jobs < 1:
        raise ConfigError("--jobs", "must be >= 1")
    res = run_scan(cfg, args.out, args.jobs)
    failed = sum(rec["error"] is not None for rec in res["records"])
    _emit({"points": len(res["records"]), "failed": failed,
           "config_hash": res["provenance"]["config_hash"], "out": str(args.out)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgmsoliton",
        description="Non-existence checks, profiles and scaling identities for "
                    "Klein-Gordon-Maxwell standing waves.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default: Optional[str]):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")

    common(sub.add_parser("check", help="classify the model with the no-go checkers"), None)
    common(sub.add_parser("solve", help="solve for a profile and write CSV + JSON"), ".")
    p = sub.add_parser("verify", help="scaling-identity residuals of a stored profile")
    p.add_argument("profile", help="profile JSON (or CSV, taken to match the config model)")
    common(p, None)
    p = sub.add_parser("scan", help="sweep up to two parameters")
    common(p, "scan_out")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


HANDLERS = {"check": cmd_check, "solve": cmd_solve, "verify": cmd_verify, "scan": cmd_scan}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _override_tol(load_config(args.config), args.command, args.tol)
        return HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "where": exc.where, "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR
    except (DomainError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

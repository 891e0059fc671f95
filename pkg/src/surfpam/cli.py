"""Command-line front end.

Every acceptance criterion is reachable through a subcommand.  Each run writes
JSON reports and CSV tables into the output directory and appends an entry to
``manifest.json`` keyed by a hash of the effective configuration.

Exit status: 0 when every pass flag is true, 1 otherwise, 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import csv
import hashlib
import io
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, SurfpamError
from .solver import SolverConfig, picard_solve

SUBCOMMANDS = {
    "geometry-check": (1,),
    "heat-check": (4, 5),
    "poly-check": (2, 3),
    "noise-stats": (7,),
    "model-check": (8,),
    "schauder-check": (6, 10),
    "reconstruct-check": (9,),
    "solve": (),
    "compare": (11, 12),
    "all": tuple(range(1, 13)),
}

SOLVER_KEYS = {
    "alpha": float,
    "gamma": float,
    "gamma0": float,
    "eps": float,
    "N": float,
    "T": float,
    "M": int,
    "K": int,
    "surface": str,
    "seed": int,
    "tol": float,
    "max_iter": int,
}
RUN_KEYS = {"out": str, "tol_scale": float}
CHECK_SECTION = re.compile(r"^check\.(\d+)$")


@dataclass
class RunConfig:
    """Effective configuration of one invocation."""

    solver: dict = field(default_factory=dict)
    out: str = "surfpam_out"
    tol_scale: float = 1.0
    checks: dict = field(default_factory=dict)
    source: str = "defaults"

    def solver_config(self):
        cfg = SolverConfig(**self.solver)
        cfg.validate()
        return cfg

    def to_dict(self):
        return {"solver": dict(sorted(self.solver.items())), "tol_scale": self.tol_scale, "checks": {str(k): dict(sorted(v.items())) for k, v in sorted(self.checks.items())}}

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------
def _line_of(text, section, key):
    """1-based line of ``key`` inside ``[section]`` (0 if not found)."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and re.match(rf"^{re.escape(key)}\s*[=:]", line):
            return i
    return 0


def _convert(path, text, section, key, raw, kind):
    try:
        if kind is str:
            return raw
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{path}:{_line_of(text, section, key)}: [{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None


def load_config(path):
    """Parse an INI-style configuration file.

    Sections: ``[solver]`` (solver parameters), ``[run]`` (``out``,
    ``tol_scale``) and ``[check.<n>]`` (keyword overrides for criterion
    ``n``, values parsed as Python literals).

    Raises
    ------
    ConfigError
        With ``file:line`` for syntax errors, unknown keys and bad values.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration ({exc.strerror})") from None
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: key outside of any section") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else 0
        raise ConfigError(f"{path}:{lineno}: cannot parse line") from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.message if hasattr(exc, 'message') else exc}") from None
    rc = RunConfig(source=str(path))
    for section in parser.sections():
        items = parser[section]
        m = CHECK_SECTION.match(section)
        if section == "solver":
            for key, raw in items.items():
                if key not in SOLVER_KEYS:
                    raise ConfigError(f"{path}:{_line_of(text, section, key)}: unknown solver key {key!r}")
                rc.solver[key] = _convert(path, text, section, key, raw, SOLVER_KEYS[key])
        elif section == "run":
            for key, raw in items.items():
                if key not in RUN_KEYS:
                    raise ConfigError(f"{path}:{_line_of(text, section, key)}: unknown run key {key!r}")
                setattr(rc, key, _convert(path, text, section, key, raw, RUN_KEYS[key]))
        elif m:
            n = int(m.group(1))
            if not 1 <= n <= 12:
                raise ConfigError(f"{path}:{_line_of_section(text, section)}: no criterion {n}")
            kw = {}
            for key, raw in items.items():
                try:
                    kw[key] = ast.literal_eval(raw)
                except (ValueError, SyntaxError):
                    raise ConfigError(f"{path}:{_line_of(text, section, key)}: [{section}] {key} = {raw!r} is not a literal") from None
            rc.checks[n] = kw
        else:
            raise ConfigError(f"{path}:{_line_of_section(text, section)}: unknown section [{section}]")
    try:
        rc.solver_config()
    except (ConfigError, TypeError, ValueError) as exc:
        m = re.match(r"^(\w+)", str(exc))
        line = _line_of(text, "solver", m.group(1)) if m else 0
        raise ConfigError(f"{path}:{line}: {exc}") from None
    return rc


def _line_of_section(text, section):
    for i, raw in enumerate(text.splitlines(), start=1):
        if raw.strip() == f"[{section}]":
            return i
    return 0


# ----------------------------------------------------------------------------
# artifacts
# ----------------------------------------------------------------------------
def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    return str(o)


def _report_rows(result):
    rows = []
    for rep in _flatten_reports(result.reports):
        for s, m in zip(rep["scales"], rep["magnitudes"]):
            rows.append((result.criterion, rep["label"], s, m, rep["slope"], rep["target"], rep["tolerance"], rep["mode"], rep["passed"]))
    return rows


def _flatten_reports(reports):
    out = []
    for r in reports:
        if "scales" in r:
            out.append(r)
        else:
            for key in ("homogeneity", "transport", "growth"):
                out.extend(r.get(key, []))
    return out


class Manifest:
    """Append-only index ``config hash -> artifacts`` in ``out/manifest.json``."""

    def __init__(self, out):
        self.path = Path(out) / "manifest.json"
        self.data = json.loads(self.path.read_text(encoding="utf-8")) if self.path.exists() else {}

    def add(self, digest, config, artifact):
        entry = self.data.setdefault(digest, {"config": config, "artifacts": []})
        if artifact not in entry["artifacts"]:
            entry["artifacts"].append(artifact)
        _write_json(self.path, self.data)


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------
def _check_kwargs(rc, n, extra=None):
    import inspect

    from .checks import RUNNERS

    kw = dict(rc.checks.get(n, {}))
    if "tol_scale" in inspect.signature(RUNNERS[n]).parameters:
        kw.setdefault("tol_scale", rc.tol_scale)
    kw.update(extra or {})
    return kw


def run_checks(rc, criteria, out, digest, manifest, extra=None, stream=None):
    from .checks import RUNNERS, CheckResult

    results = []
    for n in criteria:
        stem = f"C{n:02d}-{digest}"
        _write_json(out / f"{stem}.json", {"criterion": n, "complete": False})
        try:
            res = RUNNERS[n](**_check_kwargs(rc, n, (extra or {}).get(n)))
            payload = dict(res.to_dict(), complete=True)
        except SurfpamError as exc:
            res = CheckResult(n, False, {"error": f"{type(exc).__name__}: {exc}"})
            payload = dict(res.to_dict(), complete=False)
        _write_json(out / f"{stem}.json", payload)
        _write_csv(out / f"{stem}.csv", ["criterion", "label", "scale", "magnitude", "slope", "target", "tolerance", "mode", "passed"], _report_rows(res))
        manifest.add(digest, rc.to_dict(), f"{stem}.json")
        manifest.add(digest, rc.to_dict(), f"{stem}.csv")
        print(res.line(), file=stream or sys.stdout, flush=True)
        results.append(res)
    return all(r.passed for r in results)


def run_solve(rc, out, digest, manifest, stream=None):
    cfg = rc.solver_config()
    res = picard_solve(cfg)
    sp = res.space
    nodes = sp.grid.nodes
    rows = [(t, i, *nodes[i], res.U[j, i]) for j, t in enumerate(sp.times) for i in range(nodes.shape[0])]
    coords = [f"x{k}" for k in range(nodes.shape[1])]
    stem = f"solve-{digest}"
    _write_csv(out / f"{stem}.csv", ["time", "point", *coords, "value"], rows)
    _write_json(out / f"{stem}.json", {"config": cfg.to_dict(), "seed": cfg.seed, "N": res.N, "contraction_factor": res.factor, "factors_by_N": res.factors_by_N, "iterations": res.iterations, "converged": res.converged, "increments": res.increments, "complete": True})
    manifest.add(digest, rc.to_dict(), f"{stem}.csv")
    manifest.add(digest, rc.to_dict(), f"{stem}.json")
    print(f"solve {'OK' if res.converged else 'FAIL'}: factor={res.factor:.4g}, N={res.N:g}, iterations={res.iterations}", file=stream or sys.stdout)
    return res.converged


def build_parser():
    ap = argparse.ArgumentParser(prog="surfpam", description="Parabolic Anderson model laboratory on the torus and the sphere.")
    ap.add_argument("--version", action="version", version=f"surfpam {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--surface", choices=("torus", "sphere"))
        p.add_argument("--K", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--T", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--tol-scale", dest="tol_scale", type=float)
        if name == "model-check":
            p.add_argument("structure", nargs="?", choices=("V", "W"), help="restrict to one structure")
        if name == "poly-check":
            p.add_argument("--n", type=int, choices=(1, 2, 3), help="restrict to one polynomial order")
    return ap


def resolve_config(args):
    rc = load_config(args.config) if args.config else RunConfig()
    for key in ("surface", "K", "alpha", "gamma", "T", "seed"):
        v = getattr(args, key)
        if v is not None:
            rc.solver[key] = v
    if args.out is not None:
        rc.out = args.out
    if args.tol_scale is not None:
        if args.tol_scale <= 0:
            raise ConfigError(f"--tol-scale must be positive, got {args.tol_scale}")
        rc.tol_scale = args.tol_scale
    try:
        rc.solver_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return rc


def _solver_overrides(rc):
    s = rc.solver
    c11 = {k: s[k] for k in ("K", "T", "M", "seed") if k in s}
    return {11: c11}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = resolve_config(args)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = rc.digest()
    manifest = Manifest(out)
    extra = _solver_overrides(rc)
    cmd = args.command
    if cmd == "model-check" and args.structure:
        extra[8] = {"structures": (args.structure,)}
    if cmd == "poly-check" and args.n:
        extra[2] = {"orders": (args.n,)}
        extra[3] = {"orders": (args.n,)} if args.n <= 2 else {}
    criteria = SUBCOMMANDS[cmd]
    if cmd == "poly-check" and args.n == 3:
        criteria = (2,)
    ok = True
    if cmd in ("solve", "all"):
        ok &= run_solve(rc, out, digest, manifest)
    if criteria:
        ok &= run_checks(rc, criteria, out, digest, manifest, extra)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line runner: ``python -m spinc_lab <command> ...``.

Exit codes: 0 when every asserted check passes, 2 when a check fails,
1 for configuration or numerical-infrastructure errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import checks as ck
from .report import Report, write_atomic
from .scenarios import UnknownScenarioError, describe, scenario_catalog

EXIT_OK, EXIT_INFRA, EXIT_FAIL = 0, 1, 2
SAMPLED = set(ck.VERIFY)
WORKERS_ENV = "SPINC_LAB_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    check: Optional[str] = None
    scenario: Optional[str] = None
    grid: Optional[int] = None
    flux: Optional[int] = None
    samples: int = 20
    seed: Optional[int] = None
    tol: Optional[float] = None
    h: Optional[float] = None
    t_interval: Optional[list] = None
    eigs: Optional[int] = None
    k: Optional[object] = None
    psi: Optional[str] = None
    eps: Optional[float] = None
    lam: Optional[object] = None
    pairing_constant: Optional[float] = None
    calibrate: bool = False
    output: Optional[str] = None
    format: str = "json"
    csv: Optional[str] = None
    dump_eigenvectors: Optional[str] = None
    dump_operator: Optional[str] = None

    @classmethod
    def keys(cls) -> set:
        return {f.name for f in fields(cls)}

    def validate(self) -> None:
        if self.command == "verify":
            if self.check not in ck.VERIFY:
                raise ConfigError(f"unknown verify check {self.check!r}; choose from {sorted(ck.VERIFY)}")
            if self.seed is None:
                raise ConfigError("a seed is required for sampled runs (--seed)")
            if int(self.samples) < 1:
                raise ConfigError("samples must be positive")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown report format {self.format!r}")
        if self.grid is not None and int(self.grid) < 8:
            raise ConfigError("grid must be at least 8")
        if self.t_interval is not None and (len(self.t_interval) != 2 or
                                            self.t_interval[0] >= self.t_interval[1]):
            raise ConfigError("t_interval must be [t0, t1] with t0 < t1")

    def echo(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


ALIASES = {"immersion": "scenario", "cylinder": "scenario", "lambda": "lam", "out": "output"}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    out = {}
    for key, val in raw.items():
        name = ALIASES.get(key, key).replace("-", "_")
        if name not in RunConfig.keys():
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = val
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinc-lab", description="Spin^c spinor calculus laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    ls = sub.add_parser("list-scenarios", help="catalog of model manifolds")
    ls.add_argument("--json", action="store_true")

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override its values")
        sp.add_argument("--scenario")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--out", dest="output", help="report path (stdout when omitted)")
        sp.add_argument("--format", choices=("json", "csv"))

    v = sub.add_parser("verify", help="pointwise identity checks")
    v.add_argument("check", choices=sorted(ck.VERIFY))
    common(v)
    v.add_argument("--immersion", dest="scenario_alias")
    v.add_argument("--cylinder", dest="scenario_alias2")
    v.add_argument("--samples", type=int)
    v.add_argument("--t-interval", type=float, nargs=2, dest="t_interval")

    s = sub.add_parser("spectrum", help="lattice Dirac spectrum")
    common(s)
    s.add_argument("--grid", type=int)
    s.add_argument("--flux", type=int)
    s.add_argument("--eigs", type=int)
    s.add_argument("--csv")
    s.add_argument("--dump-eigenvectors")
    s.add_argument("--dump-operator")

    va = sub.add_parser("variation", help="metric variation of the Dirac form")
    common(va)
    va.add_argument("--k")
    va.add_argument("--psi")
    va.add_argument("--h", type=float)
    va.add_argument("--grid", type=int)
    va.add_argument("--pairing-constant", type=float)
    va.add_argument("--calibrate", action="store_true", default=None)

    fk = sub.add_parser("frkim", help="first variation of the Lagrange functional")
    common(fk)
    fk.add_argument("--eps", type=float)
    fk.add_argument("--lambda", dest="lam")
    fk.add_argument("--psi")
    fk.add_argument("--h", type=float)
    fk.add_argument("--grid", type=int)

    b = sub.add_parser("bound", help="eigenvalue lower bound margins")
    common(b)
    b.add_argument("--grid", type=int)
    b.add_argument("--flux", type=int)
    b.add_argument("--eigs", type=int)
    return p


def build_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    for alias in ("scenario_alias", "scenario_alias2"):
        if alias in flags:
            flags["scenario"] = flags.pop(alias)
    if "k" in flags and isinstance(flags["k"], str) and flags["k"].lstrip().startswith(("{", "[")):
        flags["k"] = json.loads(flags["k"])
    values.update(flags)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def list_scenarios(as_json: bool) -> str:
    rows = [describe(sc) for sc in scenario_catalog()]
    if as_json:
        from .report import dumps
        return dumps(rows) + "\n"
    head = f"{'name':30s} {'dim':>3s} {'sig':>5s}  {'backends':20s} reference"
    lines = [head, "-" * len(head)]
    for r in rows:
        sig = f"{r['signature'][0]},{r['signature'][1]}"
        lines.append(f"{r['name']:30s} {r['dim']:3d} {sig:>5s}  {','.join(r['backends']):20s} "
                     f"{','.join(r['reference']) or '-'}")
    return "\n".join(lines) + "\n"


def execute(cfg: RunConfig) -> Report:
    rep = Report(cfg.command if cfg.command != "verify" else f"verify {cfg.check}", cfg.echo())
    start = time.perf_counter()
    fn = ck.VERIFY[cfg.check] if cfg.command == "verify" else ck.COMMANDS[cfg.command]
    records, data = fn(cfg)
    rep.checks.extend(records)
    rep.data = data
    rep.timing = {"wall_seconds": time.perf_counter() - start, "workers": workers()}
    return rep


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be positive")
    return n


def _csv_report(rep: Report) -> str:
    lines = ["name,residual,tolerance,passed,asserted,anchor"]
    for c in rep.checks:
        lines.append(f"{c.name},{c.residual:.17g},{c.tolerance:.17g},{int(c.passed)},{int(c.asserted)},"
                     f"\"{c.anchor}\"")
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig) -> tuple[int, Report]:
    rep = execute(cfg)
    text = rep.to_json() if cfg.format == "json" else _csv_report(rep)
    if cfg.output:
        write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)
    return (EXIT_OK if rep.all_passed else EXIT_FAIL), rep


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            sys.stdout.write(list_scenarios(args.json))
            return EXIT_OK
        workers()
        cfg = build_config(args)
        code, rep = run(cfg)
        s = rep.summary()
        print(f"{rep.command}: {s['passed']}/{s['asserted']} checks passed, worst residual "
              f"{s['worst_residual']:.3e}", file=sys.stderr)
        return code
    except (ConfigError, UnknownScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    except (ValueError, RuntimeError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``seqrad <command> --input PATH [options]``.

Exit codes: 0 every enabled verdict passed, 1 infrastructure error (I/O,
unreadable input), 2 usage error, 3 at least one verdict failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy

from . import __version__
from .bounds import HEAT_UPPER_GATED, a_of_class, adjudicate_heat_upper, theorem3_sandwich
from .control import ConstantPolicy, greedy_policy_from_solution, simulate_policy
from .core import FunctionClass, gamma_of, load_class_file
from .errors import SeqradError
from .exact_dp import DPConfig, convergence_table, integer_scale, strategy_tree, table_csv
from .gaussian_iid import Measure, iid_asymptotic
from .gheat import build_grid, slices_csv, solve_gheat

log = logging.getLogger("seqrad")

COMMANDS = {
    "exact": "exact finite-n values along a schedule",
    "pde": "grid solution of the G-heat problem at two resolutions",
    "iid": "Gaussian expected maximum for the iid comparison",
    "bounds": "lower and upper bounds checked against the grid value",
    "control": "constant and greedy policy simulations",
    "report": "all of the above",
}
EXIT_OK, EXIT_INFRA, EXIT_USAGE, EXIT_FAIL = 0, 1, 2, 3
MAX_CONSTANT_POLICIES = 8
MAX_RETAINED_VALUES = 5 * 10**7

# grid defaults per dimension, in units of b for h and L
_PDE_DEFAULTS = {1: (0.02, 0.004, 6.0), 2: (0.02, 0.004, 6.0), 3: (0.05, 0.01, 3.0), 4: (0.1, 0.05, 2.5)}
_GREEDY_DEFAULTS = {1: (0.05, 0.01, 6.0), 2: (0.05, 0.01, 6.0), 3: (0.1, 0.02, 3.0), 4: (0.25, 0.05, 2.5)}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    n: int | None = None
    schedule: list[int] | None = None
    n_max: int = 1024
    memo_mode: str = "exact-integer"
    budget: int = 10**7
    h: float | None = None
    dt: float | None = None
    L: float | None = None
    samples: int = 100_000
    seed: int = 42
    steps: int = 256
    measure: list[float] | None = None
    tol: float = 1e-2
    output_path: str | None = None
    csv_path: str | None = None
    strategy_path: str | None = None
    slices_path: str | None = None
    adjudicate: bool = True
    adjudication_h: float = 0.01
    timing: bool = False


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", dest="input_path", help="class document (JSON)")
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--n", type=int, help="number of rounds for the exact value")
    p.add_argument("--schedule", type=_int_list, help="comma-separated list of n values")
    p.add_argument("--n-max", dest="n_max", type=int, help="largest n of the default doubling schedule")
    p.add_argument("--memo-mode", dest="memo_mode", choices=("exact-integer", "float-hash", "none"))
    p.add_argument("--budget", type=int, help="node budget for the exact recursion")
    p.add_argument("--h", type=float, help="grid spacing")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--L", type=float, help="grid half-width")
    p.add_argument("--samples", type=int, help="Monte Carlo samples / paths")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="Euler steps for policy simulation")
    p.add_argument("--measure", type=_float_list, help="weights on the domain points")
    p.add_argument("--tol", type=float, help="tolerance for grid-based verdicts")
    p.add_argument("--out", dest="output_path", help="report path (default: stdout)")
    p.add_argument("--csv", dest="csv_path", help="write the exact or pde table here")
    p.add_argument("--strategy", dest="strategy_path", help="dump the exact strategy tree (JSON)")
    p.add_argument("--slices", dest="slices_path", help="dump retained grid slices (CSV)")
    p.add_argument("--no-adjudication", dest="adjudicate", action="store_false", default=None)
    p.add_argument("--adjudication-h", dest="adjudication_h", type=float)
    p.add_argument("--timing", action="store_true", default=None, help="add wall-clock timings")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqrad", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"seqrad {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    common = _options()
    for name, text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Parse arguments; values from ``--config`` are overridden by flags."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        if exc.code == 0:  # --help / --version
            raise
        raise UsageError(parser.format_usage()) from exc
    if args.command is None:
        raise UsageError(parser.format_help())
    values: dict[str, Any] = {}
    known = {f.name for f in fields(RunConfig)}
    if args.config:
        try:
            file_vals = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_vals, dict):
            raise UsageError("config file must hold a JSON object")
        aliases = {"input": "input_path", "out": "output_path", "csv": "csv_path"}
        for k, v in file_vals.items():
            k = aliases.get(k, k.replace("-", "_"))
            if k not in known or k == "command":
                raise UsageError(f"unknown config key {k!r}")
            values[k] = v
    for k, v in vars(args).items():
        if k in known and v is not None:
            values[k] = v
    values["command"] = args.command
    cfg = RunConfig(**values)
    if not cfg.input_path:
        raise UsageError(f"seqrad {cfg.command}: --input is required\n" + parser.format_usage())
    if cfg.n is not None and cfg.schedule is not None:
        raise UsageError("--n and --schedule are mutually exclusive")
    return cfg


def _verdict(status: str, reason: str = "") -> dict:
    return {"status": status, "reason": reason}


def _finite(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError("non-finite number in report")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


class Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        obj = load_class_file(cfg.input_path)
        if isinstance(obj, FunctionClass):
            self.fc, self.gamma = obj, gamma_of(obj)
        else:
            # every vector of a directly supplied set is one domain point
            self.gamma, self.fc = obj, FunctionClass(obj.vectors.T, label=obj.label)
        self.report: dict[str, Any] = {
            "class": {
                "label": obj.label,
                "source": "functions" if isinstance(obj, FunctionClass) else "gamma",
                "m": self.gamma.m,
                "gamma_size": self.gamma.size,
                "z_count": self.fc.z_count,
                "b": self.gamma.b,
            },
            "verdicts": {},
            "versions": {"seqrad": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        }
        self.timing: dict[str, float] = {}
        self._pde_value: float | None = None

    # -- phases ---------------------------------------------------------

    def _phase(self, name: str):
        log.info("phase %s", name)
        return time.perf_counter()

    def _done(self, name: str, t0: float) -> None:
        self.timing[name] = time.perf_counter() - t0

    def exact(self) -> None:
        t0 = self._phase("exact")
        cfg = self.cfg
        if cfg.n is not None:
            schedule = [cfg.n]
        elif cfg.schedule is not None:
            schedule = sorted(cfg.schedule)
        else:
            schedule, n = [], 1
            while n <= cfg.n_max:
                schedule.append(n)
                n *= 2
        rows = convergence_table(self.gamma, schedule, memo_mode=cfg.memo_mode, node_budget=cfg.budget)
        keys, fallback = cfg.memo_mode, None
        if cfg.memo_mode == "exact-integer" and integer_scale(self.gamma, DPConfig(n=1).scale_denominator) is None:
            keys, fallback = "float-hash", "entries are not small-denominator rationals; float keys quantized at 2^-40"
        self.report["exact"] = {
            "memo_mode": cfg.memo_mode,
            "keys": keys,
            "fallback_reason": fallback,
            "node_budget": cfg.budget,
            "rows": [{"n": r.n, "value": r.value, "delta": r.delta, "status": r.status, "reason": r.reason}
                     for r in rows],
        }
        done = [r for r in rows if r.value is not None]
        m, b = self.gamma.m, self.gamma.b
        if m < 2:
            self.report["verdicts"]["exact_upper_bound"] = _verdict("SKIPPED", "NeedTwoFunctions: m = 1")
        elif not done:
            self.report["verdicts"]["exact_upper_bound"] = _verdict("SKIPPED", "no feasible n")
        else:
            cap = b * math.sqrt(2 * math.log(m))
            worst = max(r.value for r in done)
            ok = worst <= cap + 1e-12
            self.report["verdicts"]["exact_upper_bound"] = _verdict(
                "PASS" if ok else "FAIL", f"max exact value {worst!r} vs b*sqrt(2 ln m) = {cap!r}")
        if cfg.csv_path and cfg.command == "exact":
            Path(cfg.csv_path).write_text(table_csv(rows), encoding="utf-8")
        if cfg.strategy_path:
            n = schedule[-1]
            tree = strategy_tree(self.gamma, DPConfig(n=n, memo_mode=cfg.memo_mode, node_budget=cfg.budget))
            Path(cfg.strategy_path).write_text(json.dumps(tree), encoding="utf-8")
        self._done("exact", t0)

    def _grid_params(self, table: dict) -> tuple[float, float, float]:
        m, b = self.gamma.m, self.gamma.b
        scale = b if b > 0 else 1.0
        h0, dt0, L0 = table[m] if m in table else table[4]
        h = self.cfg.h if self.cfg.h is not None else h0 * scale
        dt = self.cfg.dt if self.cfg.dt is not None else (h / 5 if self.cfg.h is not None else dt0)
        L = self.cfg.L if self.cfg.L is not None else max(L0 * scale, 8 * h)
        return h, dt, L

    def pde(self) -> float | None:
        t0 = self._phase("pde")
        h, dt, L = self._grid_params(_PDE_DEFAULTS)
        section: dict[str, Any] = {"tolerance": self.cfg.tol}
        try:
            grid = build_grid(self.gamma.m, self.gamma, h, dt, L=L)
        except SeqradError as exc:
            section["status"] = f"SKIPPED: {type(exc).__name__}: {exc}"
            self.report["pde"] = section
            self._done("pde", t0)
            return None
        keep = bool(self.cfg.slices_path)
        sr = solve_gheat(self.gamma, grid, retain_slices=keep)
        section.update({"h": grid.h, "dt": grid.dt, "L": grid.L, "nodes_per_axis": grid.nodes_per_axis,
                        "value": sr.value_at_origin})
        rows = [(grid.h, grid.dt, sr.value_at_origin)]
        if self.cfg.command in ("pde", "report"):
            try:
                fine = build_grid(self.gamma.m, self.gamma, h / 2, dt / 2, L=L)
                fv = solve_gheat(self.gamma, fine).value_at_origin
                rows.append((fine.h, fine.dt, fv))
                section["refined"] = {"h": fine.h, "dt": fine.dt, "value": fv}
                section["richardson_estimate"] = 2 * fv - sr.value_at_origin
            except SeqradError as exc:
                section["refined"] = {"status": f"SKIPPED: {type(exc).__name__}: {exc}"}
        section["table"] = [{"h": a, "dt": b, "value": c} for a, b, c in rows]
        if self.cfg.csv_path and self.cfg.command == "pde":
            lines = ["h,dt,value"] + [f"{a!r},{b!r},{c!r}" for a, b, c in rows]
            Path(self.cfg.csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        if keep:
            levels = range(0, len(sr.slices), max(1, (len(sr.slices) - 1) // 4))
            Path(self.cfg.slices_path).write_text(slices_csv(sr.slices, levels), encoding="utf-8")
        self.report["pde"] = section
        self._pde_value = sr.value_at_origin
        self._done("pde", t0)
        return sr.value_at_origin

    def _need_pde(self) -> float | None:
        if self._pde_value is None and "pde" not in self.report:
            self.pde()
        return self._pde_value

    def iid(self) -> None:
        t0 = self._phase("iid")
        cfg = self.cfg
        measures: dict[str, Measure] = {}
        if cfg.measure is not None:
            if len(cfg.measure) != self.fc.z_count:
                raise UsageError(f"--measure needs {self.fc.z_count} weights")
            measures["user"] = Measure.normalized(cfg.measure)
        else:
            measures["uniform"] = Measure.uniform(self.fc.z_count)
        if self.fc.m >= 2:
            measures["nu_star"] = a_of_class(self.fc)[1]
        section: dict[str, Any] = {}
        for name, nu in measures.items():
            est = iid_asymptotic(self.fc, nu, cfg.samples, cfg.seed)
            section[name] = {"weights": [float(w) for w in nu.weights], "mean": est.mean, "stderr": est.stderr,
                             "samples": est.samples, "seed": est.seed, "closed_form": est.closed_form}
        self.report["iid"] = section
        v = self._need_pde()
        if v is None:
            self.report["verdicts"]["iid_ordering"] = _verdict("SKIPPED", "no grid value")
        else:
            bad = [k for k, e in section.items() if e["mean"] > v + 4 * e["stderr"] + cfg.tol]
            self.report["verdicts"]["iid_ordering"] = _verdict(
                "FAIL" if bad else "PASS",
                f"iid <= pde + 4 stderr + {cfg.tol}" + (f"; violated for {bad}" if bad else ""))
        self._done("iid", t0)

    def bounds(self) -> None:
        t0 = self._phase("bounds")
        v = self._need_pde()
        verdicts = self.report["verdicts"]
        section: dict[str, Any] = {}
        if self.fc.m < 2:
            section["status"] = "SKIPPED: NeedTwoFunctions"
            verdicts["sandwich"] = _verdict("SKIPPED", "NeedTwoFunctions: m = 1")
        elif v is None:
            verdicts["sandwich"] = _verdict("SKIPPED", "no grid value")
        else:
            rep = theorem3_sandwich(self.fc, v, tol=self.cfg.tol)
            section.update(rep.to_dict())
            verdicts["sandwich"] = _verdict(
                rep.verdict, f"{rep.lower!r} - tol <= {v!r} <= {rep.upper_logm!r} + tol")
        verdicts["upper_heat"] = _verdict(
            "SKIPPED", "adjudicated: diffusion b^2 heat value is not an upper bound under |gamma_i| <= b")
        if self.cfg.adjudicate:
            section["adjudication"] = adjudicate_heat_upper(h=self.cfg.adjudication_h)
        else:
            section["adjudication"] = {"upper_heat_gated": HEAT_UPPER_GATED, "status": "not rerun"}
        self.report["bounds"] = section
        self._done("bounds", t0)

    def control(self) -> None:
        t0 = self._phase("control")
        cfg = self.cfg
        section: dict[str, Any] = {"steps": cfg.steps, "paths": cfg.samples, "seed": cfg.seed}
        consts = []
        for i in range(min(self.gamma.size, MAX_CONSTANT_POLICIES)):
            est = simulate_policy(self.gamma, ConstantPolicy(i), cfg.steps, cfg.samples, cfg.seed)
            consts.append({"gamma_index": i, "mean": est.mean, "stderr": est.stderr})
        section["constant"] = consts
        estimates = [(f"constant[{c['gamma_index']}]", c["mean"], c["stderr"]) for c in consts]
        h, dt, L = self._grid_params(_GREEDY_DEFAULTS)
        try:
            grid = build_grid(self.gamma.m, self.gamma, h, dt, L=L)
            if grid.total_nodes * (grid.t_steps + 1) > MAX_RETAINED_VALUES:
                raise MemoryError("retained slices would be too large")
            sr = solve_gheat(self.gamma, grid, retain_slices=True)
            est = simulate_policy(self.gamma, greedy_policy_from_solution(sr, self.gamma),
                                  cfg.steps, cfg.samples, cfg.seed)
            section["greedy"] = {"h": grid.h, "dt": grid.dt, "L": grid.L, "grid_value": sr.value_at_origin,
                                 "mean": est.mean, "stderr": est.stderr}
            estimates.append(("greedy", est.mean, est.stderr))
        except (SeqradError, MemoryError) as exc:
            section["greedy"] = {"status": f"SKIPPED: {type(exc).__name__}: {exc}"}
        self.report["control"] = section
        v = self._need_pde()
        if v is None:
            self.report["verdicts"]["control_lower_bound"] = _verdict("SKIPPED", "no grid value")
        else:
            bad = [name for name, mean, se in estimates if mean > v + 4 * se + cfg.tol]
            self.report["verdicts"]["control_lower_bound"] = _verdict(
                "FAIL" if bad else "PASS",
                f"policy value <= pde + 4 stderr + {cfg.tol}" + (f"; violated for {bad}" if bad else ""))
        self._done("control", t0)

    def run(self) -> dict:
        cmd = self.cfg.command
        if cmd in ("exact", "report"):
            self.exact()
        if cmd in ("pde", "report"):
            self.pde()
        if cmd in ("iid", "report"):
            self.iid()
        if cmd in ("bounds", "report"):
            self.bounds()
        if cmd in ("control", "report"):
            self.control()
        if self.cfg.timing:
            self.report["timing"] = self.timing
        return self.report


def exit_code(report: dict) -> int:
    statuses = [v["status"] for v in report.get("verdicts", {}).values()]
    return EXIT_FAIL if "FAIL" in statuses else EXIT_OK


def dumps(report: dict) -> str:
    return json.dumps(_finite(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def run_report(cfg: RunConfig) -> tuple[dict, int]:
    report = Runner(cfg).run()
    text = dumps(report)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return report, exit_code(report)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="[seqrad] %(message)s", stream=sys.stderr)
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return EXIT_USAGE
    try:
        _, code = run_report(cfg)
    except UsageError as exc:
        sys.stderr.write(f"seqrad: {exc}\n")
        return EXIT_USAGE
    except (OSError, SeqradError, ValueError) as exc:
        sys.stderr.write(f"seqrad: {type(exc).__name__}: {exc}\n")
        return EXIT_INFRA
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

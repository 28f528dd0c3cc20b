"""Command-line front end: ``withprofit {curve,scenarios,validate,bound,grid,report}``.

Settings come from built-in defaults, then an optional ``--config`` file
(JSON or YAML), then command-line flags. Exit status: 0 pass, 2 validation
failure, 3 input error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bound import format_f_table, format_lb_table, lower_bound, round_half_up, sensitivity_grid
from .curves import argmax_discount_factor, bootstrap_forwards, deflator_cov_table, max_discount_factor
from .io import (
    InputError,
    load_bound_inputs,
    load_curve,
    load_portfolio,
    load_spot_series,
    write_ledger,
    write_scenarios,
)
from .projection import InsolventScenarioError, project, relative_conservation_error, terminal_ratio
from .scenarios import RateModelParams, generate, martingale_test
from .valuation import leakage_test, unexpected_return_identity, value

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    curve: str = "eur_discount_2017.csv"
    spot_series: str = "eur_spot15y_2014_2017.csv"
    spot_tenor: int = 15
    portfolio: str = "toy_stochastic.json"
    bound_inputs: str = "allianz_2017.json"
    scenarios: int = 1000
    seed: int = 2017
    volatility: float = 0.01
    mean_reversion: float = 0.2
    leakage_tolerance: float = 1e-3
    martingale_tolerance: float = 5e-3
    output_dir: str | None = None
    exact: bool = False
    deduct_surplus_fund: bool = True
    rounding: str = "published"
    gph: float | None = None
    C0: float | None = None
    M: int | None = None
    M_values: tuple[int, ...] = (10, 15, 20)
    gph_values: tuple[float, ...] = (0.75, 0.8, 0.85)
    C0_values: tuple[float, ...] = (0.01, 0.03, 0.05)
    drop_cashflow: str | None = None

    def __post_init__(self) -> None:
        if self.scenarios < 1:
            raise InputError("scenario count must be >= 1")
        if not (self.leakage_tolerance > 0 and self.martingale_tolerance > 0):
            raise InputError("tolerances must be > 0")
        if self.rounding not in ("exact", "published"):
            raise InputError("rounding must be exact or published")
        for name in ("M_values", "gph_values", "C0_values"):
            object.__setattr__(self, name, tuple(getattr(self, name)))


CONFIG_FIELDS = {f.name for f in fields(RunConfig)}


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        if path.suffix in (".yaml", ".yml"):
            obj = yaml.safe_load(text) or {}
        else:
            obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise InputError(f"{where}: {exc}") from None
    if not isinstance(obj, dict):
        raise InputError(f"{path}: config must be a mapping")
    unknown = sorted(set(obj) - CONFIG_FIELDS)
    if unknown:
        raise InputError(f"{path}: unknown config field(s) {', '.join(unknown)}")
    base = path.parent
    for key in ("curve", "spot_series", "portfolio", "bound_inputs", "output_dir"):
        if isinstance(obj.get(key), str) and (base / obj[key]).exists():
            obj[key] = str(base / obj[key])
    try:
        return RunConfig(**obj)
    except TypeError as exc:
        raise InputError(f"{path}: {exc}") from None


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML file with RunConfig fields")
    common.add_argument("--output-dir", dest="output_dir", help="write report and CSV files here")

    curve = argparse.ArgumentParser(add_help=False)
    curve.add_argument("--curve", help="discount curve CSV (tenor,discount_factor)")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--scenarios", type=int, help="number of scenarios")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--vol", dest="volatility", type=float, help="short-rate volatility")
    sim.add_argument("--reversion", dest="mean_reversion", type=float, help="mean reversion speed")
    sim.add_argument("--martingale-tolerance", dest="martingale_tolerance", type=float)

    bnd = argparse.ArgumentParser(add_help=False)
    bnd.add_argument("--inputs", dest="bound_inputs", help="bound input JSON")
    bnd.add_argument("--gph", type=float)
    bnd.add_argument("--C0", dest="C0", type=float)
    bnd.add_argument("--M", dest="M", type=int)
    bnd.add_argument("--exact", action="store_const", const=True, default=None,
                     help="keep max P(0,t) in the depreciation factor")
    bnd.add_argument("--no-deduct-surplus-fund", dest="deduct_surplus_fund", action="store_const", const=False)
    bnd.add_argument("--rounding", choices=("exact", "published"))
    bnd.add_argument("--M-values", dest="M_values", type=_csv_ints)
    bnd.add_argument("--gph-values", dest="gph_values", type=_csv_floats)
    bnd.add_argument("--C0-values", dest="C0_values", type=_csv_floats)

    val = argparse.ArgumentParser(add_help=False)
    val.add_argument("--portfolio", help="portfolio JSON")
    val.add_argument("--tolerance", dest="leakage_tolerance", type=float, help="relative leakage tolerance")
    val.add_argument("--drop-cashflow", dest="drop_cashflow", metavar="t=YEAR[,contract=ID]",
                     help="fault injection: discard one liability cash flow")

    p = argparse.ArgumentParser(prog="withprofit", description="With-profit valuation and FDB lower bound tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("curve", parents=[common, curve], help="curve diagnostics")
    c.add_argument("--spot", dest="spot_series", help="spot-rate series CSV (date,rate)")
    c.add_argument("--spot-tenor", dest="spot_tenor", type=int)
    c.add_argument("--M", dest="M", type=int, help="window for the maximum discount factor")
    s = sub.add_parser("scenarios", parents=[common, curve, sim], help="generate scenarios and run the martingale test")
    s.add_argument("--horizon", type=int)
    sub.add_parser("validate", parents=[common, curve, sim, val], help="projection and leakage test")
    sub.add_parser("bound", parents=[common, bnd], help="lower bound with sensitivity grids")
    sub.add_parser("grid", parents=[common, bnd], help="sensitivity grids only")
    sub.add_parser("report", parents=[common, curve, sim, val, bnd], help="curve, bound and validate in one run")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {k: v for k, v in vars(args).items() if k in CONFIG_FIELDS and v is not None}
    try:
        return replace(cfg, **overrides)
    except TypeError as exc:
        raise InputError(str(exc)) from None


def timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.isoformat(timespec="seconds")


def header(command: str) -> str:
    return f"# withprofit {__version__} {command} generated {timestamp()}"


def parse_drop(spec: str) -> tuple[int, str | None]:
    parts = dict(p.split("=", 1) for p in spec.split(",") if "=" in p)
    if set(parts) - {"t", "contract"} or "t" not in parts:
        raise InputError(f"--drop-cashflow expects t=YEAR[,contract=ID], got {spec!r}")
    try:
        year = int(parts["t"])
    except ValueError:
        raise InputError(f"--drop-cashflow year must be an integer, got {parts['t']!r}") from None
    return year, parts.get("contract")


@dataclass
class Report:
    command: str
    lines: list
    status: int = EXIT_OK
    files: dict | None = None  # name -> writer(path)

    def text(self) -> str:
        return "\n".join([header(self.command)] + self.lines) + "\n"


def _fmt(x: float, digits: int = 6) -> str:
    return f"{x:.{digits}f}"


def cmd_curve(cfg: RunConfig) -> Report:
    curve = load_curve(cfg.curve)
    fwd = bootstrap_forwards(curve)
    bank = fwd.bank_account()
    series = load_spot_series(cfg.spot_series, cfg.spot_tenor) if cfg.spot_series else None
    cov = deflator_cov_table(series, curve) if series is not None else [math.nan] * curve.horizon
    M = cfg.M or curve.horizon
    lines = [
        f"curve: {cfg.curve}",
        f"tenors: 1..{curve.horizon}",
        f"max discount factor over t=1..{M}: {_fmt(max_discount_factor(curve, M))} at t={argmax_discount_factor(curve, M)}",
    ]
    if series is not None:
        lines.append(f"spot series: {cfg.spot_series} ({len(series.rates)} observations, tenor {series.tenor})")
    lines.append(f"{'t':>3} {'P(0,t)':>10} {'F(t-1)':>10} {'B(t)':>10} {'CoV':>9}")
    for t in range(1, curve.horizon + 1):
        lines.append(f"{t:>3} {curve[t]:>10.6f} {fwd.forwards[t - 1]:>10.6f} {bank[t]:>10.6f} {cov[t - 1]:>9.6f}")

    def write_csv(path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("tenor", "discount_factor", "forward", "bank_account", "deflator_cov"))
            for t in range(1, curve.horizon + 1):
                w.writerow((t, repr(curve[t]), repr(fwd.forwards[t - 1]), repr(float(bank[t])), repr(float(cov[t - 1]))))

    return Report("curve", lines, files={"curve.csv": write_csv})


def _params(cfg: RunConfig) -> RateModelParams:
    try:
        return RateModelParams(cfg.mean_reversion, cfg.volatility)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _martingale_lines(diag) -> list:
    verdict = "PASS" if diag.passed else "FAIL"
    return [
        f"martingale test: max relative error {diag.max_error:.3e} at t={diag.worst_tenor} "
        f"(tolerance {diag.tolerance:.1e}) {verdict}",
    ]


def cmd_scenarios(cfg: RunConfig, horizon: int | None = None) -> Report:
    curve = load_curve(cfg.curve)
    params = _params(cfg)
    scen = generate(curve, params, cfg.scenarios, cfg.seed, horizon)
    diag = martingale_test(scen, curve, cfg.martingale_tolerance)
    lines = [
        f"curve: {cfg.curve}",
        f"scenarios: {scen.n_scenarios} antithetic, seed {cfg.seed}, horizon {scen.horizon}",
        f"rate model: {params.model}, mean reversion {params.mean_reversion}, volatility {params.volatility}",
    ] + _martingale_lines(diag)
    lines.append(f"{'t':>3} {'P(0,t)':>10} {'mean defl':>10} {'rel err':>10}")
    means = scen.deflators[:, 1:].mean(axis=0)
    for t in range(1, scen.horizon + 1):
        lines.append(f"{t:>3} {curve[t]:>10.6f} {means[t - 1]:>10.6f} {diag.relative_errors[t - 1]:>10.3e}")
    status = EXIT_OK if diag.passed else EXIT_FAIL
    return Report("scenarios", lines, status, {"scenarios.csv": lambda path: write_scenarios(scen, path)})


def cmd_validate(cfg: RunConfig) -> Report:
    curve = load_curve(cfg.curve)
    port = load_portfolio(cfg.portfolio)
    bs = port.balance_sheet
    drop = parse_drop(cfg.drop_cashflow) if cfg.drop_cashflow else None
    scen = generate(curve, _params(cfg), cfg.scenarios, cfg.seed, port.T)
    diag = martingale_test(scen, curve, cfg.martingale_tolerance)
    lines = [
        f"portfolio: {cfg.portfolio} ({len(bs.contracts)} contracts, {len(bs.bonds)} bonds, {len(bs.equities)} equities)",
        f"curve: {cfg.curve}",
        f"scenarios: {scen.n_scenarios}, seed {cfg.seed}, horizon {port.T}, "
        f"volatility {cfg.volatility}, mean reversion {cfg.mean_reversion}",
    ] + _martingale_lines(diag)
    if not diag.passed:
        lines.append("result: FAIL (martingale test; projection not run)")
        return Report("validate", lines, EXIT_FAIL)
    ledger = project(scen, bs, port.rules, port.T)
    clean = ledger
    if drop is not None:
        year, contract = drop
        try:
            ledger = ledger.drop_cashflow(year, contract)
        except ValueError as exc:
            raise InputError(f"--drop-cashflow: {exc}") from None
    res = value(ledger, curve)
    leak = leakage_test(res, res.BV0, res.UG0, cfg.leakage_tolerance)
    if not all(math.isfinite(v) for v in (res.BE, res.VIF, res.TAX, res.E_terminal)):
        raise FloatingPointError("non-finite valuation result")
    ur = unexpected_return_identity(ledger)
    se = res.se
    lines += [
        f"BV0 {_fmt(res.BV0)}  UG0 {_fmt(res.UG0)}  MV0 {_fmt(res.MV0)}",
        f"BE         {_fmt(res.BE)}  (se {se['BE']:.2e})",
        f"GB         {_fmt(res.GB)}  (se {se['GB']:.2e}; on curve {_fmt(res.GB_curve)})",
        f"FDB        {_fmt(res.FDB)}  (se {se['FDB']:.2e})",
        f"VIF        {_fmt(res.VIF)}  (se {se['VIF']:.2e})",
        f"TAX        {_fmt(res.TAX)}  (se {se['TAX']:.2e})",
        f"E[B_T^-1 MV_T] {_fmt(res.E_terminal)}  (ratio to MV0 {terminal_ratio(ledger):.3e})",
        f"unexpected-return identity gap {ur.gap:.3e}",
        f"conservation max relative error {relative_conservation_error(clean):.3e}",
        f"leakage: lhs {_fmt(leak.lhs)} rhs {_fmt(leak.rhs)} residual {leak.residual:.6e} "
        f"(se {leak.residual_se:.2e}) relative {leak.relative:.3e} tolerance {leak.tolerance:.1e}",
    ]
    if drop is not None:
        lost = value(clean, curve).BE - res.BE
        lines.append(f"fault injection: dropped cash flow at t={drop[0]}"
                     f"{'' if drop[1] is None else ' for ' + drop[1]}, deflated value {_fmt(lost)}")
    lines.append(f"result: {'PASS' if leak.passed else 'FAIL'}")
    return Report(
        "validate", lines, EXIT_OK if leak.passed else EXIT_FAIL,
        {"ledger.csv": lambda path: write_ledger(ledger, path)},
    )


def _bound_inputs(cfg: RunConfig):
    inputs, meta = load_bound_inputs(cfg.bound_inputs)
    changes = {"deduct_surplus_fund": cfg.deduct_surplus_fund}
    if cfg.exact:
        changes["exact"] = True
    for key in ("gph", "C0", "M"):
        if getattr(cfg, key) is not None:
            changes[key] = getattr(cfg, key)
    try:
        return inputs.replace(**changes), meta
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _grid_report(cfg: RunConfig, inputs, command: str, lines: list) -> Report:
    try:
        grid = sensitivity_grid(inputs, cfg.M_values, cfg.gph_values, cfg.C0_values, cfg.rounding)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    for m in grid.M_values:
        lines += ["", f"lower bound, M={m}", format_lb_table(grid, m)]
    lines += ["", "cross-financing term", format_f_table(grid)]

    def write_csv(path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("M", "gph", "C0", "LB", "F"))
            for m in grid.M_values:
                for g in grid.gph_values:
                    for c in grid.C0_values:
                        w.writerow((m, g, c, repr(grid.LB[(m, g, c)]), repr(grid.F[(g, c)])))

    return Report(command, lines, files={"grid.csv": write_csv})


def cmd_bound(cfg: RunConfig) -> Report:
    inputs, meta = _bound_inputs(cfg)
    res = lower_bound(inputs, cfg.rounding)
    unit = meta.get("unit", "")
    lines = [
        f"inputs: {cfg.bound_inputs}" + (f" ({meta['name']})" if "name" in meta else ""),
        f"rounding: {cfg.rounding}; exact max-discount mode: {'on' if inputs.exact else 'off'}",
        f"BV0 {inputs.BV0}  UG0 {inputs.UG0}  A0 {_fmt(inputs.A0, 1)}  GB {inputs.GB}  SF0 {inputs.SF0}  {unit}".rstrip(),
        f"M {inputs.M}  gph {inputs.gph}  C0 {inputs.C0}  cov_ph {inputs.cov_ph}  "
        f"deflator CoV at M {inputs.cov_B[inputs.M - 1]:.6f}",
        f"eta {res.eta:.6f}",
        f"D   {res.D:.6f}",
        f"LB1 {_fmt(res.LB1)}",
        f"SF0 deducted {_fmt(res.SF_deduction)}",
        f"F   {_fmt(res.F)}",
        f"LB  {_fmt(res.LB)}  (displayed {round_half_up(res.LB, 1):.1f})",
    ]
    if "FDB_reported" in meta:
        rep = float(meta["FDB_reported"])
        holds = "holds" if round_half_up(res.LB, 1) <= rep else "VIOLATED"
        lines.append(f"comparison: LB {round_half_up(res.LB, 1):.1f} vs reported FDB {rep:.1f} "
                     f"(margin {round_half_up(rep - res.LB, 1):.1f}; bound {holds})")
    return _grid_report(cfg, inputs, "bound", lines)


def cmd_grid(cfg: RunConfig) -> Report:
    inputs, meta = _bound_inputs(cfg)
    lines = [f"inputs: {cfg.bound_inputs}", f"rounding: {cfg.rounding}"]
    return _grid_report(cfg, inputs, "grid", lines)


def cmd_report(cfg: RunConfig) -> Report:
    parts = [cmd_curve(cfg), cmd_bound(cfg), cmd_validate(cfg)]
    lines, files = [], {}
    for r in parts:
        lines += ["", f"== {r.command} =="] + r.lines
        files.update(r.files or {})
    status = max(r.status for r in parts)
    return Report("report", lines, status, files)


COMMANDS = {
    "curve": cmd_curve,
    "scenarios": cmd_scenarios,
    "validate": cmd_validate,
    "bound": cmd_bound,
    "grid": cmd_grid,
    "report": cmd_report,
}


def emit(report: Report, output_dir: str | None, out=None) -> None:
    out = out or sys.stdout
    text = report.text()
    out.write(text)
    if output_dir:
        d = Path(output_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{report.command}.txt").write_text(text)
        for name, writer in (report.files or {}).items():
            writer(d / name)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "scenarios":
            report = cmd_scenarios(cfg, args.horizon)
        else:
            report = COMMANDS[args.command](cfg)
        emit(report, cfg.output_dir)
        return report.status
    except (InputError, FileNotFoundError) as exc:
        print(f"withprofit: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InsolventScenarioError as exc:
        print(f"withprofit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"withprofit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"withprofit: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

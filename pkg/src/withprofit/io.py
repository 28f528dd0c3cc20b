"""File formats: curve and spot-rate CSVs, portfolio and bound-input JSON,
scenario and ledger CSV dumps. Parsing is strict: unknown fields are errors."""

from __future__ import annotations

import csv
import json
import os
from datetime import date
from importlib import resources
from pathlib import Path

import numpy as np

from .bound import BoundInputs
from .curves import DiscountCurve, SpotRateSeries, deflator_cov_table
from .portfolio import BalanceSheet, Bond, Contract, Equity, ManagementRules, Portfolio
from .projection import CashflowLedger
from .scenarios import ScenarioSet

DATA_ENV = "WITHPROFIT_DATA"


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("withprofit") / "data"))


def data_path(name: str | os.PathLike) -> Path:
    """Resolve ``name`` as given, falling back to the data directory."""
    p = Path(name)
    if p.exists() or p.is_absolute():
        return p
    return data_dir() / p


def parse_rate(text: str) -> float:
    s = text.strip()
    if s.endswith("%"):
        return float(s[:-1]) / 100.0
    return float(s)


def _parse_date(text: str) -> date:
    parts = text.strip().split("-")
    if len(parts) == 2:
        return date(int(parts[0]), int(parts[1]), 1)
    if len(parts) == 3:
        return date(int(parts[0]), int(parts[1]), int(parts[2]))
    raise ValueError(f"unrecognised date {text!r}")


def _read_csv(path: Path, header: tuple[str, ...]):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if tuple(h.strip() for h in first) != header:
            raise InputError(f"{path}:1: expected header {','.join(header)}, got {','.join(first)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            yield lineno, [c.strip() for c in row]


def load_curve(path) -> DiscountCurve:
    path = data_path(path)
    pairs = []
    for lineno, (tenor, factor) in _read_csv(path, ("tenor", "discount_factor")):
        try:
            t, f = int(tenor), float(factor)
        except ValueError:
            raise InputError(f"{path}:{lineno}: cannot parse row {tenor},{factor}") from None
        if t != len(pairs) + 1:
            raise InputError(f"{path}:{lineno}: tenor {t} out of sequence, expected {len(pairs) + 1}")
        if not f > 0.0:
            raise InputError(f"{path}:{lineno}: discount factor must be positive, got {factor}")
        pairs.append((t, f))
    if not pairs:
        raise InputError(f"{path}: no curve rows")
    return DiscountCurve.from_pairs(pairs)


def load_spot_series(path, tenor: int = 15) -> SpotRateSeries:
    path = data_path(path)
    dates, rates = [], []
    for lineno, (d, r) in _read_csv(path, ("date", "rate")):
        try:
            dates.append(_parse_date(d))
            rates.append(parse_rate(r))
        except ValueError:
            raise InputError(f"{path}:{lineno}: cannot parse row {d},{r}") from None
    try:
        return SpotRateSeries(tuple(dates), tuple(rates), tenor)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_curve(curve: DiscountCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tenor", "discount_factor"))
        for t, f in zip(curve.maturities, curve.factors):
            w.writerow((t, repr(f)))


def _fields(obj, where: str, required=(), optional=()) -> dict:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise InputError(f"{where}: unknown field(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise InputError(f"{where}: missing field(s) {', '.join(missing)}")
    return obj


def _read_json(path: Path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from None


def _contract(obj, where: str) -> Contract:
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "endowment":
        o = _fields(obj, where, ("id", "kind", "sum_insured", "maturity", "technical_rate"), ("bonus",))
        return Contract.endowment(o["id"], o["sum_insured"], o["maturity"], o["technical_rate"], o.get("bonus", 0.0))
    if kind == "annuity":
        o = _fields(obj, where, ("id", "kind", "payment", "maturity", "technical_rate"), ("bonus",))
        return Contract.annuity(o["id"], o["payment"], o["maturity"], o["technical_rate"], o.get("bonus", 0.0))
    if kind == "schedule":
        o = _fields(obj, where, ("id", "kind", "maturity", "reserves", "cashflows"), ("technical_rate", "bonus"))
        return Contract(
            o["id"], o["maturity"], tuple(o["reserves"]), tuple(o["cashflows"]),
            o.get("technical_rate", 0.0), o.get("bonus", 0.0),
        )
    raise InputError(f"{where}: contract kind must be endowment, annuity or schedule, got {kind!r}")


def _asset(obj, where: str):
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "bond":
        o = _fields(obj, where, ("id", "kind", "face", "coupon", "maturity", "book_value"))
        return Bond(o["id"], float(o["face"]), parse_rate(str(o["coupon"])), int(o["maturity"]), float(o["book_value"]))
    if kind == "equity":
        o = _fields(obj, where, ("id", "kind", "market_value", "book_value"), ("dividend_yield", "volatility"))
        return Equity(
            o["id"], float(o["market_value"]), float(o["book_value"]),
            float(o.get("dividend_yield", 0.02)), float(o.get("volatility", 0.15)),
        )
    raise InputError(f"{where}: asset kind must be bond or equity, got {kind!r}")


RULE_FIELDS = ("gph", "tax_rate", "theta", "declaration_rate", "reinvestment_term", "reinvestment", "realization")


def portfolio_from_dict(obj, where: str = "portfolio") -> Portfolio:
    o = _fields(obj, where, ("contracts", "assets"), ("name", "horizon", "surplus_fund", "cash", "rules", "notes"))
    try:
        contracts = tuple(_contract(c, f"{where}.contracts[{i}]") for i, c in enumerate(o["contracts"]))
        assets = [_asset(a, f"{where}.assets[{i}]") for i, a in enumerate(o["assets"])]
        rules = ManagementRules(**_fields(o.get("rules", {}), f"{where}.rules", (), RULE_FIELDS))
        bs = BalanceSheet(
            contracts,
            bonds=tuple(a for a in assets if isinstance(a, Bond)),
            equities=tuple(a for a in assets if isinstance(a, Equity)),
            cash=float(o.get("cash", 0.0)),
            surplus_fund=float(o.get("surplus_fund", 0.0)),
        )
    except InputError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"{where}: {exc}") from None
    horizon = o.get("horizon")
    return Portfolio(bs, rules, None if horizon is None else int(horizon), o.get("name", ""))


def load_portfolio(path) -> Portfolio:
    path = data_path(path)
    return portfolio_from_dict(_read_json(path), str(path))


BOUND_FIELDS_REQUIRED = ("BV0", "UG0", "SF0", "GB", "curve", "spot_series")
BOUND_FIELDS_OPTIONAL = (
    "FDB_reported", "gph", "cov_ph", "M", "C0", "T", "half_life", "spot_tenor",
    "deduct_surplus_fund", "exact", "sources", "name", "unit",
)


def load_bound_inputs(path) -> tuple[BoundInputs, dict]:
    """Return the inputs and the file's metadata (reported FDB, sources, name)."""
    path = data_path(path)
    o = _fields(_read_json(path), str(path), BOUND_FIELDS_REQUIRED, BOUND_FIELDS_OPTIONAL)
    base = path.parent
    curve_path = base / o["curve"] if not Path(o["curve"]).is_absolute() else Path(o["curve"])
    spot_path = base / o["spot_series"] if not Path(o["spot_series"]).is_absolute() else Path(o["spot_series"])
    curve = load_curve(curve_path)
    series = load_spot_series(spot_path, int(o.get("spot_tenor", 15)))
    try:
        inputs = BoundInputs(
            BV0=float(o["BV0"]), UG0=float(o["UG0"]), GB=float(o["GB"]), SF0=float(o["SF0"]),
            curve=curve, cov_B=tuple(deflator_cov_table(series, curve)),
            gph=float(o.get("gph", 0.8)), cov_ph=float(o.get("cov_ph", 0.05)),
            M=int(o.get("M", 15)), C0=float(o.get("C0", 0.03)), T=int(o.get("T", 60)),
            half_life=float(o.get("half_life", 10.0)),
            deduct_surplus_fund=bool(o.get("deduct_surplus_fund", True)),
            exact=bool(o.get("exact", False)),
        )
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    meta = {k: o[k] for k in ("FDB_reported", "sources", "name", "unit") if k in o}
    return inputs, meta


def write_scenarios(scenarios: ScenarioSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "year", "forward", "deflator"))
        for s in range(scenarios.n_scenarios):
            for t in range(1, scenarios.horizon + 1):
                w.writerow((s, t, repr(float(scenarios.forwards[s, t - 1])), repr(float(scenarios.deflators[s, t]))))


def load_scenarios(path, tolerance: float = 1e-9) -> ScenarioSet:
    """Import an external scenario file; deflators must roll over the forwards."""
    path = Path(path)
    data: dict[int, dict[int, tuple[float, float]]] = {}
    for lineno, (s, t, fwd, defl) in _read_csv(path, ("scenario", "year", "forward", "deflator")):
        try:
            data.setdefault(int(s), {})[int(t)] = (float(fwd), float(defl))
        except ValueError:
            raise InputError(f"{path}:{lineno}: cannot parse row") from None
    if not data:
        raise InputError(f"{path}: no scenarios")
    ids = sorted(data)
    if ids != list(range(len(ids))):
        raise InputError(f"{path}: scenario ids must be 0..n-1")
    T = len(data[0])
    n = len(ids)
    fwd = np.zeros((n, T))
    defl = np.ones((n, T + 1))
    for s in ids:
        years = sorted(data[s])
        if years != list(range(1, T + 1)):
            raise InputError(f"{path}: scenario {s} must cover years 1..{T}")
        for t in years:
            fwd[s, t - 1], defl[s, t] = data[s][t]
    implied = 1.0 / np.cumprod(1.0 + fwd, axis=1)
    bad = np.abs(implied - defl[:, 1:]) > tolerance * np.abs(defl[:, 1:])
    if np.any(bad):
        s, t = np.argwhere(bad)[0]
        raise InputError(f"{path}: scenario {s} year {t + 1}: deflator does not roll over the forwards")
    return ScenarioSet(fwd, defl, np.arange(n))


def write_ledger(ledger: CashflowLedger, path, fields=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "year", "field", "value"))
        for s, t, name, v in ledger.rows(fields):
            w.writerow((s, t, name, repr(v)))

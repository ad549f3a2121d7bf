"""Command-line interface.

Subcommands
-----------
thresholds   solve one model and print thresholds/coefficients/roots
tables       print all fourteen sensitivity sweeps
calibrate    estimate parameters from a price CSV, then solve both models
verify       run the variational-inequality verification report(s)
simulate     Monte Carlo value estimate under the solved policy
backtest     replay a policy on observed prices, emitting the trade ledger

Market parameters come from flags, from a JSON config file (--config or
the PAIRSTOP_CONFIG environment variable; flags override file values), or
from calibration.  Exit codes: 0 success, 1 verification failure,
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .calibration import TRADING_DT, estimate, load_csv
from .errors import PairstopError
from .gbm_core import MarketParams, ValidatedParams, characteristic_roots, validate_params
from .long_flat import solve_policy, verify_policy
from .long_flat_short import solve_policy_three, verify_policy_three
from .simulator import PathConfig, backtest, mc_value
from .tables import EXAMPLE_PARAMS, all_tables

_PARAM_KEYS = ("mu1", "mu2", "s11", "s12", "s22", "rho", "K")
_OTHER_KEYS = ("model", "format", "out", "seed", "dt", "tmax", "paths",
               "split", "csv", "x1", "x2", "i0")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation: one command, one parameter source."""

    command: str
    params: MarketParams | None
    model: str
    fmt: str
    out: str | None
    ns: argparse.Namespace


def _add_param_flags(sub: argparse.ArgumentParser) -> None:
    for key, help_text in (
            ("mu1", "drift of stock 1 (per year)"),
            ("mu2", "drift of stock 2 (per year)"),
            ("s11", "volatility matrix entry sigma11"),
            ("s12", "volatility matrix entry sigma12 (= sigma21)"),
            ("s22", "volatility matrix entry sigma22"),
            ("rho", "discount rate (per year)"),
            ("K", "proportional transaction-cost rate")):
        sub.add_argument(f"--{key}", type=float, default=None, help=help_text)
    sub.add_argument("--config", default=None,
                     help="JSON config file (fallback: $PAIRSTOP_CONFIG)")


def _add_output_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--format", choices=("table", "csv", "json"),
                     default="table")
    sub.add_argument("--out", default=None, help="write output to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairstop",
        description="Round-trip pairs-trading thresholds under two "
                    "correlated geometric Brownian motions")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("thresholds", help="solve one model")
    _add_param_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--model", choices=("long-flat", "long-flat-short"),
                    default="long-flat")

    sp = subs.add_parser("tables", help="all fourteen sensitivity sweeps")
    _add_param_flags(sp)
    _add_output_flags(sp)

    sp = subs.add_parser("calibrate", help="estimate parameters from CSV")
    _add_param_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--csv", required=True, help="price history CSV")
    sp.add_argument("--split", type=float, default=None,
                    help="use only the first fraction of rows, e.g. 0.5")
    sp.add_argument("--dt", type=float, default=TRADING_DT,
                    help="year fraction per observation (default 1/252)")

    sp = subs.add_parser("verify", help="variational-inequality report")
    _add_param_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--model",
                    choices=("long-flat", "long-flat-short", "both"),
                    default="both")

    sp = subs.add_parser("simulate", help="Monte Carlo value estimate")
    _add_param_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--model", choices=("long-flat", "long-flat-short"),
                    default="long-flat")
    sp.add_argument("--seed", type=int, required=True,
                    help="reproducibility seed (required: no silent "
                         "nondeterminism)")
    sp.add_argument("--paths", type=int, default=10_000)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--tmax", type=float, default=40.0)
    sp.add_argument("--i0", type=int, default=0,
                    help="initial position (-1/0/1; -1 only with "
                         "long-flat-short)")
    sp.add_argument("--x1", type=float, default=100.0, help="initial price 1")
    sp.add_argument("--x2", type=float, default=100.0, help="initial price 2")

    sp = subs.add_parser("backtest", help="replay a policy on observed prices")
    _add_param_flags(sp)
    _add_output_flags(sp)
    sp.add_argument("--model", choices=("long-flat", "long-flat-short"),
                    default="long-flat")
    sp.add_argument("--csv", required=True, help="price history CSV")
    sp.add_argument("--dt", type=float, default=TRADING_DT,
                    help="year fraction per observation (default 1/252)")
    sp.add_argument("--i0", type=int, default=0)

    return parser


def _load_config_file(ns: argparse.Namespace) -> dict:
    path = getattr(ns, "config", None) or os.environ.get("PAIRSTOP_CONFIG")
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path!r} must hold a JSON object")
    unknown = set(data) - set(_PARAM_KEYS) - set(_OTHER_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def _resolve_params(ns: argparse.Namespace, cfg: dict,
                    required: bool = True) -> MarketParams | None:
    merged = {}
    for key in _PARAM_KEYS:
        flag = getattr(ns, key, None)
        merged[key] = flag if flag is not None else cfg.get(key)
    missing = [k for k, v in merged.items() if v is None]
    if missing:
        if not required and len(missing) == len(_PARAM_KEYS):
            return None
        raise UsageError(
            f"missing market parameters: {' '.join('--' + m for m in missing)} "
            "(pass flags or provide a config file)")
    return MarketParams(mu1=merged["mu1"], mu2=merged["mu2"],
                        sigma11=merged["s11"], sigma12=merged["s12"],
                        sigma21=merged["s12"], sigma22=merged["s22"],
                        rho=merged["rho"], K=merged["K"])


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _policy_payload(v: ValidatedParams, model: str) -> dict:
    roots = characteristic_roots(v)
    base = {"model": model, "delta1": roots.delta1, "delta2": roots.delta2,
            "lambda": v.derived.lam}
    if model == "long-flat":
        pol = solve_policy(v)
        base.update(k1=pol.k1, k2=pol.k2, C1=pol.c1, C2=pol.c2)
    else:
        pol3 = solve_policy_three(v)
        base.update(k1_star=pol3.k1_star, k2_star=pol3.k2_star,
                    C1=pol3.c1, C2=pol3.c2, B1=pol3.b1, B2=pol3.b2)
    return base


def cmd_thresholds(rc: RunConfig) -> int:
    v = validate_params(rc.params)
    data = _policy_payload(v, rc.model)
    if rc.fmt == "json":
        _emit(json.dumps(data, indent=2) + "\n", rc.out)
    elif rc.fmt == "csv":
        keys = [k for k in data if k != "model"]
        lines = ["model," + ",".join(keys),
                 data["model"] + "," + ",".join(f"{data[k]:.5f}" for k in keys)]
        _emit("\n".join(lines) + "\n", rc.out)
    else:
        if rc.model == "long-flat":
            lines = [f"k1={data['k1']:.5f} k2={data['k2']:.5f}",
                     f"C1={data['C1']:.5f} C2={data['C2']:.5f}"]
        else:
            lines = [f"k1*={data['k1_star']:.5f} k2*={data['k2_star']:.5f}",
                     f"C1={data['C1']:.5f} C2={data['C2']:.5f} "
                     f"B1={data['B1']:.5f} B2={data['B2']:.5f}"]
        lines.append(f"delta1={data['delta1']:.5f} "
                     f"delta2={data['delta2']:.5f} "
                     f"lambda={data['lambda']:.5f}")
        if not v.sigma_is_symmetric:
            lines.append("note: volatility matrix is asymmetric "
                         "(sigma12 != sigma21)")
        _emit("\n".join(lines) + "\n", rc.out)
    return 0


def cmd_tables(rc: RunConfig) -> int:
    base = rc.params if rc.params is not None else EXAMPLE_PARAMS
    tabs = all_tables(base)
    if rc.fmt == "json":
        payload = [{"model": t.model, "parameter": t.param,
                    "labels": list(t.labels), "values": list(t.values),
                    "rows": [list(r) for r in t.rows]} for t in tabs]
        _emit(json.dumps(payload, indent=2) + "\n", rc.out)
        return 0
    if rc.fmt == "csv":
        lines = ["model,parameter,value,k_low,k_high"]
        for t in tabs:
            for val, lo, hi in zip(t.values, *t.rows):
                lines.append(f"{t.model},{t.param},{val},{lo:.5f},{hi:.5f}")
        _emit("\n".join(lines) + "\n", rc.out)
        return 0
    blocks = []
    for t in tabs:
        head = f"[{t.model}] thresholds vs {t.param}"
        w = 11
        row0 = t.param.ljust(8) + "".join(f"{val:>{w}.5f}" for val in t.values)
        row1 = t.labels[0].ljust(8) + "".join(f"{x:>{w}.5f}" for x in t.rows[0])
        row2 = t.labels[1].ljust(8) + "".join(f"{x:>{w}.5f}" for x in t.rows[1])
        blocks.append("\n".join([head, row0, row1, row2]))
    _emit("\n\n".join(blocks) + "\n", rc.out)
    return 0


def cmd_calibrate(rc: RunConfig) -> int:
    ns = rc.ns
    cfg = _load_config_file(ns)
    rho = ns.rho if ns.rho is not None else cfg.get("rho")
    K = ns.K if ns.K is not None else cfg.get("K")
    if rho is None or K is None:
        raise UsageError("calibrate needs --rho and --K (they are supplied, "
                         "never estimated)")
    series = load_csv(ns.csv)
    if ns.split is not None:
        series = series.head_fraction(ns.split)
    result = estimate(series, ns.dt, rho=rho, K=K)
    v = validate_params(result.params)
    payload = {
        "params": asdict(result.params),
        "diagnostics": {
            "n_returns": result.diagnostics.n_returns,
            "mean_log_returns": list(result.diagnostics.mean_log_returns),
            "var_log_returns": list(result.diagnostics.var_log_returns),
            "a": [list(r) for r in result.diagnostics.a],
            "sigma_symmetry_residual":
                result.diagnostics.sigma_symmetry_residual,
        },
        "long_flat": _policy_payload(v, "long-flat"),
        "long_flat_short": _policy_payload(v, "long-flat-short"),
    }
    if rc.fmt == "json":
        _emit(json.dumps(payload, indent=2) + "\n", rc.out)
        return 0
    p = result.params
    lf, ls = payload["long_flat"], payload["long_flat_short"]
    lines = [
        f"mu1={p.mu1:.5f} mu2={p.mu2:.5f}",
        f"sigma11={p.sigma11:.5f} sigma12={p.sigma12:.5f} "
        f"sigma21={p.sigma21:.5f} sigma22={p.sigma22:.5f}",
        f"rho={p.rho:.5f} K={p.K:.5f} "
        f"(n_returns={result.diagnostics.n_returns})",
        f"long-flat:       k1={lf['k1']:.5f} k2={lf['k2']:.5f}",
        f"long-flat-short: k1*={ls['k1_star']:.5f} k2*={ls['k2_star']:.5f}",
    ]
    _emit("\n".join(lines) + "\n", rc.out)
    return 0


def cmd_verify(rc: RunConfig) -> int:
    v = validate_params(rc.params)
    models = (("long-flat", "long-flat-short") if rc.model == "both"
              else (rc.model,))
    reports = []
    for model in models:
        if model == "long-flat":
            reports.append((model, verify_policy(solve_policy(v))))
        else:
            reports.append((model, verify_policy_three(solve_policy_three(v))))
    ok = all(rep.passed for _, rep in reports)
    if rc.fmt == "json":
        payload = []
        for model, rep in reports:
            payload.append({
                "model": model,
                "passed": rep.passed,
                "inequalities": [
                    {"name": c.name, "region": c.region,
                     "worst_residual": c.min_residual, "at_y": c.argmin_y,
                     "passed": c.passed} for c in rep.inequalities],
                "smooth_fit": [
                    {"threshold": s.threshold, "y": s.location,
                     "value_gap": s.value_gap, "slope_gap": s.slope_gap,
                     "passed": s.passed} for s in rep.smooth_fit],
            })
        _emit(json.dumps(payload, indent=2) + "\n", rc.out)
    else:
        lines = []
        for model, rep in reports:
            lines.append(f"== {model}: {'PASS' if rep.passed else 'FAIL'}")
            lines.extend(rep.summary_lines())
        _emit("\n".join(lines) + "\n", rc.out)
    return 0 if ok else 1


def cmd_simulate(rc: RunConfig) -> int:
    ns = rc.ns
    v = validate_params(rc.params)
    policy = (solve_policy(v) if rc.model == "long-flat"
              else solve_policy_three(v))
    cfg = PathConfig(x1_0=ns.x1, x2_0=ns.x2, dt=ns.dt, t_max=ns.tmax,
                     n_paths=ns.paths, seed=ns.seed)
    est = mc_value(v, cfg, policy, ns.i0)
    payload = {"model": rc.model, "i0": ns.i0, "x1": ns.x1, "x2": ns.x2,
               "dt": ns.dt, "tmax": ns.tmax, "paths": est.n, "seed": ns.seed,
               "mean": est.mean, "stderr": est.stderr}
    if rc.fmt == "json":
        _emit(json.dumps(payload, indent=2) + "\n", rc.out)
    elif rc.fmt == "csv":
        keys = list(payload)
        _emit(",".join(keys) + "\n"
              + ",".join(str(payload[k]) for k in keys) + "\n", rc.out)
    else:
        _emit(f"mean={est.mean:.6f} stderr={est.stderr:.6f} n={est.n}\n",
              rc.out)
    return 0


def cmd_backtest(rc: RunConfig) -> int:
    ns = rc.ns
    v = validate_params(rc.params)
    policy = (solve_policy(v) if rc.model == "long-flat"
              else solve_policy_three(v))
    series = load_csv(ns.csv)
    ledger = backtest(series, policy, ns.i0, v.params.rho, ns.dt)
    if rc.fmt == "json":
        _emit(ledger.to_json() + "\n", rc.out)
    elif rc.fmt == "csv":
        _emit(ledger.to_csv(), rc.out)
    else:
        lines = [f"{e.time:12.6f} {e.action.value:13s} x1={e.x1:.4f} "
                 f"x2={e.x2:.4f} cash={e.cash_flow:+.6f}"
                 for e in ledger.events]
        lines.append(f"total discounted cash flow: "
                     f"{ledger.total_cash_flow:+.6f}")
        _emit("\n".join(lines) + "\n", rc.out)
    return 0


_COMMANDS = {
    "thresholds": cmd_thresholds,
    "tables": cmd_tables,
    "calibrate": cmd_calibrate,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "backtest": cmd_backtest,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _load_config_file(ns)
        needs_params = ns.command in ("thresholds", "verify", "simulate",
                                      "backtest")
        params = None
        if ns.command != "calibrate":
            params = _resolve_params(ns, cfg, required=needs_params)
        rc = RunConfig(command=ns.command, params=params,
                       model=getattr(ns, "model", "long-flat"),
                       fmt=ns.format, out=ns.out, ns=ns)
        return _COMMANDS[ns.command](rc)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PairstopError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: allocations, reference tables, curves, audits."""

from __future__ import annotations

import argparse
import json
import sys

from . import refdata
from .allocation import (
    DegenerateProportionError,
    RootBracketError,
    build_report,
    optimize_allocation,
    regime_switch_w1,
    w1_star,
)
from .audit import build_audit, render_audit_text
from .population import (
    Allocation,
    CostBudget,
    InfeasibleBudgetError,
    ValidationError,
    build_population,
    canonicalize,
)
from .simulate import (
    AVERAGED_NUISANCE,
    CLASSICAL_SRS,
    KNOWN_THETAS,
    SIMULATION_MODES,
    SimulationConfig,
    simulate_averaged,
    simulate_classical,
    simulate_stratified,
)
from .variance import (
    CensusAllocationError,
    LatticeError,
    MODES,
    PARITY,
    averaged_variance_exact,
    classical_variance,
    emit_curve,
    variance_known_thetas,
)

TABLE_HEADER = "w1,n1_opt,n_w,n_c,max_var_stratified,max_var_classical,reduction_percent"
CURVE_HEADER = "theta,var_stratified,var_classical"
TABLE1_HEADER = "N,w1_star,N1,regime_switch_w1,reference_w1_star,matches_reference"


def fmt(x) -> str:
    """Shortest rendering with six significant digits, round-half-even."""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, float):
        return format(x, ".6g")
    return str(x)


def render_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, args) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"config line is not key=value: {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


_CONFIG_TYPES = {
    "N": int,
    "N1": int,
    "w1": float,
    "c1": float,
    "c2": float,
    "budget": float,
    "mode": str,
    "format": str,
    "step": float,
    "grid": str,
    "n1": int,
    "n2": int,
    "reps": int,
    "seed": int,
    "theta": float,
    "theta1": float,
    "theta2": float,
}


def _merge_config(args) -> None:
    """Fill unset flags from the config file; flags always win."""
    if not getattr(args, "config", None):
        return
    values = _read_config_file(args.config)
    for key, text in values.items():
        if key not in _CONFIG_TYPES:
            raise ValidationError(f"unknown config key {key!r}")
        if hasattr(args, key) and getattr(args, key) is None:
            try:
                setattr(args, key, _CONFIG_TYPES[key](text))
            except ValueError as exc:
                raise ValidationError(f"bad config value for {key}: {text!r}") from exc


def _require(args, parser, names) -> None:
    for name in names:
        if getattr(args, name) is None:
            parser.error(f"missing required value --{name} (flag or config file)")


def _population_from_args(args):
    if args.w1 is not None and args.N1 is not None:
        raise ValidationError("give either --w1 or --N1, not both")
    if args.w1 is None and args.N1 is None:
        raise ValidationError("one of --w1 or --N1 is required")
    return build_population(args.N, w1=args.w1, N1=args.N1)


def _budget_from_args(args) -> CostBudget:
    return CostBudget(args.c1, args.c2, args.budget)


def _report_payload(report) -> dict:
    return {
        "n1_opt": report.n1_opt,
        "n2_opt": report.n2_opt,
        "n_w": report.n_w,
        "n_c": report.n_c,
        "theta_tilde": report.theta_tilde,
        "max_var_stratified": report.max_var_stratified,
        "max_var_classical": report.max_var_classical,
        "reduction_percent": report.reduction_percent,
        "mode": report.mode,
        "audit_notes": [dict(note) for note in report.audit_notes],
    }


def _report_csv_row(report) -> str:
    return ",".join(
        [
            fmt(report.w1),
            str(report.n1_opt),
            str(report.n_w),
            str(report.n_c),
            fmt(report.max_var_stratified),
            fmt(report.max_var_classical),
            fmt(report.reduction_percent),
        ]
    )


def _report_text(report) -> str:
    lines = [
        f"optimal n1: {report.n1_opt}",
        f"optimal n2: {report.n2_opt}",
        f"stratified sample size: {report.n_w}",
        f"classical sample size: {report.n_c}",
        f"worst-case theta: {fmt(report.theta_tilde)}",
        f"maximal stratified variance: {fmt(report.max_var_stratified)}",
        f"maximal classical variance: {fmt(report.max_var_classical)}",
        f"variance reduction: {fmt(report.reduction_percent)}%",
        f"mode: {report.mode}",
    ]
    for note in report.audit_notes:
        status = "ok" if note.get("agrees") else "flagged"
        lines.append(f"audit [{note['check']}]: {status}")
    return "\n".join(lines) + "\n"


def cmd_allocate(args, parser) -> int:
    _merge_config(args)
    _require(args, parser, ("N", "c1", "c2", "budget"))
    pop = _population_from_args(args)
    budget = _budget_from_args(args)
    report = build_report(pop, budget, args.mode)
    if args.format == "json":
        _emit(render_json(_report_payload(report)), args)
    elif args.format == "csv":
        _emit(TABLE_HEADER + "\n" + _report_csv_row(report) + "\n", args)
    else:
        _emit(_report_text(report), args)
    return 0


def _parse_grid(spec: str) -> list[float]:
    try:
        start, stop, step = (float(part) for part in spec.split(":"))
    except ValueError as exc:
        raise ValidationError(f"grid must be start:stop:step, got {spec!r}") from exc
    if step <= 0 or stop < start:
        raise ValidationError(f"bad grid bounds {spec!r}")
    values = []
    i = 0
    while True:
        value = start + i * step
        if value > stop + 1e-9:
            break
        values.append(round(value, 12))
        i += 1
    return values


def cmd_table2(args, parser) -> int:
    _merge_config(args)
    _require(args, parser, ("N", "c1", "c2", "budget"))
    budget = _budget_from_args(args)
    rows = []
    for w1 in _parse_grid(args.grid):
        try:
            pop = build_population(args.N, w1=w1)
            rows.append(build_report(pop, budget, args.mode))
        except (ValidationError, InfeasibleBudgetError) as exc:
            print(f"row w1 = {w1} failed: {exc}", file=sys.stderr)
            return 3
    if args.format == "json":
        payload = [dict(_report_payload(r), w1=r.w1) for r in rows]
        _emit(render_json(payload), args)
    else:
        lines = [TABLE_HEADER]
        lines.extend(_report_csv_row(r) for r in rows)
        _emit("\n".join(lines) + "\n", args)
    return 0


def cmd_table1(args, parser) -> int:
    _merge_config(args)
    n_values = [int(part) for part in args.N_list.split(",") if part.strip()]
    if not n_values:
        parser.error("empty --N-list")
    budget = None
    if args.c1 is not None and args.c2 is not None and args.budget is not None:
        budget = CostBudget(args.c1, args.c2, args.budget)
    rows = []
    for N in n_values:
        entry: dict = {"N": N}
        ref = refdata.REFERENCE_W1_STAR.get(N)
        entry["reference_w1_star"] = ref[0] if ref else None
        try:
            root = w1_star(N)
            entry["w1_star"] = root
            entry["N1"] = int(root * N)
            entry["matches_reference"] = (
                ref is not None and abs(root - ref[0]) <= 5e-7
            )
        except (RootBracketError, ValidationError) as exc:
            entry["w1_star"] = None
            entry["N1"] = None
            entry["matches_reference"] = False
            entry["error"] = str(exc)
        entry["regime_switch_w1"] = None
        if budget is not None:
            try:
                entry["regime_switch_w1"] = regime_switch_w1(N, budget)
            except (InfeasibleBudgetError, ValidationError):
                pass
        rows.append(entry)
    if args.format == "json":
        _emit(render_json(rows), args)
        return 0
    lines = [TABLE1_HEADER]
    for entry in rows:
        lines.append(
            ",".join(
                [
                    str(entry["N"]),
                    fmt(entry["w1_star"]) if entry["w1_star"] is not None else "",
                    str(entry["N1"]) if entry["N1"] is not None else "",
                    fmt(entry["regime_switch_w1"])
                    if entry["regime_switch_w1"] is not None
                    else "",
                    fmt(entry["reference_w1_star"])
                    if entry["reference_w1_star"] is not None
                    else "",
                    str(entry["matches_reference"]),
                ]
            )
        )
    _emit("\n".join(lines) + "\n", args)
    return 0


def cmd_curve(args, parser) -> int:
    _merge_config(args)
    _require(args, parser, ("N", "c1", "c2", "budget"))
    pop = _population_from_args(args)
    budget = _budget_from_args(args)
    cpop, cbudget, _swapped = canonicalize(pop, budget)
    if args.n1 is None and not args.optimize:
        parser.error("give --n1 or --optimize")
    if args.n1 is not None and args.optimize:
        parser.error("give only one of --n1 and --optimize")
    if args.optimize:
        alloc, _result = optimize_allocation(cpop, cbudget, args.mode)
        n1 = alloc.n1
    else:
        n1 = args.n1
    curve = emit_curve(cpop, cbudget, n1, step=args.step, mode=args.mode)
    lines = [CURVE_HEADER]
    lines.extend(
        f"{fmt(theta)},{fmt(vs)},{fmt(vc)}" for theta, vs, vc in curve.points
    )
    _emit("\n".join(lines) + "\n", args)
    return 0


def cmd_audit(args, parser) -> int:
    _merge_config(args)
    report = build_audit(mode=args.mode, include_oracle=not args.skip_oracle)
    if args.format == "json":
        _emit(render_json(report), args)
    else:
        _emit(render_audit_text(report), args)
    return 0


def _simulate_text(summary, bands) -> str:
    lines = [
        f"replications: {summary.replications}",
        f"estimator mean: {fmt(summary.estimator_mean)}",
        f"estimator variance: {fmt(summary.estimator_variance)}",
        f"standard error of mean: {fmt(summary.standard_error_mean)}",
    ]
    if summary.within_variance is not None:
        lines.append(f"within-nuisance variance: {fmt(summary.within_variance)}")
    if summary.expected_cost_empirical is not None:
        lines.append(f"mean cost: {fmt(summary.expected_cost_empirical)}")
        lines.append(f"cost standard error: {fmt(summary.cost_standard_error)}")
    for name, ok, detail in bands:
        lines.append(f"band [{name}]: {'PASS' if ok else 'FAIL'} ({detail})")
    return "\n".join(lines) + "\n"


def cmd_simulate(args, parser) -> int:
    _merge_config(args)
    _require(args, parser, ("N", "reps", "seed"))
    if args.reps < 1:
        parser.error("--reps must be a positive integer")
    pop = _population_from_args(args)
    cfg = SimulationConfig(replications=args.reps, seed=args.seed, mode=args.sim_mode)
    bands: list[tuple[str, bool, str]] = []

    if args.sim_mode == KNOWN_THETAS:
        _require(args, parser, ("n1", "n2", "theta1", "theta2"))
        alloc = Allocation(args.n1, args.n2)
        summary = simulate_stratified(pop, alloc, args.theta1, args.theta2, cfg)
        w1 = pop.N1 / pop.N
        target_mean = w1 * args.theta1 + (1.0 - w1) * args.theta2
        target_var = variance_known_thetas(pop, alloc, args.theta1, args.theta2)
    elif args.sim_mode == AVERAGED_NUISANCE:
        _require(args, parser, ("n1", "n2", "theta"))
        alloc = Allocation(args.n1, args.n2)
        summary = simulate_averaged(pop, alloc, args.theta, cfg)
        target_mean = args.theta
        target_var = averaged_variance_exact(pop, alloc, args.theta)
    else:
        _require(args, parser, ("c1", "c2", "budget", "theta"))
        budget = _budget_from_args(args)
        summary = simulate_classical(pop, budget, args.theta, cfg)
        target_mean = args.theta
        w1 = pop.N1 / pop.N
        n_c = int(budget.C / (w1 * budget.c1 + (1.0 - w1) * budget.c2))
        target_var = classical_variance(pop, n_c, args.theta)
        expected_cost = (w1 * budget.c1 + (1.0 - w1) * budget.c2) * n_c
        gap = abs(summary.expected_cost_empirical - expected_cost)
        spread = 4.0 * summary.cost_standard_error
        bands.append(
            (
                "expected-cost",
                gap <= spread or spread == 0.0 and gap == 0.0,
                f"|{fmt(summary.expected_cost_empirical)} - {fmt(expected_cost)}| "
                f"vs 4*SE = {fmt(spread)}",
            )
        )

    mean_gap = abs(summary.estimator_mean - target_mean)
    mean_band = 4.0 * summary.standard_error_mean
    bands.insert(
        0,
        (
            "unbiasedness",
            mean_gap <= mean_band or (mean_gap == 0.0),
            f"|{fmt(summary.estimator_mean)} - {fmt(target_mean)}| vs 4*SE = {fmt(mean_band)}",
        ),
    )
    observed_var = (
        summary.within_variance
        if args.sim_mode == AVERAGED_NUISANCE
        else summary.estimator_variance
    )
    if target_var > 0.0:
        var_ok = abs(observed_var - target_var) / target_var <= 0.05
        detail = f"{fmt(observed_var)} vs {fmt(target_var)} (5% rel)"
    else:
        var_ok = observed_var == 0.0
        detail = f"{fmt(observed_var)} vs 0"
    bands.append(("variance", var_ok, detail))

    if args.format == "json":
        payload = {
            "replications": summary.replications,
            "estimator_mean": summary.estimator_mean,
            "estimator_variance": summary.estimator_variance,
            "standard_error_mean": summary.standard_error_mean,
            "within_variance": summary.within_variance,
            "expected_cost_empirical": summary.expected_cost_empirical,
            "cost_standard_error": summary.cost_standard_error,
            "bands": [{"name": n, "pass": ok, "detail": d} for n, ok, d in bands],
        }
        _emit(render_json(payload), args)
    else:
        _emit(_simulate_text(summary, bands), args)
    return 0


def _add_population_flags(sub) -> None:
    sub.add_argument("--N", type=int, default=None, help="population size")
    sub.add_argument("--w1", type=float, default=None, help="stratum-1 weight N1/N")
    sub.add_argument("--N1", type=int, default=None, help="stratum-1 size")


def _add_budget_flags(sub) -> None:
    sub.add_argument("--c1", type=float, default=None, help="cost per stratum-1 unit")
    sub.add_argument("--c2", type=float, default=None, help="cost per stratum-2 unit")
    sub.add_argument("--budget", type=float, default=None, help="total budget")


def _add_common_flags(sub, default_format="text") -> None:
    sub.add_argument("--mode", choices=MODES, default=PARITY)
    sub.add_argument("--format", choices=("text", "json", "csv"), default=default_format)
    sub.add_argument("--output", default=None, help="write to this path instead of stdout")
    sub.add_argument("--config", default=None, help="key=value defaults file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratalloc",
        description="Minimax allocation of a two-stratum survey sample under a budget",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("allocate", help="optimal allocation for one configuration")
    _add_population_flags(sub)
    _add_budget_flags(sub)
    _add_common_flags(sub)
    sub.set_defaults(func=cmd_allocate)

    sub = subparsers.add_parser("table2", help="allocation table over a w1 grid")
    _add_population_flags(sub)
    _add_budget_flags(sub)
    sub.add_argument("--grid", default="0.05:0.50:0.05", help="w1 grid start:stop:step")
    _add_common_flags(sub, default_format="csv")
    sub.set_defaults(func=cmd_table2, N=refdata.REFERENCE_N)

    sub = subparsers.add_parser("table1", help="regime-switch weights for several N")
    sub.add_argument(
        "--N-list",
        dest="N_list",
        default=",".join(str(n) for n in sorted(refdata.REFERENCE_W1_STAR)),
        help="comma-separated population sizes",
    )
    _add_budget_flags(sub)
    _add_common_flags(sub, default_format="csv")
    sub.set_defaults(func=cmd_table1)

    sub = subparsers.add_parser("curve", help="variance-vs-theta curve data (CSV)")
    _add_population_flags(sub)
    _add_budget_flags(sub)
    sub.add_argument("--n1", type=int, default=None, help="stratum-1 sample size")
    sub.add_argument("--optimize", action="store_true", help="use the optimal n1")
    sub.add_argument("--step", type=float, default=0.001, help="theta grid step")
    _add_common_flags(sub, default_format="csv")
    sub.set_defaults(func=cmd_curve)

    sub = subparsers.add_parser("audit", help="audit closed forms against oracles")
    sub.add_argument(
        "--skip-oracle",
        action="store_true",
        help="skip the brute-force lattice section",
    )
    _add_common_flags(sub)
    sub.set_defaults(func=cmd_audit)

    sub = subparsers.add_parser("simulate", help="Monte Carlo estimator checks")
    sub.add_argument("--mode", dest="sim_mode", choices=SIMULATION_MODES, default=KNOWN_THETAS)
    _add_population_flags(sub)
    _add_budget_flags(sub)
    sub.add_argument("--n1", type=int, default=None)
    sub.add_argument("--n2", type=int, default=None)
    sub.add_argument("--theta", type=float, default=None)
    sub.add_argument("--theta1", type=float, default=None)
    sub.add_argument("--theta2", type=float, default=None)
    sub.add_argument("--reps", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--format", choices=("text", "json"), default="text")
    sub.add_argument("--output", default=None)
    sub.add_argument("--config", default=None)
    sub.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (ValidationError, LatticeError, DegenerateProportionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleBudgetError, RootBracketError, CensusAllocationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main_entry() -> None:
    sys.exit(main())

"""Cross-checks of every closed form against independent recomputation.

Findings are data, not failures: each section records what was compared,
the worst deviation seen, and which items exceeded the expected agreement.
"""

from __future__ import annotations

import math

from . import refdata
from .allocation import (
    RootBracketError,
    audit_limits,
    build_report,
    n1_closed_form,
    optimize_allocation,
    regime_switch_w1,
    w1_star,
)
from .population import (
    Allocation,
    CostBudget,
    StratifiedPopulation,
    build_population,
    validate_budget,
)
from .variance import (
    ORACLE,
    PARITY,
    averaged_variance_closed,
    averaged_variance_exact,
    half_variance_alt,
    max_variance,
    n2_from_budget,
)

# Desk-scale instances for the oracle section: (N, N1 choices, c1, c2, C).
_ORACLE_INSTANCES = (
    (20, (4, 6, 8), 1.0, 2.0, 20.0),
    (40, (4, 8, 12, 16, 20), 1.0, 2.0, 30.0),
)


def _numeric_max(pop, budget, n1: float, mode: str) -> float:
    """Independent maximizer over theta: coarse grid plus ternary refinement."""
    n2 = n2_from_budget(budget, n1, mode)
    steps = 2000
    best_i, best_v = 0, -math.inf
    for i in range(steps + 1):
        theta = i / steps
        v = averaged_variance_closed(pop, budget, n1, theta, mode)
        if v > best_v:
            best_i, best_v = i, v
    lo = max(0.0, (best_i - 1) / steps)
    hi = min(1.0, (best_i + 1) / steps)
    for _ in range(200):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if averaged_variance_closed(pop, budget, n1, m1, mode) < averaged_variance_closed(
            pop, budget, n1, m2, mode
        ):
            lo = m1
        else:
            hi = m2
        if hi - lo < 1e-13:
            break
    return averaged_variance_closed(pop, budget, n1, 0.5 * (lo + hi), mode)


def closed_vs_oracle_section(instances=_ORACLE_INSTANCES) -> dict:
    """Closed-form averaged variance vs the brute-force lattice average.

    Also compares the candidate-set maximization against an independent
    numeric maximizer on each instance's feasible n1 values.
    """
    worst = {"rel_dev": 0.0, "where": None}
    worst_max = {"rel_dev": 0.0, "where": None}
    offending = []
    checked = 0
    for N, n1_choices, c1, c2, C in instances:
        budget = CostBudget(c1, c2, C)
        for N1 in n1_choices:
            pop = StratifiedPopulation(N, N1, N - N1)
            feasible = validate_budget(pop, budget)
            for n1 in range(feasible.n1_min, feasible.n1_max + 1):
                n2 = int(n2_from_budget(budget, n1, ORACLE))
                alloc = Allocation(n1, n2)
                for m in range(0, N + 1):
                    theta = m / N
                    exact = averaged_variance_exact(pop, alloc, theta)
                    closed = averaged_variance_closed(pop, budget, n1, theta, ORACLE)
                    denom = max(abs(exact), abs(closed), 1e-300)
                    rel = abs(exact - closed) / denom if denom > 0 else 0.0
                    checked += 1
                    if rel > worst["rel_dev"]:
                        worst = {
                            "rel_dev": rel,
                            "where": {"N": N, "N1": N1, "n1": n1, "theta": theta},
                        }
                    if rel > 1e-9:
                        offending.append({"N": N, "N1": N1, "n1": n1, "theta": theta, "rel_dev": rel})
                grid_max = max(
                    averaged_variance_exact(pop, alloc, m / N) for m in range(N + 1)
                )
                cand_max = max_variance(pop, budget, n1, ORACLE).value
                rel = abs(grid_max - cand_max) / max(grid_max, 1e-300)
                if rel > worst_max["rel_dev"]:
                    worst_max = {
                        "rel_dev": rel,
                        "where": {"N": N, "N1": N1, "n1": n1},
                    }
    numeric = []
    budget = CostBudget(refdata.REFERENCE_C1, refdata.REFERENCE_C2, refdata.REFERENCE_BUDGET)
    for w1, ref_n1, *_ in refdata.REFERENCE_TABLE:
        pop = build_population(refdata.REFERENCE_N, w1=w1)
        cand = max_variance(pop, budget, ref_n1, PARITY).value
        num = _numeric_max(pop, budget, ref_n1, PARITY)
        numeric.append(
            {"w1": w1, "candidate_max": cand, "numeric_max": num,
             "rel_dev": abs(cand - num) / max(num, 1e-300)}
        )
    return {
        "points_checked": checked,
        "max_rel_dev": worst["rel_dev"],
        "worst_case": worst["where"],
        "within_1e-9": not offending,
        "offending": offending,
        "lattice_max_rel_dev": worst_max["rel_dev"],
        "lattice_max_worst_case": worst_max["where"],
        "candidate_vs_numeric_max": numeric,
        "candidate_vs_numeric_within_1e-9": all(
            row["rel_dev"] <= 1e-9 for row in numeric
        ),
    }


def half_point_section() -> dict:
    """Alternative printed form for the theta = 1/2 value vs its evaluation."""
    budget = CostBudget(
        refdata.REFERENCE_C1, refdata.REFERENCE_C2, refdata.REFERENCE_BUDGET
    )
    rows = []
    for w1, ref_n1, *_ in refdata.REFERENCE_TABLE:
        pop = build_population(refdata.REFERENCE_N, w1=w1)
        alt = half_variance_alt(pop, budget, ref_n1, PARITY)
        evaluated = averaged_variance_closed(pop, budget, ref_n1, 0.5, PARITY)
        rel = abs(alt - evaluated) / max(evaluated, 1e-300)
        rows.append(
            {
                "w1": w1,
                "n1": ref_n1,
                "alt_value": alt,
                "evaluated_value": evaluated,
                "relative_gap": rel,
                "agrees": rel <= 1e-9,
            }
        )
    return {"rows": rows, "all_flagged": all(not r["agrees"] for r in rows)}


def allocation_closed_form_section(mode: str = PARITY) -> dict:
    """Floor of the closed-form n1 vs the minimax optimizer, per grid weight."""
    budget = CostBudget(
        refdata.REFERENCE_C1, refdata.REFERENCE_C2, refdata.REFERENCE_BUDGET
    )
    rows = []
    for w1, *_ in refdata.REFERENCE_TABLE:
        pop = build_population(refdata.REFERENCE_N, w1=w1)
        closed = n1_closed_form(pop, budget)
        alloc, _result = optimize_allocation(pop, budget, mode)
        rows.append(
            {
                "w1": w1,
                "n1_closed_form": closed,
                "n1_closed_floor": int(closed),
                "n1_opt": alloc.n1,
                "agrees": int(closed) == alloc.n1,
            }
        )
    return {
        "rows": rows,
        "flagged_w1": [r["w1"] for r in rows if not r["agrees"]],
    }


def regime_root_section(
    N_values=tuple(sorted(refdata.REFERENCE_W1_STAR)), budget: CostBudget | None = None
) -> dict:
    """Bisection root of the printed limit ratio vs the reference weights."""
    rows = []
    for N in N_values:
        entry = {"N": N}
        ref = refdata.REFERENCE_W1_STAR.get(N)
        entry["reference_w1_star"] = ref[0] if ref else None
        try:
            root = w1_star(N)
            entry["w1_star"] = root
            entry["residual"] = abs(audit_limits(N, root)[1] - 1.0)
            entry["matches_reference"] = (
                ref is not None and abs(root - ref[0]) <= 5e-7
            )
        except RootBracketError as exc:
            entry["w1_star"] = None
            entry["residual"] = None
            entry["matches_reference"] = False
            entry["error"] = str(exc)
        if budget is not None:
            try:
                entry["regime_switch_w1"] = regime_switch_w1(N, budget)
            except Exception:
                entry["regime_switch_w1"] = None
        rows.append(entry)
    return {
        "rows": rows,
        "flagged_N": [r["N"] for r in rows if not r.get("matches_reference", False)],
    }


def reference_table_section(mode: str = PARITY) -> dict:
    """Cell-by-cell comparison of recomputed rows against the reference table."""
    budget = CostBudget(
        refdata.REFERENCE_C1, refdata.REFERENCE_C2, refdata.REFERENCE_BUDGET
    )
    rows = []
    for w1, ref_n1, ref_nw, ref_nc, ref_vw, ref_vc, ref_red in refdata.REFERENCE_TABLE:
        pop = build_population(refdata.REFERENCE_N, w1=w1)
        report = build_report(pop, budget, mode)
        flagged = []
        if report.n1_opt != ref_n1:
            flagged.append("n1_opt")
        if report.n_w != ref_nw:
            flagged.append("n_w")
        if report.n_c != ref_nc:
            flagged.append("n_c")
        if abs(report.max_var_stratified - ref_vw) > refdata.VAR_CELL_TOL:
            flagged.append("max_var_stratified")
        if abs(report.max_var_classical - ref_vc) > refdata.VAR_CELL_TOL:
            flagged.append("max_var_classical")
        if abs(report.reduction_percent - ref_red) > refdata.REDUCTION_CELL_TOL:
            flagged.append("reduction_percent")
        rows.append(
            {
                "w1": w1,
                "computed": {
                    "n1_opt": report.n1_opt,
                    "n_w": report.n_w,
                    "n_c": report.n_c,
                    "max_var_stratified": report.max_var_stratified,
                    "max_var_classical": report.max_var_classical,
                    "reduction_percent": report.reduction_percent,
                },
                "reference": {
                    "n1_opt": ref_n1,
                    "n_w": ref_nw,
                    "n_c": ref_nc,
                    "max_var_stratified": ref_vw,
                    "max_var_classical": ref_vc,
                    "reduction_percent": ref_red,
                },
                "flagged_cells": flagged,
            }
        )
    return {
        "rows": rows,
        "flagged_w1": [r["w1"] for r in rows if r["flagged_cells"]],
    }


def build_audit(mode: str = PARITY, include_oracle: bool = True) -> dict:
    """Assemble all audit sections into one machine-readable report."""
    budget = CostBudget(
        refdata.REFERENCE_C1, refdata.REFERENCE_C2, refdata.REFERENCE_BUDGET
    )
    report: dict = {"mode": mode, "sections": {}}
    if include_oracle:
        report["sections"]["closed_vs_oracle"] = closed_vs_oracle_section()
    report["sections"]["half_point_form"] = half_point_section()
    report["sections"]["allocation_closed_form"] = allocation_closed_form_section(mode)
    report["sections"]["regime_root"] = regime_root_section(budget=budget)
    report["sections"]["reference_table"] = reference_table_section(mode)
    return report


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".6g")
    return str(x)


def render_audit_text(report: dict) -> str:
    """Human-readable rendering of :func:`build_audit` output."""
    lines: list[str] = [f"formula audit (mode: {report['mode']})", ""]
    sections = report["sections"]

    if "closed_vs_oracle" in sections:
        sec = sections["closed_vs_oracle"]
        lines.append("(a) closed form vs brute-force lattice average")
        lines.append(f"    points checked: {sec['points_checked']}")
        lines.append(f"    max relative deviation: {_fmt(sec['max_rel_dev'])}")
        lines.append(f"    within 1e-9: {sec['within_1e-9']}")
        for item in sec["offending"]:
            lines.append(f"    OFFENDING: {item}")
        lines.append(
            f"    lattice max vs candidate max, worst: {_fmt(sec['lattice_max_rel_dev'])}"
        )
        lines.append(
            "    candidate vs numeric maximizer within 1e-9: "
            f"{sec['candidate_vs_numeric_within_1e-9']}"
        )
        lines.append("")

    sec = sections["half_point_form"]
    lines.append("(b) alternative half-point closed form vs evaluated value")
    for row in sec["rows"]:
        tag = "ok" if row["agrees"] else "FLAG"
        lines.append(
            f"    w1 = {row['w1']:.2f}: alt {_fmt(row['alt_value'])} vs "
            f"evaluated {_fmt(row['evaluated_value'])} "
            f"(rel gap {_fmt(row['relative_gap'])}) [{tag}]"
        )
    lines.append("")

    sec = sections["allocation_closed_form"]
    lines.append("(c) closed-form allocation vs minimax optimizer")
    for row in sec["rows"]:
        tag = "ok" if row["agrees"] else "FLAG"
        lines.append(
            f"    w1 = {row['w1']:.2f}: closed {_fmt(row['n1_closed_form'])} "
            f"(floor {row['n1_closed_floor']}) vs optimizer {row['n1_opt']} [{tag}]"
        )
    lines.append(f"    flagged weights: {sec['flagged_w1']}")
    lines.append("")

    sec = sections["regime_root"]
    lines.append("(d) regime-switch weight: printed limit-ratio root vs reference")
    for row in sec["rows"]:
        root = _fmt(row["w1_star"]) if row["w1_star"] is not None else "n/a"
        res = _fmt(row["residual"]) if row["residual"] is not None else "n/a"
        ref = (
            _fmt(row["reference_w1_star"])
            if row["reference_w1_star"] is not None
            else "n/a"
        )
        tag = "ok" if row.get("matches_reference") else "FLAG"
        extra = ""
        if "regime_switch_w1" in row:
            sw = row["regime_switch_w1"]
            extra = f", empirical switch {_fmt(sw) if sw is not None else 'n/a'}"
        lines.append(
            f"    N = {row['N']}: root {root} (residual {res}) vs reference {ref}"
            f"{extra} [{tag}]"
        )
    lines.append("")

    sec = sections["reference_table"]
    lines.append("(e) reference allocation table, cell by cell")
    for row in sec["rows"]:
        comp, ref = row["computed"], row["reference"]
        tag = "ok" if not row["flagged_cells"] else f"FLAG {row['flagged_cells']}"
        lines.append(
            f"    w1 = {row['w1']:.2f}: n1 {comp['n1_opt']}/{ref['n1_opt']}, "
            f"n_w {comp['n_w']}/{ref['n_w']}, n_c {comp['n_c']}/{ref['n_c']}, "
            f"var_w {_fmt(comp['max_var_stratified'])}/{_fmt(ref['max_var_stratified'])}, "
            f"var_c {_fmt(comp['max_var_classical'])}/{_fmt(ref['max_var_classical'])}, "
            f"red {_fmt(comp['reduction_percent'])}/{_fmt(ref['reduction_percent'])} "
            f"[{tag}]"
        )
    lines.append(f"    flagged weights: {sec['flagged_w1']}")
    lines.append("")
    return "\n".join(lines)

"""
report_formatter.py

Screen-only formatting of command results.

Each report has a ``get_*_lines`` function returning the lines (for tests and
alternative output) and a ``print_*`` wrapper that writes them to stdout.
Tables are rendered with PrettyTable.  Missing values print as ``(missing)``.
"""

import math
from typing import Iterable, List, Optional, Sequence

from prettytable import PrettyTable

SECTION_DIVIDER = "-" * 40
MISSING = "(missing)"
NUMBER_FORMAT = ".6g"


def _num(value: Optional[float], fmt: str = NUMBER_FORMAT) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return MISSING
    return format(value, fmt)


def _table(field_names: Sequence[str], rows: Iterable[Sequence]) -> List[str]:
    table = PrettyTable()
    table.field_names = list(field_names)
    for row in rows:
        table.add_row(list(row))
    table.align = "r"
    table.align[field_names[0]] = "l"
    return table.get_string().splitlines()


def _emit(lines: List[str]) -> None:
    for line in lines:
        print(line)


# ---------------------------------------------------------------------- #
# k factor
# ---------------------------------------------------------------------- #
def get_k_factor_lines(risks, k: float, section_divider=SECTION_DIVIDER) -> List[str]:
    lines = [section_divider, "ACCEPTABILITY CONSTANT", section_divider]
    lines.append(
        f"alpha={risks.alpha}  beta={risks.beta}  "
        f"p_alpha={risks.p_alpha}  p_beta={risks.p_beta}"
    )
    lines.extend(
        _table(
            ["quantity", "value"],
            [
                ("u_alpha", _num(risks.u_alpha)),
                ("u_beta", _num(risks.u_beta)),
                ("z_alpha", _num(risks.z_alpha)),
                ("z_1-beta", _num(risks.z_one_minus_beta)),
            ],
        )
    )
    lines.append(f"k = {k:.4f}")
    return lines


def print_k_factor(risks, k: float) -> None:
    _emit(get_k_factor_lines(risks, k))


# ---------------------------------------------------------------------- #
# Plans
# ---------------------------------------------------------------------- #
def plan_rows(result) -> List[tuple]:
    """``(param, value)`` rows of an optimized plan."""
    plan = result.plan
    rows = [("n", sum(result.allocation)), ("n_relaxed", plan.n)]
    rows += [(f"xi{i}", xi) for i, xi in enumerate(plan.stresses)]
    rows += [(f"n{i}", ni) for i, ni in enumerate(result.allocation)]
    rows += [(f"pi{i}", p) for i, p in enumerate(plan.proportions)]
    rows += [
        ("ln_tau0", result.ln_tau0),
        ("tau0", plan.tau0),
        ("k", result.k),
        ("V_W", result.w.variance),
    ]
    label = "C_min" if result.objective_kind.value == "cost" else "V_min"
    rows.append((label, result.objective))
    rows.append(("constraint_residual", result.constraint_residual))
    return rows


def get_plan_lines(result, section_divider=SECTION_DIVIDER) -> List[str]:
    lines = [section_divider, f"OPTIMAL PLAN ({result.objective_kind.value})"]
    lines.append(section_divider)
    plan = result.plan
    lines.extend(
        _table(
            ["level", "xi", "n_i", "pi_i"],
            [
                (i, _num(xi, ".3f"), ni, _num(p, ".4f"))
                for i, (xi, ni, p) in enumerate(
                    zip(plan.stresses, result.allocation, plan.proportions)
                )
            ],
        )
    )
    lines.append(f"Total sample size: {sum(result.allocation)} (relaxed {plan.n:.3f})")
    lines.append(f"Censoring time: {_num(plan.tau0)} (ln {result.ln_tau0:.4f})")
    label = "C_min" if result.objective_kind.value == "cost" else "V_min"
    lines.append(f"{label}: {_num(result.objective)}")
    lines.append(f"Risk residual: {_num(result.constraint_residual, '.3g')}")
    return lines


def print_plan(result) -> None:
    _emit(get_plan_lines(result))


def get_feasibility_lines(report, section_divider=SECTION_DIVIDER) -> List[str]:
    within = report.within_bound
    return [
        section_divider,
        "PLAN FEASIBILITY",
        section_divider,
        f"Risk residual: {_num(report.eq_residual, '.3g')}",
        f"Stresses ordered: {'Yes' if report.ordering_ok else 'No'}",
        f"Simplex residual: {_num(report.simplex_residual, '.3g')}",
        f"V(W): {_num(report.w_variance)}",
        f"Within sample bound: "
        f"{MISSING if within is None else 'Yes' if within else 'No'}",
    ]


def print_feasibility(report) -> None:
    _emit(get_feasibility_lines(report))


# ---------------------------------------------------------------------- #
# Fits
# ---------------------------------------------------------------------- #
def get_fit_lines(fits, comparison=None, section_divider=SECTION_DIVIDER) -> List[str]:
    lines = [section_divider, "MAXIMUM-LIKELIHOOD FITS", section_divider]
    for fit in fits:
        lines.append(
            f"{fit.spec.label}: loglik {_num(fit.loglik)}, AIC {_num(fit.aic)}, "
            f"{'converged' if fit.converged else 'NOT converged'}"
        )
        lines.extend(
            _table(
                ["parameter", "estimate"],
                [(name, _num(value)) for name, value in fit.estimates()],
            )
        )
    if comparison:
        lines.append("")
        lines.extend(
            _table(
                ["model", "AIC", "delta AIC"],
                [(r.label, _num(r.aic), _num(r.delta_aic)) for r in comparison],
            )
        )
    return lines


def print_fits(fits, comparison=None) -> None:
    _emit(get_fit_lines(fits, comparison))


# ---------------------------------------------------------------------- #
# Studies
# ---------------------------------------------------------------------- #
def get_case_study_lines(report, section_divider=SECTION_DIVIDER) -> List[str]:
    lines = [section_divider, "CASE STUDY: PLA vs LINEAR", section_divider]
    lines.extend(
        _table(
            ["model", "mean loglik", "SD loglik", "mean AIC", "SD AIC", "used"],
            [
                (
                    s.model,
                    _num(s.mean_loglik),
                    _num(s.sd_loglik),
                    _num(s.mean_aic),
                    _num(s.sd_aic),
                    f"{s.included}/{s.included + s.excluded}",
                )
                for s in report.summaries.values()
            ],
        )
    )
    lines.append(f"PLA wins: {report.pla_wins} / {report.paired}")
    lines.append(f"Mean delta AIC (linear - pla): {_num(report.mean_delta_aic)}")
    lines.append(f"Preferred by mean AIC: {report.preferred_model}")
    lines.append(
        "PLA dominance (>= 95% wins, mean delta AIC > "
        f"{report.dominance_gap:g}): "
        f"{'met' if report.pla_dominant else 'not met'}"
    )
    lines.append(
        f"Censored fraction: {_num(report.mean_censored_fraction, '.4f')} "
        f"(expected {_num(report.expected_censored_fraction, '.4f')})"
    )
    if report.calibration is not None:
        lines.append(
            f"Censor time for {_num(report.calibration.fraction, '.2f')} censoring: "
            f"ln tau0 = {_num(report.calibration.log_censor_time)}"
        )
    return lines


def print_case_study(report) -> None:
    _emit(get_case_study_lines(report))


def get_sse_lines(report, section_divider=SECTION_DIVIDER) -> List[str]:
    lines = [section_divider, "LINK SHAPE BENCHMARK (SSE)", section_divider]
    rows = [(r.model, _num(r.sse)) for r in report.rows]
    lines.extend(_table(["model", "SSE"], rows))
    lines.append(f"Grid points: {report.grid_points}; log shift {report.shift:g}")
    return lines


def print_sse(report) -> None:
    _emit(get_sse_lines(report))

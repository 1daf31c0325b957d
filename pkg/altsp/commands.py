"""
Implementation of the CLI subcommands.

Every command writes its CSV tables and a ``result.yaml`` document into the
workspace and records the run (config hash, seed, version, files) in the
workspace's run store.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from contextlib import contextmanager
from typing import Any, Dict, List, Optional, Tuple

import yaml

from . import __version__, report_formatter
from .acceptance import (
    acceptability_constant,
    lot_disposition,
    oc_curve,
    w_moments,
)
from .case_study import run_case_replications
from .config import RunConfig, config_hash
from .data_io import read_sample_csv, write_param_csv, write_rows_csv
from .errors import ConfigError
from .fisher import fisher_and_covariance
from .inference import LinkSpec, fit_mle, model_comparison
from .link_benchmark import sse_benchmark
from .links import KnotSet, default_knots
from .optimizer import Objective, feasibility_report, optimize_plan

logger = logging.getLogger(__name__)

RESULT_FILE = "result.yaml"


def _plain(value):
    """Convert numpy scalars and tuples for YAML output."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


class CommandContext:
    """What a command needs besides the configuration."""

    def __init__(
        self,
        workspace,
        config: RunConfig,
        raw: Optional[bytes] = None,
        progress: bool = True,
    ):
        self.workspace = workspace
        self.config = config
        self.raw = raw
        self.progress = progress
        self.artifacts: List[Tuple[str, str]] = []

    @property
    def config_hash(self) -> str:
        return config_hash(self.config, self.raw)

    def provenance(self) -> Dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "seed": self.config.seed,
            "version": __version__,
        }

    def write_csv(self, name: str, header, rows) -> str:
        path = self.workspace.path(name)
        count = write_rows_csv(path, header, rows)
        self.artifacts.append((path, "csv"))
        logger.info("wrote %d rows to %s", count, path)
        return path

    def write_params(self, name: str, rows) -> str:
        path = self.workspace.path(name)
        write_param_csv(path, rows)
        self.artifacts.append((path, "csv"))
        logger.info("wrote %s", path)
        return path

    def write_result(self, command: str, body: Dict[str, Any]) -> str:
        path = self.workspace.path(RESULT_FILE)
        document = {"command": command, "provenance": self.provenance()}
        document.update(_plain(body))
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(document, f, sort_keys=False)
        self.artifacts.append((path, "result"))
        return path


@contextmanager
def recorded_run(ctx: CommandContext, command: str):
    run = ctx.workspace.start_run(
        command, ctx.config_hash, ctx.config.seed, __version__
    )
    try:
        yield run
    except Exception as e:
        ctx.workspace.finish_run(run, ctx.artifacts, status="failed", message=str(e))
        raise
    ctx.workspace.finish_run(run, ctx.artifacts)


# ---------------------------------------------------------------------- #
# Acceptance sampling
# ---------------------------------------------------------------------- #
def run_k_factor(ctx: CommandContext) -> Dict[str, Any]:
    risks = ctx.config.require_risks()
    k = acceptability_constant(risks)
    report_formatter.print_k_factor(risks, k)
    body = {
        "k": k,
        "u_alpha": risks.u_alpha,
        "u_beta": risks.u_beta,
        "z_alpha": risks.z_alpha,
        "z_one_minus_beta": risks.z_one_minus_beta,
        "risks": dataclasses.asdict(risks),
    }
    ctx.write_result("k-factor", body)
    return body


def _optimize(ctx: CommandContext):
    config = ctx.config
    risks = config.require_risks()
    cost = config.cost_spec() if config.objective is Objective.COST else None
    return optimize_plan(
        config.objective,
        config.model,
        risks,
        cost,
        config.fixed,
        config.optimizer_settings(),
        progress=ctx.progress,
    )


def _plan_body(result) -> Dict[str, Any]:
    return {
        "objective": result.objective_kind.value,
        "objective_value": result.objective,
        "n": sum(result.allocation),
        "n_relaxed": result.plan.n,
        "stresses": list(result.plan.stresses),
        "proportions": list(result.plan.proportions),
        "allocation": list(result.allocation),
        "ln_tau0": result.ln_tau0,
        "tau0": result.plan.tau0,
        "k": result.k,
        "w_variance": result.w.variance,
        "constraint_residual": result.constraint_residual,
        "evaluations": result.diagnostics.get("evaluations"),
    }


def run_design(ctx: CommandContext) -> Dict[str, Any]:
    result = _optimize(ctx)
    report_formatter.print_plan(result)
    ctx.write_params("plan.csv", report_formatter.plan_rows(result))
    body = _plan_body(result)
    ctx.write_result("design", body)
    return body


def run_oc_curve(ctx: CommandContext) -> Dict[str, Any]:
    """
    OC curve of the configured plan, or of a freshly optimized one when the
    configuration has no ``plan`` section.
    """
    config = ctx.config
    risks = config.require_risks()
    k = acceptability_constant(risks)
    if config.plan is not None:
        plan = config.plan
        blocks = fisher_and_covariance(plan, config.model).blocks
        w = w_moments(config.model, blocks, k)
        source = "config"
    else:
        result = _optimize(ctx)
        plan, w, source = result.plan, result.w, "optimized"
    rows = oc_curve(k, w, w.sigma0, risks, points=config.oc.points)
    ctx.write_csv("oc.csv", ["p_nc", "L"], rows)
    anchors = {p: value for p, value in rows if p in (risks.p_alpha, risks.p_beta)}
    body = {
        "plan_source": source,
        "k": k,
        "w_variance": w.variance,
        "sigma0": w.sigma0,
        "acceptance_at_p_alpha": anchors.get(risks.p_alpha),
        "acceptance_at_p_beta": anchors.get(risks.p_beta),
        "points": len(rows),
        "plan": {
            "stresses": list(plan.stresses),
            "proportions": list(plan.proportions),
            "n": plan.n,
            "tau0": plan.tau0,
        },
    }
    print(
        f"L(p_alpha={risks.p_alpha}) = {body['acceptance_at_p_alpha']:.4f}, "
        f"L(p_beta={risks.p_beta}) = {body['acceptance_at_p_beta']:.4f}"
    )
    ctx.write_result("oc-curve", body)
    return body


def run_feasibility(ctx: CommandContext) -> Dict[str, Any]:
    config = ctx.config
    if config.plan is None:
        raise ConfigError("feasibility needs a plan section")
    risks = config.require_risks()
    k = acceptability_constant(risks)
    report = feasibility_report(config.plan, config.model, risks, k, config.fixed)
    report_formatter.print_feasibility(report)
    body = dict(report._asdict())
    body["k"] = k
    ctx.write_result("feasibility", body)
    return body


# ---------------------------------------------------------------------- #
# Inference
# ---------------------------------------------------------------------- #
def fit_specs(config: RunConfig, stresses) -> List[LinkSpec]:
    """Link specs requested by ``config.link`` for the observed stresses."""
    link = config.link
    specs = []
    if link.kind in ("both", "pla"):
        m = len(stresses) - 1
        mu_knots = (
            KnotSet(link.mu_knots)
            if link.mu_knots is not None
            else default_knots(m, link.mu_segments, stresses)
        )
        sigma_knots = (
            KnotSet(link.sigma_knots)
            if link.sigma_knots is not None
            else default_knots(m, link.sigma_segments, stresses)
        )
        specs.append(LinkSpec.pla(mu_knots, sigma_knots))
    if link.kind in ("both", "linear"):
        specs.append(LinkSpec.linear())
    return specs


def run_fit(ctx: CommandContext) -> Dict[str, Any]:
    config = ctx.config
    if not config.data.path:
        raise ConfigError("fit needs a sample: pass --data or set data.path")
    sample = read_sample_csv(config.data.path, config.data.censor_time)
    stresses = [g.stress for g in sample.groups]
    settings = config.optimizer_settings()
    fits = [fit_mle(sample, spec, settings) for spec in fit_specs(config, stresses)]
    comparison = model_comparison(fits) if len(fits) > 1 else None
    report_formatter.print_fits(fits, comparison)

    rows = []
    for fit in fits:
        rows += [(f"{fit.spec.label}.{name}", value) for name, value in fit.estimates()]
        rows += [(f"{fit.spec.label}.loglik", fit.loglik)]
        rows += [(f"{fit.spec.label}.aic", fit.aic)]
    ctx.write_csv("fit.csv", ["parameter", "estimate"], rows)
    if comparison:
        ctx.write_csv(
            "comparison.csv",
            ["model", "aic", "delta_aic"],
            [(r.label, r.aic, r.delta_aic) for r in comparison],
        )

    body: Dict[str, Any] = {
        "sample": {
            "units": sample.size,
            "failures": sample.failures,
            "censored_fraction": sample.censored_fraction,
            "censor_time": sample.censor_time,
            "fingerprint": sample.fingerprint(),
        },
        "fits": [
            {
                "model": fit.spec.label,
                "loglik": fit.loglik,
                "aic": fit.aic,
                "converged": fit.converged,
                "evaluations": fit.evaluations,
                "estimates": dict(fit.estimates()),
            }
            for fit in fits
        ],
    }
    if comparison:
        body["best_model"] = comparison[0].label

    if config.cost.l_s is not None and config.risks is not None:
        mu0, sigma0 = fits[0].usage_parameters()
        k = acceptability_constant(config.risks)
        body["disposition"] = {
            "model": fits[0].spec.label,
            "w": mu0 - k * sigma0,
            "ln_l_s": math.log(config.cost.l_s),
            "decision": lot_disposition(mu0, sigma0, k, config.cost.l_s).value,
        }
    ctx.write_result("fit", body)
    return body


# ---------------------------------------------------------------------- #
# Studies
# ---------------------------------------------------------------------- #
def run_simulate_case(ctx: CommandContext) -> Dict[str, Any]:
    report = run_case_replications(ctx.config.case_study, progress=ctx.progress)
    report_formatter.print_case_study(report)
    ctx.write_csv(
        "replications.csv",
        ["rep", "model", "loglik", "aic", "censored_fraction"],
        [(r.rep, r.model, r.loglik, r.aic, r.censored_fraction) for r in report.rows],
    )
    body = {
        "summaries": {name: s._asdict() for name, s in report.summaries.items()},
        "pla_wins": report.pla_wins,
        "paired": report.paired,
        "mean_delta_aic": report.mean_delta_aic,
        "preferred_model": report.preferred_model,
        "pla_dominant": report.pla_dominant,
        "mean_censored_fraction": report.mean_censored_fraction,
        "expected_censored_fraction": report.expected_censored_fraction,
        "knots": report.knots,
    }
    if report.calibration is not None:
        body["calibration"] = report.calibration._asdict()
    ctx.write_result("simulate-case", body)
    return body


def run_bench_links(ctx: CommandContext) -> Dict[str, Any]:
    report = sse_benchmark(ctx.config.benchmark.grid_points)
    report_formatter.print_sse(report)
    ctx.write_csv("sse.csv", ["model", "sse"], [(r.model, r.sse) for r in report.rows])
    body = {
        "grid_points": report.grid_points,
        "log_shift": report.shift,
        "sse": report.as_dict(),
        "ranking": report.ranking(),
    }
    ctx.write_result("bench-links", body)
    return body


COMMANDS = {
    "design": run_design,
    "k-factor": run_k_factor,
    "oc-curve": run_oc_curve,
    "fit": run_fit,
    "simulate-case": run_simulate_case,
    "bench-links": run_bench_links,
    "feasibility": run_feasibility,
}


def run(command: str, ctx: CommandContext) -> Dict[str, Any]:
    with recorded_run(ctx, command):
        return COMMANDS[command](ctx)

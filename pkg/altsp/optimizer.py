"""
Constrained search for an optimal accelerated life testing sampling plan.

The decision vector is mapped to an unconstrained vector ``y``:

    y[0]                 logit of n / n_max
    y[1 : m]             log increments of the interior stresses (last fixed to 0)
    y[m : 2m - 1]        log ratios pi_i / pi_m for i = 1..m-1
    y[2m - 1]            ln tau0

so ordering, the simplex and the sample bound hold by construction.  The
risk equality is handled by an augmented Lagrangian around a Nelder-Mead
inner solver, followed by an exact one-dimensional solve for ``n`` with the
other decisions fixed.  Random feasible candidates screen the space first
and seed the restarts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize
from tqdm import tqdm

from .acceptance import (
    RiskSpec,
    WMoments,
    acceptability_constant,
    risk_constraint_residual,
    w_moments,
)
from .errors import (
    AllocationError,
    ConfigError,
    DomainError,
    InfeasibleDesignError,
    NumericalError,
)
from .fisher import DesignPoint, FisherResult, design_fisher, invert_fisher
from .links import LinkModel, link_arrays
from .objectives import CostSpec, PlanDecision, quantile_variance, total_cost

logger = logging.getLogger(__name__)


class Objective(str, Enum):
    COST = "cost"
    VARIANCE = "variance"


@dataclass(frozen=True)
class FixedQuantities:
    pi0: float = 0.20
    m: int = 4
    lot_size: int = 1000
    sample_fraction: float = 0.2

    def __post_init__(self):
        if not (0.0 < self.pi0 < 1.0):
            raise ConfigError(f"pi0 must lie in (0, 1), got {self.pi0!r}")
        if int(self.m) != self.m or self.m < 2:
            raise ConfigError(f"m must be an integer >= 2, got {self.m!r}")
        if int(self.lot_size) != self.lot_size or self.lot_size < 1:
            raise ConfigError(
                f"lot_size must be a positive integer, got {self.lot_size!r}"
            )
        if not (0.0 < self.sample_fraction <= 1.0):
            raise ConfigError(
                f"sample_fraction must lie in (0, 1], got {self.sample_fraction!r}"
            )

    @property
    def n_max(self) -> float:
        return self.sample_fraction * self.lot_size


@dataclass(frozen=True)
class OptimizerSettings:
    max_outer_iters: int = 8
    penalty_init: float = 10.0
    penalty_growth: float = 5.0
    equality_tol: float = 1e-4
    inner_tol: float = 1e-6
    inner_max_evals: int = 1500
    restarts: int = 3
    screening_points: int = 10_000
    seed: int = 0
    infeasible_sentinel: float = 1e12
    max_evaluations: int = 100_000

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ConfigError("max_outer_iters must be at least 1")
        if not self.penalty_init > 0:
            raise ConfigError("penalty_init must be positive")
        if not self.penalty_growth > 1:
            raise ConfigError("penalty_growth must exceed 1")
        if not (self.equality_tol > 0 and self.inner_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")
        if self.screening_points < 0:
            raise ConfigError("screening_points must be nonnegative")
        if self.inner_max_evals < 1 or self.max_evaluations < 1:
            raise ConfigError("evaluation limits must be positive")


class PlanEvaluation(NamedTuple):
    plan: PlanDecision
    objective: float
    residual: float
    w: WMoments


class FeasibilityReport(NamedTuple):
    eq_residual: float
    ordering_ok: bool
    simplex_residual: float
    w_variance: float
    within_bound: Optional[bool]


@dataclass
class PlanResult:
    plan: PlanDecision
    objective: float
    allocation: List[int]
    constraint_residual: float
    ln_tau0: float
    k: float
    w: WMoments
    objective_kind: Objective
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def tau0(self) -> float:
        return self.plan.tau0


# ---------------------------------------------------------------------- #
# Allocation
# ---------------------------------------------------------------------- #
def allocate_samples(n: float, proportions: Sequence[float]) -> List[int]:
    """
    Integer units per level: ``floor(n * pi_i)`` for i >= 1, remainder to level 0.
    """
    if abs(sum(proportions) - 1.0) > 1e-10:
        raise AllocationError(
            f"proportions must sum to 1, got {sum(proportions)!r}"
        )
    total = int(math.floor(n + 0.5))
    # guard against products such as 100 * 0.29 landing just below an integer
    upper = [int(math.floor(n * p + 1e-9)) for p in proportions[1:]]
    first = total - sum(upper)
    if first < 0 or any(u < 0 for u in upper):
        raise AllocationError(
            f"cannot allocate n={n} over proportions {tuple(proportions)}"
        )
    return [first, *upper]


# ---------------------------------------------------------------------- #
# Plan evaluation
# ---------------------------------------------------------------------- #
class PlanEvaluator:
    """
    Evaluates objective and risk residual for candidate plans.

    Information is computed once per ``(stresses, proportions, tau0)`` at
    ``n = 1``; covariances at other ``n`` are rescaled by ``1/n``.
    """

    def __init__(
        self,
        objective: Objective,
        model: LinkModel,
        risks: RiskSpec,
        cost: Optional[CostSpec],
        fixed: FixedQuantities,
    ):
        if objective is Objective.COST and cost is None:
            raise ConfigError("cost spec required for the cost objective")
        self.objective = objective
        self.model = model
        self.risks = risks
        self.cost = cost
        self.fixed = fixed
        self.k = acceptability_constant(risks)
        self.evaluations = 0
        self._unit = lru_cache(maxsize=512)(self._unit_result)

    def _unit_result(self, stresses, proportions, tau0) -> FisherResult:
        design = DesignPoint(stresses, proportions, 1.0, tau0)
        return invert_fisher(design_fisher(design, self.model), self.model)

    def unit_result(self, plan: DesignPoint) -> FisherResult:
        return self._unit(plan.stresses, plan.proportions, plan.tau0)

    def moments(self, plan: DesignPoint) -> WMoments:
        blocks = self.unit_result(plan).blocks.scaled(1.0 / plan.n)
        return w_moments(self.model, blocks, self.k)

    def residual(self, plan: DesignPoint, w: Optional[WMoments] = None) -> float:
        w = w or self.moments(plan)
        return risk_constraint_residual(w, w.sigma0, self.risks, self.k)

    def evaluate(self, plan: PlanDecision) -> PlanEvaluation:
        self.evaluations += 1
        w = self.moments(plan)
        residual = self.residual(plan, w)
        if self.objective is Objective.COST:
            value = total_cost(plan, self.model, self.cost, self.k, w)
        else:
            value = quantile_variance(w)
        return PlanEvaluation(plan, value, residual, w)

    def restore_sample_size(self, plan: DesignPoint) -> Optional[PlanDecision]:
        """
        Solve the risk equality for ``n`` with the other decisions fixed.

        Returns ``None`` when no ``n`` up to the sampling bound satisfies it.
        """
        n_max = self.fixed.n_max

        def residual_at(n):
            return self.residual(_with_n(plan, n))

        try:
            r_max = residual_at(n_max)
        except NumericalError:
            return None
        if r_max > 0:
            return None
        n_lo = n_max
        for _ in range(60):
            n_lo *= 0.5
            try:
                if residual_at(n_lo) > 0:
                    break
            except NumericalError:
                return None
        else:
            return None
        n = brentq(residual_at, n_lo, n_max, xtol=1e-12, rtol=1e-14, maxiter=200)
        return _with_n(plan, n)


def _with_n(plan: DesignPoint, n: float) -> PlanDecision:
    return PlanDecision(plan.stresses, plan.proportions, n, plan.tau0)


# ---------------------------------------------------------------------- #
# Decision vector mapping
# ---------------------------------------------------------------------- #
def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def decode(y: np.ndarray, fixed: FixedQuantities) -> PlanDecision:
    m = fixed.m
    n = fixed.n_max * _sigmoid(float(y[0]))
    increments = np.exp(np.clip(np.append(y[1:m], 0.0), -30.0, 30.0))
    cumulative = np.cumsum(increments) / increments.sum()
    stresses = (0.0, *cumulative[:-1].tolist(), 1.0)
    weights = np.exp(np.clip(np.append(y[m : 2 * m - 1], 0.0), -30.0, 30.0))
    upper = (1.0 - fixed.pi0) * weights / weights.sum()
    proportions = (fixed.pi0, *upper.tolist())
    tau0 = math.exp(float(np.clip(y[2 * m - 1], -700.0, 700.0)))
    return PlanDecision(stresses, proportions, max(n, 1e-12), tau0)


def encode_n(n: float, fixed: FixedQuantities) -> float:
    ratio = min(max(n / fixed.n_max, 1e-9), 1.0 - 1e-9)
    return math.log(ratio / (1.0 - ratio))


def _log_tau_range(model: LinkModel) -> Tuple[float, float]:
    mu, sigma = link_arrays(np.linspace(0.0, 1.0, 11), model)
    return float(mu.min() - 2.0 * sigma.max()), float(mu.max() + 2.0 * sigma.max())


# ---------------------------------------------------------------------- #
# Search
# ---------------------------------------------------------------------- #
class _Incumbent:
    """Best feasible evaluation seen so far (first one wins ties)."""

    def __init__(self, tol: float):
        self.tol = tol
        self.best: Optional[PlanEvaluation] = None
        self.best_residual = math.inf
        self.feasible_count = 0

    def offer(self, evaluation: PlanEvaluation) -> None:
        residual = abs(evaluation.residual)
        self.best_residual = min(self.best_residual, residual)
        if residual > self.tol or not math.isfinite(evaluation.objective):
            return
        self.feasible_count += 1
        if self.best is None or evaluation.objective < self.best.objective:
            self.best = evaluation


class Candidate(NamedTuple):
    y: np.ndarray
    evaluation: PlanEvaluation


def _screen(
    evaluator: PlanEvaluator,
    points: int,
    seed,
    incumbent: _Incumbent,
    progress: bool = False,
) -> List[Candidate]:
    fixed = evaluator.fixed
    m = fixed.m
    rng = np.random.default_rng(seed)
    lo, hi = _log_tau_range(evaluator.model)
    candidates = []
    for _ in tqdm(range(points), desc="Screening", disable=not progress):
        y = np.empty(2 * m)
        y[1 : 2 * m - 1] = rng.normal(0.0, 1.0, 2 * m - 2)
        y[2 * m - 1] = rng.uniform(lo, hi)
        y[0] = 0.0
        shape = decode(y, fixed)
        try:
            plan = evaluator.restore_sample_size(shape)
            if plan is None:
                continue
            evaluation = evaluator.evaluate(plan)
        except (NumericalError, DomainError):
            continue
        y[0] = encode_n(plan.n, fixed)
        incumbent.offer(evaluation)
        if abs(evaluation.residual) <= incumbent.tol:
            candidates.append(Candidate(y, evaluation))
    return candidates


def random_feasible_search(
    objective: Objective,
    model: LinkModel,
    risks: RiskSpec,
    cost: Optional[CostSpec],
    fixed: FixedQuantities,
    points: int,
    seed,
    equality_tol: float = 1e-4,
) -> Optional[PlanEvaluation]:
    """
    Best of ``points`` random plans, each made feasible by solving for ``n``.
    """
    evaluator = PlanEvaluator(objective, model, risks, cost, fixed)
    incumbent = _Incumbent(equality_tol)
    _screen(evaluator, points, _screening_seed(seed), incumbent)
    return incumbent.best


def _screening_seed(seed) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed).spawn(1)[0]


def _restart_seeds(seed, restarts: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence([int(seed), 1]).spawn(restarts)


def _augmented_lagrangian(
    evaluator: PlanEvaluator,
    y0: np.ndarray,
    settings: OptimizerSettings,
    incumbent: _Incumbent,
) -> Dict[str, Any]:
    fixed = evaluator.fixed
    sentinel = settings.infeasible_sentinel

    try:
        scale = abs(evaluator.evaluate(decode(y0, fixed)).objective) or 1.0
    except (NumericalError, DomainError):
        scale = 1.0

    state = {"lam": 0.0, "rho": settings.penalty_init}

    def merit(y):
        try:
            evaluation = evaluator.evaluate(decode(y, fixed))
        except (NumericalError, DomainError):
            return sentinel
        incumbent.offer(evaluation)
        h = evaluation.residual
        value = evaluation.objective / scale + state["lam"] * h
        return value + 0.5 * state["rho"] * h * h

    y = np.asarray(y0, dtype=float)
    dims = y.size
    h_prev = math.inf
    history = []
    for outer in range(settings.max_outer_iters):
        simplex = np.vstack([y, y + 0.3 * np.eye(dims)])
        result = minimize(
            merit,
            y,
            method="Nelder-Mead",
            options={
                "xatol": settings.inner_tol,
                "fatol": settings.inner_tol,
                "maxfev": settings.inner_max_evals,
                "initial_simplex": simplex,
                "adaptive": True,
            },
        )
        y = result.x
        try:
            h = evaluator.evaluate(decode(y, fixed)).residual
        except (NumericalError, DomainError):
            h = math.inf
        history.append(
            {
                "outer": outer,
                "merit": float(result.fun),
                "residual": float(h),
                "evaluations": int(result.nfev),
                "penalty": state["rho"],
            }
        )
        logger.debug(
            "outer %d: residual %.3g, multiplier %.3g, penalty %.3g",
            outer,
            h,
            state["lam"],
            state["rho"],
        )
        if not math.isfinite(h):
            break
        state["lam"] += state["rho"] * h
        if abs(h) <= settings.equality_tol:
            break
        if abs(h) > 0.25 * abs(h_prev):
            state["rho"] *= settings.penalty_growth
        h_prev = h

    restored = None
    try:
        restored = evaluator.restore_sample_size(decode(y, fixed))
        if restored is not None:
            incumbent.offer(evaluator.evaluate(restored))
    except (NumericalError, DomainError):
        restored = None
    return {"history": history, "restored": restored is not None}


def optimize_plan(
    objective: Objective,
    model: LinkModel,
    risks: RiskSpec,
    cost: Optional[CostSpec],
    fixed: FixedQuantities,
    settings: OptimizerSettings,
    progress: bool = False,
) -> PlanResult:
    """
    Minimize total cost or quantile variance subject to the risk equality.

    The returned plan is the best feasible evaluation over the screening phase
    and every restart, so it is never worse than any feasible point evaluated.
    """
    objective = Objective(objective)
    evaluator = PlanEvaluator(objective, model, risks, cost, fixed)
    incumbent = _Incumbent(settings.equality_tol)

    candidates = _screen(
        evaluator,
        settings.screening_points,
        _screening_seed(settings.seed),
        incumbent,
        progress=progress,
    )
    candidates.sort(key=lambda c: c.evaluation.objective)
    logger.info(
        "screening found %d feasible plans out of %d",
        len(candidates),
        settings.screening_points,
    )

    lo, hi = _log_tau_range(model)
    runs = []
    for index, stream in enumerate(_restart_seeds(settings.seed, settings.restarts)):
        rng = np.random.default_rng(stream)
        if index < len(candidates):
            y0 = candidates[index].y + rng.normal(0.0, 0.05, 2 * fixed.m)
        else:
            y0 = np.append(
                rng.normal(0.0, 1.0, 2 * fixed.m - 1), rng.uniform(lo, hi)
            )
        run = _augmented_lagrangian(evaluator, y0, settings, incumbent)
        run["restart"] = index
        runs.append(run)
        logger.debug("restart %d finished: %s", index, run["history"][-1:])

    best = incumbent.best
    if best is None:
        raise InfeasibleDesignError(
            f"no feasible plan found after {settings.restarts} restarts; "
            f"best |residual| = {incumbent.best_residual:.3g}",
            best_residual=incumbent.best_residual,
        )

    plan = best.plan
    result = PlanResult(
        plan=plan,
        objective=best.objective,
        allocation=allocate_samples(plan.n, plan.proportions),
        constraint_residual=best.residual,
        ln_tau0=math.log(plan.tau0),
        k=evaluator.k,
        w=best.w,
        objective_kind=objective,
        diagnostics={
            "evaluations": evaluator.evaluations,
            "screened": settings.screening_points,
            "screened_feasible": len(candidates),
            "feasible_evaluations": incumbent.feasible_count,
            "restarts": runs,
        },
    )
    logger.info(
        "%s objective %.6g at n=%.3f, tau0=%.6g",
        objective.value,
        result.objective,
        plan.n,
        plan.tau0,
    )
    return result


def feasibility_report(
    plan: DesignPoint,
    model: LinkModel,
    risks: RiskSpec,
    k: float,
    fixed: Optional[FixedQuantities] = None,
) -> FeasibilityReport:
    """Every constraint residual ``optimize_plan`` works with."""
    w_var = math.nan
    eq_residual = math.nan
    try:
        blocks = invert_fisher(design_fisher(plan, model), model).blocks
        w = w_moments(model, blocks, k, allow_negative=True)
        w_var = w.variance
        if w.variance > 0:
            eq_residual = risk_constraint_residual(w, w.sigma0, risks, k)
    except (NumericalError, DomainError) as e:
        logger.warning("plan moments unavailable: %s", e)
    within = None
    if fixed is not None:
        within = 0 < plan.n <= fixed.n_max
    return FeasibilityReport(
        eq_residual=eq_residual,
        ordering_ok=plan.ordering_ok,
        simplex_residual=plan.simplex_residual,
        w_variance=w_var,
        within_bound=within,
    )

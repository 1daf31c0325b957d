"""
Design objectives: expected total cost of a lot under a general rebate
warranty, and the variance of the aggregate usage-stress quantile.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .acceptance import WMoments, nonconforming_fraction
from .distributions import EULER_GAMMA, PI_SQUARED_OVER_SIX, ev_measures, sev_quantile
from .errors import DomainError, NegativeVarianceError, NumericalError
from .fisher import DesignPoint
from .links import LinkModel, eval_link

logger = logging.getLogger(__name__)

# integral of ln(-ln b)**2 over (0, 1)
QUANTILE_SECOND_MOMENT = EULER_GAMMA**2 + PI_SQUARED_OVER_SIX

SAMPLE_FRACTION = 0.2


@dataclass(frozen=True)
class CostSpec:
    p_nc: float
    lot_size: int = 1000
    c_a: float = 0.15
    c_r: float = 0.80
    c_t: float = 0.08
    c_star: float = 0.05
    w1: float = 0.50
    w2: float = 0.75

    def __post_init__(self):
        if not (0.0 < self.p_nc < 1.0):
            raise DomainError(f"p_nc must lie in (0, 1), got {self.p_nc!r}")
        if int(self.lot_size) != self.lot_size or self.lot_size < 1:
            raise DomainError(
                f"lot size must be a positive integer, got {self.lot_size!r}"
            )
        for name in ("c_a", "c_r", "c_t", "c_star"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative")
        if not (0 < self.w1 < self.w2):
            raise DomainError(
                f"warranty limits need 0 < w1 < w2, got w1={self.w1}, w2={self.w2}"
            )

    @classmethod
    def from_specification_limit(
        cls, l_s: float, model: LinkModel, **costs
    ) -> "CostSpec":
        return cls(p_nc=nonconforming_fraction(l_s, model), **costs)


@dataclass(frozen=True)
class PlanDecision(DesignPoint):
    """A design point treated as the decision of a sampling plan."""

    def within_sample_bound(
        self, lot_size: int, fraction: float = SAMPLE_FRACTION
    ) -> bool:
        return 0 < self.n <= fraction * lot_size


class MonteCarloEstimate(NamedTuple):
    estimate: float
    standard_error: float


# ---------------------------------------------------------------------- #
# Warranty cost
# ---------------------------------------------------------------------- #
def warranty_cost(xi: float, model: LinkModel, cost: CostSpec) -> float:
    """
    Expected rebate per unit sold from stress ``xi``.

    Free replacement before ``w1``, pro-rata rebate between ``w1`` and ``w2``.
    """
    params = eval_link(xi, model)
    lo, hi = math.log(cost.w1), math.log(cost.w2)
    g1 = ev_measures(lo, params).cdf
    g2 = ev_measures(hi, params).cdf

    def integrand(t):
        return math.exp(t) * ev_measures(t, params).pdf

    integral, abserr = quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-10, limit=200)
    if abserr > 1e-8 * abs(integral) + 1e-12:
        raise NumericalError(
            f"warranty integral did not converge at xi={xi} (abserr={abserr:.3g})"
        )
    value = cost.c_a * (cost.w2 * g2 - cost.w1 * g1 - integral) / (cost.w2 - cost.w1)
    return float(min(max(value, 0.0), cost.c_a))


def mc_warranty_cost(
    xi: float, model: LinkModel, cost: CostSpec, draws: int, seed
) -> MonteCarloEstimate:
    """Monte-Carlo mean rebate of Weibull lifetimes at ``xi``."""
    params = eval_link(xi, model)
    rng = np.random.default_rng(seed)
    z = np.log(rng.standard_exponential(draws))
    x = np.exp(params.location + params.scale * z)
    rebate = np.where(
        x < cost.w1,
        cost.c_a,
        np.where(x < cost.w2, cost.c_a * (cost.w2 - x) / (cost.w2 - cost.w1), 0.0),
    )
    return MonteCarloEstimate(
        float(rebate.mean()), float(rebate.std(ddof=1) / math.sqrt(draws))
    )


# ---------------------------------------------------------------------- #
# Objectives
# ---------------------------------------------------------------------- #
def total_cost(
    plan: PlanDecision, model: LinkModel, cost: CostSpec, k: float, w: WMoments
) -> float:
    """
    Expected total cost ``C_T`` of testing ``n`` units and sentencing the rest.
    """
    if not w.variance > 0:
        raise DomainError("total cost needs a positive V(W)")
    sigma0 = eval_link(0.0, model).scale
    rebates = sum(warranty_cost(xi, model, cost) for xi in plan.stresses)
    u_nc = sev_quantile(cost.p_nc)
    reject = float(ndtr((u_nc + k) * sigma0 / math.sqrt(w.variance)))
    remaining = cost.lot_size - plan.n
    return (
        remaining * (rebates + reject * (cost.c_r - rebates))
        + cost.c_t * plan.tau0
        + plan.n * cost.c_star
    )


def quantile_variance(w: WMoments) -> float:
    """
    Variance of the usage quantile integrated over all quantile levels.
    """
    value = (
        w.var_mu0
        + w.var_sigma0 * QUANTILE_SECOND_MOMENT
        - 2.0 * EULER_GAMMA * w.cov_mu0_sigma0
    )
    if value < -1e-10:
        raise NegativeVarianceError(f"quantile variance is negative ({value:.6g})")
    return max(value, 0.0)


def quantile_variance_by_quadrature(w: WMoments) -> float:
    """
    Integral of ``V(T_0b)`` over ``b`` in (0, 1), computed numerically.

    With ``b = exp(-e^u)`` the integrand is smooth in ``u`` and weighted by the
    standard EV density.
    """

    def integrand(u):
        var_t = w.var_mu0 + u * u * w.var_sigma0 + 2.0 * u * w.cov_mu0_sigma0
        return var_t * math.exp(u - math.exp(u))

    value, _ = quad(integrand, -60.0, 5.0, epsabs=1e-14, epsrel=1e-12, limit=400)
    return value


def quantile_point(b: float, model: LinkModel) -> float:
    """``mu0 + sigma0 * ln(-ln b)`` at usage stress."""
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    params = eval_link(0.0, model)
    return params.location + params.scale * math.log(-math.log(b))

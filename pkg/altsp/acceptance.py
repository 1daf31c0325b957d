"""
Lot acceptance based on ``W = mu0_hat - k * sigma0_hat``.

A lot is accepted when ``W > ln(l_s)``.  The acceptability constant ``k``
and the plan's asymptotic variance of ``W`` are chosen so that the OC curve
passes through ``(p_alpha, 1 - alpha)`` and ``(p_beta, beta)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np
from scipy.special import ndtr, ndtri

from .distributions import sev_cdf, sev_quantile
from .errors import (
    DegenerateRiskError,
    DomainError,
    NegativeVarianceError,
    NumericalError,
)
from .fisher import CovarianceBlocks
from .links import LinkModel, hat_gradients

logger = logging.getLogger(__name__)

VARIANCE_TOL = 1e-10


@dataclass(frozen=True)
class RiskSpec:
    alpha: float
    beta: float
    p_alpha: float
    p_beta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "p_alpha", "p_beta"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
        if not self.p_alpha < self.p_beta:
            raise DomainError(
                f"p_alpha must be below p_beta, got {self.p_alpha} >= {self.p_beta}"
            )

    @property
    def z_alpha(self) -> float:
        return float(ndtri(self.alpha))

    @property
    def z_one_minus_beta(self) -> float:
        return float(ndtri(1.0 - self.beta))

    @property
    def u_alpha(self) -> float:
        return sev_quantile(self.p_alpha)

    @property
    def u_beta(self) -> float:
        return sev_quantile(self.p_beta)

    def target_variance_ratio(self) -> float:
        """``V(W) / sigma0**2`` required by the two OC anchor points."""
        return (
            (self.u_alpha - self.u_beta) / (self.z_alpha - self.z_one_minus_beta)
        ) ** 2


@dataclass(frozen=True)
class WMoments:
    mean: float
    variance: float
    var_mu0: float
    var_sigma0: float
    cov_mu0_sigma0: float
    mu0: float = math.nan
    sigma0: float = math.nan


class Disposition(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


# ---------------------------------------------------------------------- #
# Acceptability constant
# ---------------------------------------------------------------------- #
def k_factor(
    u_alpha: float, u_beta: float, z_alpha: float, z_one_minus_beta: float
) -> float:
    denominator = z_alpha - z_one_minus_beta
    if abs(denominator) < 1e-12:
        raise DegenerateRiskError(
            "z_alpha equals z_(1-beta): producer and consumer risks are degenerate"
        )
    return (u_alpha * z_one_minus_beta - u_beta * z_alpha) / denominator


def acceptability_constant(risks: RiskSpec) -> float:
    if risks.alpha + risks.beta >= 1.0:
        raise DegenerateRiskError(
            f"alpha + beta must be below 1, got {risks.alpha + risks.beta:.6g}"
        )
    return k_factor(
        risks.u_alpha, risks.u_beta, risks.z_alpha, risks.z_one_minus_beta
    )


# ---------------------------------------------------------------------- #
# Moments of W
# ---------------------------------------------------------------------- #
def lognormal_cross_moment(
    mean_l: float, mean_m: float, var_m: float, cov_lm: float
) -> float:
    """``E[L * exp(M)]`` for jointly normal ``(L, M)``."""
    exponent = mean_m + 0.5 * var_m
    if exponent > 700.0:
        raise NumericalError(f"lognormal moment overflows (exponent {exponent:.4g})")
    return math.exp(exponent) * (mean_l + cov_lm)


def w_moments(
    model: LinkModel,
    blocks: CovarianceBlocks,
    k: float,
    xi0: float = 0.0,
    allow_negative: bool = False,
) -> WMoments:
    """
    Asymptotic mean and variance of ``W`` at the usage stress ``xi0``.

    A negative quadratic form raises ``NegativeVarianceError`` unless
    ``allow_negative`` is set, in which case it is returned unclamped.

    ``mu0_hat`` and ``ln sigma0_hat`` are linear in the estimates through the
    hat bases, so they are jointly normal; the covariance of ``mu0_hat`` and
    ``sigma0_hat`` follows from the lognormal cross moment.
    That covariance can exceed the Cauchy-Schwarz bound of the first-order
    variances; this is logged at debug level and left as computed.
    """
    b_mu = hat_gradients(xi0, model.mu_knots)
    b_sigma = hat_gradients(xi0, model.sigma_knots)
    mu0 = float(b_mu @ model.mu_gamma)
    ln_sigma0 = float(b_sigma @ model.sigma_gamma)
    sigma0 = math.exp(ln_sigma0)

    var_l = float(b_mu @ blocks.h11 @ b_mu)
    var_m = float(b_sigma @ blocks.h22 @ b_sigma)
    cov_lm = float(b_mu @ blocks.h12 @ b_sigma)

    var_mu0 = var_l
    var_sigma0 = sigma0**2 * var_m
    cov = lognormal_cross_moment(mu0, ln_sigma0, var_m, cov_lm) - mu0 * sigma0
    if abs(cov) > math.sqrt(max(var_mu0 * var_sigma0, 0.0)) + 1e-10:
        logger.debug(
            "covariance %.6g exceeds the Cauchy-Schwarz bound of the first-order "
            "variances",
            cov,
        )

    variance = var_mu0 + k**2 * var_sigma0 - 2.0 * k * cov
    if variance < -VARIANCE_TOL and not allow_negative:
        raise NegativeVarianceError(f"V(W) is negative ({variance:.6g})")
    return WMoments(
        mean=mu0 - k * sigma0,
        variance=variance if allow_negative else max(variance, 0.0),
        var_mu0=var_mu0,
        var_sigma0=var_sigma0,
        cov_mu0_sigma0=cov,
        mu0=mu0,
        sigma0=sigma0,
    )


def w_variance(w: WMoments, k: float) -> float:
    return w.var_mu0 + k**2 * w.var_sigma0 - 2.0 * k * w.cov_mu0_sigma0


# ---------------------------------------------------------------------- #
# OC function and risk constraint
# ---------------------------------------------------------------------- #
def oc_probability(p_nc: float, k: float, w: WMoments, sigma0: float) -> float:
    """Probability of accepting a lot whose nonconforming fraction is ``p_nc``."""
    if not w.variance > 0:
        raise DomainError("the OC function needs a positive V(W)")
    u = sev_quantile(p_nc)
    return float(ndtr(-(u + k) * sigma0 / math.sqrt(w.variance)))


def oc_curve(
    k: float, w: WMoments, sigma0: float, risks: RiskSpec, points: int = 99
) -> List[Tuple[float, float]]:
    """``(p_nc, L)`` rows on an even grid plus the two risk anchor points."""
    grid = set(np.arange(1, points + 1) / (points + 1))
    grid.update([risks.p_alpha, risks.p_beta])
    return [(float(p), oc_probability(p, k, w, sigma0)) for p in sorted(grid)]


def risk_constraint_residual(
    w: WMoments, sigma0: float, risks: RiskSpec, k: float
) -> float:
    """
    ``(V(W) / sigma0**2) * ((z_a - z_1b) / (u_a - u_b))**2 - 1``.

    ``V(W)`` is rebuilt from the moment components with the given ``k``.
    """
    if not sigma0 > 0:
        raise DomainError(f"sigma0 must be positive, got {sigma0!r}")
    variance = w_variance(w, k)
    return variance / sigma0**2 / risks.target_variance_ratio() - 1.0


def lot_disposition(
    mu0_hat: float, sigma0_hat: float, k: float, l_s: float
) -> Disposition:
    if not (sigma0_hat > 0 and l_s > 0):
        raise DomainError("sigma0_hat and l_s must be positive")
    if mu0_hat - k * sigma0_hat > math.log(l_s):
        return Disposition.ACCEPT
    return Disposition.REJECT


def nonconforming_fraction(l_s: float, model: LinkModel, xi0: float = 0.0) -> float:
    """Fraction of usage-stress lifetimes below the specification limit ``l_s``."""
    if not l_s > 0:
        raise DomainError(f"specification limit must be positive, got {l_s!r}")
    b_mu = hat_gradients(xi0, model.mu_knots)
    b_sigma = hat_gradients(xi0, model.sigma_knots)
    mu0 = float(b_mu @ model.mu_gamma)
    sigma0 = math.exp(float(b_sigma @ model.sigma_gamma))
    return float(sev_cdf((math.log(l_s) - mu0) / sigma0))

"""
Expected Fisher information of the PLA-link EV model under Type-I censoring.

For one unit tested at stress ``xi`` and censored at ``tau0`` the information
is the integral, over log times up to ``ln(tau0)``, of the outer product of
the gradient of the log hazard weighted by the EV density.  After the
substitution ``z = (t - mu) / sigma`` only three scalar integrals remain:

    I_k(z0) = integral_{-inf}^{z0} (1 + z)**k * exp(z - e**z) dz,  k = 0, 1, 2

and the per-unit matrix is assembled from them and the hat bases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, NumericalError, SingularFisherError
from .links import LinkModel, eval_link, hat_gradients

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12
EIGEN_TOL = 1e-10
QUAD_RTOL = 1e-10

# below this the remaining mass of the standardized density is < 1e-19
_LEFT_SPAN = 45.0
# above this the standardized density is < 1e-60
_RIGHT_CAP = 5.0


@dataclass(frozen=True)
class DesignPoint:
    stresses: Tuple[float, ...]
    proportions: Tuple[float, ...]
    n: float
    tau0: float

    def __post_init__(self):
        stresses = tuple(float(s) for s in self.stresses)
        proportions = tuple(float(p) for p in self.proportions)
        if len(stresses) < 2 or len(stresses) != len(proportions):
            raise DomainError(
                "a design needs at least two stress levels and one proportion "
                "per level"
            )
        if not (self.n > 0 and math.isfinite(self.n)):
            raise DomainError(f"sample size must be positive, got {self.n!r}")
        if not self.tau0 > 0:
            raise DomainError(f"censor time must be positive, got {self.tau0!r}")
        object.__setattr__(self, "stresses", stresses)
        object.__setattr__(self, "proportions", proportions)

    @property
    def m(self) -> int:
        return len(self.stresses) - 1

    @property
    def simplex_residual(self) -> float:
        return sum(self.proportions) - 1.0

    @property
    def ordering_ok(self) -> bool:
        s = self.stresses
        return (
            s[0] == 0.0
            and s[-1] == 1.0
            and all(b > a for a, b in zip(s, s[1:]))
        )

    def violations(self) -> List[str]:
        problems = []
        if not self.ordering_ok:
            problems.append(
                f"stresses must increase strictly from 0 to 1, got {self.stresses}"
            )
        if any(p < 0 for p in self.proportions):
            problems.append(f"proportions must be nonnegative, got {self.proportions}")
        if abs(self.simplex_residual) > 1e-10:
            problems.append(
                f"proportions must sum to 1, off by {self.simplex_residual:.3g}"
            )
        if any(not (0.0 <= s <= 1.0) for s in self.stresses):
            problems.append("stresses must lie in [0, 1]")
        return problems


@dataclass(frozen=True, eq=False)
class CovarianceBlocks:
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray

    def full(self) -> np.ndarray:
        return np.block([[self.h11, self.h12], [self.h12.T, self.h22]])

    def scaled(self, factor: float) -> "CovarianceBlocks":
        return CovarianceBlocks(
            self.h11 * factor, self.h12 * factor, self.h22 * factor
        )

    @classmethod
    def zeros(cls, n_mu: int, n_sigma: int) -> "CovarianceBlocks":
        return cls(
            np.zeros((n_mu, n_mu)),
            np.zeros((n_mu, n_sigma)),
            np.zeros((n_sigma, n_sigma)),
        )


class FisherResult(NamedTuple):
    fisher: np.ndarray
    blocks: CovarianceBlocks
    condition: float


class MonteCarloFisher(NamedTuple):
    estimate: np.ndarray
    standard_error: np.ndarray


# ---------------------------------------------------------------------- #
# Standardized integrals
# ---------------------------------------------------------------------- #
def _integrand(k: int):
    def f(z):
        return (1.0 + z) ** k * math.exp(z - math.exp(z))

    return f


def standardized_moments(z0: float) -> np.ndarray:
    """``(I_0, I_1, I_2)`` at the standardized censoring point ``z0``."""
    if z0 == -math.inf:
        return np.zeros(3)
    upper = min(z0, _RIGHT_CAP)
    lower = min(upper, 0.0) - _LEFT_SPAN
    out = np.empty(3)
    for k in range(3):
        value, abserr, *rest = quad(
            _integrand(k),
            lower,
            upper,
            epsabs=1e-15,
            epsrel=QUAD_RTOL,
            limit=200,
            full_output=1,
        )
        if abserr > 1e-8 * abs(value) + 1e-14:
            message = rest[1] if len(rest) > 1 else "tolerance not reached"
            raise NumericalError(
                f"quadrature for I_{k}(z0={z0:.6g}) did not converge: "
                f"value={value:.6g}, abserr={abserr:.3g} ({message})"
            )
        out[k] = value
    return out


def _assemble(moments, sigma, b_mu, b_sigma) -> np.ndarray:
    i0, i1, i2 = moments
    mu_mu = i0 * np.outer(b_mu, b_mu) / sigma**2
    mu_sigma = i1 * np.outer(b_mu, b_sigma) / sigma
    sigma_sigma = i2 * np.outer(b_sigma, b_sigma)
    return np.block([[mu_mu, mu_sigma], [mu_sigma.T, sigma_sigma]])


def unit_fisher(xi: float, model: LinkModel, tau0: float) -> np.ndarray:
    """Per-unit information at stress ``xi``, ordered ``(gamma_mu, gamma_sigma)``."""
    if not tau0 > 0:
        raise DomainError(f"censor time must be positive, got {tau0!r}")
    params = eval_link(xi, model)
    b_mu = hat_gradients(xi, model.mu_knots)
    b_sigma = hat_gradients(xi, model.sigma_knots)
    z0 = (math.log(tau0) - params.location) / params.scale
    moments = standardized_moments(z0)
    return _assemble(moments, params.scale, b_mu, b_sigma)


def mc_fisher_oracle(
    xi: float, model: LinkModel, tau0: float, reps: int, seed
) -> MonteCarloFisher:
    """
    Monte-Carlo estimate of ``unit_fisher`` with per-entry standard errors.

    Draws standardized EV variates and averages the integrand over all draws,
    counting draws beyond the censoring point as zero; this equals the mean
    over uncensored draws times the uncensored probability.
    """
    if reps < 10_000:
        raise DomainError(f"at least 10^4 draws are required, got {reps}")
    params = eval_link(xi, model)
    b_mu = hat_gradients(xi, model.mu_knots)
    b_sigma = hat_gradients(xi, model.sigma_knots)
    z0 = (math.log(tau0) - params.location) / params.scale

    rng = np.random.default_rng(seed)
    z = np.log(rng.standard_exponential(reps))
    inside = (z <= z0).astype(float)
    terms = np.vstack([inside, (1.0 + z) * inside, (1.0 + z) ** 2 * inside])
    means = terms.mean(axis=1)
    errors = terms.std(axis=1, ddof=1) / math.sqrt(reps)

    estimate = _assemble(means, params.scale, b_mu, b_sigma)
    standard_error = np.abs(_assemble(errors, params.scale, b_mu, b_sigma))
    return MonteCarloFisher(estimate, standard_error)


# ---------------------------------------------------------------------- #
# Full design information
# ---------------------------------------------------------------------- #
def design_fisher(design: DesignPoint, model: LinkModel) -> np.ndarray:
    fisher = np.zeros((model.n_params, model.n_params))
    for xi, pi in zip(design.stresses, design.proportions):
        fisher += pi * unit_fisher(xi, model, design.tau0)
    fisher *= design.n
    return 0.5 * (fisher + fisher.T)


def _deficient_directions(values, vectors, names, cutoff) -> List[str]:
    directions = []
    for value, vector in zip(values, vectors.T):
        if value > cutoff:
            continue
        loaded = [names[i] for i in np.flatnonzero(np.abs(vector) > 0.3)]
        directions.append("+".join(loaded) or names[int(np.argmax(np.abs(vector)))])
    return directions


def invert_fisher(fisher: np.ndarray, model: LinkModel) -> FisherResult:
    values, vectors = np.linalg.eigh(fisher)
    scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    if values.min() < -EIGEN_TOL * scale:
        raise NumericalError(
            f"information matrix is not positive semidefinite "
            f"(smallest eigenvalue {values.min():.3g})"
        )
    values = np.clip(values, 0.0, None)
    condition = values.max() / values.min() if values.min() > 0 else math.inf
    if condition > MAX_CONDITION:
        directions = _deficient_directions(
            values, vectors, model.parameter_names(), values.max() / MAX_CONDITION
        )
        raise SingularFisherError(
            f"information matrix is singular or ill-conditioned "
            f"(condition {condition:.3g}); deficient directions: "
            f"{', '.join(directions)}",
            directions=directions,
            condition=condition,
        )
    covariance = (vectors / values) @ vectors.T
    covariance = 0.5 * (covariance + covariance.T)
    k = model.n_mu
    blocks = CovarianceBlocks(
        covariance[:k, :k], covariance[:k, k:], covariance[k:, k:]
    )
    return FisherResult(fisher, blocks, condition)


def fisher_and_covariance(design: DesignPoint, model: LinkModel) -> FisherResult:
    """
    Design information ``F = n * sum(pi_i * l_i)`` and its inverse in blocks.
    """
    problems = design.violations()
    if problems:
        raise DomainError("; ".join(problems))
    return invert_fisher(design_fisher(design, model), model)

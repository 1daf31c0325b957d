"""
Maximum-likelihood fitting of Type-I censored EV data under a stress link.

Two link kinds are supported:

* ``pla``: piecewise-linear ``mu(xi)`` and ``ln sigma(xi)`` on given knots,
* ``linear``: ``mu = g_mu0 + g_mu1 * xi`` and ``sigma = g_s0 + g_s1 * xi``
  (sigma itself linear; a nonpositive sigma makes the likelihood ``-inf``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .distributions import EULER_GAMMA, CensoredSample, sev_quantile
from .errors import ComparisonError, ConfigError, FitConvergenceError, InputError
from .links import KnotSet, LinkModel, hat_basis
from .optimizer import OptimizerSettings

logger = logging.getLogger(__name__)

FIT_SENTINEL = 1e300
# simplex diameter, relative to the largest coefficient
FIT_TOL = 1e-8


class LinkKind(str, Enum):
    PLA = "pla"
    LINEAR = "linear"


@dataclass(frozen=True)
class LinkSpec:
    kind: LinkKind
    mu_knots: Optional[KnotSet] = None
    sigma_knots: Optional[KnotSet] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if self.kind is LinkKind.PLA:
            if self.mu_knots is None or self.sigma_knots is None:
                raise ConfigError("a pla link needs both mu and sigma knots")
        elif self.mu_knots is not None or self.sigma_knots is not None:
            raise ConfigError("a linear link takes no knots")

    @classmethod
    def pla(cls, mu_knots: KnotSet, sigma_knots: KnotSet) -> "LinkSpec":
        return cls(LinkKind.PLA, mu_knots, sigma_knots)

    @classmethod
    def linear(cls) -> "LinkSpec":
        return cls(LinkKind.LINEAR)

    @property
    def label(self) -> str:
        return self.kind.value

    @property
    def n_params(self) -> int:
        if self.kind is LinkKind.PLA:
            return len(self.mu_knots) + len(self.sigma_knots)
        return 4

    def parameter_names(self) -> List[str]:
        if self.kind is LinkKind.PLA:
            return [f"gamma_mu[{q}]" for q in range(len(self.mu_knots))] + [
                f"gamma_sigma[{q}]" for q in range(len(self.sigma_knots))
            ]
        return ["gamma_mu0", "gamma_mu1", "gamma_sigma0", "gamma_sigma1"]

    def location_scale(self, theta, stresses) -> Tuple[np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise InputError(
                f"{self.label} link needs {self.n_params} parameters, got {theta.size}"
            )
        xi = np.asarray(stresses, dtype=float)
        if self.kind is LinkKind.PLA:
            k = len(self.mu_knots)
            mu = hat_basis(xi, self.mu_knots) @ theta[:k]
            with np.errstate(over="ignore"):
                sigma = np.exp(hat_basis(xi, self.sigma_knots) @ theta[k:])
            return mu, sigma
        return theta[0] + theta[1] * xi, theta[2] + theta[3] * xi


@dataclass(eq=False)
class FitResult:
    spec: LinkSpec
    theta_hat: np.ndarray
    loglik: float
    aic: float
    converged: bool
    evaluations: int
    sample_fingerprint: str
    trace: List[Dict[str, float]] = field(default_factory=list)

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def link_model(self) -> LinkModel:
        if self.spec.kind is not LinkKind.PLA:
            raise ConfigError("only pla fits map to a LinkModel")
        k = len(self.spec.mu_knots)
        return LinkModel(
            self.spec.mu_knots,
            self.theta_hat[:k],
            self.spec.sigma_knots,
            self.theta_hat[k:],
        )

    def usage_parameters(self) -> Tuple[float, float]:
        """``(mu0_hat, sigma0_hat)`` at the usage stress."""
        mu, sigma = self.spec.location_scale(self.theta_hat, [0.0])
        return float(mu[0]), float(sigma[0])

    def estimates(self) -> List[Tuple[str, float]]:
        return list(zip(self.spec.parameter_names(), self.theta_hat.tolist()))


class ComparisonRow(NamedTuple):
    rank: int
    index: int
    label: str
    aic: float
    delta_aic: float


def akaike(loglik: float, n_params: int) -> float:
    return -2.0 * loglik + 2.0 * n_params


# ---------------------------------------------------------------------- #
# Likelihood
# ---------------------------------------------------------------------- #
def log_likelihood(theta, sample: CensoredSample, spec: LinkSpec) -> float:
    """
    Censored EV log-likelihood: density terms for failures plus
    ``ln(1 - G(ln tau0))`` for each survivor.
    """
    stresses = [g.stress for g in sample.groups]
    mu, sigma = spec.location_scale(theta, stresses)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
        return -math.inf
    if np.any(sigma <= 0):
        return -math.inf

    ln_tau = sample.log_censor_time
    total = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for group, m, s in zip(sample.groups, mu, sigma):
            t = group.log_times[group.failed]
            z = (t - m) / s
            total += float(np.sum(z - np.exp(z))) - t.size * math.log(s)
            survivors = group.size - t.size
            if survivors:
                total -= survivors * float(np.exp((ln_tau - m) / s))
    return total if math.isfinite(total) else -math.inf


# ---------------------------------------------------------------------- #
# Starting values
# ---------------------------------------------------------------------- #
def _group_moments(
    sample: CensoredSample,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rough ``(stress, mu, sigma)`` for every non-empty group: the scale from the
    spread of failures, the location from the mean when uncensored and from
    the failed fraction at the censoring time otherwise.
    """
    ln_tau = sample.log_censor_time
    groups = [g for g in sample.groups if g.size > 0]
    scales = []
    for group in groups:
        t = group.log_times[group.failed]
        scales.append(t.std(ddof=1) * math.sqrt(6.0) / math.pi if t.size > 1 else 0.0)
    usable = [s for s in scales if s > 0]
    fallback = float(np.median(usable)) if usable else 1.0
    scales = np.array([s if s > 0 else fallback for s in scales])

    locations = []
    for group, s in zip(groups, scales):
        t = group.log_times[group.failed]
        if t.size == group.size:
            locations.append(float(t.mean()) + EULER_GAMMA * s)
            continue
        n = group.size
        fraction = min(max(t.size / n, 0.5 / n), 1.0 - 0.5 / n)
        locations.append(ln_tau - s * sev_quantile(fraction))
    stresses = np.array([g.stress for g in groups])
    return stresses, np.array(locations), scales


def initial_theta(sample: CensoredSample, spec: LinkSpec) -> np.ndarray:
    """Least-squares projection of per-group moment fits onto the link."""
    stresses, mu, sigma = _group_moments(sample)
    if spec.kind is LinkKind.PLA:
        g_mu = np.linalg.lstsq(hat_basis(stresses, spec.mu_knots), mu, rcond=None)[0]
        g_sigma = np.linalg.lstsq(
            hat_basis(stresses, spec.sigma_knots), np.log(sigma), rcond=None
        )[0]
        return np.concatenate([g_mu, g_sigma])

    design = np.column_stack([np.ones_like(stresses), stresses])
    g_mu = np.linalg.lstsq(design, mu, rcond=None)[0]
    g_sigma = np.linalg.lstsq(design, sigma, rcond=None)[0]
    if np.any(design @ g_sigma <= 0):
        g_sigma = np.array([float(np.median(sigma)), 0.0])
    return np.concatenate([g_mu, g_sigma])


# ---------------------------------------------------------------------- #
# Fitting
# ---------------------------------------------------------------------- #
def fit_mle(
    sample: CensoredSample,
    spec: LinkSpec,
    settings: OptimizerSettings,
    initial=None,
) -> FitResult:
    """
    Multi-start Nelder-Mead maximization of ``log_likelihood``.

    The first start is ``initial`` (or the moment-based projection); further
    starts perturb it with a seeded stream.  A final simplex is restarted at
    the best point found, and the best evaluated point wins.
    """
    if sample.failures == 0:
        raise InputError("at least one failure is needed to fit a model")

    x0 = np.asarray(
        initial if initial is not None else initial_theta(sample, spec), dtype=float
    )
    rng = np.random.default_rng(np.random.SeedSequence([int(settings.seed), 2]))
    starts = [x0]
    for _ in range(settings.restarts - 1):
        starts.append(x0 + rng.normal(0.0, 0.1, x0.size) * (np.abs(x0) + 0.1))

    best = {"loglik": -math.inf, "theta": None}
    evaluations = 0

    def objective(theta):
        nonlocal evaluations
        evaluations += 1
        value = log_likelihood(theta, sample, spec)
        if value > best["loglik"]:
            best["loglik"] = value
            best["theta"] = np.array(theta, dtype=float)
        return -value if math.isfinite(value) else FIT_SENTINEL

    trace = []
    converged = False
    tol = min(settings.inner_tol, FIT_TOL)

    def run_simplex(start, label):
        nonlocal converged
        scale = max(1.0, float(np.max(np.abs(start))))
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "xatol": tol * scale,
                "fatol": tol,
                "maxfev": settings.max_evaluations,
                "adaptive": start.size > 4,
            },
        )
        converged = converged or bool(result.success)
        trace.append(
            {
                "start": label,
                "loglik": -float(result.fun),
                "evaluations": int(result.nfev),
                "success": bool(result.success),
            }
        )

    for index, start in enumerate(starts):
        run_simplex(start, index)

    if best["theta"] is None:
        raise FitConvergenceError(
            f"every start of the {spec.label} fit diverged", trace=trace
        )
    # a fresh simplex around the best point clears premature collapse
    run_simplex(best["theta"].copy(), "polish")
    if not converged:
        logger.warning("%s fit stopped at the evaluation limit", spec.label)

    return FitResult(
        spec=spec,
        theta_hat=best["theta"],
        loglik=best["loglik"],
        aic=akaike(best["loglik"], spec.n_params),
        converged=converged,
        evaluations=evaluations,
        sample_fingerprint=sample.fingerprint(),
        trace=trace,
    )


def model_comparison(fits: Sequence[FitResult]) -> List[ComparisonRow]:
    """Rank fits by AIC (ties keep input order) with the gap to the best."""
    if len(fits) < 2:
        raise ComparisonError("at least two fits are needed for a comparison")
    if len({f.sample_fingerprint for f in fits}) != 1:
        raise ComparisonError("fits were made on different samples")
    order = sorted(range(len(fits)), key=lambda i: (fits[i].aic, i))
    best = fits[order[0]].aic
    return [
        ComparisonRow(rank, i, fits[i].spec.label, fits[i].aic, fits[i].aic - best)
        for rank, i in enumerate(order, start=1)
    ]

"""
Weibull and extreme-value (EV) lifetime distributions.

Lifetimes X are Weibull with shape ``alpha`` and rate-type scale ``lambda``:

    f(x) = alpha * lambda**alpha * x**(alpha - 1) * exp(-(lambda * x)**alpha)
    F(x) = 1 - exp(-(lambda * x)**alpha)

The log-lifetime T = ln X follows the EV distribution with location
``mu = -ln(lambda)`` and scale ``sigma = 1 / alpha``.  All likelihood and
information code works on the log scale, so censored observations carry
``ln(tau0)`` as their log time.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, InputError

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
PI_SQUARED_OVER_SIX = math.pi**2 / 6.0

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


# ---------------------------------------------------------------------- #
# Parameter types
# ---------------------------------------------------------------------- #
@dataclass(frozen=True)
class WeibullParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise DomainError(f"Weibull shape must be positive, got {self.shape!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"Weibull scale must be positive, got {self.scale!r}")


@dataclass(frozen=True)
class EvParams:
    location: float
    scale: float

    def __post_init__(self):
        if not math.isfinite(self.location):
            raise DomainError(f"EV location must be finite, got {self.location!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"EV scale must be positive, got {self.scale!r}")


class WeibullMeasures(NamedTuple):
    pdf: float
    cdf: float


class EvMeasures(NamedTuple):
    pdf: float
    cdf: float
    hazard: float


class LogLifetimeMoments(NamedTuple):
    mean: float
    variance: float


# ---------------------------------------------------------------------- #
# Densities and conversions
# ---------------------------------------------------------------------- #
def weibull_measures(x, p: WeibullParams) -> WeibullMeasures:
    """
    Weibull pdf and cdf at ``x`` (scalar or array, ``x >= 0``).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("Weibull support is x >= 0")
    a, lam = p.shape, p.scale
    power = (lam * x) ** a
    with np.errstate(divide="ignore", invalid="ignore"):
        pdf = a * lam**a * x ** (a - 1.0) * np.exp(-power)
    cdf = -np.expm1(-power)
    if pdf.ndim == 0:
        return WeibullMeasures(float(pdf), float(cdf))
    return WeibullMeasures(pdf, cdf)


def ev_measures(t, p: EvParams) -> EvMeasures:
    """
    EV pdf, cdf and hazard at log time ``t`` (scalar or array).

    The hazard is ``exp((t - mu) / sigma) / sigma``.
    """
    z = (np.asarray(t, dtype=float) - p.location) / p.scale
    ez = np.exp(z)
    cdf = -np.expm1(-ez)
    pdf = np.exp(z - ez) / p.scale
    hazard = ez / p.scale
    if np.ndim(z) == 0:
        return EvMeasures(float(pdf), float(cdf), float(hazard))
    return EvMeasures(pdf, cdf, hazard)


def weibull_to_ev(p: WeibullParams) -> EvParams:
    return EvParams(location=-math.log(p.scale), scale=1.0 / p.shape)


def ev_to_weibull(p: EvParams) -> WeibullParams:
    return WeibullParams(shape=1.0 / p.scale, scale=math.exp(-p.location))


def sev_cdf(u):
    """Standard EV cdf ``1 - exp(-e^u)``."""
    return -np.expm1(-np.exp(u))


def sev_quantile(p: float) -> float:
    """
    Quantile ``u_p = ln(-ln(1 - p))`` of the standard EV distribution.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    return math.log(-math.log1p(-p))


def log_lifetime_moments(p: EvParams) -> LogLifetimeMoments:
    return LogLifetimeMoments(
        mean=p.location - p.scale * EULER_GAMMA,
        variance=p.scale**2 * PI_SQUARED_OVER_SIX,
    )


# ---------------------------------------------------------------------- #
# Censored samples
# ---------------------------------------------------------------------- #
class Status(str, Enum):
    FAILED = "failed"
    CENSORED = "censored"


@dataclass(frozen=True)
class CensoredObservation:
    log_time: float
    status: Status


@dataclass(frozen=True, eq=False)
class StressGroup:
    """
    Observations at one standardized stress.

    ``log_times`` and ``failed`` are parallel arrays; censored entries hold
    the log censoring time.
    """

    stress: float
    log_times: np.ndarray
    failed: np.ndarray

    def __post_init__(self):
        if not (0.0 <= self.stress <= 1.0):
            raise DomainError(f"stress must lie in [0, 1], got {self.stress!r}")
        log_times = np.asarray(self.log_times, dtype=float)
        failed = np.asarray(self.failed, dtype=bool)
        if log_times.shape != failed.shape or log_times.ndim != 1:
            raise InputError("log_times and failed must be 1-D arrays of equal length")
        object.__setattr__(self, "log_times", log_times)
        object.__setattr__(self, "failed", failed)

    @property
    def size(self) -> int:
        return int(self.log_times.size)

    @property
    def failures(self) -> int:
        return int(self.failed.sum())

    def observations(self) -> Iterator[CensoredObservation]:
        for t, f in zip(self.log_times, self.failed):
            yield CensoredObservation(
                float(t), Status.FAILED if f else Status.CENSORED
            )


@dataclass(frozen=True, eq=False)
class CensoredSample:
    groups: Tuple[StressGroup, ...]
    censor_time: float

    def __post_init__(self):
        if not self.censor_time > 0:
            raise DomainError(f"censor time must be positive, got {self.censor_time!r}")
        object.__setattr__(self, "groups", tuple(self.groups))
        ln_tau = self.log_censor_time
        for group in self.groups:
            if np.any(group.log_times[group.failed] > ln_tau + 1e-12):
                raise InputError(
                    f"failure after the censoring time at stress {group.stress}"
                )
            censored = group.log_times[~group.failed]
            if censored.size and not np.allclose(censored, ln_tau, rtol=0, atol=1e-9):
                raise InputError(
                    f"censored log times must equal ln(tau0) at stress {group.stress}"
                )

    @property
    def log_censor_time(self) -> float:
        return math.log(self.censor_time)

    @property
    def size(self) -> int:
        return sum(g.size for g in self.groups)

    @property
    def failures(self) -> int:
        return sum(g.failures for g in self.groups)

    @property
    def censored_fraction(self) -> float:
        total = self.size
        return (total - self.failures) / total if total else 0.0

    def fingerprint(self) -> str:
        """Content hash identifying the sample."""
        digest = hashlib.sha256()
        digest.update(repr(float(self.censor_time)).encode())
        for group in self.groups:
            digest.update(repr(float(group.stress)).encode())
            digest.update(group.log_times.tobytes())
            digest.update(group.failed.tobytes())
        return digest.hexdigest()

    def rows(self) -> List[Tuple[float, float, Status]]:
        """Flatten to (stress, log_time, status) rows."""
        return [
            (g.stress, obs.log_time, obs.status)
            for g in self.groups
            for obs in g.observations()
        ]


def simulate_censored(
    params_per_stress: Sequence[Tuple[float, WeibullParams, int]],
    tau0: float,
    seed: SeedLike,
) -> CensoredSample:
    """
    Draw Type-I censored Weibull lifetimes at each stress level.

    Lifetimes use the inverse-cdf transform ``x = (-ln U)**(1/alpha) / lambda``,
    evaluated on the log scale so that extreme parameters do not overflow.
    Units still alive at ``tau0`` are recorded as censored at ``ln(tau0)``.
    """
    if not params_per_stress:
        raise InputError("at least one stress level is required")
    if not tau0 > 0:
        raise DomainError(f"censor time must be positive, got {tau0!r}")
    rng = np.random.default_rng(seed)
    ln_tau = math.log(tau0)

    groups = []
    for xi, params, n in params_per_stress:
        if int(n) < 1:
            raise InputError(f"group size must be at least 1, got {n!r}")
        u = 1.0 - rng.random(int(n))  # (0, 1]
        log_x = (np.log(-np.log(u)) / params.shape) - math.log(params.scale)
        failed = log_x <= ln_tau
        log_times = np.where(failed, log_x, ln_tau)
        groups.append(StressGroup(float(xi), log_times, failed))

    sample = CensoredSample(tuple(groups), tau0)
    logger.debug(
        "simulated %d units, censored fraction %.4f",
        sample.size,
        sample.censored_fraction,
    )
    return sample

"""
Piecewise-linear (PLA) links from standardized stress to EV parameters.

``mu(xi)`` is the piecewise-linear interpolant of ``gamma_mu`` over the mu
knots and ``ln sigma(xi)`` the interpolant of ``gamma_sigma`` over the sigma
knots.  Both are linear in their coefficients through the hat (tent) basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .distributions import EvParams
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class KnotSet:
    cuts: Tuple[float, ...]

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cuts)
        if len(cuts) < 2:
            raise ConfigError("a knot set needs at least the endpoints 0 and 1")
        if cuts[0] != 0.0 or cuts[-1] != 1.0:
            raise ConfigError(f"knot set must start at 0 and end at 1, got {cuts}")
        if any(b - a <= 0 for a, b in zip(cuts, cuts[1:])):
            raise ConfigError(f"knots must be strictly increasing, got {cuts}")
        object.__setattr__(self, "cuts", cuts)

    @property
    def segments(self) -> int:
        """Number of linear pieces (Q)."""
        return len(self.cuts) - 1

    def __len__(self) -> int:
        return len(self.cuts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.cuts)


def _check_stress(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if np.any((xi < 0.0) | (xi > 1.0)) or np.any(~np.isfinite(xi)):
        raise DomainError("standardized stress must lie in [0, 1]")
    return xi


def hat_basis(xis, knots: KnotSet) -> np.ndarray:
    """
    Hat-basis matrix of shape ``(len(xis), Q + 1)``.

    Row ``i`` holds the weights with which each knot value contributes to the
    interpolant at ``xis[i]``.
    """
    xis = np.atleast_1d(_check_stress(xis))
    cuts = knots.as_array()
    # interior knots fall in the left segment
    seg = np.clip(np.searchsorted(cuts, xis, side="left"), 1, len(cuts) - 1)
    left, right = cuts[seg - 1], cuts[seg]
    w = (xis - left) / (right - left)
    basis = np.zeros((xis.size, len(cuts)))
    rows = np.arange(xis.size)
    basis[rows, seg - 1] = 1.0 - w
    basis[rows, seg] += w
    return basis


def hat_gradients(xi: float, knots: KnotSet) -> np.ndarray:
    """Gradient of the interpolant at ``xi`` with respect to the knot values."""
    return hat_basis(xi, knots)[0]


@dataclass(frozen=True, eq=False)
class LinkModel:
    mu_knots: KnotSet
    mu_gamma: np.ndarray
    sigma_knots: KnotSet
    sigma_gamma: np.ndarray

    def __post_init__(self):
        mu_gamma = np.asarray(self.mu_gamma, dtype=float).copy()
        sigma_gamma = np.asarray(self.sigma_gamma, dtype=float).copy()
        if mu_gamma.shape != (len(self.mu_knots),):
            raise ConfigError(
                f"mu_gamma needs {len(self.mu_knots)} values, got {mu_gamma.size}"
            )
        if sigma_gamma.shape != (len(self.sigma_knots),):
            raise ConfigError(
                f"sigma_gamma needs {len(self.sigma_knots)} values, "
                f"got {sigma_gamma.size}"
            )
        if not (np.all(np.isfinite(mu_gamma)) and np.all(np.isfinite(sigma_gamma))):
            raise ConfigError("link coefficients must be finite")
        mu_gamma.setflags(write=False)
        sigma_gamma.setflags(write=False)
        object.__setattr__(self, "mu_gamma", mu_gamma)
        object.__setattr__(self, "sigma_gamma", sigma_gamma)

    def __eq__(self, other):
        if not isinstance(other, LinkModel):
            return NotImplemented
        return (
            self.mu_knots == other.mu_knots
            and self.sigma_knots == other.sigma_knots
            and np.array_equal(self.mu_gamma, other.mu_gamma)
            and np.array_equal(self.sigma_gamma, other.sigma_gamma)
        )

    @property
    def n_mu(self) -> int:
        return len(self.mu_knots)

    @property
    def n_sigma(self) -> int:
        return len(self.sigma_knots)

    @property
    def n_params(self) -> int:
        return self.n_mu + self.n_sigma

    @property
    def theta(self) -> np.ndarray:
        """Flat parameter vector ``(gamma_mu, gamma_sigma)``."""
        return np.concatenate([self.mu_gamma, self.sigma_gamma])

    def with_theta(self, theta) -> "LinkModel":
        theta = np.asarray(theta, dtype=float)
        return LinkModel(
            self.mu_knots, theta[: self.n_mu], self.sigma_knots, theta[self.n_mu :]
        )

    def parameter_names(self) -> List[str]:
        return [f"gamma_mu[{q}]" for q in range(self.n_mu)] + [
            f"gamma_sigma[{q}]" for q in range(self.n_sigma)
        ]


def link_arrays(xis, model: LinkModel) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(mu, sigma)`` at each stress in ``xis``."""
    mu = hat_basis(xis, model.mu_knots) @ model.mu_gamma
    sigma = np.exp(hat_basis(xis, model.sigma_knots) @ model.sigma_gamma)
    return mu, sigma


def eval_link(xi: float, model: LinkModel) -> EvParams:
    mu, sigma = link_arrays(xi, model)
    return EvParams(location=float(mu[0]), scale=float(sigma[0]))


# ---------------------------------------------------------------------- #
# Knot selection
# ---------------------------------------------------------------------- #
def equispaced_knots(Q: int) -> KnotSet:
    if Q < 1:
        raise ConfigError(f"number of segments must be at least 1, got {Q}")
    return KnotSet(tuple(np.linspace(0.0, 1.0, Q + 1)))


def default_knots(
    m: int, Q: int, stresses: Optional[Sequence[float]] = None
) -> KnotSet:
    """
    Knots ``{0, q_1, ..., q_(Q-1), 1}``.

    Without stress data ``q_j = j / (m + 1)``; with data the ``q_j`` are the
    empirical ``j/Q`` quantiles of the observed stresses.
    """
    if m < 1 or Q < 1:
        raise ConfigError(f"m and Q must be positive, got m={m}, Q={Q}")
    if Q > m + 1:
        raise ConfigError(f"Q={Q} exceeds the number of stress levels m+1={m + 1}")
    if stresses is None:
        interior = [j / (m + 1) for j in range(1, Q)]
    else:
        levels = np.asarray(stresses, dtype=float)
        _check_stress(levels)
        interior = [float(np.quantile(levels, j / Q)) for j in range(1, Q)]
    return KnotSet((0.0, *interior, 1.0))

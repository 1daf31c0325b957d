"""
Least-squares comparison of candidate link shapes against a known
non-monotone relationship.

The target is ``theta(xi) = u * exp(-u**2 / 2) / sqrt(2 pi)`` with
``u = (xi - 0.5) / 0.2``.  Linear-in-parameter candidates (linear, cubic,
logarithmic, PLA) are solved exactly with ``lstsq``; the reciprocal forms are
profiled over their pole and polished with ``scipy.optimize.least_squares``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .errors import ConfigError
from .links import KnotSet, hat_basis

logger = logging.getLogger(__name__)

LOG_SHIFT = 1e-6

PLA_KNOTS = {
    "pla1": (0.0, 0.3, 0.7, 1.0),
    "pla2": (0.0, 0.25, 0.5, 0.75, 1.0),
    "pla3": (0.0, 0.3, 0.5, 0.7, 1.0),
}

MODEL_ORDER = (
    "linear",
    "logarithmic",
    "inverse",
    "combination",
    "cubic",
    "pla1",
    "pla2",
    "pla3",
)

# candidate poles scanned for the reciprocal forms
_POLES = 4001
_PENALTY = 1e6


class SseRow(NamedTuple):
    model: str
    sse: float
    parameters: Tuple[float, ...]


@dataclass
class SseReport:
    grid_points: int
    shift: float
    rows: List[SseRow]

    def sse(self, model: str) -> float:
        for row in self.rows:
            if row.model == model:
                return row.sse
        raise KeyError(model)

    def as_dict(self) -> Dict[str, float]:
        return {row.model: row.sse for row in self.rows}

    def ranking(self) -> List[str]:
        return [row.model for row in sorted(self.rows, key=lambda r: r.sse)]


def true_relationship(xi):
    u = (np.asarray(xi, dtype=float) - 0.5) / 0.2
    return u * np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def _linear_fit(design: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    residual = y - design @ coef
    return float(residual @ residual), coef


def pla_sse(xs, ys, knots: KnotSet) -> Tuple[float, np.ndarray]:
    """SSE and knot values of the least-squares PLA fit."""
    return _linear_fit(hat_basis(xs, knots), np.asarray(ys, dtype=float))


def _reciprocal_fit(f: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Best ``1 / (g0 + g1 * f)`` in the least-squares sense.

    With ``g1 != 0`` the form is ``a / (f - p)`` for pole ``p = -g0 / g1``, which
    is linear in ``a`` once ``p`` is fixed.  The SSE is profiled over a dense set
    of poles (every gap between observed ``f`` values and a wide band around
    them), compared with the constant fit ``g1 = 0`` and then polished.
    """
    yy = float(y @ y)
    mean = float(y.mean())
    best_sse = float(((y - mean) ** 2).sum())
    best = np.array([1.0 / mean if mean else math.inf, 0.0])

    levels = np.unique(f)
    span = float(levels[-1] - levels[0])
    poles = np.concatenate(
        [
            np.linspace(levels[0] - 4.0 * span, levels[-1] + 4.0 * span, _POLES),
            0.5 * (levels[:-1] + levels[1:]),
        ]
    )
    with np.errstate(divide="ignore"):
        h = 1.0 / (f[None, :] - poles[:, None])
    usable = np.all(np.isfinite(h), axis=1)
    h, poles = h[usable], poles[usable]
    hy = h @ y
    hh = np.einsum("ij,ij->i", h, h)
    profiled = yy - hy * hy / hh
    i = int(np.argmin(profiled))
    if profiled[i] < best_sse and hy[i] != 0.0:
        a = hy[i] / hh[i]
        best_sse, best = float(profiled[i]), np.array([-poles[i] / a, 1.0 / a])

    def residuals(g):
        denominator = g[0] + g[1] * f
        with np.errstate(divide="ignore", invalid="ignore"):
            r = 1.0 / denominator - y
        return np.where(np.isfinite(r), r, _PENALTY)

    if np.all(np.isfinite(best)):
        polished = least_squares(residuals, best, method="lm", max_nfev=4000)
        r = residuals(polished.x)
        if float(r @ r) < best_sse:
            best_sse, best = float(r @ r), polished.x
    return best_sse, best


def sse_benchmark(grid_points: int = 1001) -> SseReport:
    """
    SSE of every candidate link on an equispaced grid over [0, 1].

    Forms involving ``ln(xi)`` are evaluated on the grid shifted to
    ``[LOG_SHIFT, 1]``; the shift is recorded in the report.
    """
    if grid_points < 21:
        raise ConfigError(f"grid_points must be at least 21, got {grid_points}")
    xi = np.linspace(0.0, 1.0, grid_points)
    y = true_relationship(xi)
    shifted = LOG_SHIFT + (1.0 - LOG_SHIFT) * xi
    y_shifted = true_relationship(shifted)
    ones = np.ones_like(xi)

    fitters: Dict[str, Callable[[], Tuple[float, np.ndarray]]] = {
        "linear": lambda: _linear_fit(np.column_stack([ones, xi]), y),
        "logarithmic": lambda: _linear_fit(
            np.column_stack([ones, np.log(shifted)]), y_shifted
        ),
        "inverse": lambda: _reciprocal_fit(xi, y),
        "combination": lambda: _reciprocal_fit(np.log(shifted), y_shifted),
        "cubic": lambda: _linear_fit(np.vander(xi, 4, increasing=True), y),
    }
    for name, cuts in PLA_KNOTS.items():
        fitters[name] = lambda cuts=cuts: pla_sse(xi, y, KnotSet(cuts))

    rows = []
    for name in MODEL_ORDER:
        sse, coef = fitters[name]()
        rows.append(SseRow(name, sse, tuple(float(c) for c in coef)))
        logger.debug("%s SSE %.6g", name, sse)
    return SseReport(grid_points=grid_points, shift=LOG_SHIFT, rows=rows)


def sse_of(model: Callable[[np.ndarray], np.ndarray], xs: Sequence[float]) -> float:
    """SSE of an arbitrary callable against the true relationship."""
    xs = np.asarray(xs, dtype=float)
    r = model(xs) - true_relationship(xs)
    return float(r @ r)

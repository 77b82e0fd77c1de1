"""Coordinate-chart versus sphere normalization of a scale-only class.

Each class is a ray ``{c beta : c > 0}``.  The special-coordinate chart
divides by ``|beta_1|`` and lives on two disjoint copies of R^(D-1); the
sphere chart projects onto the unit sphere with the great-circle metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import ChartSingular, ZeroVector

UNIT_TOL = 1e-12


class _Disconnected:
    """Distance between points on different sign components of the chart."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Disconnected"

    __str__ = __repr__

    def __reduce__(self):
        return (_Disconnected, ())


Disconnected = _Disconnected()


@dataclass(frozen=True)
class SpherePoint:
    coords: Tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(x) for x in self.coords)
        norm = math.sqrt(math.fsum(x * x for x in coords))
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"not a unit vector (norm {norm!r})")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class ChartPoint:
    sign: int
    rest: Tuple[float, ...]

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        rest = tuple(float(x) for x in self.rest)
        if not all(math.isfinite(x) for x in rest):
            raise ValueError("chart coordinates must be finite")
        object.__setattr__(self, "rest", rest)


def coord_chart(beta: Sequence[float]) -> ChartPoint:
    beta = [float(b) for b in beta]
    if len(beta) < 2:
        raise ValueError("need at least two coefficients")
    lead = abs(beta[0])
    if lead < 1e-300:
        raise ChartSingular("first coefficient is zero: the point lies on the excluded hyperplane")
    return ChartPoint(1 if beta[0] > 0 else -1, tuple(b / lead for b in beta[1:]))


def sphere_chart(beta: Sequence[float]) -> SpherePoint:
    v = np.asarray(beta, dtype=float)
    # rescale first so tiny or huge inputs do not under/overflow the norm
    peak = float(np.max(np.abs(v))) if v.size else 0.0
    if peak == 0.0 or not math.isfinite(peak):
        raise ZeroVector("cannot project the zero vector onto the sphere")
    v = v / peak
    return SpherePoint(tuple(v / np.linalg.norm(v)))


def great_circle(p: SpherePoint, q: SpherePoint) -> float:
    """Angle between two unit vectors, in [0, pi].

    Evaluated as ``2 atan2(|p - q|, |p + q|)``, which equals
    ``arccos(p . q)`` on the sphere but keeps full relative precision for
    nearly equal and nearly antipodal pairs.
    """
    a = np.asarray(p.coords)
    b = np.asarray(q.coords)
    return float(2.0 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def great_circle_arccos(p: SpherePoint, q: SpherePoint) -> float:
    """Textbook form ``arccos(clamp(p . q))``; loses precision for small angles."""
    dot = float(np.dot(p.coords, q.coords))
    return math.acos(min(1.0, max(-1.0, dot)))


def chart_distance(p: ChartPoint, q: ChartPoint) -> Union[float, _Disconnected]:
    if p.sign != q.sign:
        return Disconnected
    return float(np.linalg.norm(np.subtract(p.rest, q.rest)))


def chart_stretch(beta: Sequence[float]) -> float:
    """Chart length per unit of great-circle arc near ``beta`` (D = 2).

    For ``beta = (beta_1, beta_2)`` the chart coordinate is ``t = beta_2 /
    |beta_1|`` and the angle is ``atan(t)``, so the local stretch is
    ``1 + t^2``: it blows up as the ray approaches the excluded hyperplane.
    """
    t = coord_chart(beta).rest
    return 1.0 + float(np.dot(t, t))


# -- experiments -------------------------------------------------------------


def uniform_sphere(rng, n: int, D: int) -> np.ndarray:
    g = rng.standard_normal(size=(n, D))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class StrongEquivalenceReport:
    n_pairs: int
    D: int
    seed: int
    lower_violations: int
    upper_violations: int
    max_lower_slack_violation: float
    max_upper_slack_violation: float
    tol: float = 1e-12

    @property
    def violations(self) -> int:
        return self.lower_violations + self.upper_violations

    @property
    def passed(self) -> bool:
        return self.violations == 0


def strong_equivalence_check(n_pairs: int, D: int, seed: int, tol: float = 1e-12) -> StrongEquivalenceReport:
    """Check ``|p - q| <= rho(p, q) <= (pi/2) |p - q|`` on random unit pairs."""
    if D < 2:
        raise ValueError("D must be >= 2")
    rng = np.random.default_rng(seed)
    p = uniform_sphere(rng, n_pairs, D)
    q = uniform_sphere(rng, n_pairs, D)
    chord = np.linalg.norm(p - q, axis=1)
    rho = 2.0 * np.arctan2(chord, np.linalg.norm(p + q, axis=1))
    lower = chord - rho  # must be <= 0
    upper = rho - (math.pi / 2.0) * chord  # must be <= 0
    return StrongEquivalenceReport(
        n_pairs,
        D,
        seed,
        int(np.sum(lower > tol)),
        int(np.sum(upper > tol)),
        float(max(0.0, lower.max())),
        float(max(0.0, upper.max())),
        tol,
    )


@dataclass(frozen=True)
class ExperimentRow:
    M: float
    chart: Union[float, _Disconnected]
    great_circle: float


def convergence_experiment(scenario: str, M_grid: Sequence[float]) -> List[ExperimentRow]:
    """Chart versus sphere distances along the sequences of the two scenarios.

    ``cross_sign`` compares ``(1, M)`` with ``(-1, M)``; ``within_sign``
    compares ``(1, M)`` with ``(1, 2M)``.
    """
    grid = [float(m) for m in M_grid]
    if not grid or any(m <= 0 for m in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("M_grid must be positive and strictly increasing")
    if scenario == "cross_sign":
        other = lambda M: (-1.0, M)
    elif scenario == "within_sign":
        other = lambda M: (1.0, 2.0 * M)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    rows = []
    for M in grid:
        b1, b2 = (1.0, M), other(M)
        rows.append(
            ExperimentRow(
                M,
                chart_distance(coord_chart(b1), coord_chart(b2)),
                great_circle(sphere_chart(b1), sphere_chart(b2)),
            )
        )
    return rows


def experiment_is_monotone(rows: Sequence[ExperimentRow]) -> bool:
    """Great-circle column strictly decreasing; chart column increasing or Disconnected."""
    gc = [r.great_circle for r in rows]
    if any(b >= a for a, b in zip(gc, gc[1:])):
        return False
    charts = [r.chart for r in rows]
    if all(c is Disconnected for c in charts):
        return True
    if any(c is Disconnected for c in charts):
        return False
    return all(b > a for a, b in zip(charts, charts[1:]))

"""Location-scale distribution handles.

A handle stands in for an unknown CDF.  Every transformation this package
audits moves a CDF only through its location and scale, so a standardized
shape plus ``(location, scale)`` is enough to carry it through an orbit.
Quantile grids give a nonparametric shape with the same location-scale
behaviour: grid values are in standardized units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .errors import ConstraintViolated, NoDensity

FAMILIES = ("normal", "logistic", "uniform", "cauchy", "quantile_grid")


def _std_cdf(family, z):
    if family == "normal":
        return special.ndtr(z)
    if family == "logistic":
        return special.expit(z)
    if family == "uniform":
        return np.clip(z, 0.0, 1.0)
    if family == "cauchy":
        return 0.5 + np.arctan(z) / np.pi
    raise ValueError(family)


def _std_pdf(family, z):
    if family == "normal":
        return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    if family == "logistic":
        s = special.expit(z)
        return s * (1.0 - s)
    if family == "uniform":
        return np.where((z >= 0.0) & (z <= 1.0), 1.0, 0.0)
    if family == "cauchy":
        return 1.0 / (np.pi * (1.0 + z * z))
    raise ValueError(family)


def _std_ppf(family, p):
    if family == "normal":
        return special.ndtri(p)
    if family == "logistic":
        return special.logit(p)
    if family == "uniform":
        return p
    if family == "cauchy":
        return np.tan(np.pi * (p - 0.5))
    raise ValueError(family)


@dataclass(frozen=True)
class DistHandle:
    family: str
    location: float = 0.0
    scale: float = 1.0
    # (probability, standardized value) pairs, only for quantile_grid
    grid: Optional[Tuple[Tuple[float, float], ...]] = field(default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown distribution family {self.family!r}")
        if not (math.isfinite(self.location) and math.isfinite(self.scale)):
            raise ConstraintViolated("location and scale must be finite")
        if not self.scale > 0:
            raise ConstraintViolated(f"scale must be strictly positive, got {self.scale}")
        if self.family == "quantile_grid":
            if not self.grid or len(self.grid) < 2:
                raise ConstraintViolated("quantile_grid needs at least two (p, value) pairs")
            grid = tuple((float(p), float(v)) for p, v in self.grid)
            probs = [p for p, _ in grid]
            vals = [v for _, v in grid]
            if not all(0.0 < p < 1.0 for p in probs):
                raise ConstraintViolated("grid probabilities must lie in (0, 1)")
            if any(b <= a for a, b in zip(probs, probs[1:])):
                raise ConstraintViolated("grid probabilities must be strictly increasing")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ConstraintViolated("grid values must be nondecreasing")
            object.__setattr__(self, "grid", grid)
        elif self.grid is not None:
            raise ConstraintViolated("grid is only allowed for quantile_grid")

    def with_location_scale(self, location, scale):
        return DistHandle(self.family, float(location), float(scale), self.grid)

    def affine(self, shift, factor):
        """Law of ``shift + factor * X`` for ``X`` with this law (factor > 0)."""
        return self.with_location_scale(shift + factor * self.location, factor * self.scale)

    # -- evaluation -------------------------------------------------------

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        if self.family == "quantile_grid":
            probs, vals = self._grid_arrays()
            out = _grid_cdf(z, probs, vals)
        else:
            out = _std_cdf(self.family, z)
        return float(out) if np.ndim(out) == 0 else out

    def pdf(self, x):
        if self.family == "quantile_grid":
            raise NoDensity("quantile_grid handles carry no density")
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        out = _std_pdf(self.family, z) / self.scale
        return float(out) if np.ndim(out) == 0 else out

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        if self.family == "quantile_grid":
            probs, vals = self._grid_arrays()
            # flat tails beyond the outermost grid points
            z = np.interp(p, probs, vals)
        else:
            z = _std_ppf(self.family, p)
        out = self.location + self.scale * z
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, rng, size):
        return self.ppf(rng.uniform(size=size))

    def _grid_arrays(self):
        probs = np.array([p for p, _ in self.grid])
        vals = np.array([v for _, v in self.grid])
        return probs, vals


def _grid_cdf(z, probs, vals):
    # Inverse of the piecewise-linear quantile function.  On flat stretches
    # (repeated values) the CDF jumps; we return the right limit.
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    flat = z.reshape(-1)
    res = out.reshape(-1)
    for idx, zi in enumerate(flat):
        if zi < vals[0]:
            res[idx] = 0.0
        elif zi >= vals[-1]:
            res[idx] = 1.0
        else:
            k = int(np.searchsorted(vals, zi, side="right")) - 1
            lo, hi = vals[k], vals[k + 1]
            if hi == lo:
                res[idx] = probs[k + 1]
            else:
                res[idx] = probs[k] + (probs[k + 1] - probs[k]) * (zi - lo) / (hi - lo)
    return out


def quantile_grid(pairs: Sequence[Tuple[float, float]], location=0.0, scale=1.0) -> DistHandle:
    return DistHandle("quantile_grid", location, scale, tuple(pairs))


def point_mass(value: float) -> DistHandle:
    """Degenerate law at ``value`` encoded as a constant quantile grid."""
    return DistHandle("quantile_grid", float(value), 1.0, ((0.25, 0.0), (0.75, 0.0)))

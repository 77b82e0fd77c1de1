"""Logit demand and consumer surplus.

Coordinates: mean utilities ``d0..dJ`` (``d0`` is the outside option),
post-policy mean utilities ``dp0..dpJ``, ``alpha`` (marginal utility of
income), ``mu`` (logit scale) and ``C`` (the unknown surplus constant).

The policy profile is carried inside the point because it is a structural
object: under ``u -> a + b u`` it moves exactly like the baseline profile.
``C`` is in money units, which the utility-unit change leaves alone, so the
family does not touch it; the location shift still reaches the surplus
level through the log-sum term, which moves by ``a / (b alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..audit import Counterfactual, section_from_element
from ..errors import DimMismatch, ZeroDenominator
from ..quotient import AffineRule, ParamPoint, affine_family


def logsumexp(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    top = float(v.max())
    return top + math.log(float(np.exp(v - top).sum()))


@dataclass(frozen=True)
class LogitDemandModel:
    delta: tuple
    alpha: float = 1.0
    mu: float = 1.0
    cs_const: float = 0.0
    delta_prime: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(float(x) for x in self.delta))
        if self.delta_prime is not None:
            object.__setattr__(self, "delta_prime", tuple(float(x) for x in self.delta_prime))
            if len(self.delta_prime) != len(self.delta):
                raise DimMismatch("delta_prime must match delta in length")
        if not self.alpha > 0 or not self.mu > 0:
            raise ValueError("alpha and mu must be strictly positive")

    def to_point(self) -> ParamPoint:
        coords = {f"d{j}": x for j, x in enumerate(self.delta)}
        if self.delta_prime is not None:
            coords.update({f"dp{j}": x for j, x in enumerate(self.delta_prime)})
        coords.update(alpha=self.alpha, mu=self.mu, C=self.cs_const)
        return ParamPoint(coords)

    @classmethod
    def from_point(cls, theta: ParamPoint) -> "LogitDemandModel":
        c = theta.coords
        n = sum(1 for k in c if k.startswith("d") and k[1:].isdigit())
        delta = tuple(c[f"d{j}"] for j in range(n))
        dp = tuple(c[f"dp{j}"] for j in range(n)) if "dp0" in c else None
        return cls(delta, c["alpha"], c["mu"], c["C"], dp)


def logit_affine_family():
    ref = LogitDemandModel((0.0, 1.0, 2.0), 2.0, 1.0, 0.0, (0.0, 1.0, 3.0)).to_point()
    return affine_family(
        "logit-affine",
        scales=("b",),
        locations={"a": "b"},
        rules=(
            AffineRule("d*", "b", (("a", 1.0),)),
            AffineRule("alpha", "b"),
            AffineRule("mu", "b"),
            AffineRule("C"),
        ),
        preserves={"iid-errors", "cdf-monotone"},
        requires=("d0", "alpha", "mu", "C"),
        reference_point=ref,
        param_order=("a", "b"),
    )


def logit_cs_level(m: LogitDemandModel) -> float:
    return (m.mu / m.alpha) * logsumexp(np.asarray(m.delta) / m.mu) + m.cs_const


def logit_delta_cs(m: LogitDemandModel, delta_prime) -> float:
    delta_prime = tuple(float(x) for x in delta_prime)
    if len(delta_prime) != len(m.delta):
        raise DimMismatch(f"delta_prime has {len(delta_prime)} entries, delta has {len(m.delta)}")
    after = logsumexp(np.asarray(delta_prime) / m.mu)
    before = logsumexp(np.asarray(m.delta) / m.mu)
    return (m.mu / m.alpha) * (after - before)


def logit_pct_cs(m: LogitDemandModel, delta_prime) -> float:
    level = logit_cs_level(m)
    if level == 0.0:
        raise ZeroDenominator("consumer surplus level is zero")
    return logit_delta_cs(m, delta_prime) / level


def logit_shares(m: LogitDemandModel):
    v = np.asarray(m.delta) / m.mu
    return np.exp(v - logsumexp(v))


def _m(theta):
    return LogitDemandModel.from_point(theta)


COUNTERFACTUALS = {
    "delta_cs": Counterfactual("delta_cs", lambda t, c: logit_delta_cs(_m(t), _m(t).delta_prime)),
    "share": Counterfactual("share", lambda t, c: float(logit_shares(_m(t))[int(c["j"])]), ("j",)),
    "cs_level": Counterfactual("cs_level", lambda t, c: logit_cs_level(_m(t))),
    "pct_cs": Counterfactual("pct_cs", lambda t, c: logit_pct_cs(_m(t), _m(t).delta_prime)),
}

EXPECTED = {
    "delta_cs": "invariant",
    "share": "invariant",
    "cs_level": "non_invariant",
    "pct_cs": "non_invariant",
}


def normalizations():
    fam = logit_affine_family()

    def element(theta):
        mu = theta.coords["mu"]
        return fam.element(-theta.coords["d0"] / mu, 1.0 / mu)

    return {
        "outside_zero_unit_scale": section_from_element(
            "outside_zero_unit_scale", fam, element, "outside option utility 0 and logit scale 1"
        )
    }


def orbit_invariant(theta):
    m = _m(theta)
    rel = tuple((x - m.delta[0]) / m.mu for x in m.delta + m.delta_prime)
    return rel + (m.mu / m.alpha, m.cs_const)


def base_points():
    fixtures = [
        LogitDemandModel((0.0, 1.0, 2.0), 2.0, 1.0, 0.0, (0.0, 1.0, 3.0)),
        LogitDemandModel((0.0, -0.5, 0.7, 1.1), 1.3, 0.8, 0.4, (0.0, -0.5, 0.2, 1.6)),
        LogitDemandModel((0.5, 2.0, -1.0), 0.7, 1.5, -1.2, (0.5, 2.5, -1.0)),
        LogitDemandModel((1.0, 1.0), 3.0, 0.5, 2.0, (1.0, 0.2)),
        LogitDemandModel((-0.2, 4.0, 3.0, 0.0, 1.0), 1.0, 2.2, 0.0, (-0.2, 3.0, 3.0, 0.5, 1.0)),
    ]
    return [(m.to_point(), {"j": 1}) for m in fixtures]

"""Binary response model ``Y = 1{x'beta >= eps}``.

Coordinates are ``b1..bd`` (``b1`` is the intercept) and the error law is
the distribution ``eps``.  The family ``(a, b)`` shifts the intercept and
the error by ``a`` and rescales everything by ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..audit import Counterfactual, Normalization, section_from_element
from ..distributions import DistHandle
from ..errors import DimMismatch, ZeroDenominator
from ..quotient import AffineRule, ParamPoint, affine_family


@dataclass(frozen=True)
class BinaryChoiceModel:
    beta: tuple
    errdist: DistHandle = DistHandle("logistic")

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) < 2:
            raise DimMismatch("binary model needs an intercept and at least one slope")

    @property
    def d(self):
        return len(self.beta)

    def to_point(self) -> ParamPoint:
        coords = {f"b{k + 1}": b for k, b in enumerate(self.beta)}
        return ParamPoint(coords, {"eps": self.errdist})

    @classmethod
    def from_point(cls, theta: ParamPoint) -> "BinaryChoiceModel":
        d = sum(1 for name in theta.coords if name.startswith("b"))
        return cls(tuple(theta.coords[f"b{k}"] for k in range(1, d + 1)), theta.dists["eps"])


def binary_affine_family():
    ref = BinaryChoiceModel((0.2, 0.3, -0.5)).to_point()
    return affine_family(
        "binary-affine",
        scales=("b",),
        locations={"a": "b"},
        rules=(
            AffineRule("b1", "b", (("a", 1.0),)),
            AffineRule("b*", "b"),
            AffineRule("eps", "b", (("a", 1.0),)),
        ),
        preserves={"cdf-monotone"},
        requires=("b1", "eps"),
        reference_point=ref,
        param_order=("a", "b"),
    )


def _index(m: BinaryChoiceModel, x: Sequence[float]) -> float:
    x = tuple(float(v) for v in x)
    if len(x) != m.d:
        raise DimMismatch(f"covariate vector has length {len(x)}, model has d={m.d}")
    return float(np.dot(x, m.beta))


def latent_utility(m, x):
    return _index(m, x)


def binary_choice_prob(m: BinaryChoiceModel, x) -> float:
    return m.errdist.cdf(_index(m, x))


def binary_marginal_effect(m: BinaryChoiceModel, x, j: int) -> float:
    """Derivative of the choice probability in regressor ``j`` (1-based, j >= 2)."""
    if not 2 <= j <= m.d:
        raise DimMismatch(f"regressor index {j} outside 2..{m.d}")
    return m.errdist.pdf(_index(m, x)) * m.beta[j - 1]


def binary_pct_welfare(m: BinaryChoiceModel, x, x_prime) -> float:
    w0 = _index(m, x)
    w1 = _index(m, x_prime)
    if w0 == 0.0:
        raise ZeroDenominator("latent welfare at the baseline covariates is zero")
    return (w1 - w0) / w0


def coefficient_ratio(m: BinaryChoiceModel, j: int, k: int) -> float:
    bk = m.beta[k - 1]
    if bk == 0.0:
        raise ZeroDenominator(f"coefficient b{k} is zero")
    return m.beta[j - 1] / bk


# -- counterfactual registry --------------------------------------------------


def _m(theta):
    return BinaryChoiceModel.from_point(theta)


COUNTERFACTUALS = {
    "choice_prob": Counterfactual(
        "choice_prob", lambda t, c: binary_choice_prob(_m(t), c["x"]), ("x",)
    ),
    "marginal_effect": Counterfactual(
        "marginal_effect", lambda t, c: binary_marginal_effect(_m(t), c["x"], int(c["j"])), ("x", "j")
    ),
    "coef_ratio": Counterfactual(
        "coef_ratio", lambda t, c: coefficient_ratio(_m(t), int(c["j"]), int(c["k"])), ("j", "k")
    ),
    "latent_level": Counterfactual("latent_level", lambda t, c: latent_utility(_m(t), c["x"]), ("x",)),
    "intercept_ratio": Counterfactual(
        "intercept_ratio", lambda t, c: coefficient_ratio(_m(t), 1, int(c["k"])), ("k",)
    ),
    "pct_welfare": Counterfactual(
        "pct_welfare", lambda t, c: binary_pct_welfare(_m(t), c["x"], c["x_prime"]), ("x", "x_prime")
    ),
}

EXPECTED = {
    "choice_prob": "invariant",
    "marginal_effect": "invariant",
    "coef_ratio": "invariant",
    "latent_level": "non_invariant",
    "intercept_ratio": "non_invariant",
    "pct_welfare": "non_invariant",
}


def _standard_element(theta):
    e = theta.dists["eps"]
    return (-e.location / e.scale, 1.0 / e.scale)


def _median_iqr_element(theta):
    e = theta.dists["eps"]
    med = e.ppf(0.5)
    iqr = e.ppf(0.75) - e.ppf(0.25)
    return (-med / iqr, 1.0 / iqr)


def normalizations():
    fam = binary_affine_family()
    return {
        "standard_error": section_from_element(
            "standard_error", fam, lambda t: fam.element(*_standard_element(t)),
            "error law has location 0 and scale 1",
        ),
        "median_iqr": section_from_element(
            "median_iqr", fam, lambda t: fam.element(*_median_iqr_element(t)),
            "error median 0 and interquartile range 1",
        ),
    }


def orbit_invariant(theta):
    """Complete orbit invariant: coefficients in standardized error units."""
    e = theta.dists["eps"]
    m = _m(theta)
    return ((m.beta[0] - e.location) / e.scale,) + tuple(b / e.scale for b in m.beta[1:])


def base_points():
    """Five (point, context) fixtures with d = 3."""
    specs = [
        ((0.2, 0.3, -0.5), DistHandle("logistic")),
        ((-1.0, 1.3, 0.4), DistHandle("normal")),
        ((0.5, -1.2, 2.0), DistHandle("logistic", 0.1, 1.7)),
        ((1.5, 0.1, -0.7), DistHandle("normal", -0.4, 0.6)),
        ((-0.3, 2.5, 1.1), DistHandle("cauchy", 0.2, 1.3)),
    ]
    out = []
    for beta, dist in specs:
        ctx = {"x": [1.0, 1.0, 0.5], "x_prime": [1.0, 2.0, 0.5], "j": 2, "k": 3}
        out.append((BinaryChoiceModel(beta, dist).to_point(), ctx))
    return out

"""Dyadic network formation ``D_ij = 1{w(x_i, x_j) + A_i + A_j >= U_ij}``.

The homophily function lives on a finite covariate grid and is stored as
coordinates ``w_k_l`` (``k <= l``, 0-based grid indices); fixed effects are
``A1..An`` and the shock law is the distribution ``U``.  The family has
three parameters ``(a, b, c)``: ``A -> cA + a``, ``w -> cw + b`` and
``U -> cU + 2a + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..audit import Counterfactual, Normalization
from ..distributions import DistHandle
from ..errors import DegenerateQuantiles, OffGrid, ZeroDenominator
from ..quotient import AffineRule, ParamPoint, affine_family, apply


def w_name(k: int, l: int) -> str:
    k, l = sorted((int(k), int(l)))
    return f"w_{k}_{l}"


@dataclass(frozen=True)
class NetworkModel:
    w_vals: Dict[Tuple[int, int], float]
    A: tuple
    errdist: DistHandle = DistHandle("logistic")
    alpha_q: float = 0.25
    x: Optional[tuple] = None  # grid index of each individual
    ref: int = 0  # grid index of the reference covariate
    x_grid: tuple = field(default=())

    def __post_init__(self):
        w = {}
        for (k, l), v in self.w_vals.items():
            key = tuple(sorted((int(k), int(l))))
            if key in w and w[key] != float(v):
                raise ValueError(f"w is not symmetric at {key}")
            w[key] = float(v)
        object.__setattr__(self, "w_vals", w)
        object.__setattr__(self, "A", tuple(float(a) for a in self.A))
        if self.x is not None:
            object.__setattr__(self, "x", tuple(int(v) for v in self.x))
            if len(self.x) != len(self.A):
                raise ValueError("x must assign a grid index to every individual")
        if not 0.0 < self.alpha_q < 0.5:
            raise ValueError("alpha_q must lie in (0, 0.5)")

    def w(self, k, l) -> float:
        try:
            return self.w_vals[tuple(sorted((int(k), int(l))))]
        except KeyError:
            raise OffGrid(f"({k}, {l}) is not on the covariate grid") from None

    def to_point(self) -> ParamPoint:
        coords = {f"A{i + 1}": a for i, a in enumerate(self.A)}
        coords.update({w_name(k, l): v for (k, l), v in sorted(self.w_vals.items())})
        return ParamPoint(coords, {"U": self.errdist})

    def with_point(self, theta: ParamPoint) -> "NetworkModel":
        n = len(self.A)
        w = {key: theta.coords[w_name(*key)] for key in self.w_vals}
        A = tuple(theta.coords[f"A{i + 1}"] for i in range(n))
        return NetworkModel(w, A, theta.dists["U"], self.alpha_q, self.x, self.ref, self.x_grid)


def network_affine_family():
    ref = example_model().to_point()
    return affine_family(
        "network-affine",
        scales=("c",),
        locations={"a": "c", "b": "c"},
        rules=(
            AffineRule("A*", "c", (("a", 1.0),)),
            AffineRule("w_*", "c", (("b", 1.0),)),
            AffineRule("U*", "c", (("a", 2.0), ("b", 1.0))),
        ),
        preserves={"iid-errors", "cross-sectional-sampling", "cdf-monotone", "w-symmetry"},
        requires=("U",),
        reference_point=ref,
        param_order=("a", "b", "c"),
    )


def parametric_network_family():
    """Reduced family for ``w(x, x') = |x - x'|' beta``: ``w`` has no free location.

    Only the fixed effects and the shock law shift; the homophily
    coefficients (coordinates ``beta*``) rescale with ``c``.
    """
    return affine_family(
        "network-parametric",
        scales=("c",),
        locations={"a": "c"},
        rules=(
            AffineRule("A*", "c", (("a", 1.0),)),
            AffineRule("beta*", "c"),
            AffineRule("U*", "c", (("a", 2.0),)),
        ),
        preserves={"iid-errors", "cross-sectional-sampling", "cdf-monotone", "w-symmetry"},
        requires=("U",),
        param_order=("a", "c"),
    )


def _link_index(theta, i, j, x):
    if i == j:
        raise ValueError("a link needs two distinct individuals")
    name = w_name(x[i - 1], x[j - 1])
    if name not in theta.coords:
        raise OffGrid(f"({x[i - 1]}, {x[j - 1]}) is not on the covariate grid")
    return theta.coords[name] + theta.coords[f"A{i}"] + theta.coords[f"A{j}"]


def network_link_prob(m: NetworkModel, i: int, j: int) -> float:
    """P(D_ij = 1) for 1-based individuals ``i != j``."""
    return m.errdist.cdf(_link_index(m.to_point(), i, j, m.x))


def fixed_effect_ranking(m: NetworkModel) -> tuple:
    """1-based indices of individuals ordered by fixed effect (stable on ties)."""
    return tuple(int(k) + 1 for k in np.argsort(np.asarray(m.A), kind="stable"))


def two_quantile_normalize(m: NetworkModel, alpha_q: Optional[float] = None) -> NetworkModel:
    """Orbit representative with F^-1(alpha) = 0, F^-1(1-alpha) = 1 and w(ref, ref) = 0."""
    alpha_q = m.alpha_q if alpha_q is None else alpha_q
    if not 0.0 < alpha_q < 0.5:
        raise ValueError("alpha_q must lie in (0, 0.5)")
    fam = network_affine_family()
    theta = m.to_point()
    g = fam.element(*two_quantile_element(theta, alpha_q, m.ref))
    out = m.with_point(apply(fam, g, theta))
    return NetworkModel(out.w_vals, out.A, out.errdist, alpha_q, m.x, m.ref, m.x_grid)


def two_quantile_element(theta: ParamPoint, alpha_q: float, ref: int = 0):
    F = theta.dists["U"]
    lo, hi = F.ppf(alpha_q), F.ppf(1.0 - alpha_q)
    if not hi > lo:
        raise DegenerateQuantiles(f"F^-1({alpha_q}) equals F^-1({1 - alpha_q})")
    c = 1.0 / (hi - lo)
    b = -c * theta.coords[w_name(ref, ref)]
    a = -(c * lo + b) / 2.0
    return a, b, c


def two_quantile_normalization(alpha_q: float = 0.25, ref: int = 0) -> Normalization:
    fam = network_affine_family()

    def section(theta):
        return apply(fam, fam.element(*two_quantile_element(theta, alpha_q, ref)), theta)

    return Normalization("two_quantile", section, fam.family_id, "F^-1(alpha)=0, IQR-type range 1, w(ref,ref)=0")


# -- counterfactuals -------------------------------------------------------


def _pair(theta, key):
    return theta.coords[w_name(*key)]


def _ranking_code(theta, ctx):
    n = sum(1 for k in theta.coords if k.startswith("A"))
    A = [theta.coords[f"A{i + 1}"] for i in range(n)]
    perm = np.argsort(np.asarray(A), kind="stable")
    return float(sum(int(p) * (n ** pos) for pos, p in enumerate(perm)))


def _w_shape(theta, ctx):
    base = _pair(theta, ctx["pair_ref"])
    denom = _pair(theta, ctx["pair_unit"]) - base
    if denom == 0.0:
        raise ZeroDenominator("reference homophily contrast is zero")
    return (_pair(theta, ctx["pair"]) - base) / denom


def _w_pct(theta, ctx):
    w0 = _pair(theta, ctx["pair"])
    if w0 == 0.0:
        raise ZeroDenominator("baseline homophily value is zero")
    return (_pair(theta, ctx["pair_to"]) - w0) / w0


COUNTERFACTUALS = {
    "link_prob": Counterfactual(
        "link_prob",
        lambda t, c: t.dists["U"].cdf(_link_index(t, int(c["i"]), int(c["j"]), [int(v) for v in c["x"]])),
        ("i", "j", "x"),
    ),
    "fe_ranking": Counterfactual("fe_ranking", _ranking_code),
    "w_shape": Counterfactual("w_shape", _w_shape, ("pair", "pair_ref", "pair_unit")),
    "fe_level": Counterfactual("fe_level", lambda t, c: t.coords[f"A{int(c['i'])}"], ("i",)),
    "w_level": Counterfactual("w_level", lambda t, c: _pair(t, c["pair"]), ("pair",)),
    "w_pct": Counterfactual("w_pct", _w_pct, ("pair", "pair_to")),
}

EXPECTED = {
    "link_prob": "invariant",
    "fe_ranking": "invariant",
    "w_shape": "invariant",
    "fe_level": "non_invariant",
    "w_level": "non_invariant",
    "w_pct": "non_invariant",
}


def normalizations():
    return {"two_quantile": two_quantile_normalization(0.25, 0)}


def orbit_invariant(theta):
    U = theta.dists["U"]
    s = U.scale
    A = sorted((k, v) for k, v in theta.coords.items() if k.startswith("A"))
    W = sorted((k, v) for k, v in theta.coords.items() if k.startswith("w_"))
    a1 = A[0][1]
    w0 = theta.coords["w_0_0"]
    return (
        tuple((v - a1) / s for _, v in A)
        + tuple((v - w0) / s for _, v in W)
        + ((2.0 * a1 + w0 - U.location) / s,)
    )


def _homophily(grid, slope, level):
    w = {}
    for k in range(len(grid)):
        for l in range(k, len(grid)):
            w[(k, l)] = level - slope * abs(grid[k] - grid[l])
    return w


def example_model() -> NetworkModel:
    grid = (0.0, 1.0, 2.0)
    return NetworkModel(_homophily(grid, 0.4, 0.3), (0.1, 0.2, -0.3, 0.5), DistHandle("logistic"),
                        0.25, (0, 1, 2, 1), 0, grid)


def base_models():
    grid = (0.0, 1.0, 2.0)
    return [
        example_model(),
        NetworkModel(_homophily(grid, 0.9, -0.2), (1.0, -0.4, 0.3, 0.0), DistHandle("normal", 0.5, 2.0),
                     0.25, (2, 0, 1, 1), 0, grid),
        NetworkModel(_homophily(grid, 0.2, 1.1), (-0.7, 0.6, 0.25, 1.3), DistHandle("cauchy", -0.3, 0.7),
                     0.25, (1, 1, 0, 2), 0, grid),
        NetworkModel(_homophily(grid, 1.5, 0.4), (0.05, 0.15, 0.95, -1.2), DistHandle("uniform", -1.0, 3.0),
                     0.25, (0, 2, 2, 1), 0, grid),
        NetworkModel(_homophily(grid, 0.6, -0.8), (2.0, 1.0, -1.0, 0.3), DistHandle("logistic", 1.2, 0.4),
                     0.25, (1, 0, 2, 0), 0, grid),
    ]


def base_points():
    ctx = {"i": 1, "j": 2, "pair": [0, 1], "pair_ref": [0, 0], "pair_unit": [0, 2], "pair_to": [0, 2]}
    out = []
    for m in base_models():
        c = dict(ctx, x=list(m.x))
        out.append((m.to_point(), c))
    return out


def first_unit_difference(theta: ParamPoint) -> ParamPoint:
    """``A_i -> A_i - A_1`` and ``U_ij -> U_ij - 2 A_1``: observationally, not modeling, equivalent."""
    a1 = theta.coords["A1"]
    coords = {}
    for name, v in theta.coords.items():
        if name.startswith("A"):
            coords[name] = v - a1
        elif name.startswith("U_"):
            coords[name] = v - 2.0 * a1
        else:
            coords[name] = v
    return ParamPoint(coords, theta.dists)

"""Space of unknowns, transformation families and orbit structure.

A :class:`ParamPoint` is one configuration of the unknowns: named real
coordinates plus distribution handles.  A :class:`TransformFamily` is a
parameterized group acting on points; ``compose(g1, g2)`` means "apply
``g2`` first, then ``g1``".
"""

from __future__ import annotations

import fnmatch
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Mapping, Optional, Sequence, Tuple

import numpy as np

from .distributions import DistHandle
from .errors import ConstraintViolated, NonFinite, UnknownName, UnsupportedTag

SCALE_FLOOR = 1e-12
LOCATION_RANGE = 3.0
LOG_SCALE_RANGE = 2.0


@dataclass(frozen=True, eq=False)
class ParamPoint:
    coords: Mapping[str, float] = field(default_factory=dict)
    dists: Mapping[str, DistHandle] = field(default_factory=dict)

    def __post_init__(self):
        coords = {str(k): float(v) for k, v in self.coords.items()}
        dists = dict(self.dists)
        for name, value in coords.items():
            if not math.isfinite(value):
                raise NonFinite(f"coordinate {name!r} is not finite ({value})")
        clash = set(coords) & set(dists)
        if clash:
            raise ValueError(f"names used for both coordinates and distributions: {sorted(clash)}")
        for name, d in dists.items():
            if not isinstance(d, DistHandle):
                raise TypeError(f"{name!r} must be a DistHandle")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "dists", dists)

    def __getitem__(self, name):
        try:
            return self.coords[name]
        except KeyError:
            pass
        try:
            return self.dists[name]
        except KeyError:
            raise UnknownName(name) from None

    def __contains__(self, name):
        return name in self.coords or name in self.dists

    def __eq__(self, other):
        if not isinstance(other, ParamPoint):
            return NotImplemented
        return self.coords == other.coords and self.dists == other.dists

    def names(self):
        return list(self.coords) + list(self.dists)

    def replace(self, coords=None, dists=None):
        new_coords = dict(self.coords)
        new_coords.update(coords or {})
        new_dists = dict(self.dists)
        new_dists.update(dists or {})
        return ParamPoint(new_coords, new_dists)

    def flat(self) -> Dict[str, float]:
        """Real-valued view: coordinates plus ``<dist>_loc`` / ``<dist>_scale``."""
        out = dict(self.coords)
        for name, d in self.dists.items():
            out[f"{name}_loc"] = d.location
            out[f"{name}_scale"] = d.scale
        return out

    def magnitude(self) -> float:
        vals = list(self.flat().values())
        return max((abs(v) for v in vals), default=0.0)


def point_distance(p: ParamPoint, q: ParamPoint) -> float:
    """Max-abs difference over coordinates and distribution location/scale."""
    fp, fq = p.flat(), q.flat()
    if fp.keys() != fq.keys():
        raise UnknownName(f"points have different names: {sorted(set(fp) ^ set(fq))}")
    for name, d in p.dists.items():
        if d.family != q.dists[name].family or d.grid != q.dists[name].grid:
            return math.inf
    return max((abs(fp[k] - fq[k]) for k in fp), default=0.0)


@dataclass(frozen=True)
class GroupElement:
    family_id: str
    params: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))


def _default_constraint(kinds):
    def constraint(params):
        if len(params) != len(kinds):
            return False
        for kind, x in zip(kinds, params):
            if not math.isfinite(x):
                return False
            if kind == "scale" and x < SCALE_FLOOR:
                return False
        return True

    return constraint


@dataclass(frozen=True, eq=False)
class TransformFamily:
    family_id: str
    param_names: Tuple[str, ...]
    param_kinds: Tuple[str, ...]
    action: Callable[[Tuple[float, ...], ParamPoint], ParamPoint]
    compose_law: Callable[[Tuple[float, ...], Tuple[float, ...]], Tuple[float, ...]]
    inverse_law: Callable[[Tuple[float, ...]], Tuple[float, ...]]
    identity_params: Tuple[float, ...]
    preserves: FrozenSet[str] = frozenset()
    constraint: Optional[Callable[[Tuple[float, ...]], bool]] = None
    requires: Tuple[str, ...] = ()
    reference_point: Optional[ParamPoint] = None

    def __post_init__(self):
        if self.constraint is None:
            object.__setattr__(self, "constraint", _default_constraint(self.param_kinds))
        if not self.constraint(tuple(self.identity_params)):
            raise ConstraintViolated(f"{self.family_id}: identity violates the constraint")

    @property
    def param_dim(self) -> int:
        return len(self.param_kinds)

    def element(self, *params) -> GroupElement:
        g = GroupElement(self.family_id, params)
        self._check(g)
        return g

    def identity(self) -> GroupElement:
        return GroupElement(self.family_id, self.identity_params)

    def _check(self, g: GroupElement):
        if g.family_id != self.family_id:
            raise ConstraintViolated(
                f"element of family {g.family_id!r} used with family {self.family_id!r}"
            )
        if not self.constraint(g.params):
            raise ConstraintViolated(f"{self.family_id}: parameters {g.params} outside the family domain")


# -- coordinatewise affine families ------------------------------------------


@dataclass(frozen=True)
class AffineRule:
    """``x -> scale * x + sum(weight * location)`` for names matching ``pattern``."""

    pattern: str
    scale: Optional[str] = None
    locations: Tuple[Tuple[str, float], ...] = ()


def affine_family(
    family_id: str,
    scales: Sequence[str],
    locations: Mapping[str, str],
    rules: Sequence[AffineRule],
    *,
    preserves=(),
    requires=(),
    reference_point=None,
    param_order: Optional[Sequence[str]] = None,
) -> TransformFamily:
    """Build a coordinatewise affine group action.

    ``locations`` maps each location slot to the scale slot that owns it.
    A coordinate scaled by slot ``s`` may only be shifted by locations
    owned by ``s``; that is what makes the composition law close.  Rules
    are matched in order with shell-style patterns; unmatched names are
    left alone.
    """
    names = tuple(param_order) if param_order else tuple(locations) + tuple(scales)
    if set(names) != set(scales) | set(locations) or len(names) != len(scales) + len(locations):
        raise ValueError("param_order must list every slot exactly once")
    for loc, owner in locations.items():
        if owner not in scales:
            raise ValueError(f"location {loc!r} owned by unknown scale {owner!r}")
    for rule in rules:
        if rule.scale is not None and rule.scale not in scales:
            raise ValueError(f"rule {rule.pattern!r} uses unknown scale {rule.scale!r}")
        for loc, _ in rule.locations:
            if loc not in locations:
                raise ValueError(f"rule {rule.pattern!r} uses unknown location {loc!r}")
            if locations[loc] != rule.scale:
                raise ValueError(
                    f"rule {rule.pattern!r}: location {loc!r} must be paired with scale {locations[loc]!r}"
                )

    index = {name: i for i, name in enumerate(names)}
    kinds = tuple("scale" if n in scales else "location" for n in names)
    loc_owner = {index[loc]: index[owner] for loc, owner in locations.items()}
    compiled: Dict[str, Optional[Tuple[Optional[int], Tuple[Tuple[int, float], ...]]]] = {}

    def rule_for(name):
        try:
            return compiled[name]
        except KeyError:
            pass
        found = None
        for rule in rules:
            if fnmatch.fnmatchcase(name, rule.pattern):
                found = (
                    None if rule.scale is None else index[rule.scale],
                    tuple((index[loc], float(w)) for loc, w in rule.locations),
                )
                break
        compiled[name] = found
        return found

    def action(params, theta):
        coords = {}
        for name, x in theta.coords.items():
            r = rule_for(name)
            if r is None or r[0] is None:
                coords[name] = x
            else:
                coords[name] = params[r[0]] * x + sum(w * params[i] for i, w in r[1])
        dists = {}
        for name, d in theta.dists.items():
            r = rule_for(name)
            if r is None or r[0] is None:
                dists[name] = d
            else:
                shift = sum(w * params[i] for i, w in r[1])
                dists[name] = d.affine(shift, params[r[0]])
        return ParamPoint(coords, dists)

    def compose_law(p1, p2):
        out = []
        for i, kind in enumerate(kinds):
            if kind == "scale":
                out.append(p1[i] * p2[i])
            else:
                out.append(p1[i] + p1[loc_owner[i]] * p2[i])
        return tuple(out)

    def inverse_law(p):
        out = []
        for i, kind in enumerate(kinds):
            if kind == "scale":
                out.append(1.0 / p[i])
            else:
                out.append(-p[i] / p[loc_owner[i]])
        return tuple(out)

    identity = tuple(1.0 if k == "scale" else 0.0 for k in kinds)
    return TransformFamily(
        family_id=family_id,
        param_names=names,
        param_kinds=kinds,
        action=action,
        compose_law=compose_law,
        inverse_law=inverse_law,
        identity_params=identity,
        preserves=frozenset(preserves),
        requires=tuple(requires),
        reference_point=reference_point,
    )


# -- operations --------------------------------------------------------------


def apply(family: TransformFamily, g: GroupElement, theta: ParamPoint) -> ParamPoint:
    family._check(g)
    for name in family.requires:
        if name not in theta:
            raise UnknownName(f"{family.family_id} acts on {name!r}, which the point lacks")
    if g.params == tuple(family.identity_params):
        return theta
    try:
        out = family.action(g.params, theta)
    except (OverflowError, ConstraintViolated) as exc:
        raise NonFinite(f"{family.family_id}: action overflowed at {g.params}") from exc
    return out


def compose(family: TransformFamily, g1: GroupElement, g2: GroupElement) -> GroupElement:
    family._check(g1)
    family._check(g2)
    g = GroupElement(family.family_id, family.compose_law(g1.params, g2.params))
    family._check(g)
    return g


def invert(family: TransformFamily, g: GroupElement) -> GroupElement:
    family._check(g)
    with np.errstate(over="raise", divide="raise"):
        try:
            params = family.inverse_law(g.params)
        except (ZeroDivisionError, OverflowError, FloatingPointError) as exc:
            raise ConstraintViolated(f"{family.family_id}: cannot invert {g.params}") from exc
    inv = GroupElement(family.family_id, params)
    family._check(inv)
    return inv


def sample_group(family: TransformFamily, rng_seed: int, n: int):
    """Draw ``n`` elements: locations ~ U[-3, 3], log-scales ~ U[-2, 2]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng_seed)
    u = rng.uniform(-1.0, 1.0, size=(n, family.param_dim))
    out = []
    for row in u:
        params = tuple(
            math.exp(LOG_SCALE_RANGE * x) if kind == "scale" else LOCATION_RANGE * x
            for kind, x in zip(family.param_kinds, row)
        )
        out.append(GroupElement(family.family_id, params))
    return out


@dataclass
class AxiomReport:
    family_id: str
    n: int
    tol: float
    seed: int
    residuals: Dict[str, float]

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    @property
    def failures(self):
        return sorted(k for k, r in self.residuals.items() if not r <= self.tol)


def _param_residual(p, q):
    scale = 1.0 + max(max(abs(x) for x in p), max(abs(x) for x in q))
    return max(abs(a - b) for a, b in zip(p, q)) / scale


def _point_residual(p, q):
    return point_distance(p, q) / (1.0 + max(p.magnitude(), q.magnitude()))


def check_group_axioms(family: TransformFamily, rng_seed: int, n: int, tol: float, theta=None) -> AxiomReport:
    """Max residuals of the group/action laws over ``n`` sampled triples.

    Failures are reported, never raised.  ``theta`` defaults to the
    family's reference point.
    """
    theta = theta if theta is not None else family.reference_point
    if theta is None:
        raise ValueError(f"{family.family_id} has no reference point; pass theta")
    elems = sample_group(family, rng_seed, 3 * n)
    ident = family.identity_params
    res = dict.fromkeys(("identity", "associativity", "inverse", "action_consistency"), 0.0)

    def law(fn, *args):
        try:
            out = fn(*args)
        except Exception:  # a broken law is a failed axiom, not a crash
            return None
        return out

    def bump(key, value):
        if value is None or not math.isfinite(value):
            value = math.inf
        res[key] = max(res[key], value)

    bump("identity", _point_residual(family.action(ident, theta), theta))
    for k in range(n):
        g1, g2, g3 = (e.params for e in elems[3 * k : 3 * k + 3])
        c12 = law(family.compose_law, g1, g2)
        c23 = law(family.compose_law, g2, g3)
        left = law(family.compose_law, c12, g3) if c12 is not None else None
        right = law(family.compose_law, g1, c23) if c23 is not None else None
        bump("associativity", _param_residual(left, right) if left and right else None)

        bump("identity", _param_residual(law(family.compose_law, g1, ident) or (math.inf,), g1))
        bump("identity", _param_residual(law(family.compose_law, ident, g1) or (math.inf,), g1))

        inv = law(family.inverse_law, g1)
        if inv is None or not family.constraint(tuple(inv)):
            bump("inverse", None)
        else:
            bump("inverse", _param_residual(law(family.compose_law, g1, inv) or (math.inf,), ident))
            bump("inverse", _param_residual(law(family.compose_law, inv, g1) or (math.inf,), ident))
            there = family.action(g1, theta)
            bump("inverse", _point_residual(family.action(inv, there), theta))

        if c12 is None or not family.constraint(tuple(c12)):
            bump("action_consistency", None)
        else:
            one_shot = family.action(c12, theta)
            two_step = family.action(g1, family.action(g2, theta))
            bump("action_consistency", _point_residual(one_shot, two_step))
    return AxiomReport(family.family_id, n, tol, rng_seed, res)


# -- assumption preservation -------------------------------------------------

SUPPORTED_TAGS = ("iid-errors", "cross-sectional-sampling")


@dataclass
class PreservationVerdict:
    tag: str
    status: str  # "violated" | "consistent"
    threshold: float
    reps: int
    seed: int
    correlations: Dict[Tuple[str, str], float]
    degenerate: Tuple[str, ...] = ()

    @property
    def max_abs_corr(self) -> float:
        vals = [abs(c) for c in self.correlations.values() if math.isfinite(c)]
        return max(vals, default=0.0)


def simulated_units(rng, reps: int, n_units: int = 10, n_pair_units: int = 5):
    """Unit-level unknowns: ``A1..An`` and pairwise shocks ``U_i_j`` (i < j)."""
    a = rng.standard_normal(size=(reps, n_units))
    pairs = [(i, j) for i in range(1, n_pair_units + 1) for j in range(i + 1, n_pair_units + 1)]
    u = rng.standard_normal(size=(reps, len(pairs)))
    names_a = [f"A{i}" for i in range(1, n_units + 1)]
    names_u = [f"U_{i}_{j}" for i, j in pairs]
    return names_a, a, names_u, u


def check_assumption_preservation(
    transform: Callable[[ParamPoint], ParamPoint], tag: str, rng_seed: int, reps: int = 10_000
) -> PreservationVerdict:
    """Monte Carlo check that ``transform`` keeps unit-level unknowns independent.

    ``cross-sectional-sampling`` looks at the fixed effects ``A1..A10``;
    ``iid-errors`` at the pairwise shocks ``U_i_j``.  Both are simulated iid
    standard normal, pushed through ``transform``, and the pairwise
    correlations of the outputs across replications are compared against
    ``4 / sqrt(reps)``.
    """
    if tag not in SUPPORTED_TAGS:
        raise UnsupportedTag(f"unsupported assumption tag {tag!r}; expected one of {SUPPORTED_TAGS}")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    rng = np.random.default_rng(rng_seed)
    names_a, a, names_u, u = simulated_units(rng, reps)
    watched = names_a if tag == "cross-sectional-sampling" else names_u
    out = np.empty((reps, len(watched)))
    for r in range(reps):
        coords = dict(zip(names_a, a[r]))
        coords.update(zip(names_u, u[r]))
        moved = transform(ParamPoint(coords))
        out[r] = [moved.coords[name] for name in watched]

    sd = out.std(axis=0)
    degenerate = tuple(name for name, s in zip(watched, sd) if s == 0.0)
    live = [k for k, s in enumerate(sd) if s > 0.0]
    corr = np.corrcoef(out[:, live], rowvar=False) if len(live) > 1 else np.ones((1, 1))
    correlations = {}
    for x in range(len(live)):
        for y in range(x + 1, len(live)):
            correlations[(watched[live[x]], watched[live[y]])] = float(corr[x, y])
    threshold = 4.0 / math.sqrt(reps)
    violated = any(abs(c) > threshold for c in correlations.values())
    return PreservationVerdict(
        tag=tag,
        status="violated" if violated else "consistent",
        threshold=threshold,
        reps=reps,
        seed=rng_seed,
        correlations=correlations,
        degenerate=degenerate,
    )

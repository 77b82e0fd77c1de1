"""Orbit-constancy audits for counterfactual functionals.

A counterfactual is normalization-free when it is constant along every
orbit of the transformation family.  :func:`invariance_audit` samples the
orbit through one point and reports either ``invariant`` or
``non_invariant`` together with the worst witness found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import EvalFailed, EvaluationDomainError, MissingContext
from .quotient import (
    GroupElement,
    ParamPoint,
    TransformFamily,
    apply,
    point_distance,
    sample_group,
)

INVARIANT = "invariant"
NON_INVARIANT = "non_invariant"

#: deviations above this multiple of ``tol`` are confidently structural
CONFIDENCE_FACTOR = 100.0


@dataclass(frozen=True)
class Counterfactual:
    name: str
    eval: Callable[[ParamPoint, Mapping], float]
    context_schema: Tuple[str, ...] = ()
    description: str = ""

    def __call__(self, theta, ctx=None):
        ctx = ctx or {}
        missing = [k for k in self.context_schema if k not in ctx]
        if missing:
            raise MissingContext(f"{self.name}: context lacks {missing}")
        return float(self.eval(theta, ctx))


@dataclass(frozen=True)
class Normalization:
    name: str
    section: Callable[[ParamPoint], ParamPoint]
    family_id: str
    description: str = ""

    def __call__(self, theta):
        return self.section(theta)


def section_from_element(name, family, element_of, description=""):
    """Normalization whose section is ``apply(element_of(theta), theta)``."""

    def section(theta):
        return apply(family, element_of(theta), theta)

    return Normalization(name, section, family.family_id, description)


@dataclass(frozen=True)
class Witness:
    element: GroupElement
    value_at_theta: float
    value_at_transformed: float

    @property
    def rel_deviation(self) -> float:
        return rel_deviation(self.value_at_theta, self.value_at_transformed)


@dataclass(frozen=True)
class AuditVerdict:
    counterfactual: str
    family_id: str
    status: str
    max_rel_deviation: float
    witness: Optional[Witness]
    n_sampled: int
    tol: float
    seed: int
    value: float
    low_confidence: bool = False

    @property
    def invariant(self) -> bool:
        return self.status == INVARIANT


def rel_deviation(q0: float, q1: float) -> float:
    return abs(q1 - q0) / (1.0 + abs(q0))


def _evaluate(q, theta, ctx, g=None):
    try:
        value = q(theta, ctx)
    except EvaluationDomainError as exc:
        where = "at the base point" if g is None else f"under {g.params}"
        raise EvalFailed(f"{q.name} undefined {where}: {exc}", element=g, cause=exc) from exc
    if not math.isfinite(value):
        raise EvalFailed(f"{q.name} is not finite under {None if g is None else g.params}", element=g)
    return value


def invariance_audit(
    q: Counterfactual,
    family: TransformFamily,
    theta: ParamPoint,
    ctx: Optional[Mapping] = None,
    n: int = 1000,
    tol: float = 1e-9,
    seed: int = 0,
) -> AuditVerdict:
    """Evaluate ``q`` along ``n`` sampled orbit points of ``theta``.

    Invariant iff every relative deviation ``|q(g.theta) - q(theta)| /
    (1 + |q(theta)|)`` is at most ``tol``.  Deviations in ``(tol, 100*tol]``
    still count as non-invariant but are flagged low-confidence.
    """
    ctx = dict(ctx or {})
    base = _evaluate(q, theta, ctx)
    worst = 0.0
    worst_g = None
    worst_val = base
    for g in sample_group(family, seed, n):
        value = _evaluate(q, apply(family, g, theta), ctx, g)
        dev = rel_deviation(base, value)
        # strict '>' keeps the earliest sample on ties, independent of tol
        if dev > worst:
            worst, worst_g, worst_val = dev, g, value
    if worst <= tol:
        return AuditVerdict(q.name, family.family_id, INVARIANT, worst, None, n, tol, seed, base)
    return AuditVerdict(
        q.name,
        family.family_id,
        NON_INVARIANT,
        worst,
        Witness(worst_g, base, worst_val),
        n,
        tol,
        seed,
        base,
        low_confidence=worst <= CONFIDENCE_FACTOR * tol,
    )


# -- normalizations ---------------------------------------------------------


@dataclass
class NormCheckReport:
    normalization: str
    collapse_residual: float
    idempotence_residual: float
    separation_min_gap: float
    separation_pairs: int
    tol: float
    n: int
    seed: int
    details: Dict[str, object] = field(default_factory=dict)

    @property
    def collapse(self) -> bool:
        return self.collapse_residual <= self.tol

    @property
    def idempotence(self) -> bool:
        return self.idempotence_residual <= self.tol

    @property
    def separation(self) -> bool:
        return self.separation_pairs == 0 or self.separation_min_gap > self.tol

    @property
    def passed(self) -> bool:
        return self.collapse and self.idempotence and self.separation


def _rel_point_gap(p, q):
    if p.flat().keys() != q.flat().keys():
        return math.inf  # different coordinate sets can never share an orbit
    return point_distance(p, q) / (1.0 + max(p.magnitude(), q.magnitude()))


def normalization_check(
    nm: Normalization,
    family: TransformFamily,
    thetas: Sequence[ParamPoint],
    n: int = 200,
    tol: float = 1e-9,
    seed: int = 0,
    invariant: Optional[Callable[[ParamPoint], Sequence[float]]] = None,
) -> NormCheckReport:
    """Check within-class collapse, idempotence and across-class separation.

    Separation is only testable on the supplied points: every pair whose
    orbit invariants differ (by more than ``tol``) must have sections that
    differ by more than ``tol``.  Without an ``invariant`` function no pair
    is assumed to lie on distinct orbits.
    """
    if not thetas:
        raise ValueError("thetas must be nonempty")
    collapse = 0.0
    idem = 0.0
    elems = sample_group(family, seed, n)
    sections = []
    for theta in thetas:
        s = nm(theta)
        sections.append(s)
        idem = max(idem, _rel_point_gap(nm(s), s))
        for g in elems:
            collapse = max(collapse, _rel_point_gap(nm(apply(family, g, theta)), s))

    gap = math.inf
    pairs = 0
    if invariant is not None:
        invs = [tuple(invariant(t)) for t in thetas]
        for i in range(len(thetas)):
            for j in range(i + 1, len(thetas)):
                diff = max(abs(a - b) for a, b in zip(invs[i], invs[j]))
                if diff > tol:
                    pairs += 1
                    gap = min(gap, _rel_point_gap(sections[i], sections[j]))
    return NormCheckReport(nm.name, collapse, idem, gap, pairs, tol, n, seed)


# -- identification witnesses ---------------------------------------------

WITNESS_STATEMENT = "any valid identified set must contain both {q0!r} and {q1!r}"


@dataclass(frozen=True)
class WitnessPair:
    counterfactual: str
    theta: ParamPoint
    transformed: ParamPoint
    element: GroupElement
    value_at_theta: float
    value_at_transformed: float
    statement: str


def identification_witness(q, family, theta, ctx=None, n=1000, tol=1e-9, seed=0) -> Optional[WitnessPair]:
    verdict = invariance_audit(q, family, theta, ctx, n, tol, seed)
    if verdict.invariant:
        return None
    w = verdict.witness
    return WitnessPair(
        q.name,
        theta,
        apply(family, w.element, theta),
        w.element,
        w.value_at_theta,
        w.value_at_transformed,
        WITNESS_STATEMENT.format(q0=w.value_at_theta, q1=w.value_at_transformed),
    )


# -- normalization is WLOG ---------------------------------------------------


@dataclass
class WlogReport:
    counterfactual: str
    normalization: str
    before: AuditVerdict
    after: AuditVerdict
    tol: float

    @property
    def status_agrees(self) -> bool:
        return self.before.status == self.after.status

    @property
    def value_gap(self) -> float:
        return rel_deviation(self.before.value, self.after.value)

    @property
    def passed(self) -> bool:
        if not self.status_agrees:
            return False
        if self.before.invariant:
            return self.value_gap <= self.tol
        return True


def wlog_equivalence_audit(q, family, nm: Normalization, theta, ctx=None, n=1000, tol=1e-9, seed=0) -> WlogReport:
    """Audit ``q`` from ``theta`` and from its normalized representative."""
    before = invariance_audit(q, family, theta, ctx, n, tol, seed)
    after = invariance_audit(q, family, nm(theta), ctx, n, tol, seed)
    return WlogReport(q.name, nm.name, before, after, tol)

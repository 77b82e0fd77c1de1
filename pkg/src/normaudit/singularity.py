"""Boundary singularities: fixed points, logs with zeros, non-unique limits.

The worked instance is ``m = log`` on ``Y = [0, inf)`` under the scaling
group ``y -> a y`` with cocycle ``rho(a) = log a`` and fixed point ``0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .audit import AuditVerdict, Counterfactual, invariance_audit
from .distributions import DistHandle
from .errors import DomainViolation, EvalFailed, EvaluationDomainError, TrivialCocycle
from .quotient import AffineRule, GroupElement, ParamPoint, TransformFamily, affine_family, apply, sample_group

TOL_LIMIT = 1e-3
DIVERGENCE = 1e12


def scaling_family() -> TransformFamily:
    """``y -> a y`` on every coordinate named ``y*``."""
    return affine_family(
        "scaling",
        scales=("a",),
        locations={},
        rules=(AffineRule("y*", "a"),),
        reference_point=ParamPoint({"y": 1.5, "y0": 0.0, "y1": 2.0}),
    )


def log_uniform_outcomes(rng, n, low=-5.0, high=5.0):
    return np.exp(rng.uniform(low, high, size=n))


@dataclass(frozen=True, eq=False)
class EquivariantSystem:
    m: Callable[[float], float]
    group: TransformFamily
    rho: Callable[[GroupElement], float]
    fixed_point: float = 0.0
    sample_y: Callable = log_uniform_outcomes
    name: str = ""

    def __post_init__(self):
        for g in sample_group(self.group, 0, 16):
            moved = self.act(g, self.fixed_point)
            if abs(moved - self.fixed_point) > 1e-12:
                raise ValueError(f"group does not fix {self.fixed_point}: {g.params} sends it to {moved}")

    def act(self, g: GroupElement, y: float) -> float:
        return apply(self.group, g, ParamPoint({"y": y})).coords["y"]

    def gap(self, g: GroupElement, y: float) -> float:
        """``|m(g.y) - rho(g) - m(y)|`` at one pair."""
        if y == self.fixed_point:
            raise DomainViolation(f"y = {y} is the fixed point")
        return abs(self.m(self.act(g, y)) - self.rho(g) - self.m(y))


def _log1p(y):
    return math.log1p(y)


def _arcsinh(y):
    return math.asinh(y)


def log_system(m=math.log, name="log") -> EquivariantSystem:
    return EquivariantSystem(m, scaling_family(), lambda g: math.log(g.params[0]), 0.0, name=name)


def equivariance_residual(sys: EquivariantSystem, n: int, seed: int) -> float:
    # outcome draws use a stream independent of the group sampler's
    rng = np.random.default_rng([seed, 1])
    ys = sys.sample_y(rng, n)
    worst = 0.0
    for g, y in zip(sample_group(sys.group, seed, n), ys):
        worst = max(worst, sys.gap(g, float(y)))
    return worst


def fixed_point_extension_test(sys: EquivariantSystem, candidate_value: float, g: GroupElement) -> float:
    """Inconsistency forced on any value assigned to ``m`` at the fixed point.

    With ``m(p) := candidate_value`` the equivariance identity at ``p``
    reads ``m(g.p) - m(p) = rho(g)``, but ``g.p = p`` makes the left side
    zero.  The returned residual is therefore ``|rho(g)|`` whatever the
    candidate is.
    """
    r = sys.rho(g)
    if r == 0.0:
        raise TrivialCocycle(f"rho{g.params} = 0; this element cannot witness the singularity")
    p = sys.fixed_point

    def extended(y):
        return candidate_value if y == p else sys.m(y)

    gp = sys.act(g, p)
    return abs((extended(gp) - extended(p)) - r)


# -- ATE under rescaling ----------------------------------------------------


@dataclass(frozen=True)
class OutcomeAtomDist:
    """Mixture of an atom at 0 (mass ``p_zero``) and a law on (0, inf)."""

    p_zero: float
    positive_part: DistHandle

    def __post_init__(self):
        if not 0.0 <= self.p_zero <= 1.0:
            raise ValueError("p_zero must lie in [0, 1]")

    def sample(self, rng_atom, rng_pos, n):
        at_zero = rng_atom.uniform(size=n) < self.p_zero
        pos = np.asarray(self.positive_part.sample(rng_pos, n), dtype=float)
        if np.any(pos[~at_zero] <= 0.0):
            raise DomainViolation("positive_part put mass on (-inf, 0]")
        return np.where(at_zero, 0.0, pos)


@dataclass
class ATEResult:
    ate_at_1: float
    ate_at_a: float
    shift: float
    shift_se: float
    expected_shift: float
    scale_a: float
    n_draws: int
    seed: int

    @property
    def z_score(self) -> float:
        gap = self.shift - self.expected_shift
        if self.shift_se == 0.0:
            return 0.0 if gap == 0.0 else math.inf
        return gap / self.shift_se

    @property
    def within_3se(self) -> bool:
        return abs(self.z_score) <= 3.0


def patched_log(y, value_at_zero):
    y = np.asarray(y, dtype=float)
    out = np.full(y.shape, float(value_at_zero))
    pos = y > 0
    out[pos] = np.log(y[pos])
    return out


def ate_scale_sensitivity(
    y0: OutcomeAtomDist,
    y1: OutcomeAtomDist,
    extension_value_at_zero: float,
    scale_a: float,
    n_draws: int,
    seed: int,
    chunk: int = 50_000,
) -> ATEResult:
    """Monte Carlo ATE of ``log`` (patched at 0) before and after ``y -> a y``.

    Both ATEs use the same draws, so the shift is estimated from per-draw
    differences.  Each random ingredient has its own seeded stream, so the
    draws do not depend on ``chunk``; only the summation order does.
    """
    if not scale_a > 0:
        raise ValueError("scale_a must be positive")
    streams = [np.random.default_rng([seed, k]) for k in range(4)]
    sums = np.zeros(3)
    sq_shift = 0.0
    done = 0
    while done < n_draws:
        k = min(chunk, n_draws - done)
        v0 = y0.sample(streams[0], streams[1], k)
        v1 = y1.sample(streams[2], streams[3], k)
        d1 = patched_log(v1, extension_value_at_zero) - patched_log(v0, extension_value_at_zero)
        da = patched_log(scale_a * v1, extension_value_at_zero) - patched_log(scale_a * v0, extension_value_at_zero)
        s = da - d1
        sums += (d1.sum(), da.sum(), s.sum())
        sq_shift += float(np.dot(s, s))
        done += k
    ate1, atea, shift = sums / n_draws
    var = max(0.0, (sq_shift - n_draws * shift * shift) / (n_draws - 1)) if n_draws > 1 else 0.0
    expected = (y0.p_zero - y1.p_zero) * math.log(scale_a)
    return ATEResult(float(ate1), float(atea), float(shift), math.sqrt(var / n_draws), expected, scale_a, n_draws, seed)


# -- non-unique limit test ---------------------------------------------------


@dataclass
class LimitVerdict:
    verdict: str  # "singular" | "extendable_candidate"
    tail1: float
    tail2: float
    gap: float
    diverged: bool
    horizon: int
    values1: List[float] = field(default_factory=list)
    values2: List[float] = field(default_factory=list)

    @property
    def singular(self) -> bool:
        return self.verdict == "singular"


def _term(seq, k):
    return seq(k) if callable(seq) else seq[k - 1]


def non_unique_limit_test(
    qbar: Callable,
    seq1: Union[Callable[[int], object], Sequence],
    seq2: Union[Callable[[int], object], Sequence],
    horizon: int,
    tol_limit: float = TOL_LIMIT,
    divergence: float = DIVERGENCE,
) -> LimitVerdict:
    """Compare ``qbar`` along two sequences approaching one boundary class.

    Sequences are indexed from 1.  The verdict is ``singular`` when the
    tail values differ by more than ``tol_limit`` or either sequence
    leaves ``[-divergence, divergence]``.
    """
    if horizon < 10:
        raise ValueError("horizon must be >= 10")
    vals = ([], [])
    diverged = False
    for which, seq in enumerate((seq1, seq2)):
        for k in range(1, horizon + 1):
            try:
                v = float(qbar(_term(seq, k)))
            except (EvaluationDomainError, ArithmeticError, ValueError) as exc:
                raise EvalFailed(f"qbar failed on sequence {which + 1} at index {k}: {exc}", element=k, cause=exc) from exc
            vals[which].append(v)
            if not math.isfinite(v) or abs(v) > divergence:
                diverged = True
    t1, t2 = vals[0][-1], vals[1][-1]
    gap = abs(t1 - t2) if math.isfinite(t1) and math.isfinite(t2) else math.inf
    verdict = "singular" if diverged or gap > tol_limit else "extendable_candidate"
    return LimitVerdict(verdict, t1, t2, gap, diverged, horizon, vals[0], vals[1])


@dataclass(frozen=True)
class AtomApproximation:
    """Y0 puts mass ``p_zero`` at ``atom`` and the rest at ``y0``; Y1 sits at ``y1``."""

    p_zero: float
    atom: float
    y0: float
    y1: float


def log_ate(d: AtomApproximation) -> float:
    """Exact E[log Y1 - log Y0] for an :class:`AtomApproximation`."""
    rest = (1.0 - d.p_zero) * math.log(d.y0) if d.p_zero < 1.0 else 0.0
    return math.log(d.y1) - d.p_zero * math.log(d.atom) - rest


def atom_sequence(p_zero, y0, y1, scale=1.0, base=10.0):
    """The ``scale``-rescaled pair with its zero atom approximated at ``base**-k``."""
    return lambda k: AtomApproximation(p_zero, base ** (-k), scale * y0, scale * y1)


# -- trilemma ------------------------------------------------------------------

CANDIDATES = ("log1p", "arcsinh", "log-with-patch")


def candidate_extension(name: str, patch_value: float = 0.0) -> Callable[[float], float]:
    if name == "log1p":
        return _log1p
    if name == "arcsinh":
        return _arcsinh
    if name == "log-with-patch":
        return lambda y: patch_value if y == 0.0 else math.log(y)
    raise ValueError(f"unknown candidate extension {name!r}; expected one of {CANDIDATES}")


@dataclass
class TrilemmaReport:
    candidate: str
    fidelity_gap: float
    fidelity: bool
    invariance: AuditVerdict
    regularity: LimitVerdict
    equivariance_gap_at_1_2: float
    tol: float

    @property
    def failed(self) -> List[str]:
        out = []
        if not self.fidelity:
            out.append("fidelity")
        if not self.invariance.invariant:
            out.append("invariance")
        if self.regularity.singular:
            out.append("regularity")
        return out

    @property
    def some_check_fails(self) -> bool:
        return bool(self.failed)


def trilemma(candidate: str, patch_value: float = 0.0, n: int = 1000, seed: int = 0,
             tol: float = 1e-9, horizon: int = 30) -> TrilemmaReport:
    """Run the fidelity, invariance and regularity checks on one extension of log."""
    ext = candidate_extension(candidate, patch_value)
    rng = np.random.default_rng([seed, 1])
    ys = log_uniform_outcomes(rng, n)
    fidelity_gap = max(abs(ext(float(y)) - math.log(float(y))) for y in ys)

    diff = Counterfactual(f"{candidate}-difference", lambda t, c: ext(t.coords["y1"]) - ext(t.coords["y0"]))
    boundary = ParamPoint({"y1": 2.0, "y0": 0.0})
    inv = invariance_audit(diff, scaling_family(), boundary, {}, n, tol, seed)

    reg = non_unique_limit_test(
        lambda y0: ext(2.0) - ext(y0),
        lambda k: 10.0 ** (-k),
        lambda k: 0.0,
        horizon,
    )
    sys = EquivariantSystem(ext, scaling_family(), lambda g: math.log(g.params[0]), 0.0, name=candidate)
    gap12 = sys.gap(scaling_family().element(2.0), 1.0)
    return TrilemmaReport(candidate, fidelity_gap, fidelity_gap <= tol, inv, reg, gap12, tol)

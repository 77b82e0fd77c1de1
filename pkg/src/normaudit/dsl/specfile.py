"""Sectioned plain-text model specs.

Example::

    [model]
    name = "binary-logit"

    [params]
    b1 = 0.2
    b2 = 0.3

    [dists]
    eps = "logistic(0, 1)"

    [transform]
    family = "binary"

    [context]
    x2 = 1.0

    [counterfactuals]
    me = "logistic_pdf((b1 + b2*x2 - eps_loc)/eps_scale)/eps_scale * b2"

    [expected]
    me = "invariant"

Instead of a builtin ``family`` the ``[transform]`` section may declare a
custom coordinatewise affine family: ``scales = "b"``, ``locations =
"a:b"`` (location slot ``a`` owned by scale ``b``), then one line per
coordinate or distribution, ``name = "<location combination>, <scale>"``
with ``-`` for "none", e.g. ``U = "2*a + b, c"`` or ``b2 = "-, b"``.

Expressions can read every parameter, every context value, and
``<dist>_loc`` / ``<dist>_scale`` for each declared distribution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..audit import Counterfactual
from ..distributions import FAMILIES, DistHandle
from ..errors import ExprSyntaxError, ResolutionError, SchemaError, SpecIOError
from ..quotient import AffineRule, ParamPoint, TransformFamily, affine_family
from .expr import Node, eval_expr, identifiers, parse_expr

SECTIONS = ("model", "params", "dists", "transform", "context", "counterfactuals", "expected")
REQUIRED = ("model", "params", "transform")
_HEADER = re.compile(r"^\[(?P<name>[A-Za-z_]+)\]$")
_ASSIGN = re.compile(r"^(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<value>.*)$")
_DIST = re.compile(r"^(?P<fam>[a-z_]+)\s*\((?P<args>.*)\)$")


@dataclass(frozen=True)
class SpecCounterfactual:
    name: str
    text: str
    ast: Node
    context_schema: Tuple[str, ...]
    line: int


@dataclass
class ModelSpec:
    name: str
    params: Dict[str, float]
    dists: Dict[str, DistHandle]
    transform: Dict[str, str]
    context: Dict[str, object]
    counterfactuals: Dict[str, SpecCounterfactual] = field(default_factory=dict)
    expected: Dict[str, str] = field(default_factory=dict)
    path: Optional[str] = None

    def point(self) -> ParamPoint:
        return ParamPoint(self.params, self.dists)

    def family(self) -> TransformFamily:
        return build_family(self.transform, self.point())

    def counterfactual(self, name: str) -> Counterfactual:
        cf = self.counterfactuals[name]

        def evaluate(theta, ctx):
            env = dict(theta.flat())
            env.update({k: v for k, v in ctx.items() if not isinstance(v, (list, tuple))})
            return eval_expr(cf.ast, env)

        return Counterfactual(cf.name, evaluate, cf.context_schema, cf.text)


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _number(value: str, where: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise SchemaError(f"{where}: expected a number, got {value!r}") from None


def _parse_dist(text: str, where: str) -> DistHandle:
    m = _DIST.match(text.strip())
    if not m or m.group("fam") not in FAMILIES:
        raise SchemaError(f"{where}: expected one of {FAMILIES} like 'logistic(0, 1)', got {text!r}")
    fam = m.group("fam")
    args = [a.strip() for a in m.group("args").split(",") if a.strip()]
    if fam == "quantile_grid":
        pairs = []
        for a in args:
            try:
                p, v = a.split(":")
                pairs.append((float(p), float(v)))
            except ValueError:
                raise SchemaError(f"{where}: grid entries look like '0.25:-1.0', got {a!r}") from None
        return DistHandle("quantile_grid", 0.0, 1.0, tuple(pairs))
    nums = [_number(a, where) for a in args]
    if len(nums) > 2:
        raise SchemaError(f"{where}: {fam} takes at most (location, scale)")
    return DistHandle(fam, *nums)


def _sections(text: str, source: str):
    out: Dict[str, List[Tuple[str, str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        h = _HEADER.match(line)
        if h:
            current = h.group("name")
            if current not in SECTIONS:
                raise SchemaError(f"{source}:{lineno}: unknown section [{current}]")
            if current in out:
                raise SchemaError(f"{source}:{lineno}: section [{current}] appears twice")
            out[current] = []
            continue
        a = _ASSIGN.match(line)
        if a is None:
            raise SchemaError(f"{source}:{lineno}: expected 'name = value', got {line!r}")
        if current is None:
            raise SchemaError(f"{source}:{lineno}: assignment outside any section")
        key = a.group("key")
        if any(k == key for k, _, _ in out[current]):
            raise SchemaError(f"{source}:{lineno}: {key!r} assigned twice in [{current}]")
        out[current].append((key, a.group("value"), lineno))
    return out


def parse_model_spec(text: str, source: str = "<spec>") -> ModelSpec:
    secs = _sections(text.replace("\r\n", "\n"), source)
    for name in REQUIRED:
        if name not in secs:
            raise SchemaError(f"{source}: missing section [{name}]")
    model = {k: _unquote(v) for k, v, _ in secs["model"]}
    if "name" not in model:
        raise SchemaError(f"{source}: [model] needs a name")
    params = {k: _number(_unquote(v), f"{source}:{ln}") for k, v, ln in secs["params"]}
    dists = {k: _parse_dist(_unquote(v), f"{source}:{ln}") for k, v, ln in secs.get("dists", [])}
    clash = set(params) & set(dists)
    if clash:
        raise SchemaError(f"{source}: names declared as both params and dists: {sorted(clash)}")
    context: Dict[str, object] = {}
    for k, v, ln in secs.get("context", []):
        raw = _unquote(v)
        parts = [p for p in raw.split(",") if p.strip()]
        vals = [_number(p.strip(), f"{source}:{ln}") for p in parts]
        context[k] = vals[0] if len(vals) == 1 and "," not in raw else vals
    transform = {k: _unquote(v) for k, v, _ in secs["transform"]}

    known = set(params) | set(context)
    for d in dists:
        known |= {f"{d}_loc", f"{d}_scale"}
    cfs = {}
    for k, v, ln in secs.get("counterfactuals", []):
        body = _unquote(v)
        try:
            ast = parse_expr(body)
        except ExprSyntaxError as exc:
            raise type(exc)(f"{source}:{ln}: counterfactual {k!r}: {exc.reason}", exc.offset) from exc
        for ident in sorted(identifiers(ast)):
            if ident not in known:
                raise ResolutionError(ident, f"{source}:{ln}, counterfactual {k!r}")
        schema = tuple(sorted(i for i in identifiers(ast) if i in context))
        cfs[k] = SpecCounterfactual(k, body, ast, schema, ln)
    expected = {}
    for k, v, ln in secs.get("expected", []):
        status = _unquote(v)
        if status not in ("invariant", "non_invariant"):
            raise SchemaError(f"{source}:{ln}: expected verdict must be invariant or non_invariant")
        if k not in cfs:
            raise ResolutionError(k, f"{source}:{ln}, [expected]")
        expected[k] = status
    spec = ModelSpec(model["name"], params, dists, transform, context, cfs, expected, source)
    # resolve the family now so a bad [transform] fails at load time
    build_family(transform, spec.point(), source)
    return spec


def load_model_spec(path) -> ModelSpec:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise SpecIOError(f"cannot read spec {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not valid UTF-8") from exc
    return parse_model_spec(text, str(path))


_TERM = re.compile(r"^(?:(?P<coef>[0-9.eE+-]+)\s*\*\s*)?(?P<slot>[A-Za-z_][A-Za-z0-9_]*)$")


def _location_terms(text, where):
    text = text.strip()
    if text in ("-", ""):
        return ()
    terms = []
    for part in text.split("+"):
        m = _TERM.match(part.strip())
        if m is None:
            raise SchemaError(f"{where}: cannot read location term {part.strip()!r}")
        terms.append((m.group("slot"), float(m.group("coef") or 1.0)))
    return tuple(terms)


def build_family(transform: Dict[str, str], point: ParamPoint, source: str = "<spec>") -> TransformFamily:
    from ..catalog import FAMILY_BUILDERS
    from ..singularity import scaling_family

    builtin = dict(FAMILY_BUILDERS, scaling=scaling_family)
    if "family" in transform:
        fid = transform["family"]
        if fid not in builtin:
            raise SchemaError(f"{source}: unknown family {fid!r}; builtins are {sorted(builtin)}")
        extra = sorted(set(transform) - {"family"})
        if extra:
            raise SchemaError(f"{source}: builtin family takes no coordinate rules (got {extra})")
        return builtin[fid]()

    if "scales" not in transform:
        raise SchemaError(f"{source}: [transform] needs either family or scales")
    scales = tuple(s.strip() for s in transform["scales"].split(",") if s.strip())
    locations = {}
    for item in transform.get("locations", "").split(","):
        if not item.strip():
            continue
        try:
            loc, owner = (s.strip() for s in item.split(":"))
        except ValueError:
            raise SchemaError(f"{source}: locations look like 'a:b', got {item.strip()!r}") from None
        locations[loc] = owner
    rules = []
    for name, body in transform.items():
        if name in ("scales", "locations"):
            continue
        if name not in point:
            raise ResolutionError(name, f"{source}, [transform]")
        try:
            loc_text, scale_text = body.rsplit(",", 1)
        except ValueError:
            raise SchemaError(f"{source}: rule for {name!r} must read '<locations>, <scale>'") from None
        scale = scale_text.strip()
        rules.append(AffineRule(name, None if scale == "-" else scale, _location_terms(loc_text, source)))
    try:
        return affine_family(
            "custom",
            scales=scales,
            locations=locations,
            rules=rules,
            requires=tuple(r.pattern for r in rules),
            reference_point=point,
            param_order=tuple(locations) + scales,
        )
    except ValueError as exc:
        raise SchemaError(f"{source}: {exc}") from exc

from .expr import BinOp, Call, Neg, Num, Var, eval_expr, identifiers, parse_expr, to_source
from .specfile import ModelSpec, build_family, load_model_spec, parse_model_spec

__all__ = [
    "BinOp", "Call", "Neg", "Num", "Var", "eval_expr", "identifiers", "parse_expr", "to_source",
    "ModelSpec", "build_family", "load_model_spec", "parse_model_spec",
]

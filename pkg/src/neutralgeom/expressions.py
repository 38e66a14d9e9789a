"""Compile user expression strings into functions that accept arrays or jets."""

from __future__ import annotations

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor, implicit_multiplication_application, parse_expr, standard_transformations,
)

from . import jets as J
from .errors import SpecError

_S, _T = sympy.symbols("s t", real=True)
_TRANSFORMS = standard_transformations + (convert_xor, implicit_multiplication_application)
_LOCALS = {"s": _S, "t": _T, "e": sympy.E, "E": sympy.E, "pi": sympy.pi}
_MODULE = {
    "sin": J.sin, "cos": J.cos, "tan": J.tan, "exp": J.exp, "log": J.log, "sqrt": J.sqrt,
    "sinh": J.sinh, "cosh": J.cosh, "E": np.e, "pi": np.pi,
}


def parse(text, field, symbols=("s", "t")):
    """Parse ``text`` into a sympy expression in the allowed ``symbols``."""
    if isinstance(text, (int, float)):
        text = repr(text)
    if not isinstance(text, str) or not text.strip():
        raise SpecError(f"{field}: expected a non-empty expression string")
    try:
        expr = parse_expr(text, local_dict=dict(_LOCALS), transformations=_TRANSFORMS)
    except Exception as exc:  # sympy raises a zoo of exception types
        raise SpecError(f"{field}: cannot parse {text!r} ({exc})") from exc
    if not isinstance(expr, sympy.Expr):
        raise SpecError(f"{field}: {text!r} is not a scalar expression")
    allowed = {_LOCALS[name] for name in symbols}
    extra = expr.free_symbols - allowed
    if extra:
        names = ", ".join(sorted(str(x) for x in extra))
        raise SpecError(f"{field}: unknown symbol(s) {names}; allowed: {', '.join(symbols)}")
    unknown = {type(f).__name__ for f in expr.atoms(sympy.Function)} - set(_MODULE)
    if unknown:
        raise SpecError(f"{field}: unsupported function(s) {', '.join(sorted(unknown))}")
    return expr


def compile_scalar(text, field, symbols=("s", "t")):
    """Function ``(s, t) -> value`` evaluating the expression on arrays or jets."""
    expr = parse(text, field, symbols)
    fn = sympy.lambdify((_S, _T), expr, modules=[_MODULE])

    def scalar(s, t):
        return fn(s, t)

    scalar.expr = expr
    return scalar


def compile_vector(texts, field, symbols=("s", "t")):
    """Function ``(s, t) -> Vec4`` from four component expressions."""
    if not isinstance(texts, (list, tuple)) or len(texts) != 4:
        raise SpecError(f"{field}: expected a list of 4 expressions")
    comps = [compile_scalar(x, f"{field}[{k}]", symbols) for k, x in enumerate(texts)]

    def vector(s, t):
        vals = [c(s, t) for c in comps]
        like = next((v for v in (*vals, s, t) if isinstance(v, J.Jet)), None)
        if like is None:
            shape = np.broadcast_shapes(np.shape(s), np.shape(t))
            return np.stack([np.broadcast_to(np.asarray(v, float), shape) for v in vals], axis=-1)
        return J.stack(vals, like)

    vector.exprs = [c.expr for c in comps]
    return vector

"""Builtin math functions and a small tree-walking evaluator.

The evaluator is used wherever an expression must be reduced to a number
without code generation: argument expressions inside function bodies, switch
guards, and the reference interpreter that cross-checks compiled systems.
"""

from __future__ import annotations

import math
from typing import Any, Callable

from .errors import NumericError
from .frontend import nodes as ast


def pulse(t: float, t0: float, width: float) -> float:
    """Unit trapezoid starting at ``t0`` lasting ``width``; edges take width/10."""
    if width <= 0.0:
        return 0.0
    rise = width / 10.0
    x = t - t0
    if x <= 0.0 or x >= width:
        return 0.0
    if x < rise:
        return x / rise
    if x > width - rise:
        return (width - x) / rise
    return 1.0


def safe_pow(a: float, b: float) -> float:
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError):
        return math.nan


BUILTIN_FUNCS: dict[str, Callable[..., float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "abs": abs,
    "min": min,
    "max": max,
    "pulse": pulse,
}


class Env:
    """Bindings for :func:`evaluate`.

    ``names`` holds plain identifiers (arguments, lambda parameters); the
    callbacks resolve attribute references and ``var(.)``.  Unset callbacks
    make the corresponding construct an error.
    """

    def __init__(self, names: dict[str, Any] | None = None,
                 attr: Callable[[str, str], Any] | None = None,
                 var: Callable[[str], float] | None = None,
                 time: float | None = None):
        self.names = names or {}
        self.attr = attr
        self.var = var
        self.time = time


def evaluate(e, env: Env) -> Any:
    """Evaluate a real expression; a bare Lambda evaluates to itself."""
    if isinstance(e, ast.Num):
        return e.value
    if isinstance(e, ast.Name):
        if e.id not in env.names:
            raise NumericError(f"unbound identifier {e.id!r}", e.span)
        return env.names[e.id]
    if isinstance(e, ast.Time):
        if env.time is None:
            raise NumericError("'time' is not available here", e.span)
        return env.time
    if isinstance(e, ast.AttrRef):
        if env.attr is None:
            raise NumericError(f"attribute {e.owner}.{e.name} is not available here", e.span)
        return env.attr(e.owner, e.name)
    if isinstance(e, ast.VarRef):
        if env.var is None:
            raise NumericError(f"var({e.node}) is not available here", e.span)
        return env.var(e.node)
    if isinstance(e, ast.Unary):
        v = evaluate(e.operand, env)
        return -v if e.op == "-" else v
    if isinstance(e, ast.Binary):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        try:
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return a / b
            return safe_pow(a, b)
        except ZeroDivisionError:
            raise NumericError("division by zero", e.span) from None
    if isinstance(e, ast.Call):
        args = [evaluate(a, env) for a in e.args]
        fn = _callee(e.func, env)
        if isinstance(fn, ast.Lambda):
            return apply_lambda(fn, args, env.time)
        try:
            return fn(*args)
        except OverflowError:
            raise NumericError(f"overflow in {e.func}", e.span) from None
    if isinstance(e, ast.Lambda):
        return e
    if isinstance(e, ast.IfElse):
        return evaluate(e.then, env) if evaluate_bool(e.test, env) else evaluate(e.orelse, env)
    raise NumericError(f"cannot evaluate {type(e).__name__} as a real value", getattr(e, "span", None))


def _callee(func, env: Env):
    if isinstance(func, ast.AttrRef):
        return evaluate(func, env)
    if func.id in env.names:
        return env.names[func.id]
    if func.id in BUILTIN_FUNCS:
        return BUILTIN_FUNCS[func.id]
    raise NumericError(f"unknown function {func.id!r}", func.span)


def apply_lambda(fn: ast.Lambda, args: list[float], time: float | None) -> float:
    if len(args) != len(fn.params):
        raise NumericError(f"lambda expects {len(fn.params)} argument(s), got {len(args)}", fn.span)
    return evaluate(fn.body, Env(dict(zip(fn.params, args)), time=time))


_COMPARE = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def evaluate_bool(b, env: Env) -> bool:
    if isinstance(b, ast.BoolLit):
        return b.value
    if isinstance(b, ast.Compare):
        return _COMPARE[b.op](evaluate(b.left, env), evaluate(b.right, env))
    if isinstance(b, ast.BoolOp):
        if b.op == "and":
            return evaluate_bool(b.left, env) and evaluate_bool(b.right, env)
        return evaluate_bool(b.left, env) or evaluate_bool(b.right, env)
    if isinstance(b, ast.Not):
        return not evaluate_bool(b.operand, env)
    raise NumericError("expected a boolean expression", getattr(b, "span", None))

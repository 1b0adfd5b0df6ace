"""Compile a dynamical graph into an ODE system.

Every connection is dispatched to its most specific production rule, the
rule body is rewritten against the concrete edge and endpoints (attributes
folded to numbers, lambda attributes inlined, ``var`` mapped to state slots or
algebraic values) and the terms of each node are combined with the node's
reduction.  The right-hand side is emitted as Python source and compiled once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import CompileError, NumericError
from .frontend import nodes as ast
from .frontend.printer import num as print_num
from .functions import BUILTIN_FUNCS, Env, evaluate, evaluate_bool, pulse, safe_pow
from .graph import DynamicalGraph, Edge
from .lang import Language, Rule


@dataclass(eq=True)
class StateRef:
    index: int
    label: str


@dataclass(eq=True)
class AlgRef:
    node: str


def state_label(node: str, index: int, order: int) -> str:
    return node if order == 1 else f"{node}({index})"


@dataclass
class Term:
    edge: str
    rule: Rule
    expr: Any


@dataclass
class OdeSystem:
    lang: str
    labels: list[str]
    slots: list[tuple[str, int]]
    x0: np.ndarray
    equations: list[Any]  # rewritten rhs expression per state variable
    algebraic: list[tuple[str, Any]]  # order-0 nodes in evaluation order
    terms: dict[str, list[Term]] = field(default_factory=dict)
    source: str = ""
    _fn: Callable | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise CompileError(f"no state variable named {label!r}") from None

    def rhs(self, t: float, y: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        return eval_rhs(self, y, t, out)

    def algebraic_values(self, t: float, y: np.ndarray) -> dict[str, float]:
        values: dict[str, float] = {}
        for name, expr in self.algebraic:
            values[name] = _eval_ir(expr, y, t, values)
        return values


# ---------------------------------------------------------------------------
# rewriting


class _Rewriter:
    def __init__(self, graph: DynamicalGraph, lang: Language, slot_of: dict[str, int]):
        self.graph = graph
        self.lang = lang
        self.slot_of = slot_of  # node -> index of its 0th derivative, order-0 nodes absent

    def term(self, rule: Rule, edge: Edge) -> Any:
        r = rule.ast
        binding: dict[str, tuple[str, Any]] = {
            r.edge: ("edge", edge),
            r.src: ("node", self.graph.nodes[edge.src]),
            r.dst: ("node", self.graph.nodes[edge.dst]),
        }
        return self.rewrite(r.expr, binding, {})

    def _attr(self, e: ast.AttrRef, binding) -> Any:
        el = binding[e.owner][1]
        if e.name not in el.attrs:
            raise CompileError(f"{el.name} has no attribute {e.name!r}", e.span)
        return el.attrs[e.name]

    def rewrite(self, e, binding, params: dict[str, Any]) -> Any:
        if isinstance(e, (ast.Num, ast.Time)):
            return e
        if isinstance(e, ast.Name):
            if e.id in params:
                return params[e.id]
            raise CompileError(f"unbound identifier {e.id!r} in production rule", e.span)
        if isinstance(e, ast.AttrRef):
            value = self._attr(e, binding)
            if isinstance(value, ast.Lambda):
                raise CompileError(f"lambda attribute {e.owner}.{e.name} used as a value", e.span)
            return ast.Num(float(value))
        if isinstance(e, ast.VarRef):
            node = binding[e.node][1].name
            if node in self.slot_of:
                i = self.slot_of[node]
                return StateRef(i, state_label(node, 0, self.graph_order(node)))
            return AlgRef(node)
        if isinstance(e, ast.Unary):
            inner = self.rewrite(e.operand, binding, params)
            if e.op == "+":
                return inner
            if isinstance(inner, ast.Num):
                return ast.Num(-inner.value)
            return ast.Unary("-", inner)
        if isinstance(e, ast.Binary):
            left = self.rewrite(e.left, binding, params)
            right = self.rewrite(e.right, binding, params)
            if isinstance(left, ast.Num) and isinstance(right, ast.Num):
                folded = _fold(e.op, left.value, right.value)
                if folded is not None:
                    return ast.Num(folded)
            return ast.Binary(e.op, left, right)
        if isinstance(e, ast.Call):
            args = [self.rewrite(a, binding, params) for a in e.args]
            if isinstance(e.func, ast.AttrRef):
                fn = self._attr(e.func, binding)
                if not isinstance(fn, ast.Lambda):
                    raise CompileError(f"{e.func.owner}.{e.func.name} is not a lambda", e.span)
                # lambda bodies see only their parameters, so inlining needs no binding
                return self.rewrite(fn.body, {}, dict(zip(fn.params, args)))
            if e.func.id in params:
                raise CompileError(f"{e.func.id!r} is not callable", e.span)
            if e.func.id != "pulse" and all(isinstance(a, ast.Num) for a in args):
                try:
                    return ast.Num(float(BUILTIN_FUNCS[e.func.id](*(a.value for a in args))))
                except (ValueError, OverflowError):
                    pass
            return ast.Call(ast.Name(e.func.id), args)
        if isinstance(e, ast.IfElse):
            return ast.IfElse(self.rewrite_bool(e.test, binding, params),
                              self.rewrite(e.then, binding, params), self.rewrite(e.orelse, binding, params))
        if isinstance(e, ast.Lambda):
            raise CompileError("lambda literal inside a production rule", e.span)
        raise CompileError(f"cannot compile {type(e).__name__}", getattr(e, "span", None))

    def rewrite_bool(self, b, binding, params):
        if isinstance(b, ast.BoolLit):
            return b
        if isinstance(b, ast.Compare):
            return ast.Compare(b.op, self.rewrite(b.left, binding, params), self.rewrite(b.right, binding, params))
        if isinstance(b, ast.BoolOp):
            return ast.BoolOp(b.op, self.rewrite_bool(b.left, binding, params),
                              self.rewrite_bool(b.right, binding, params))
        if isinstance(b, ast.Not):
            return ast.Not(self.rewrite_bool(b.operand, binding, params))
        raise CompileError("expected a boolean expression", getattr(b, "span", None))

    def graph_order(self, node: str) -> int:
        return self.lang.node_types[self.graph.nodes[node].type].order


def _fold(op: str, a: float, b: float) -> float | None:
    try:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        r = safe_pow(a, b)
        return None if math.isnan(r) else r
    except ZeroDivisionError:
        return None


def _reduce(terms: list[Any], reduction: str) -> Any:
    if not terms:
        return ast.Num(0.0)
    op = "+" if reduction == "sum" else "*"
    out = terms[0]
    for t in terms[1:]:
        out = ast.Binary(op, out, t)
    return out


def _deps(expr: Any, acc: set[str]) -> set[str]:
    if isinstance(expr, AlgRef):
        acc.add(expr.node)
    elif isinstance(expr, (ast.Unary,)):
        _deps(expr.operand, acc)
    elif isinstance(expr, (ast.Binary, ast.Compare, ast.BoolOp)):
        _deps(expr.left, acc)
        _deps(expr.right, acc)
    elif isinstance(expr, ast.Call):
        for a in expr.args:
            _deps(a, acc)
    elif isinstance(expr, ast.IfElse):
        _deps(expr.test, acc)
        _deps(expr.then, acc)
        _deps(expr.orelse, acc)
    elif isinstance(expr, ast.Not):
        _deps(expr.operand, acc)
    return acc


def _algebraic_order(exprs: dict[str, Any]) -> list[str]:
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(name: str, path: list[str]) -> None:
        mark = state.get(name)
        if mark == 2:
            return
        if mark == 1:
            cycle = path[path.index(name):] + [name]
            raise CompileError("algebraic cycle among order-0 nodes: " + " -> ".join(cycle), code="cycle")
        state[name] = 1
        for dep in sorted(_deps(exprs[name], set())):
            visit(dep, path + [name])
        state[name] = 2
        order.append(name)

    for name in exprs:
        visit(name, [])
    return order


def compile_graph(graph: DynamicalGraph, lang: Language) -> OdeSystem:
    """Build the ODE system of ``graph`` under ``lang``."""
    labels: list[str] = []
    slots: list[tuple[str, int]] = []
    slot_of: dict[str, int] = {}
    x0: list[float] = []
    for n in graph.nodes.values():
        if n.type not in lang.node_types:
            raise CompileError(f"node {n.name!r} has type {n.type!r}, unknown in {lang.name!r}")
        p = lang.node_types[n.type].order
        if p > 0:
            slot_of[n.name] = len(labels)
        for i in range(p):
            labels.append(state_label(n.name, i, p))
            slots.append((n.name, i))
            x0.append(float(n.inits[i]))
    rw = _Rewriter(graph, lang, slot_of)

    contributions: dict[str, list[Term]] = {name: [] for name in graph.nodes}
    for e in sorted(graph.edges.values(), key=lambda e: e.name):
        if e.type not in lang.edge_types:
            raise CompileError(f"edge {e.name!r} has type {e.type!r}, unknown in {lang.name!r}")
        st, dt = graph.nodes[e.src].type, graph.nodes[e.dst].type
        roles = (("self", e.src),) if e.is_self else (("src", e.src), ("dst", e.dst))
        for role, target in roles:
            found = lang.dispatch(e.type, st, dt, target=role, off=not e.on)
            if found is None:
                continue
            rule = found[0]
            contributions[target].append(Term(e.name, rule, rw.term(rule, e)))

    reduced = {}
    for n in graph.nodes.values():
        t = lang.node_types[n.type]
        reduced[n.name] = _reduce([c.expr for c in contributions[n.name]], t.reduction)

    equations: list[Any] = []
    for node, i in slots:
        p = lang.node_types[graph.nodes[node].type].order
        if i < p - 1:
            equations.append(StateRef(slot_of[node] + i + 1, state_label(node, i + 1, p)))
        else:
            equations.append(reduced[node])
    alg_exprs = {n.name: reduced[n.name] for n in graph.nodes.values() if n.name not in slot_of}
    algebraic = [(name, alg_exprs[name]) for name in _algebraic_order(alg_exprs)]

    sys = OdeSystem(lang.name, labels, slots, np.array(x0, dtype=float), equations, algebraic,
                    contributions)
    sys.source, sys._fn = _codegen(sys)
    return sys


# ---------------------------------------------------------------------------
# code generation


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


class _Emitter:
    def __init__(self, alg_names: dict[str, str]):
        self.alg = alg_names

    def num(self, v: float) -> str:
        if math.isinf(v):
            return "_inf" if v > 0 else "(-_inf)"
        if math.isnan(v):
            return "_nan"
        text = repr(float(v))
        return f"({text})" if text.startswith("-") else text

    def expr(self, e, prec: int = 0) -> str:
        if isinstance(e, ast.Num):
            return self.num(e.value)
        if isinstance(e, StateRef):
            return f"y[{e.index}]"
        if isinstance(e, AlgRef):
            return self.alg[e.node]
        if isinstance(e, ast.Time):
            return "t"
        if isinstance(e, ast.Unary):
            text = f"-{self.expr(e.operand, 3)}"
            return f"({text})" if prec > 2 else text
        if isinstance(e, ast.Binary):
            if e.op == "^":
                if isinstance(e.right, ast.Num) and e.right.value == int(e.right.value) and abs(e.right.value) < 64:
                    return f"({self.expr(e.left, 4)} ** {int(e.right.value)})"
                return f"_pow({self.expr(e.left)}, {self.expr(e.right)})"
            p = _PREC[e.op]
            text = f"{self.expr(e.left, p)} {e.op} {self.expr(e.right, p + 1)}"
            return f"({text})" if p < prec else text
        if isinstance(e, ast.Call):
            return f"_{e.func.id}({', '.join(self.expr(a) for a in e.args)})"
        if isinstance(e, ast.IfElse):
            return f"({self.expr(e.then)} if {self.boolean(e.test)} else {self.expr(e.orelse)})"
        raise CompileError(f"cannot emit {type(e).__name__}")

    def boolean(self, b) -> str:
        if isinstance(b, ast.BoolLit):
            return "True" if b.value else "False"
        if isinstance(b, ast.Compare):
            return f"({self.expr(b.left)} {b.op} {self.expr(b.right)})"
        if isinstance(b, ast.BoolOp):
            return f"({self.boolean(b.left)} {b.op} {self.boolean(b.right)})"
        return f"(not {self.boolean(b.operand)})"


_NAMESPACE = {
    "_sin": math.sin, "_cos": math.cos, "_exp": math.exp, "_abs": abs, "_min": min, "_max": max,
    "_pulse": pulse, "_pow": safe_pow, "_inf": math.inf, "_nan": math.nan,
}


def _codegen(sys: OdeSystem) -> tuple[str, Callable]:
    alg_names = {name: f"a{k}" for k, (name, _) in enumerate(sys.algebraic)}
    em = _Emitter(alg_names)
    lines = ["def rhs(t, y, out):", "    y = y.tolist()"]
    for name, expr in sys.algebraic:
        lines.append(f"    {alg_names[name]} = {em.expr(expr)}  # {name}")
    if sys.size:
        lines.append("    out[:] = (")
        for label, expr in zip(sys.labels, sys.equations):
            lines.append(f"        {em.expr(expr)},  # d {label}/dt")
        lines.append("    )")
    lines.append("    return out")
    source = "\n".join(lines) + "\n"
    scope = dict(_NAMESPACE)
    exec(compile(source, "<ark-rhs>", "exec"), scope)
    return source, scope["rhs"]


# ---------------------------------------------------------------------------
# evaluation


def _eval_ir(e, y, t: float, alg: dict[str, float]) -> float:
    """Slow tree evaluation of rewritten expressions, used for error reports."""
    if isinstance(e, StateRef):
        return float(y[e.index])
    if isinstance(e, AlgRef):
        return alg[e.node]
    if isinstance(e, ast.Unary):
        return -_eval_ir(e.operand, y, t, alg)
    if isinstance(e, ast.Binary):
        return evaluate(ast.Binary(e.op, ast.Num(_eval_ir(e.left, y, t, alg)),
                                   ast.Num(_eval_ir(e.right, y, t, alg))), Env())
    if isinstance(e, ast.Call):
        return BUILTIN_FUNCS[e.func.id](*(_eval_ir(a, y, t, alg) for a in e.args))
    if isinstance(e, ast.IfElse):
        test = _eval_bool_ir(e.test, y, t, alg)
        return _eval_ir(e.then if test else e.orelse, y, t, alg)
    return evaluate(e, Env(time=t))


def _eval_bool_ir(b, y, t, alg) -> bool:
    if isinstance(b, ast.Compare):
        return evaluate_bool(ast.Compare(b.op, ast.Num(_eval_ir(b.left, y, t, alg)),
                                         ast.Num(_eval_ir(b.right, y, t, alg))), Env())
    if isinstance(b, ast.BoolOp):
        l, r = _eval_bool_ir(b.left, y, t, alg), _eval_bool_ir(b.right, y, t, alg)
        return (l and r) if b.op == "and" else (l or r)
    if isinstance(b, ast.Not):
        return not _eval_bool_ir(b.operand, y, t, alg)
    return bool(b.value)


def _locate_fault(sys: OdeSystem, y, t: float) -> str:
    alg: dict[str, float] = {}
    for name, expr in sys.algebraic:
        try:
            alg[name] = _eval_ir(expr, y, t, alg)
        except (ZeroDivisionError, OverflowError, ValueError, NumericError):
            return name
        if not math.isfinite(alg[name]):
            return name
    for label, expr in zip(sys.labels, sys.equations):
        try:
            v = _eval_ir(expr, y, t, alg)
        except (ZeroDivisionError, OverflowError, ValueError, NumericError):
            return label
        if not math.isfinite(v):
            return label
    return "<unknown>"


def eval_rhs(sys: OdeSystem, y: np.ndarray, t: float, out: np.ndarray | None = None) -> np.ndarray:
    """Evaluate the right-hand side at (t, y); raises NumericError on non-finite results."""
    y = np.asarray(y, dtype=float)
    if y.shape != (sys.size,):
        raise NumericError(f"state vector has shape {y.shape}, expected ({sys.size},)")
    if out is None:
        out = np.empty(sys.size)
    try:
        sys._fn(t, y, out)
    except (ZeroDivisionError, OverflowError, ValueError):
        raise NumericError(f"non-finite right-hand side for {_locate_fault(sys, y, t)} at t={t!r}") from None
    if not np.isfinite(out).all():
        raise NumericError(f"non-finite right-hand side for {_locate_fault(sys, y, t)} at t={t!r}")
    return out


# ---------------------------------------------------------------------------
# pretty printing


def _show(e, prec: int = 0) -> str:
    if isinstance(e, StateRef):
        return e.label
    if isinstance(e, AlgRef):
        return e.node
    if isinstance(e, ast.Num):
        text = print_num(e.value)
        return f"({text})" if text.startswith("-") else text
    if isinstance(e, ast.Time):
        return "time"
    if isinstance(e, ast.Unary):
        text = f"-{_show(e.operand, 3)}"
        return f"({text})" if prec > 2 else text
    if isinstance(e, ast.Binary):
        if e.op == "^":
            return f"{_show(e.left, 5)}^{_show(e.right, 4)}"
        p = _PREC[e.op]
        text = f"{_show(e.left, p)} {e.op} {_show(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    if isinstance(e, ast.Call):
        return f"{e.func.id}({', '.join(_show(a) for a in e.args)})"
    if isinstance(e, ast.IfElse):
        return f"(if {_show_bool(e.test)} then {_show(e.then)} else {_show(e.orelse)})"
    raise TypeError(e)


def _show_bool(b) -> str:
    if isinstance(b, ast.BoolLit):
        return "true" if b.value else "false"
    if isinstance(b, ast.Compare):
        return f"{_show(b.left)} {b.op} {_show(b.right)}"
    if isinstance(b, ast.BoolOp):
        return f"({_show_bool(b.left)} {b.op} {_show_bool(b.right)})"
    return f"not {_show_bool(b.operand)}"


def pretty_equations(sys: OdeSystem) -> str:
    lines = [f"{name} = {_show(expr)}" for name, expr in sys.algebraic]
    lines += [f"d{label}/dt = {_show(expr)}" for label, expr in zip(sys.labels, sys.equations)]
    return "\n".join(lines) + ("\n" if lines else "")


def to_json_data(sys: OdeSystem) -> dict[str, Any]:
    return {
        "language": sys.lang,
        "states": list(sys.labels),
        "initial": [float(v) for v in sys.x0],
        "algebraic": [name for name, _ in sys.algebraic],
        "equations": {label: _show(expr) for label, expr in zip(sys.labels, sys.equations)},
        "algebraic_equations": {name: _show(expr) for name, expr in sys.algebraic},
    }

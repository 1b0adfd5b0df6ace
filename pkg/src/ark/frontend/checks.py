"""Scope and kind checks over expressions.

The same walker serves production-rule bodies (scope: the rule's edge and
endpoint bindings), function bodies (scope: arguments) and lambda literals
(scope: their parameters).  Attribute types are looked up through an optional
callback so the checker can run before or after language resolution.
"""

from __future__ import annotations

from typing import Callable, Optional

from ..errors import Diagnostic, Span
from . import nodes as ast

# builtin name -> arity
BUILTINS: dict[str, int] = {"sin": 1, "cos": 1, "exp": 1, "abs": 1, "min": 2, "max": 2, "pulse": 3}

AttrLookup = Callable[[str, str], Optional[ast.SigType]]


class Scope:
    """Names visible to an expression.

    ``values`` maps names usable as reals (function arguments, lambda
    parameters) to their datatype; ``elements`` maps node/edge bindings to a
    role string ("node" / "edge"); ``var_nodes`` lists bindings accepted by
    ``var(.)``.
    """

    def __init__(self, values: dict[str, ast.SigType | None] | None = None,
                 elements: dict[str, str] | None = None, var_nodes: set[str] | None = None,
                 allow_time: bool = True, attr_type: AttrLookup | None = None):
        self.values = dict(values or {})
        self.elements = dict(elements or {})
        self.var_nodes = set(var_nodes or ())
        self.allow_time = allow_time
        self.attr_type = attr_type

    def child(self, params: list[str]) -> "Scope":
        # lambda bodies see only their own parameters and time
        return Scope({p: ast.SigType("real", float("-inf"), float("inf")) for p in params},
                     allow_time=True)


def _diag(out: list[Diagnostic], msg: str, span: Span | None, code: str) -> None:
    out.append(Diagnostic(msg, span, code))


def check_real(e, scope: Scope, out: list[Diagnostic]) -> None:
    """Check that ``e`` is a well-scoped real-valued expression."""
    if isinstance(e, ast.Num):
        return
    if isinstance(e, ast.Time):
        if not scope.allow_time:
            _diag(out, "'time' is not available here", e.span, "unbound")
        return
    if isinstance(e, ast.Name):
        if e.id in scope.values:
            sig = scope.values[e.id]
            if sig is not None and sig.kind == "lambd":
                _diag(out, f"lambda {e.id!r} used as a real value", e.span, "type")
        elif e.id in scope.elements:
            _diag(out, f"{scope.elements[e.id]} {e.id!r} used as a real value; use var({e.id}) or an attribute",
                  e.span, "type")
        else:
            _diag(out, f"unbound identifier {e.id!r}", e.span, "unbound")
        return
    if isinstance(e, ast.AttrRef):
        sig = _attr(e, scope, out)
        if sig is not None and sig.kind == "lambd":
            _diag(out, f"lambda attribute {e.owner}.{e.name} used as a real value", e.span, "type")
        return
    if isinstance(e, ast.VarRef):
        if e.node not in scope.var_nodes:
            _diag(out, f"unbound identifier {e.node!r} in var()", e.span, "unbound")
        return
    if isinstance(e, ast.Unary):
        check_real(e.operand, scope, out)
        return
    if isinstance(e, ast.Binary):
        check_real(e.left, scope, out)
        check_real(e.right, scope, out)
        return
    if isinstance(e, ast.Call):
        _check_call(e, scope, out)
        return
    if isinstance(e, ast.Lambda):
        _diag(out, "lambda literal used where a real value is expected", e.span, "type")
        return
    if isinstance(e, ast.IfElse):
        check_bool(e.test, scope, out)
        check_real(e.then, scope, out)
        check_real(e.orelse, scope, out)
        return
    if isinstance(e, ast.BOOL_NODES):
        _diag(out, "boolean expression used where a real value is expected", e.span, "type")
        return
    raise TypeError(f"unexpected node {e!r}")


def check_bool(b, scope: Scope, out: list[Diagnostic]) -> None:
    if isinstance(b, ast.BoolLit):
        return
    if isinstance(b, ast.Compare):
        check_real(b.left, scope, out)
        check_real(b.right, scope, out)
        return
    if isinstance(b, ast.BoolOp):
        check_bool(b.left, scope, out)
        check_bool(b.right, scope, out)
        return
    if isinstance(b, ast.Not):
        check_bool(b.operand, scope, out)
        return
    _diag(out, "real expression used where a boolean is expected", getattr(b, "span", None), "type")


def check_lambda(e: ast.Lambda, arity: int | None, out: list[Diagnostic]) -> None:
    if arity is not None and len(e.params) != arity:
        _diag(out, f"lambda has {len(e.params)} argument(s) but the slot expects {arity}", e.span, "arity")
    if len(set(e.params)) != len(e.params):
        _diag(out, "duplicate lambda parameter", e.span, "duplicate")
    check_real(e.body, Scope().child(e.params), out)


def _attr(e: ast.AttrRef, scope: Scope, out: list[Diagnostic]) -> ast.SigType | None:
    if e.owner not in scope.elements:
        _diag(out, f"unbound identifier {e.owner!r}", e.span, "unbound")
        return None
    if scope.attr_type is None:
        return None
    sig = scope.attr_type(e.owner, e.name)
    if sig is None:
        _diag(out, f"{e.owner!r} has no attribute {e.name!r}", e.span, "unbound")
    return sig


def _check_call(e: ast.Call, scope: Scope, out: list[Diagnostic]) -> None:
    for a in e.args:
        check_real(a, scope, out)
    func = e.func
    if isinstance(func, ast.AttrRef):
        sig = _attr(func, scope, out)
        if sig is None:
            return
        if sig.kind != "lambd":
            _diag(out, f"{func.owner}.{func.name} is not a lambda", e.span, "type")
        elif sig.arity != len(e.args):
            _diag(out, f"{func.owner}.{func.name} takes {sig.arity} argument(s), got {len(e.args)}",
                  e.span, "arity")
        return
    name = func.id
    if name in scope.values:
        sig = scope.values[name]
        if sig is None or sig.kind != "lambd":
            _diag(out, f"{name!r} is not a lambda", e.span, "type")
        elif sig.arity != len(e.args):
            _diag(out, f"{name!r} takes {sig.arity} argument(s), got {len(e.args)}", e.span, "arity")
        return
    if name in BUILTINS:
        if BUILTINS[name] != len(e.args):
            _diag(out, f"{name}() takes {BUILTINS[name]} argument(s), got {len(e.args)}", e.span, "arity")
        return
    _diag(out, f"unknown function {name!r}", e.span, "unbound")


def uses_names(e, names: set[str]) -> bool:
    """True if any plain identifier in ``e`` is one of ``names``."""
    return any(isinstance(n, ast.Name) and n.id in names for n in ast.walk(e))


# ---------------------------------------------------------------------------
# whole-program checks


def rule_scope(rule: ast.ProdRule, attr_type: AttrLookup | None = None) -> Scope:
    elements = {rule.edge: "edge", rule.src: "node", rule.dst: "node"}
    return Scope(elements=elements, var_nodes={rule.src, rule.dst}, attr_type=attr_type)


def check_rule(rule: ast.ProdRule, attr_type: AttrLookup | None = None) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if rule.target not in (rule.src, rule.dst):
        _diag(out, f"production target {rule.target!r} must be the source {rule.src!r} "
                   f"or destination {rule.dst!r}", rule.span, "target")
    check_real(rule.expr, rule_scope(rule, attr_type), out)
    return out


def function_scope(func: ast.FuncDef) -> Scope:
    return Scope(values={a.name: a.type for a in func.args if a.attr is None}, allow_time=False)


SlotLookup = Callable[[str, str, str, int], Optional[ast.SigType]]


def check_function(func: ast.FuncDef, slot_type: SlotLookup | None = None) -> list[Diagnostic]:
    """Check a function body.

    ``slot_type(element_type, "attr"|"init", attr_name, index)`` resolves the
    declared datatype of a slot; when given, lambda arity is checked.
    """
    out: list[Diagnostic] = []
    scope = function_scope(func)
    seen_args = set()
    for a in func.args:
        if a.key in seen_args:
            _diag(out, f"duplicate argument {a.key!r}", a.span, "duplicate")
        seen_args.add(a.key)
    declared: dict[str, tuple[str, str]] = {}  # name -> (role, type)
    for st in func.body:
        if isinstance(st, ast.NodeSt):
            declared.setdefault(st.name, ("node", st.type))
        elif isinstance(st, ast.EdgeSt):
            for end in (st.src, st.dst):
                if end not in declared or declared[end][0] != "node":
                    _diag(out, f"edge {st.name!r} references undeclared node {end!r}", st.span, "unbound")
            declared.setdefault(st.name, ("edge", st.type))
        elif isinstance(st, (ast.SetAttr, ast.SetInit)):
            owner = st.owner if isinstance(st, ast.SetAttr) else st.node
            if owner not in declared:
                _diag(out, f"unbound identifier {owner!r}", st.span, "unbound")
                continue
            sig = None
            if slot_type is not None:
                if isinstance(st, ast.SetAttr):
                    sig = slot_type(declared[owner][1], "attr", st.attr, 0)
                else:
                    sig = slot_type(declared[owner][1], "init", "", st.index)
            _check_value(st.value, sig, scope, out)
        elif isinstance(st, ast.SetEdge):
            if st.edge not in declared or declared[st.edge][0] != "edge":
                _diag(out, f"unbound edge {st.edge!r} in switch statement", st.span, "unbound")
            check_bool(st.when, scope, out)
    return out


def _check_value(value, sig: ast.SigType | None, scope: Scope, out: list[Diagnostic]) -> None:
    if isinstance(value, ast.Lambda):
        if sig is not None and sig.kind != "lambd":
            _diag(out, "lambda assigned to a non-lambda slot", value.span, "type")
        check_lambda(value, sig.arity if sig is not None and sig.kind == "lambd" else None, out)
        return
    if sig is not None and sig.kind == "lambd":
        if isinstance(value, ast.Name) and value.id in scope.values:
            arg = scope.values[value.id]
            if arg is None or arg.kind != "lambd":
                _diag(out, f"argument {value.id!r} is not a lambda", value.span, "type")
            elif arg.arity != sig.arity:
                _diag(out, f"lambda argument {value.id!r} has {arg.arity} parameter(s) "
                           f"but the slot expects {sig.arity}", value.span, "arity")
            return
        _diag(out, "lambda slot assigned a real value", getattr(value, "span", None), "type")
        return
    if isinstance(value, ast.Name) and value.id in scope.values:
        return
    check_real(value, scope, out)


def check_expressions(prog: ast.SourceProgram, registry=None) -> list[Diagnostic]:
    """Run every expression-level check over ``prog``.

    With a language ``registry`` (see :mod:`ark.lang`), attribute names in
    rules and lambda arities in functions are checked against resolved types.
    """
    out: list[Diagnostic] = []
    for lang in prog.languages:
        resolved = registry.get(lang.name) if registry is not None else None
        for st in lang.body:
            if isinstance(st, ast.ProdRule):
                lookup = resolved.rule_attr_lookup(st) if resolved is not None else None
                out.extend(check_rule(st, lookup))
    for func in prog.functions:
        resolved = registry.get(func.lang) if registry is not None else None
        out.extend(check_function(func, resolved.slot_type if resolved is not None else None))
    return out

"""AST node classes for Ark source programs.

Every node carries a ``span`` that is excluded from equality, so two trees
parsed from differently formatted text compare equal when they have the same
structure.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Union

from ..errors import Span


def _span() -> Any:
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# expressions


@dataclass(eq=True)
class Num:
    value: float
    is_int: bool = False
    span: Span | None = _span()


@dataclass(eq=True)
class Name:
    id: str
    span: Span | None = _span()


@dataclass(eq=True)
class AttrRef:
    owner: str
    name: str
    span: Span | None = _span()


@dataclass(eq=True)
class Time:
    span: Span | None = _span()


@dataclass(eq=True)
class VarRef:
    node: str
    span: Span | None = _span()


@dataclass(eq=True)
class Unary:
    op: str  # "-" or "+"
    operand: "Expr"
    span: Span | None = _span()


@dataclass(eq=True)
class Binary:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"
    span: Span | None = _span()


@dataclass(eq=True)
class Call:
    """Builtin call (``func`` is a Name) or lambda application (Name/AttrRef)."""

    func: Union[Name, AttrRef]
    args: list["Expr"]
    span: Span | None = _span()


@dataclass(eq=True)
class Lambda:
    params: list[str]
    body: "Expr"
    span: Span | None = _span()


@dataclass(eq=True)
class IfElse:
    test: "BoolExpr"
    then: "Expr"
    orelse: "Expr"
    span: Span | None = _span()


@dataclass(eq=True)
class BoolLit:
    value: bool
    span: Span | None = _span()


@dataclass(eq=True)
class Compare:
    op: str  # < <= > >= == !=
    left: "Expr"
    right: "Expr"
    span: Span | None = _span()


@dataclass(eq=True)
class BoolOp:
    op: str  # and / or
    left: "BoolExpr"
    right: "BoolExpr"
    span: Span | None = _span()


@dataclass(eq=True)
class Not:
    operand: "BoolExpr"
    span: Span | None = _span()


Expr = Union[Num, Name, AttrRef, Time, VarRef, Unary, Binary, Call, Lambda, IfElse]
BoolExpr = Union[BoolLit, Compare, BoolOp, Not]

BOOL_NODES = (BoolLit, Compare, BoolOp, Not)


# ---------------------------------------------------------------------------
# datatypes


@dataclass(eq=True)
class SigType:
    """``real[x0,x1]`` (optionally ``mm(s0,s1)``), ``int[i0,i1]`` or ``lambd(v*)``."""

    kind: str  # "real" | "int" | "lambd"
    lo: float | None = None
    hi: float | None = None
    params: list[str] = field(default_factory=list)
    mm: tuple[float, float] | None = None
    const: bool = False
    span: Span | None = _span()

    @property
    def arity(self) -> int:
        return len(self.params)

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def describe(self) -> str:
        if self.kind == "lambd":
            text = f"lambd({', '.join(self.params)})"
        else:
            text = f"{self.kind}[{_fmt(self.lo, self.kind)}, {_fmt(self.hi, self.kind)}]"
        if self.mm is not None:
            text += f" mm({_fmt(self.mm[0])}, {_fmt(self.mm[1])})"
        if self.const:
            text += " const"
        return text


def _fmt(x: float, kind: str = "real") -> str:
    if kind == "int":
        return str(int(x))
    return repr(float(x))


# ---------------------------------------------------------------------------
# language definitions


@dataclass(eq=True)
class AttrDecl:
    name: str
    type: SigType
    span: Span | None = _span()


@dataclass(eq=True)
class InitDecl:
    index: int
    type: SigType
    span: Span | None = _span()


@dataclass(eq=True)
class TypeDecl:
    category: str  # "node" | "edge"
    name: str
    order: int | None = None
    reduction: str | None = None  # "sum" | "mul"
    fixed: bool = False
    parent: str | None = None
    body: list[Union[AttrDecl, InitDecl]] = field(default_factory=list)
    span: Span | None = _span()


@dataclass(eq=True)
class ProdRule:
    edge: str
    edge_type: str
    src: str
    src_type: str
    dst: str
    dst_type: str
    target: str
    expr: Expr
    off: bool = False
    span: Span | None = _span()


@dataclass(eq=True)
class MatchClause:
    lo: int
    hi: int | None  # None is the unbounded ``inf`` marker
    edge_type: str
    direction: str  # "out" | "in" | "any"
    node: str | None = None
    peers: list[str] = field(default_factory=list)
    span: Span | None = _span()


@dataclass(eq=True)
class ValExpr:
    kind: str  # "acc" | "rej"
    clauses: list[MatchClause]
    span: Span | None = _span()


@dataclass(eq=True)
class Cstr:
    node: str
    node_type: str
    exprs: list[ValExpr]
    span: Span | None = _span()


@dataclass(eq=True)
class ExternFunc:
    name: str
    span: Span | None = _span()


LangSt = Union[TypeDecl, ProdRule, Cstr, ExternFunc]


@dataclass(eq=True)
class LangDef:
    name: str
    parent: str | None
    body: list[LangSt]
    span: Span | None = _span()


# ---------------------------------------------------------------------------
# function definitions


@dataclass(eq=True)
class FuncArg:
    name: str
    type: SigType
    attr: str | None = None  # ``v0.v1 : SigT`` binds straight into an attribute
    span: Span | None = _span()

    @property
    def key(self) -> str:
        return f"{self.name}.{self.attr}" if self.attr else self.name


@dataclass(eq=True)
class NodeSt:
    name: str
    type: str
    span: Span | None = _span()


@dataclass(eq=True)
class EdgeSt:
    src: str
    dst: str
    name: str
    type: str
    span: Span | None = _span()


@dataclass(eq=True)
class SetAttr:
    owner: str
    attr: str
    value: Expr
    span: Span | None = _span()


@dataclass(eq=True)
class SetInit:
    node: str
    index: int
    value: Expr
    span: Span | None = _span()


@dataclass(eq=True)
class SetEdge:
    edge: str
    when: BoolExpr
    span: Span | None = _span()


FuncSt = Union[NodeSt, EdgeSt, SetAttr, SetInit, SetEdge]


@dataclass(eq=True)
class FuncDef:
    name: str
    args: list[FuncArg]
    lang: str
    body: list[FuncSt]
    span: Span | None = _span()


@dataclass(eq=True)
class SourceProgram:
    statements: list[Union[LangDef, FuncDef]] = field(default_factory=list)
    span: Span | None = _span()

    @property
    def languages(self) -> list[LangDef]:
        return [s for s in self.statements if isinstance(s, LangDef)]

    @property
    def functions(self) -> list[FuncDef]:
        return [s for s in self.statements if isinstance(s, FuncDef)]


# ---------------------------------------------------------------------------
# generic traversal and JSON dump


def to_dict(node: Any, spans: bool = True) -> Any:
    """Convert an AST to plain data with a stable key order (``kind`` first)."""
    if dataclasses.is_dataclass(node):
        out: dict[str, Any] = {"kind": type(node).__name__}
        for f in dataclasses.fields(node):
            if f.name == "span":
                continue
            out[f.name] = to_dict(getattr(node, f.name), spans)
        if spans:
            sp = getattr(node, "span", None)
            out["span"] = None if sp is None else [sp.line, sp.col, sp.end_line, sp.end_col]
        return out
    if isinstance(node, (list, tuple)):
        return [to_dict(x, spans) for x in node]
    return node


def walk(node: Any):
    """Yield ``node`` and every AST node below it, depth first."""
    yield node
    if dataclasses.is_dataclass(node):
        for f in dataclasses.fields(node):
            if f.name == "span":
                continue
            yield from _walk_value(getattr(node, f.name))


def _walk_value(value: Any):
    if dataclasses.is_dataclass(value):
        yield from walk(value)
    elif isinstance(value, (list, tuple)):
        for item in value:
            yield from _walk_value(item)

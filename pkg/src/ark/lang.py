"""Language resolution: types with inheritance, rule tables and dispatch.

A :class:`Language` is the resolved, immutable form of a ``lang`` block.  It
carries every type, production rule and validity pattern visible in the
language, inherited ones included, so later stages never walk parent chains
by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import ArkSemanticError, CheckFailed, CompileError, Diagnostic
from .frontend import checks
from .frontend import nodes as ast


@dataclass(frozen=True)
class NodeType:
    name: str
    order: int
    reduction: str  # "sum" | "mul"
    attrs: dict[str, ast.SigType]
    inits: dict[int, ast.SigType]
    parent: str | None = None
    lang: str = ""


@dataclass(frozen=True)
class EdgeType:
    name: str
    attrs: dict[str, ast.SigType]
    fixed: bool = False
    parent: str | None = None
    lang: str = ""


@dataclass(frozen=True)
class Rule:
    """A production rule with its target role resolved."""

    ast: ast.ProdRule
    lang: str

    @property
    def is_self(self) -> bool:
        return self.ast.src == self.ast.dst

    @property
    def role(self) -> str:
        if self.is_self:
            return "self"
        return "src" if self.ast.target == self.ast.src else "dst"

    @property
    def key(self) -> tuple:
        r = self.ast
        return (r.edge_type, r.src_type, r.dst_type, self.role, r.off)

    def __str__(self) -> str:
        r = self.ast
        off = " off" if r.off else ""
        return f"prod({r.edge}:{r.edge_type}, {r.src}:{r.src_type}->{r.dst}:{r.dst_type}) {r.target}{off}"


@dataclass(frozen=True)
class Pattern:
    """One ``acc``/``rej`` expression of a ``cstr`` block."""

    kind: str  # "acc" | "rej"
    node_type: str
    node: str
    clauses: tuple[ast.MatchClause, ...]
    lang: str = ""


class AmbiguousRuleError(CompileError):
    code = "ambiguous"


@dataclass
class Language:
    name: str
    parent: "Language | None"
    node_types: dict[str, NodeType] = field(default_factory=dict)
    edge_types: dict[str, EdgeType] = field(default_factory=dict)
    rules: list[Rule] = field(default_factory=list)
    patterns: list[Pattern] = field(default_factory=list)
    global_checks: list[str] = field(default_factory=list)
    own_types: frozenset[str] = frozenset()

    # -- type queries ----------------------------------------------------

    def has_type(self, name: str) -> bool:
        return name in self.node_types or name in self.edge_types

    def type_def(self, name: str) -> NodeType | EdgeType:
        if name in self.node_types:
            return self.node_types[name]
        if name in self.edge_types:
            return self.edge_types[name]
        raise ArkSemanticError(f"unknown type {name!r} in language {self.name!r}", code="unknown-type")

    def ancestors(self, name: str) -> list[str]:
        """``name`` followed by its parents, nearest first."""
        out = []
        cur: str | None = name
        while cur is not None:
            out.append(cur)
            cur = self.type_def(cur).parent
        return out

    def distance(self, name: str, ancestor: str) -> int | None:
        """Inheritance hops from ``name`` up to ``ancestor``; None if unrelated."""
        chain = self.ancestors(name)
        return chain.index(ancestor) if ancestor in chain else None

    def subtype_of(self, name: str, ancestor: str) -> bool:
        self.type_def(ancestor)
        return self.distance(name, ancestor) is not None

    def is_ancestor_language(self, other: str) -> bool:
        lang: Language | None = self
        while lang is not None:
            if lang.name == other:
                return True
            lang = lang.parent
        return False

    # -- slot queries ------------------------------------------------------

    def slot_type(self, type_name: str, slot: str, attr: str, index: int) -> ast.SigType | None:
        if not self.has_type(type_name):
            return None
        t = self.type_def(type_name)
        if slot == "attr":
            return t.attrs.get(attr)
        return t.inits.get(index) if isinstance(t, NodeType) else None

    def rule_attr_lookup(self, rule: ast.ProdRule):
        bound = {rule.edge: rule.edge_type, rule.src: rule.src_type, rule.dst: rule.dst_type}

        def lookup(owner: str, name: str) -> ast.SigType | None:
            t = bound.get(owner)
            if t is None or not self.has_type(t):
                return None
            return self.type_def(t).attrs.get(name)

        return lookup

    # -- dispatch -----------------------------------------------------------

    def dispatch(self, edge_type: str, src_type: str, dst_type: str, *, target: str,
                 off: bool = False) -> tuple[Rule, int] | None:
        """Most specific rule for a connection and its inheritance distance.

        ``target`` is "src", "dst" or "self"; self rules only ever apply to
        self-loop edges and the directed roles only to ordinary edges.
        """
        best: list[tuple[int, Rule]] = []
        for rule in self.rules:
            r = rule.ast
            if rule.role != target or r.off != off:
                continue
            d0 = self.distance(edge_type, r.edge_type)
            d1 = self.distance(src_type, r.src_type)
            d2 = self.distance(dst_type, r.dst_type)
            if d0 is None or d1 is None or d2 is None:
                continue
            best.append((d0 + d1 + d2, rule))
        if not best:
            return None
        best.sort(key=lambda x: x[0])
        dist = best[0][0]
        tied = [r for d, r in best if d == dist]
        if len(tied) > 1:
            names = "; ".join(str(r) for r in tied)
            raise AmbiguousRuleError(
                f"ambiguous production rules for ({edge_type}, {src_type}, {dst_type}) "
                f"targeting {target} at distance {dist}: {names}")
        return tied[0], dist

    def patterns_for(self, node_type: str) -> tuple[list[Pattern], list[Pattern]]:
        """ACCEPT and REJECT patterns collected from ``node_type`` and its ancestors."""
        chain = set(self.ancestors(node_type))
        acc = [p for p in self.patterns if p.node_type in chain and p.kind == "acc"]
        rej = [p for p in self.patterns if p.node_type in chain and p.kind == "rej"]
        return acc, rej

    def describe(self) -> str:
        lines = [f"lang {self.name}" + (f" inherits {self.parent.name}" if self.parent else "")]
        for t in self.node_types.values():
            lines.append(f"  node-type {t.name}({t.order}, {t.reduction})"
                         + (f" inherits {t.parent}" if t.parent else ""))
        for t in self.edge_types.values():
            lines.append(f"  edge-type {'fixed ' if t.fixed else ''}{t.name}"
                         + (f" inherits {t.parent}" if t.parent else ""))
        lines.append(f"  {len(self.rules)} production rule(s), {len(self.patterns)} validity pattern(s)")
        return "\n".join(lines)


def lookup_production(lang: Language, edge_type: str, src_type: str, dst_type: str, *,
                      target: str = "dst", off: bool = False) -> Rule | None:
    for name in (edge_type, src_type, dst_type):
        lang.type_def(name)
    found = lang.dispatch(edge_type, src_type, dst_type, target=target, off=off)
    return None if found is None else found[0]


def subtype_of(lang: Language, name: str, ancestor: str) -> bool:
    lang.type_def(name)
    return lang.subtype_of(name, ancestor)


# ---------------------------------------------------------------------------
# resolution


class _Resolver:
    def __init__(self, node: ast.LangDef, parent: Language | None):
        self.node = node
        self.parent = parent
        self.diags: list[Diagnostic] = []
        self.lang = Language(node.name, parent)
        if parent is not None:
            self.lang.node_types = dict(parent.node_types)
            self.lang.edge_types = dict(parent.edge_types)
            self.lang.rules = list(parent.rules)
            self.lang.patterns = list(parent.patterns)
            self.lang.global_checks = list(parent.global_checks)

    def error(self, msg: str, span, code: str) -> None:
        self.diags.append(Diagnostic(msg, span, code))

    def run(self) -> Language:
        own: set[str] = set()
        for st in self.node.body:
            if isinstance(st, ast.TypeDecl):
                if self.lang.has_type(st.name):
                    self.error(f"duplicate type name {st.name!r}", st.span, "duplicate-type")
                    continue
                resolved = self.node_type(st) if st.category == "node" else self.edge_type(st)
                if resolved is None:
                    continue
                if isinstance(resolved, NodeType):
                    self.lang.node_types[resolved.name] = resolved
                else:
                    self.lang.edge_types[resolved.name] = resolved
                own.add(st.name)
        self.lang.own_types = frozenset(own)
        inherited_keys = {r.key for r in self.lang.rules}
        own_keys: set[tuple] = set()
        for st in self.node.body:
            if isinstance(st, ast.ProdRule):
                self.rule(st, inherited_keys, own_keys)
            elif isinstance(st, ast.Cstr):
                self.cstr(st)
            elif isinstance(st, ast.ExternFunc):
                if st.name not in self.lang.global_checks:
                    self.lang.global_checks.append(st.name)
        if self.diags:
            raise CheckFailed(self.diags)
        return self.lang

    def _inherit(self, st: ast.TypeDecl, table: dict):
        if st.parent is None:
            return None
        parent = table.get(st.parent)
        if parent is None:
            kind = "node" if st.category == "node" else "edge"
            self.error(f"{st.name!r} inherits from unknown {kind} type {st.parent!r}", st.span, "unknown-type")
        return parent

    def _merge_attrs(self, st: ast.TypeDecl, base: dict[str, ast.SigType]) -> dict[str, ast.SigType]:
        attrs = dict(base)
        seen: set[str] = set()
        for item in st.body:
            if not isinstance(item, ast.AttrDecl):
                continue
            if item.name in seen:
                self.error(f"duplicate attribute {item.name!r} in {st.name!r}", item.span, "duplicate-attr")
                continue
            seen.add(item.name)
            if item.name in base:
                self._narrowing(st.name, f"attribute {item.name!r}", base[item.name], item.type, item.span)
            attrs[item.name] = item.type
        return attrs

    def _narrowing(self, owner: str, what: str, old: ast.SigType, new: ast.SigType, span) -> None:
        if old.kind != new.kind:
            self.error(f"{owner}: redefined {what} changes datatype from {old.kind} to {new.kind}",
                       span, "datatype-change")
            return
        if old.kind == "lambd":
            if old.arity != new.arity:
                self.error(f"{owner}: redefined {what} changes lambda arity", span, "datatype-change")
            return
        if new.lo < old.lo or new.hi > old.hi:
            self.error(f"{owner}: redefined {what} range {new.describe()} is wider than the "
                       f"inherited {old.describe()}; it must be a smaller value range", span, "widened-range")

    def node_type(self, st: ast.TypeDecl) -> NodeType | None:
        parent = self._inherit(st, self.lang.node_types)
        if st.parent is not None and parent is None:
            return None
        order, reduction = st.order, st.reduction
        if parent is not None:
            if order is not None and (order != parent.order or reduction != parent.reduction):
                self.error(f"{st.name!r} must inherit the parent type's node order and reduction "
                           f"({parent.order}, {parent.reduction})", st.span, "order-mismatch")
                return None
            order, reduction = parent.order, parent.reduction
        attrs = self._merge_attrs(st, parent.attrs if parent else {})
        inits = dict(parent.inits) if parent else {}
        seen: set[int] = set()
        for item in st.body:
            if not isinstance(item, ast.InitDecl):
                continue
            if item.index in seen:
                self.error(f"duplicate initial value slot {item.index} in {st.name!r}", item.span,
                           "duplicate-init")
                continue
            seen.add(item.index)
            if not 0 <= item.index < order:
                self.error(f"{st.name!r} has order {order}; initial value slot {item.index} is outside "
                           f"0..{order - 1}", item.span, "init-slot")
                continue
            if item.type.kind == "lambd":
                self.error(f"initial value slot {item.index} of {st.name!r} cannot be a lambda",
                           item.span, "datatype-change")
                continue
            if item.index in inits:
                self._narrowing(st.name, f"initial value {item.index}", inits[item.index], item.type, item.span)
            inits[item.index] = item.type
        missing = [i for i in range(order) if i not in inits]
        if missing:
            self.error(f"{st.name!r} is missing initial value declaration(s) for derivative(s) "
                       f"{', '.join(map(str, missing))}", st.span, "missing-init")
        return NodeType(st.name, order, reduction, attrs, inits, st.parent, self.node.name)

    def edge_type(self, st: ast.TypeDecl) -> EdgeType | None:
        parent = self._inherit(st, self.lang.edge_types)
        if st.parent is not None and parent is None:
            return None
        for item in st.body:
            if isinstance(item, ast.InitDecl):
                self.error(f"edge type {st.name!r} may contain only attribute statements", item.span,
                           "edge-init")
        attrs = self._merge_attrs(st, parent.attrs if parent else {})
        fixed = st.fixed or (parent is not None and parent.fixed)
        return EdgeType(st.name, attrs, fixed, st.parent, self.node.name)

    def rule(self, st: ast.ProdRule, inherited: set[tuple], own: set[tuple]) -> None:
        ok = True
        if st.edge_type not in self.lang.edge_types:
            self.error(f"production rule references unknown edge type {st.edge_type!r}", st.span, "unknown-type")
            ok = False
        for t in (st.src_type, st.dst_type):
            if t not in self.lang.node_types:
                self.error(f"production rule references unknown node type {t!r}", st.span, "unknown-type")
                ok = False
        names = {st.edge, st.src, st.dst}
        if st.edge in (st.src, st.dst):
            self.error(f"edge binding {st.edge!r} clashes with a node binding", st.span, "binding")
            ok = False
        if st.src == st.dst and st.src_type != st.dst_type:
            self.error("a self-referencing rule must use the same node type for both ends", st.span, "binding")
            ok = False
        for d in checks.check_rule(st, self.lang.rule_attr_lookup(st) if ok else None):
            self.diags.append(d)
            ok = False
        if not ok or not names:
            return
        rule = Rule(st, self.node.name)
        if self.parent is not None:
            if rule.key in inherited:
                self.error(f"{rule} restates an inherited rule; parent rules cannot be overridden",
                           st.span, "override")
                return
            if not {st.edge_type, st.src_type, st.dst_type} & self.lang.own_types:
                self.error(f"{rule} must include at least one type declared in {self.node.name!r}",
                           st.span, "no-new-type")
                return
        if rule.key in own:
            self.error(f"duplicate production rule {rule}", st.span, "duplicate-rule")
            return
        own.add(rule.key)
        self.lang.rules.append(rule)

    def cstr(self, st: ast.Cstr) -> None:
        ok = True
        if st.node_type not in self.lang.node_types:
            self.error(f"validity rule targets unknown node type {st.node_type!r}", st.span, "unknown-type")
            ok = False
        referenced = {st.node_type}
        for vexpr in st.exprs:
            for c in vexpr.clauses:
                referenced.add(c.edge_type)
                referenced.update(c.peers)
                if c.edge_type not in self.lang.edge_types:
                    self.error(f"match clause references unknown edge type {c.edge_type!r}", c.span,
                               "unknown-type")
                    ok = False
                for p in c.peers:
                    if p not in self.lang.node_types:
                        self.error(f"match clause references unknown node type {p!r}", c.span, "unknown-type")
                        ok = False
                if c.node is not None and c.node != st.node:
                    self.error(f"match clause names {c.node!r} but the rule's node is {st.node!r}", c.span,
                               "unbound")
                    ok = False
        if self.parent is not None and not referenced & self.lang.own_types:
            self.error(f"validity rule for {st.node_type!r} must include at least one type declared in "
                       f"{self.node.name!r}", st.span, "no-new-type")
            ok = False
        if not ok:
            return
        for vexpr in st.exprs:
            self.lang.patterns.append(Pattern(vexpr.kind, st.node_type, st.node, tuple(vexpr.clauses),
                                              self.node.name))


def resolve_language(node: ast.LangDef, registry: "Registry") -> Language:
    parent = None
    if node.parent is not None:
        if node.parent not in registry.languages:
            raise ArkSemanticError(f"language {node.name!r} inherits from unknown language {node.parent!r}",
                                   node.span, "unknown-parent")
        parent = registry.languages[node.parent]
    return _Resolver(node, parent).run()


class Registry:
    """Named languages and functions loaded so far.

    Mutation is single-writer: programs are added during loading, after which
    the registry is only read.
    """

    def __init__(self) -> None:
        self.languages: dict[str, Language] = {}
        self.functions: dict[str, ast.FuncDef] = {}

    def get(self, name: str) -> Language | None:
        return self.languages.get(name)

    def language(self, name: str) -> Language:
        lang = self.languages.get(name)
        if lang is None:
            raise ArkSemanticError(f"unknown language {name!r}", code="unknown-language")
        return lang

    def function(self, name: str) -> ast.FuncDef:
        func = self.functions.get(name)
        if func is None:
            raise ArkSemanticError(f"unknown function {name!r}", code="unknown-function")
        return func

    def copy(self) -> "Registry":
        other = Registry()
        other.languages = dict(self.languages)
        other.functions = dict(self.functions)
        return other

    def add_program(self, prog: ast.SourceProgram) -> list[Language]:
        """Resolve every language of ``prog`` (parents first) and record its functions.

        Languages of one program may appear in any order; a parent defined
        later in the same program is resolved first.
        """
        pending = {lang.name: lang for lang in prog.languages}
        for name in pending:
            if name in self.languages:
                raise ArkSemanticError(f"duplicate language name {name!r}", pending[name].span, "duplicate")
        for func in prog.functions:
            if func.name in self.functions:
                raise ArkSemanticError(f"duplicate function name {func.name!r}", func.span, "duplicate")
        out = []
        for node in _parent_first(prog.languages, pending):
            lang = resolve_language(node, self)
            self.languages[lang.name] = lang
            out.append(lang)
        for func in prog.functions:
            self.functions[func.name] = func
        return out


def _parent_first(langs: Iterable[ast.LangDef], pending: dict[str, ast.LangDef]) -> list[ast.LangDef]:
    order: list[ast.LangDef] = []
    state: dict[str, int] = {}

    def visit(node: ast.LangDef) -> None:
        mark = state.get(node.name)
        if mark == 2:
            return
        if mark == 1:
            raise ArkSemanticError(f"cyclic language inheritance through {node.name!r}", node.span, "cycle")
        state[node.name] = 1
        if node.parent in pending:
            visit(pending[node.parent])
        state[node.name] = 2
        order.append(node)

    for node in langs:
        visit(node)
    return order

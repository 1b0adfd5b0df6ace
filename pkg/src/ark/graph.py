"""Dynamical graphs: construction, function invocation, mismatch sampling, export.

:class:`GraphBuilder` exposes the five function-body statements as method
calls.  :func:`invoke` drives a builder from a parsed ``func`` definition, so
textual functions and host-level generators produce the same kind of graph.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ArkSemanticError, Diagnostic, GraphError
from .frontend import checks
from .frontend import nodes as ast
from .frontend.parser import parse_expression
from .frontend.printer import expr as print_expr
from .functions import Env, evaluate, evaluate_bool
from .lang import EdgeType, Language, NodeType

Value = Any  # float, or ast.Lambda for lambd-typed slots


@dataclass
class Node:
    name: str
    type: str
    attrs: dict[str, Value] = field(default_factory=dict)
    inits: dict[int, float] = field(default_factory=dict)
    nominal: dict[str, float] = field(default_factory=dict)  # only mismatch-sampled slots


@dataclass
class Edge:
    name: str
    type: str
    src: str
    dst: str
    attrs: dict[str, Value] = field(default_factory=dict)
    on: bool = True
    nominal: dict[str, float] = field(default_factory=dict)

    @property
    def is_self(self) -> bool:
        return self.src == self.dst


@dataclass
class DynamicalGraph:
    lang: str
    seed: int = 0
    nodes: dict[str, Node] = field(default_factory=dict)
    edges: dict[str, Edge] = field(default_factory=dict)
    clamped: int = 0

    def incident(self, node: str, include_off: bool = False) -> list[Edge]:
        return [e for e in self.edges.values()
                if (e.src == node or e.dst == node) and (include_off or e.on)]

    def element(self, name: str) -> Node | Edge:
        if name in self.nodes:
            return self.nodes[name]
        if name in self.edges:
            return self.edges[name]
        raise GraphError(f"no node or edge named {name!r}")

    def with_language(self, lang: str) -> "DynamicalGraph":
        """The same graph tagged with another (derived) language name."""
        g = DynamicalGraph(lang, self.seed, dict(self.nodes), dict(self.edges), self.clamped)
        return g


# ---------------------------------------------------------------------------
# mismatch sampling


def slot_key(seed: int, element: str, attr: str | None, index: int) -> np.random.SeedSequence:
    """Stable per-slot entropy; unrelated slots never share a stream."""
    text = f"{element}\x1f{attr if attr is not None else ''}\x1f{index}".encode()
    digest = hashlib.blake2b(text, digest_size=16).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(seed) >> 32 & 0xFFFFFFFF, *words])


def sample_mismatch(nominal: float, mm: tuple[float, float], seed: int, element: str,
                    attr: str | None, index: int) -> float:
    std = abs(nominal) * mm[0] + mm[1]
    if std == 0.0:
        return nominal
    rng = np.random.default_rng(slot_key(seed, element, attr, index))
    return float(rng.normal(nominal, std))


# ---------------------------------------------------------------------------
# builder


def _check_value(sig: ast.SigType, value: Value, where: str) -> Value:
    if sig.kind == "lambd":
        if not isinstance(value, ast.Lambda):
            raise GraphError(f"{where} expects a lambda with {sig.arity} argument(s)", code="type")
        if len(value.params) != sig.arity:
            raise GraphError(f"{where}: lambda has {len(value.params)} argument(s) but the datatype "
                             f"takes {sig.arity}; they must have the same number of arguments", code="arity")
        return value
    if isinstance(value, ast.Lambda) or isinstance(value, bool) or not isinstance(value, (int, float)):
        raise GraphError(f"{where} expects a {sig.kind} value, got {value!r}", code="type")
    value = float(value)
    if math.isnan(value):
        raise GraphError(f"{where} is NaN", code="range")
    if sig.kind == "int" and value != int(value):
        raise GraphError(f"{where} expects an integer, got {value!r}", code="type")
    if not sig.contains(value):
        raise GraphError(f"{where} value {value!r} is outside the declared range {sig.describe()}",
                         code="range")
    return value


class GraphBuilder:
    """Builds a :class:`DynamicalGraph` one statement at a time.

    ``mismatch=False`` assigns nominal values to mismatch-typed slots instead
    of sampling them, which is how a hardware language reproduces its
    parent's ideal behaviour.
    """

    def __init__(self, lang: Language, seed: int = 0, mismatch: bool = True):
        self.lang = lang
        self.seed = int(seed)
        self.mismatch = mismatch
        self.graph = DynamicalGraph(lang.name, self.seed)
        self._switches: dict[str, list[bool]] = {}

    # -- statements ----------------------------------------------------------

    def node(self, name: str, type_name: str) -> Node:
        self._fresh(name)
        if type_name not in self.lang.node_types:
            raise GraphError(f"unknown node type {type_name!r} in language {self.lang.name!r}",
                             code="unknown-type")
        n = Node(name, type_name)
        self.graph.nodes[name] = n
        return n

    def edge(self, src: str, dst: str, name: str, type_name: str) -> Edge:
        self._fresh(name)
        if type_name not in self.lang.edge_types:
            raise GraphError(f"unknown edge type {type_name!r} in language {self.lang.name!r}",
                             code="unknown-type")
        for end in (src, dst):
            if end not in self.graph.nodes:
                raise GraphError(f"edge {name!r} references undeclared node {end!r}", code="unbound")
        e = Edge(name, type_name, src, dst)
        self.graph.edges[name] = e
        return e

    def set_attr(self, owner: str, attr: str, value: Value, from_arg: bool = False) -> None:
        el = self._element(owner)
        sig = self._type(el).attrs.get(attr)
        if sig is None:
            raise GraphError(f"{el.type} {owner!r} has no attribute {attr!r}", code="unbound")
        if from_arg and sig.const:
            raise GraphError(f"{owner}.{attr} is const; a function argument may only be assigned "
                             f"to a slot whose definition is not const", code="const")
        where = f"{owner}.{attr}"
        value = _check_value(sig, value, where)
        el.attrs[attr] = self._sample(el, sig, value, attr, -1, where)

    def set_init(self, node: str, index: int, value: Value, from_arg: bool = False) -> None:
        if node not in self.graph.nodes:
            raise GraphError(f"set-init on undeclared node {node!r}", code="unbound")
        n = self.graph.nodes[node]
        sig = self.lang.node_types[n.type].inits.get(index)
        if sig is None:
            raise GraphError(f"node type {n.type!r} has no initial value slot {index}", code="init-slot")
        if from_arg and sig.const:
            raise GraphError(f"{node}({index}) is const; a function argument may only be assigned "
                             f"to a slot whose definition is not const", code="const")
        where = f"{node}({index})"
        value = _check_value(sig, value, where)
        n.inits[index] = self._sample(n, sig, value, None, index, where)

    def set_edge(self, edge: str, when: bool) -> None:
        if edge not in self.graph.edges:
            raise GraphError(f"switch statement on undeclared edge {edge!r}", code="unbound")
        e = self.graph.edges[edge]
        if self.lang.edge_types[e.type].fixed:
            raise GraphError(f"edge {edge!r} has fixed type {e.type!r}; switch statements apply only "
                             f"to edges that are not fixed", code="fixed")
        self._switches.setdefault(edge, []).append(bool(when))

    # -- completion ----------------------------------------------------------

    def finish(self) -> DynamicalGraph:
        missing = []
        for n in self.graph.nodes.values():
            t = self.lang.node_types[n.type]
            missing += [f"{n.name}.{a}" for a in t.attrs if a not in n.attrs]
            missing += [f"{n.name}({i})" for i in t.inits if i not in n.inits]
        for e in self.graph.edges.values():
            t = self.lang.edge_types[e.type]
            missing += [f"{e.name}.{a}" for a in t.attrs if a not in e.attrs]
        if missing:
            raise GraphError("unset attribute or initial value slot(s): " + ", ".join(missing), code="unset")
        for name, e in self.graph.edges.items():
            guards = self._switches.get(name)
            e.on = True if guards is None else any(guards)
        return self.graph

    # -- helpers ---------------------------------------------------------------

    def _fresh(self, name: str) -> None:
        if name in self.graph.nodes or name in self.graph.edges:
            raise GraphError(f"duplicate node or edge name {name!r}", code="duplicate")

    def _element(self, name: str) -> Node | Edge:
        if name in self.graph.nodes:
            return self.graph.nodes[name]
        if name in self.graph.edges:
            return self.graph.edges[name]
        raise GraphError(f"set-attr on undeclared node or edge {name!r}", code="unbound")

    def _type(self, el: Node | Edge) -> NodeType | EdgeType:
        return self.lang.node_types[el.type] if isinstance(el, Node) else self.lang.edge_types[el.type]

    def _sample(self, el: Node | Edge, sig: ast.SigType, value: Value, attr: str | None, index: int,
                where: str) -> Value:
        if sig.kind != "real" or sig.mm is None or not self.mismatch:
            return value
        sampled = sample_mismatch(value, sig.mm, self.seed, el.name, attr, index)
        if sampled < sig.lo or sampled > sig.hi:
            sampled = min(max(sampled, sig.lo), sig.hi)
            self.graph.clamped += 1
        el.nominal[attr if attr is not None else f"init({index})"] = value
        return sampled


# ---------------------------------------------------------------------------
# function invocation


def _bind_args(func: ast.FuncDef, args: Mapping[str, Value]) -> dict[str, Value]:
    declared = {a.key: a for a in func.args}
    extra = sorted(set(args) - set(declared))
    if extra:
        raise GraphError(f"{func.name}: unknown argument(s) {', '.join(extra)}", code="argument")
    bound: dict[str, Value] = {}
    for key, arg in declared.items():
        if key not in args:
            raise GraphError(f"{func.name}: missing argument {key!r}", code="argument")
        value = args[key]
        if arg.type.kind == "lambd" and isinstance(value, str):
            value = parse_expression(value)
        bound[key] = _check_value(arg.type, value, f"argument {key!r}")
    return bound


def invoke(func: ast.FuncDef, lang: Language, args: Mapping[str, Value] | None = None, seed: int = 0,
           *, mismatch: bool = True) -> DynamicalGraph:
    """Execute ``func`` with ``args``; a pure function of (func, args, seed)."""
    if not lang.is_ancestor_language(func.lang):
        raise GraphError(f"function {func.name!r} uses {func.lang!r}, which {lang.name!r} does not inherit",
                         func.span, "language")
    bound = _bind_args(func, args or {})
    plain = {a.name: bound[a.key] for a in func.args if a.attr is None}
    direct = [a for a in func.args if a.attr is not None]
    names = set(plain)
    b = GraphBuilder(lang, seed, mismatch)
    env = Env(plain)
    for st in func.body:
        try:
            if isinstance(st, ast.NodeSt):
                b.node(st.name, st.type)
                _assign_direct(b, direct, st.name, bound)
            elif isinstance(st, ast.EdgeSt):
                b.edge(st.src, st.dst, st.name, st.type)
                _assign_direct(b, direct, st.name, bound)
            elif isinstance(st, ast.SetAttr):
                b.set_attr(st.owner, st.attr, evaluate(st.value, env), checks.uses_names(st.value, names))
            elif isinstance(st, ast.SetInit):
                b.set_init(st.node, st.index, evaluate(st.value, env), checks.uses_names(st.value, names))
            elif isinstance(st, ast.SetEdge):
                b.set_edge(st.edge, evaluate_bool(st.when, env))
        except GraphError as exc:
            if exc.span is None:
                exc.span = st.span
            raise
    for a in direct:
        if a.name not in b.graph.nodes and a.name not in b.graph.edges:
            raise GraphError(f"argument {a.key!r} names undeclared element {a.name!r}", a.span, "unbound")
    graph = b.finish()
    graph.lang = lang.name
    return graph


def _assign_direct(b: GraphBuilder, direct: list[ast.FuncArg], element: str, bound: dict) -> None:
    for a in direct:
        if a.name == element:
            b.set_attr(element, a.attr, bound[a.key], from_arg=True)


def check_function_static(func: ast.FuncDef, lang: Language) -> list[Diagnostic]:
    """Invocation-independent checks on a function body against its language."""
    out = checks.check_function(func, lang.slot_type)
    names = {a.name for a in func.args if a.attr is None}
    kinds: dict[str, str] = {}
    for st in func.body:
        if isinstance(st, ast.NodeSt):
            if st.type not in lang.node_types:
                out.append(Diagnostic(f"unknown node type {st.type!r}", st.span, "unknown-type"))
            kinds[st.name] = st.type
        elif isinstance(st, ast.EdgeSt):
            if st.type not in lang.edge_types:
                out.append(Diagnostic(f"unknown edge type {st.type!r}", st.span, "unknown-type"))
            kinds[st.name] = st.type
        elif isinstance(st, ast.SetAttr):
            sig = lang.slot_type(kinds.get(st.owner, ""), "attr", st.attr, 0)
            if st.owner in kinds and lang.has_type(kinds[st.owner]) and sig is None:
                out.append(Diagnostic(f"{kinds[st.owner]} {st.owner!r} has no attribute {st.attr!r}",
                                      st.span, "unbound"))
            if sig is not None and sig.const and checks.uses_names(st.value, names):
                out.append(Diagnostic(f"{st.owner}.{st.attr} is const; a function argument may only be "
                                      f"assigned to a slot whose definition is not const", st.span, "const"))
        elif isinstance(st, ast.SetInit):
            sig = lang.slot_type(kinds.get(st.node, ""), "init", "", st.index)
            if sig is not None and sig.const and checks.uses_names(st.value, names):
                out.append(Diagnostic(f"{st.node}({st.index}) is const; a function argument may only be "
                                      f"assigned to a slot whose definition is not const", st.span, "const"))
        elif isinstance(st, ast.SetEdge):
            t = kinds.get(st.edge)
            if t in lang.edge_types and lang.edge_types[t].fixed:
                out.append(Diagnostic(f"edge {st.edge!r} has fixed type {t!r}; switch statements apply only "
                                      f"to edges that are not fixed", st.span, "fixed"))
    for a in func.args:
        if a.attr is not None and a.name in kinds:
            sig = lang.slot_type(kinds[a.name], "attr", a.attr, 0)
            if sig is not None and sig.const:
                out.append(Diagnostic(f"{a.key} is const; a function argument may only be assigned to a "
                                      f"slot whose definition is not const", a.span, "const"))
    return out


# ---------------------------------------------------------------------------
# export / import


def _value_to_json(v: Value) -> Any:
    if isinstance(v, ast.Lambda):
        return {"lambda": print_expr(v)}
    return v


def _value_from_json(v: Any) -> Value:
    if isinstance(v, dict):
        return parse_expression(v["lambda"])
    return float(v)


def to_json_data(g: DynamicalGraph) -> dict[str, Any]:
    return {
        "format": "ark-graph",
        "version": 1,
        "lang": g.lang,
        "seed": g.seed,
        "clamped": g.clamped,
        "nodes": {
            n.name: {
                "type": n.type,
                "attrs": {k: _value_to_json(v) for k, v in n.attrs.items()},
                "init": {str(i): v for i, v in sorted(n.inits.items())},
                "nominal": dict(n.nominal),
            }
            for n in g.nodes.values()
        },
        "edges": {
            e.name: {
                "type": e.type,
                "src": e.src,
                "dst": e.dst,
                "on": e.on,
                "attrs": {k: _value_to_json(v) for k, v in e.attrs.items()},
                "nominal": dict(e.nominal),
            }
            for e in g.edges.values()
        },
    }


def export_json(g: DynamicalGraph) -> str:
    return json.dumps(to_json_data(g), indent=2) + "\n"


def import_json(text: str) -> DynamicalGraph:
    data = json.loads(text)
    if data.get("format") != "ark-graph":
        raise ArkSemanticError("not an ark graph document", code="format")
    g = DynamicalGraph(data["lang"], int(data["seed"]), clamped=int(data.get("clamped", 0)))
    for name, nd in data["nodes"].items():
        g.nodes[name] = Node(name, nd["type"], {k: _value_from_json(v) for k, v in nd["attrs"].items()},
                             {int(i): float(v) for i, v in nd["init"].items()},
                             {k: float(v) for k, v in nd.get("nominal", {}).items()})
    for name, ed in data["edges"].items():
        g.edges[name] = Edge(name, ed["type"], ed["src"], ed["dst"],
                             {k: _value_from_json(v) for k, v in ed["attrs"].items()}, bool(ed["on"]),
                             {k: float(v) for k, v in ed.get("nominal", {}).items()})
    return g


_PALETTE = [("ellipse", "#b39ddb"), ("box", "#a5d6a7"), ("diamond", "#fff59d"), ("hexagon", "#90caf9"),
            ("octagon", "#ffab91"), ("house", "#80cbc4"), ("triangle", "#f48fb1"), ("parallelogram", "#e6ee9c")]


def export_dot(g: DynamicalGraph) -> str:
    styles = {t: _PALETTE[i % len(_PALETTE)] for i, t in enumerate(sorted({n.type for n in g.nodes.values()}))}
    lines = [f'digraph "{g.lang}" {{']
    for n in g.nodes.values():
        shape, color = styles[n.type]
        lines.append(f'  "{n.name}" [label="{n.name}\\n{n.type}", shape={shape}, style=filled, '
                     f'fillcolor="{color}"];')
    for e in g.edges.values():
        style = "solid" if e.on else "dashed"
        lines.append(f'  "{e.src}" -> "{e.dst}" [label="{e.name}:{e.type}", style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"

"""Direct interpreter of the dynamical-graph semantics.

No rewriting or code generation happens here: for each node the rule bodies
of its incident edges are evaluated in place against the graph's attribute
values, then combined with the node's reduction.  It exists to cross-check
:mod:`ark.compiler` and is far too slow for simulation.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CompileError
from .functions import Env, evaluate
from .graph import DynamicalGraph
from .lang import Language


def state_layout(graph: DynamicalGraph, lang: Language) -> list[tuple[str, int]]:
    """(node, derivative) pairs in declaration order; the compiler uses the same order."""
    out = []
    for n in graph.nodes.values():
        out += [(n.name, i) for i in range(lang.node_types[n.type].order)]
    return out


def interpret_rhs(graph: DynamicalGraph, lang: Language, y, t: float) -> np.ndarray:
    layout = state_layout(graph, lang)
    where = {slot: k for k, slot in enumerate(layout)}
    y = [float(v) for v in y]
    algebraic: dict[str, float] = {}
    busy: set[str] = set()

    def value(node: str) -> float:
        if (node, 0) in where:
            return y[where[(node, 0)]]
        if node in algebraic:
            return algebraic[node]
        if node in busy:
            raise CompileError(f"algebraic cycle through {node!r}", code="cycle")
        busy.add(node)
        algebraic[node] = aggregate(node)
        busy.discard(node)
        return algebraic[node]

    def aggregate(node: str) -> float:
        terms = []
        for e in sorted(graph.edges.values(), key=lambda e: e.name):
            if node not in (e.src, e.dst):
                continue
            roles = ["self"] if e.is_self else [r for r, n in (("src", e.src), ("dst", e.dst)) if n == node]
            for role in roles:
                found = lang.dispatch(e.type, graph.nodes[e.src].type, graph.nodes[e.dst].type,
                                      target=role, off=not e.on)
                if found is None:
                    continue
                r = found[0].ast
                bound = {r.edge: e, r.src: graph.nodes[e.src], r.dst: graph.nodes[e.dst]}
                env = Env(attr=lambda owner, name, b=bound: b[owner].attrs[name],
                          var=lambda x, b=bound: value(b[x].name), time=t)
                terms.append(evaluate(r.expr, env))
        if not terms:
            return 0.0
        red = lang.node_types[graph.nodes[node].type].reduction
        return math.fsum(terms) if red == "sum" else math.prod(terms)

    out = np.empty(len(layout))
    for k, (node, i) in enumerate(layout):
        p = lang.node_types[graph.nodes[node].type].order
        out[k] = y[where[(node, i + 1)]] if i < p - 1 else aggregate(node)
    return out

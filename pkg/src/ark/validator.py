"""Graph validation: named global checks, then per-node pattern matching.

Deciding whether a node is described by a pattern is a small assignment
problem.  Each incident edge (a row) goes to exactly one eligible clause (a
column) and every column's load must lie in its cardinality range.  It is
solved exactly as a feasible flow with lower bounds.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ArkSemanticError
from .frontend import nodes as ast
from .graph import DynamicalGraph, Edge
from .lang import AmbiguousRuleError, Language, Pattern


@dataclass
class CheckResult:
    ok: bool
    message: str = ""
    details: dict[str, Any] = field(default_factory=dict)


GlobalCheck = Callable[[DynamicalGraph, Language], CheckResult]
GLOBAL_CHECKS: dict[str, GlobalCheck] = {}


def register_global_check(name: str, fn: GlobalCheck) -> None:
    GLOBAL_CHECKS[name] = fn


def global_check(name: str, graph: DynamicalGraph, lang: Language) -> CheckResult:
    fn = GLOBAL_CHECKS.get(name)
    if fn is None:
        raise ArkSemanticError(f"unknown global check {name!r}", code="unknown-check")
    return fn(graph, lang)


# ---------------------------------------------------------------------------
# clause matching


def matches_clause(graph: DynamicalGraph, lang: Language, node: str, edge: Edge,
                   clause: ast.MatchClause) -> bool:
    if not lang.subtype_of(edge.type, clause.edge_type):
        return False
    if clause.direction == "any":
        return True
    if edge.is_self:
        return False  # directed forms describe connections to other nodes
    if clause.direction == "out":
        if edge.src != node:
            return False
        peer = edge.dst
    else:
        if edge.dst != node:
            return False
        peer = edge.src
    peer_type = graph.nodes[peer].type
    return any(lang.subtype_of(peer_type, p) for p in clause.peers)


def eligibility(graph: DynamicalGraph, lang: Language, node: str,
                clauses: list[ast.MatchClause] | tuple[ast.MatchClause, ...],
                rows: list[Edge] | None = None) -> tuple[list[Edge], list[list[bool]]]:
    if rows is None:
        rows = graph.incident(node)
    return rows, [[matches_clause(graph, lang, node, e, c) for c in clauses] for e in rows]


# ---------------------------------------------------------------------------
# exact assignment feasibility


def _max_flow(cap: list[list[int]], s: int, t: int) -> int:
    n = len(cap)
    flow = 0
    while True:
        parent = [-1] * n
        parent[s] = s
        q = deque([s])
        while q and parent[t] < 0:
            u = q.popleft()
            for v in range(n):
                if parent[v] < 0 and cap[u][v] > 0:
                    parent[v] = u
                    q.append(v)
        if parent[t] < 0:
            return flow
        push = None
        v = t
        while v != s:
            u = parent[v]
            push = cap[u][v] if push is None else min(push, cap[u][v])
            v = u
        v = t
        while v != s:
            u = parent[v]
            cap[u][v] -= push
            cap[v][u] += push
            v = u
        flow += push


def assignment_feasible(matrix: list[list[bool]], bounds: list[tuple[int, int | None]]) -> bool:
    """Exact feasibility of unity row sums with ranged column sums.

    Network: source -> row (exactly 1) -> eligible column (<= 1) -> sink
    (between lo and hi).  Lower bounds are removed with the usual
    circulation transform and checked by one max-flow.
    """
    rows, cols = len(matrix), len(bounds)
    if any(hi is not None and lo > hi for lo, hi in bounds):
        return False
    if sum(lo for lo, _ in bounds) > rows:
        return False
    for r in matrix:
        if not any(r):
            return False
    # vertices: s, rows, cols, t, S*, T*
    s, t = 0, rows + cols + 1
    ss, tt = t + 1, t + 2
    n = t + 3
    cap = [[0] * n for _ in range(n)]
    excess = [0] * n

    def arc(u: int, v: int, lo: int, hi: int) -> None:
        cap[u][v] += hi - lo
        excess[v] += lo
        excess[u] -= lo

    for i in range(rows):
        arc(s, 1 + i, 1, 1)
        for j in range(cols):
            if matrix[i][j]:
                arc(1 + i, 1 + rows + j, 0, 1)
    for j, (lo, hi) in enumerate(bounds):
        arc(1 + rows + j, t, lo, rows if hi is None else min(hi, rows))
    cap[t][s] += rows  # circulation back-arc
    need = 0
    for v in range(ss):
        if excess[v] > 0:
            cap[ss][v] += excess[v]
            need += excess[v]
        elif excess[v] < 0:
            cap[v][tt] += -excess[v]
    return _max_flow(cap, ss, tt) == need


def brute_force_feasible(matrix: list[list[bool]], bounds: list[tuple[int, int | None]]) -> bool:
    """Enumerate every row -> column map; the oracle for :func:`assignment_feasible`."""
    cols = len(bounds)
    for choice in itertools.product(range(cols), repeat=len(matrix)):
        if not all(matrix[i][j] for i, j in enumerate(choice)):
            continue
        counts = [0] * cols
        for j in choice:
            counts[j] += 1
        if all(lo <= c and (hi is None or c <= hi) for c, (lo, hi) in zip(counts, bounds)):
            return True
    return False


def is_described(graph: DynamicalGraph, lang: Language, node: str, pattern: Pattern,
                 rows: list[Edge] | None = None) -> bool:
    _, matrix = eligibility(graph, lang, node, pattern.clauses, rows)
    return assignment_feasible(matrix, [(c.lo, c.hi) for c in pattern.clauses])


# ---------------------------------------------------------------------------
# whole-graph validation


@dataclass
class NodeVerdict:
    node: str
    type: str
    ok: bool
    reason: str = ""


@dataclass
class ValidationReport:
    graph_lang: str
    global_results: dict[str, CheckResult] = field(default_factory=dict)
    nodes: list[NodeVerdict] = field(default_factory=list)
    dangling: list[str] = field(default_factory=list)
    local_skipped: bool = False

    @property
    def global_ok(self) -> bool:
        return all(r.ok for r in self.global_results.values())

    @property
    def ok(self) -> bool:
        return self.global_ok and not self.local_skipped and all(v.ok for v in self.nodes) and not self.dangling

    @property
    def failures(self) -> list[NodeVerdict]:
        return [v for v in self.nodes if not v.ok]

    def to_dict(self) -> dict[str, Any]:
        return {
            "valid": self.ok,
            "language": self.graph_lang,
            "global": {k: {"ok": r.ok, "message": r.message, "details": r.details}
                       for k, r in self.global_results.items()},
            "local_skipped": self.local_skipped,
            "nodes": [{"node": v.node, "type": v.type, "ok": v.ok, "reason": v.reason} for v in self.nodes],
            "dangling": list(self.dangling),
        }

    def to_text(self) -> str:
        lines = [f"language {self.graph_lang}: {'VALID' if self.ok else 'INVALID'}"]
        for name, r in self.global_results.items():
            lines.append(f"  global {name}: {'pass' if r.ok else 'FAIL'}" + (f" ({r.message})" if r.message else ""))
        if self.local_skipped:
            lines.append("  local checks skipped after global failure")
        for v in self.failures:
            lines.append(f"  node {v.node} ({v.type}): FAIL {v.reason}")
        for e in self.dangling:
            lines.append(f"  edge {e}: dangling connection (no production rule applies)")
        passed = sum(v.ok for v in self.nodes)
        if not self.local_skipped:
            lines.append(f"  {passed}/{len(self.nodes)} node(s) pass local rules")
        return "\n".join(lines)


def _node_verdict(graph: DynamicalGraph, lang: Language, name: str, rows: list[Edge]) -> NodeVerdict:
    ntype = graph.nodes[name].type
    acc, rej = lang.patterns_for(ntype)
    for p in rej:
        if is_described(graph, lang, name, p, rows):
            return NodeVerdict(name, ntype, False, f"described by a rejected pattern of cstr {p.node_type}")
    if acc and not any(is_described(graph, lang, name, p, rows) for p in acc):
        return NodeVerdict(name, ntype, False, f"not described by any accepted pattern ({len(acc)} tried)")
    return NodeVerdict(name, ntype, True)


def _is_dangling(graph: DynamicalGraph, lang: Language, e: Edge) -> str | None:
    st, dt = graph.nodes[e.src].type, graph.nodes[e.dst].type
    roles = ("self",) if e.is_self else ("src", "dst")
    try:
        if any(lang.dispatch(e.type, st, dt, target=r) is not None for r in roles):
            return None
    except AmbiguousRuleError as exc:
        return f"{e.name} ({exc.message})"
    return e.name


def validate(graph: DynamicalGraph, lang: Language) -> ValidationReport:
    report = ValidationReport(lang.name)
    for name in lang.global_checks:
        report.global_results[name] = global_check(name, graph, lang)
    if not report.global_ok:
        report.local_skipped = True
        return report
    incident: dict[str, list[Edge]] = {name: [] for name in graph.nodes}
    for e in graph.edges.values():
        if e.on:
            incident[e.src].append(e)
            if not e.is_self:
                incident[e.dst].append(e)
    for name in graph.nodes:
        report.nodes.append(_node_verdict(graph, lang, name, incident[name]))
    for e in graph.edges.values():
        if e.on:
            d = _is_dangling(graph, lang, e)
            if d is not None:
                report.dangling.append(d)
    return report

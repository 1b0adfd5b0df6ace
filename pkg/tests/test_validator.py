from __future__ import annotations

import itertools
import random

import pytest

from ark import ArkSemanticError, GraphBuilder, Registry, invoke, load_program, validate
from ark.frontend import nodes as ast
from ark.lang import Pattern
from ark.stdlib.generators import branched_tline, linear_tline, malformed_tline
from ark.validator import assignment_feasible, brute_force_feasible, is_described

LANG = """
lang v {
  node-type(1, sum) N { init(0) real[-1, 1] }
  node-type N1 inherits N {}
  node-type(1, sum) M { init(0) real[-1, 1] }
  edge-type W {}
  edge-type W1 inherits W {}
  edge-type X {}
  prod(e:W, s:N->t:N) t <= var(s)
  prod(e:W, s:N->t:M) t <= var(s)
  prod(e:W, s:M->t:N) t <= var(s)
  prod(e:W, s:M->t:M) t <= var(s)
  prod(e:W, s:N->s:N) s <= var(s)
  prod(e:W, s:M->s:M) s <= var(s)
  prod(e:X, s:N->t:N) t <= var(s)
  prod(e:X, s:N->t:M) t <= var(s)
  prod(e:X, s:M->t:N) t <= var(s)
  prod(e:X, s:M->t:M) t <= var(s)
  prod(e:X, s:N->s:N) s <= var(s)
  prod(e:X, s:M->s:M) s <= var(s)
}
"""
NODE_TYPES = ["N", "N1", "M"]
EDGE_TYPES = ["W", "W1", "X"]
PARENT = {"N1": "N", "W1": "W"}


def _isa(t: str, anc: str) -> bool:
    while t is not None:
        if t == anc:
            return True
        t = PARENT.get(t)
    return False


@pytest.fixture(scope="module")
def vlang():
    reg = Registry()
    load_program(LANG, reg)
    return reg.language("v")


def _oracle(center: str, edges, clauses) -> bool:
    """Independent enumeration straight from the raw edge list."""

    def fits(e, c) -> bool:
        name, etype, src, dst, peer_type = e
        if not _isa(etype, c.edge_type):
            return False
        if c.direction == "any":
            return True
        if src == dst:
            return False
        if c.direction == "out" and src != center or c.direction == "in" and dst != center:
            return False
        return any(_isa(peer_type, p) for p in c.peers)

    for choice in itertools.product(range(len(clauses)), repeat=len(edges)):
        if not all(fits(e, clauses[j]) for e, j in zip(edges, choice)):
            continue
        loads = [choice.count(j) for j in range(len(clauses))]
        if all(c.lo <= n and (c.hi is None or n <= c.hi) for c, n in zip(clauses, loads)):
            return True
    return False


def _instance(rng: random.Random, vlang):
    b = GraphBuilder(vlang)
    ctype = rng.choice(NODE_TYPES)
    b.node("c", ctype)
    raw = []
    for k in range(rng.randint(0, 8)):
        etype = rng.choice(EDGE_TYPES)
        kind = rng.random()
        if kind < 0.15:
            src = dst = "c"
            ptype = ctype
        else:
            peer = f"p{k}"
            ptype = rng.choice(NODE_TYPES)
            b.node(peer, ptype)
            src, dst = ("c", peer) if kind < 0.6 else (peer, "c")
        b.edge(src, dst, f"e{k}", etype)
        raw.append((f"e{k}", etype, src, dst, ptype))
    for n in b.graph.nodes.values():
        n.inits[0] = 0.0
    clauses = []
    for _ in range(rng.randint(1, 4)):
        lo = rng.choice([0, 0, 1, 2])
        hi = rng.choice([None, None, lo, lo + 1, lo + 2])
        direction = rng.choice(["out", "in", "any", "any"])
        peers = rng.sample(NODE_TYPES, rng.randint(1, 3)) if direction != "any" else []
        clauses.append(ast.MatchClause(lo, hi, rng.choice(["W", "W", "W1", "X"]), direction,
                                       "c" if direction != "any" else None, peers))
    return b.finish(), raw, clauses


def test_flow_matcher_agrees_with_enumeration(vlang):
    rng = random.Random(1234)
    seen = {True: 0, False: 0}
    for _ in range(1200):
        g, raw, clauses = _instance(rng, vlang)
        pat = Pattern("acc", g.nodes["c"].type, "c", tuple(clauses), "v")
        got = is_described(g, vlang, "c", pat)
        assert got == _oracle("c", raw, clauses)
        seen[got] += 1
    assert min(seen.values()) >= 100  # both outcomes well represented


def test_assignment_feasible_matches_brute_force_on_matrices():
    rng = random.Random(7)
    for _ in range(1500):
        rows, cols = rng.randint(0, 6), rng.randint(1, 4)
        matrix = [[rng.random() < 0.55 for _ in range(cols)] for _ in range(rows)]
        bounds = []
        for _ in range(cols):
            lo = rng.randint(0, 3)
            bounds.append((lo, rng.choice([None, lo, lo + 1, lo + 3])))
        assert assignment_feasible(matrix, bounds) == brute_force_feasible(matrix, bounds)


def test_tln_validity(stdlib):
    tln = stdlib.language("tln")
    assert validate(linear_tline(tln, 21), tln).ok
    assert validate(branched_tline(tln, 1), tln).ok
    assert validate(branched_tline(tln, 0), tln).ok
    report = validate(malformed_tline(tln), tln)
    assert not report.ok
    assert {v.node for v in report.failures} == {"IN_V", "V_1"}
    assert "e_001" in report.dangling  # no V->V production either


def test_vacuous_accept_and_self_loops(fresh):
    reg = fresh("""
lang s {
  node-type(1, sum) A { init(0) real[-1, 1] }
  node-type(1, sum) B { init(0) real[-1, 1] }
  edge-type W {}
  prod(e:W, s:A->t:B) t <= var(s)
  prod(e:W, s:A->s:A) s <= var(s)
  cstr n:A { acc match(1, 1, W, n->[B]) }
}
""", base=False)
    lang = reg.language("s")

    def graph(self_loop: bool, extra_out: bool, off: bool = False):
        b = GraphBuilder(lang)
        for name, t in (("a", "A"), ("b", "B"), ("c", "B")):
            b.node(name, t)
            b.set_init(name, 0, 0.0)
        b.edge("a", "b", "ab", "W")
        if self_loop:
            b.edge("a", "a", "aa", "W")
        if extra_out:
            b.edge("a", "c", "ac", "W")
            if off:
                b.set_edge("ac", False)
        return b.finish()

    assert validate(graph(False, False), lang).ok  # B has no cstr: vacuously fine
    # the self loop cannot take the directed clause, and no ANY clause exists
    assert not validate(graph(True, False), lang).ok
    assert not validate(graph(False, True), lang).ok
    assert validate(graph(False, True, off=True), lang).ok  # off edges are ignored


def test_rejection_wins_over_acceptance(fresh):
    reg = fresh("""
lang r {
  node-type(1, sum) A { init(0) real[-1, 1] }
  edge-type W {}
  prod(e:W, s:A->t:A) t <= var(s)
  cstr n:A {
    acc match(0, inf, W)
    rej match(2, inf, W, n->[A]) match(0, inf, W)
  }
}
""", base=False)
    lang = reg.language("r")
    b = GraphBuilder(lang)
    for name in "xyz":
        b.node(name, "A")
        b.set_init(name, 0, 0.0)
    b.edge("x", "y", "e1", "W")
    assert validate(b.graph, lang).ok
    b.edge("x", "z", "e2", "W")
    report = validate(b.graph, lang)
    assert [v.node for v in report.failures] == ["x"]
    assert "rejected" in report.failures[0].reason


def test_global_failure_skips_local_checks(stdlib):
    lang = stdlib.language("intercon-obc")
    g = invoke(stdlib.function("intercon-bad"), lang, {"k": -1.0})
    report = validate(g, lang)
    assert report.local_skipped and not report.nodes
    assert "c12" in report.global_results["groups-respected"].message
    d = report.to_dict()
    assert d["valid"] is False and d["local_skipped"] is True


def test_unknown_global_check(fresh):
    reg = fresh("lang q { node-type(1, sum) A { init(0) real[0, 1] } extern-func no-such-check }", base=False)
    g = GraphBuilder(reg.language("q")).finish()
    with pytest.raises(ArkSemanticError):
        validate(g, reg.language("q"))

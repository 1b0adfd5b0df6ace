"""Host-level graph generators built on :class:`ark.graph.GraphBuilder`.

They produce the same kind of graph as a textual ``func`` and are used when
the graph is too large or too parametric to spell out by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from ..frontend.parser import parse_expression
from ..graph import DynamicalGraph, GraphBuilder
from ..lang import Language

# -- transmission lines --------------------------------------------------------


@dataclass
class LineParams:
    c: float = 1e-9
    l: float = 1e-9
    term: float = 1.0          # g at IN_V and OUT_V
    width: float = 2e-8        # input current pulse
    amplitude: float = 1.0
    types: dict[str, str] = field(default_factory=dict)  # V/I/E -> concrete type
    edge_attrs: dict[str, float] = field(default_factory=lambda: {"ws": 1.0, "wt": 1.0})

    def type(self, base: str) -> str:
        return self.types.get(base, base)


def _main_names(n: int) -> list[str]:
    if n < 1 or n % 2 == 0:
        raise ValueError("a t-line needs an odd number of segments (it starts and ends on V)")
    if n == 1:
        return ["OUT_V"]
    names = ["IN_V"]
    for pos in range(1, n - 1):
        names.append(f"I_{(pos + 1) // 2}" if pos % 2 else f"V_{pos // 2}")
    return names + ["OUT_V"]


def _branch_names(n: int) -> list[str]:
    return [f"BI_{k // 2 + 1}" if k % 2 == 0 else f"BV_{k // 2 + 1}" for k in range(n)]


class _LineBuilder:
    def __init__(self, lang: Language, p: LineParams, seed: int, mismatch: bool):
        self.b = GraphBuilder(lang, seed, mismatch)
        self.p = p
        self.lang = lang

    def cell(self, name: str, kind: str, loss: float = 0.0) -> None:
        b, p = self.b, self.p
        b.node(name, p.type(kind))
        if kind == "V":
            b.set_attr(name, "c", p.c)
            b.set_attr(name, "g", loss)
        else:
            b.set_attr(name, "l", p.l)
            b.set_attr(name, "r", loss)
        b.set_init(name, 0, 0.0)
        b.edge(name, name, f"s_{name}", "E")

    def link(self, src: str, dst: str, name: str) -> None:
        etype = self.p.type("E")
        self.b.edge(src, dst, name, etype)
        for attr in self.lang.edge_types[etype].attrs:
            self.b.set_attr(name, attr, self.p.edge_attrs[attr])

    def chain(self, names: Sequence[str], prefix: str, first_kind: str) -> None:
        kinds = [first_kind if k % 2 == 0 else ("I" if first_kind == "V" else "V") for k in range(len(names))]
        for name, kind in zip(names, kinds):
            if name not in self.b.graph.nodes:
                self.cell(name, kind)
        for k in range(len(names) - 1):
            self.link(names[k], names[k + 1], f"{prefix}_{k + 1:03d}")

    def source(self, target: str) -> None:
        b, p = self.b, self.p
        b.node("InpI_0", "InpI")
        b.set_attr("InpI_0", "fn", parse_expression(
            f"lambd(t): {p.amplitude!r}*pulse(t, 0, {p.width!r})"))
        b.edge("InpI_0", target, "e_in", "E")


def linear_tline(lang: Language, segments: int = 21, *, seed: int = 0, mismatch: bool = True,
                 params: LineParams | None = None) -> DynamicalGraph:
    """An odd-length V/I chain driven by a current pulse at IN_V, terminated at both ends."""
    p = params or LineParams()
    lb = _LineBuilder(lang, p, seed, mismatch)
    names = _main_names(segments)
    for k, name in enumerate(names):
        kind = "V" if k % 2 == 0 else "I"
        lb.cell(name, kind, p.term if name in ("IN_V", "OUT_V") else 0.0)
    lb.chain(names, "e", "V")
    lb.source(names[0])
    return lb.b.finish()


def branched_tline(lang: Language, br: int = 1, *, main: int = 21, branch: int = 32, seed: int = 0,
                   mismatch: bool = True, params: LineParams | None = None) -> DynamicalGraph:
    """A line with an open-ended stub starting at IN_V.

    The stub is always present; ``br`` switches the junction edge, so
    ``br=0`` behaves as the plain line with the same node set.  With the
    defaults the round trip through the stub is 16 LC sections long.
    """
    if branch < 2 or branch % 2:
        raise ValueError("the branch needs an even number of segments (I first, V last)")
    p = params or LineParams()
    lb = _LineBuilder(lang, p, seed, mismatch)
    names = _main_names(main)
    for k, name in enumerate(names):
        lb.cell(name, "V" if k % 2 == 0 else "I", p.term if name in ("IN_V", "OUT_V") else 0.0)
    lb.chain(names, "e", "V")
    stub = _branch_names(branch)
    lb.chain(stub, "b", "I")
    lb.link(names[0], stub[0], "e_br")
    lb.b.set_edge("e_br", bool(br))
    lb.source(names[0])
    return lb.b.finish()


def malformed_tline(lang: Language, *, seed: int = 0, params: LineParams | None = None) -> DynamicalGraph:
    """A line whose first two voltage nodes touch directly."""
    p = params or LineParams()
    lb = _LineBuilder(lang, p, seed, True)
    for name, kind in (("IN_V", "V"), ("V_1", "V"), ("I_1", "I"), ("OUT_V", "V")):
        lb.cell(name, kind, p.term if name in ("IN_V", "OUT_V") else 0.0)
    lb.link("IN_V", "V_1", "e_001")
    lb.link("V_1", "I_1", "e_002")
    lb.link("I_1", "OUT_V", "e_003")
    lb.source("IN_V")
    return lb.b.finish()


# -- cellular nonlinear networks ----------------------------------------------

# Feedback: centre only.  Input: 4-neighbour Laplacian, so a black pixel stays
# black exactly when one of its 4-neighbours is white.
EDGE_A = np.array([[0.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.0]])
EDGE_B = np.array([[0.0, -1.0, 0.0], [-1.0, 4.0, -1.0], [0.0, -1.0, 0.0]])
EDGE_B8 = np.array([[-1.0, -1.0, -1.0], [-1.0, 8.0, -1.0], [-1.0, -1.0, -1.0]])
EDGE_Z = -1.0


def cnn_grid(lang: Language, image, *, A=EDGE_A, B=EDGE_B, z: float = EDGE_Z, x0: float = 0.0,
             types: Mapping[str, str] | None = None, seed: int = 0, mismatch: bool = True) -> DynamicalGraph:
    """One cell per pixel; ``image`` holds +1 (black) and -1 (white).

    Template entries that are zero produce no edge, and neighbours beyond the
    border are simply absent.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be two-dimensional")
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    ty = {"V": "V", "Out": "Out", "fE": "fE", **(types or {})}
    b = GraphBuilder(lang, seed, mismatch)
    rows, cols = img.shape
    for i in range(rows):
        for j in range(cols):
            v, o, u = f"V_{i}_{j}", f"Out_{i}_{j}", f"Inp_{i}_{j}"
            b.node(v, ty["V"])
            b.set_attr(v, "z", z)
            b.set_init(v, 0, x0)
            b.node(o, ty["Out"])
            b.node(u, "Inp")
            b.set_init(u, 0, float(img[i, j]))
            b.edge(v, o, f"iE_{i}_{j}", "iE")
    for i in range(rows):
        for j in range(cols):
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    k, m = i + di, j + dj
                    if not (0 <= k < rows and 0 <= m < cols):
                        continue
                    for tag, tpl, src in (("a", A, "Out"), ("b", B, "Inp")):
                        w = tpl[di + 1, dj + 1]
                        if w == 0:
                            continue
                        name = f"{tag}_{i}_{j}_{k}_{m}"
                        b.edge(f"{src}_{k}_{m}", f"V_{i}_{j}", name, ty["fE"])
                        b.set_attr(name, "g", float(w))
    return b.finish()


HW_CNN_TYPES = {"V": "Vm", "Out": "OutNL", "fE": "fEm"}


# -- oscillator networks ---------------------------------------------------------


def initial_phases(n: int, seed: int) -> np.ndarray:
    """Uniform phases in [0, 2*pi), a pure function of ``seed``."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 0x0BC]))
    return rng.uniform(0.0, 2.0 * np.pi, n)


def obc_network(lang: Language, n: int, edges: Sequence[tuple[int, int]], *, k: float = -1.0,
                coupling: str = "Cpl", edge_attrs: Mapping[str, float] | None = None, self_k: float = 1.0,
                phases: Sequence[float] | None = None, seed: int = 0, mismatch: bool = True) -> DynamicalGraph:
    """Oscillators ``Osc_0..`` with one coupling per input edge and a binarizing self loop each."""
    b = GraphBuilder(lang, seed, mismatch)
    phi = initial_phases(n, seed) if phases is None else np.asarray(phases, dtype=float)
    for i in range(n):
        b.node(f"Osc_{i}", "Osc")
        b.set_init(f"Osc_{i}", 0, float(phi[i]))
        b.edge(f"Osc_{i}", f"Osc_{i}", f"s_{i}", "Cpl")
        b.set_attr(f"s_{i}", "k", self_k)
    extra = dict(edge_attrs or {})
    for a, c in edges:
        name = f"c_{a}_{c}"
        b.edge(f"Osc_{a}", f"Osc_{c}", name, coupling)
        b.set_attr(name, "k", k)
        for attr in lang.edge_types[coupling].attrs:
            if attr != "k":
                b.set_attr(name, attr, extra.get(attr, 0.0))
    return b.finish()


def intercon_network(lang: Language, groups: Sequence[int], edges: Sequence[tuple[int, int, str, float]],
                     *, k: float = -1.0, seed: int = 0) -> DynamicalGraph:
    """Grouped oscillators; each edge is ``(a, b, coupling type, cost)``."""
    b = GraphBuilder(lang, seed)
    phi = initial_phases(len(groups), seed)
    for i, grp in enumerate(groups):
        b.node(f"Osc_{i}", "Osc_grp")
        b.set_attr(f"Osc_{i}", "group", int(grp))
        b.set_init(f"Osc_{i}", 0, float(phi[i]))
    for a, c, ctype, cost in edges:
        name = f"c_{a}_{c}"
        b.edge(f"Osc_{a}", f"Osc_{c}", name, ctype)
        b.set_attr(name, "k", k)
        b.set_attr(name, "cost", float(cost))
    return b.finish()


def connected_graphs(n: int = 4) -> list[tuple[tuple[int, int], ...]]:
    """Every connected simple graph on ``n`` labelled vertices."""
    pairs = list(combinations(range(n), 2))
    out = []
    for mask in range(1, 1 << len(pairs)):
        es = tuple(p for bit, p in enumerate(pairs) if mask >> bit & 1)
        seen, stack = {0}, [0]
        while stack:
            u = stack.pop()
            for a, c in es:
                for x, y in ((a, c), (c, a)):
                    if x == u and y not in seen:
                        seen.add(y)
                        stack.append(y)
        if len(seen) == n:
            out.append(es)
    return out

"""Host-side global checks referenced by ``extern-func`` declarations."""

from __future__ import annotations

import re

from ..graph import DynamicalGraph
from ..lang import Language
from ..validator import CheckResult, register_global_check

_CELL = re.compile(r"^[A-Za-z]+_(\d+)_(\d+)$")


def _cell(name: str) -> tuple[int, int] | None:
    m = _CELL.match(name)
    return (int(m.group(1)), int(m.group(2))) if m else None


def grid_topology(graph: DynamicalGraph, lang: Language) -> CheckResult:
    """Cells named ``<kind>_<i>_<j>`` must fill a rectangle and couple only to neighbours.

    The lattice size is the bounding box of the V cells; every position in
    it must hold exactly one V cell.  Adjacency is Chebyshev distance at most 1.
    """
    cells: dict[tuple[int, int], str] = {}
    for n in graph.nodes.values():
        pos = _cell(n.name)
        if pos is None:
            return CheckResult(False, f"node {n.name!r} is not named <kind>_<row>_<col>")
        if lang.subtype_of(n.type, "V"):
            if pos in cells:
                return CheckResult(False, f"cells {cells[pos]!r} and {n.name!r} share position {pos}")
            cells[pos] = n.name
    if not cells:
        return CheckResult(False, "no V cells in graph")
    rows = max(i for i, _ in cells) + 1
    cols = max(j for _, j in cells) + 1
    missing = [(i, j) for i in range(rows) for j in range(cols) if (i, j) not in cells]
    if missing:
        return CheckResult(False, f"lattice {rows}x{cols} has no V cell at {missing[0]}",
                           {"rows": rows, "cols": cols})
    for n in graph.nodes.values():
        i, j = _cell(n.name)
        if i >= rows or j >= cols:
            return CheckResult(False, f"node {n.name!r} lies outside the {rows}x{cols} lattice")
    for e in graph.edges.values():
        (a, b), (c, d) = _cell(e.src), _cell(e.dst)
        if max(abs(a - c), abs(b - d)) > 1:
            return CheckResult(False, f"edge {e.name!r} joins non-adjacent cells {e.src!r} and {e.dst!r}",
                               {"rows": rows, "cols": cols, "edge": e.name})
    return CheckResult(True, f"{rows}x{cols} lattice", {"rows": rows, "cols": cols})


def groups_respected(graph: DynamicalGraph, lang: Language) -> CheckResult:
    """Local couplings stay inside a group; reports the total routing cost."""
    live = [e for e in graph.edges.values() if e.on]
    total = sum(float(e.attrs.get("cost", 0.0)) for e in live)
    for e in live:
        if not lang.subtype_of(e.type, "Cpl_l") or e.is_self:
            continue
        ga = graph.nodes[e.src].attrs.get("group")
        gb = graph.nodes[e.dst].attrs.get("group")
        if ga is None or gb is None:
            return CheckResult(False, f"local coupling {e.name!r} touches an oscillator without a group",
                               {"edge": e.name, "cost": total})
        if ga != gb:
            return CheckResult(False, f"local coupling {e.name!r} crosses groups {int(ga)} and {int(gb)}",
                               {"edge": e.name, "cost": total})
    return CheckResult(True, f"total routing cost {total:g}", {"cost": total})


register_global_check("grid-topology", grid_topology)
register_global_check("groups-respected", groups_respected)

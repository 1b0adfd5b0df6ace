"""Oracles and post-processing used by the experiments and acceptance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from ..graph import DynamicalGraph
from ..lang import Language
from ..simulator import SimConfig, simulate
from ..validator import validate
from .generators import obc_network

# -- waveforms -------------------------------------------------------------------


@dataclass(frozen=True)
class Pulse:
    onset: float
    end: float
    peak_time: float
    peak: float


def detect_pulses(times: np.ndarray, values: np.ndarray, fraction: float = 0.1,
                  reference: float | None = None) -> list[Pulse]:
    """Maximal runs where ``values`` exceed ``fraction`` of the peak.

    ``reference`` overrides the peak used for the threshold, which keeps the
    threshold comparable across lines of different strength.
    """
    t, v = np.asarray(times), np.asarray(values)
    top = float(np.max(v)) if reference is None else reference
    if top <= 0:
        return []
    above = v > fraction * top
    out = []
    k = 0
    while k < len(v):
        if not above[k]:
            k += 1
            continue
        j = k
        while j + 1 < len(v) and above[j + 1]:
            j += 1
        m = k + int(np.argmax(v[k:j + 1]))
        out.append(Pulse(float(t[k]), float(t[j]), float(t[m]), float(v[m])))
        k = j + 1
    return out


def line_energy(graph: DynamicalGraph, values: dict[str, np.ndarray]) -> np.ndarray:
    """Stored energy sum of c*V^2/2 and l*I^2/2 per sample."""
    total = 0.0
    for n in graph.nodes.values():
        if "c" in n.attrs:
            total = total + 0.5 * n.attrs["c"] * values[n.name] ** 2
        elif "l" in n.attrs:
            total = total + 0.5 * n.attrs["l"] * values[n.name] ** 2
    return np.asarray(total)


# -- CNN -----------------------------------------------------------------------


def cnn_edge_oracle(image) -> np.ndarray:
    """Black (+1) iff black and at least one 4-neighbour is white; border pixels count outside as absent."""
    img = np.asarray(image) > 0
    rows, cols = img.shape
    out = -np.ones(img.shape)
    for i in range(rows):
        for j in range(cols):
            if not img[i, j]:
                continue
            nbrs = [(i + di, j + dj) for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1))]
            if any(0 <= a < rows and 0 <= b < cols and not img[a, b] for a, b in nbrs):
                out[i, j] = 1.0
    return out


def interior_agreement(result, expected) -> float:
    a, b = np.asarray(result)[1:-1, 1:-1], np.asarray(expected)[1:-1, 1:-1]
    return float(np.mean(np.sign(a) == np.sign(b)))


def cnn_states(traj, shape: tuple[int, int]) -> np.ndarray:
    rows, cols = shape
    return np.array([[traj[f"V_{i}_{j}"][-1] for j in range(cols)] for i in range(rows)])


# -- max-cut ---------------------------------------------------------------------


def cut_value(edges: Sequence[tuple[int, int]], part: Sequence[int]) -> int:
    return sum(part[a] != part[b] for a, b in edges)


def max_cut(n: int, edges: Sequence[tuple[int, int]]) -> int:
    """Brute force over all 2**n partitions."""
    return max(cut_value(edges, p) for p in product((0, 1), repeat=n))


UNKNOWN = -1


def classify_phase(phi: float, d: float) -> int:
    r = math.fmod(phi, 2 * math.pi)
    if r < 0:
        r += 2 * math.pi
    if min(r, 2 * math.pi - r) <= d:
        return 0
    if abs(r - math.pi) <= d:
        return 1
    return UNKNOWN


@dataclass
class MaxcutAnalysis:
    d: float
    partition: list[int]
    sync: bool
    solved: bool
    cut: int | None
    best: int


def analyze_phases(phases: Sequence[float], n: int, edges: Sequence[tuple[int, int]], d: float) -> MaxcutAnalysis:
    part = [classify_phase(float(p), d) for p in phases]
    best = max_cut(n, edges)
    sync = UNKNOWN not in part
    cut = cut_value(edges, part) if sync else None
    return MaxcutAnalysis(d, part, sync, bool(sync and cut == best), cut, best)


OBC_T_END = 1e-7


def maxcut_phases(lang: Language, edges: Sequence[tuple[int, int]], *, variant: str = "ideal", seed: int = 0,
                  n: int = 4, t_end: float = OBC_T_END, cfg: SimConfig | None = None) -> np.ndarray:
    coupling = "Cpl_ofs" if variant == "offset" else "Cpl"
    if variant not in ("ideal", "offset"):
        raise ValueError(f"unknown max-cut variant {variant!r}")
    g = obc_network(lang, n, edges, coupling=coupling, seed=seed)
    rep = validate(g, lang)
    if not rep.ok:
        raise ValueError(rep.to_text())
    traj = simulate(g, lang, cfg or SimConfig(t_end=t_end, samples=2))
    return np.array([traj[f"Osc_{i}"][-1] for i in range(n)])


def maxcut_solve(lang: Language, edges: Sequence[tuple[int, int]], *, variant: str = "ideal", seed: int = 0,
                 d: float = 0.01 * math.pi, n: int = 4, t_end: float = OBC_T_END) -> MaxcutAnalysis:
    phases = maxcut_phases(lang, edges, variant=variant, seed=seed, n=n, t_end=t_end)
    return analyze_phases(phases, n, edges, d)

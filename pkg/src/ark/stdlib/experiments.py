"""Manifest-driven experiments: t-line mismatch, CNN edge detection, OBC max-cut.

Each runner is deterministic given its manifest and returns a JSON-ready
summary; when ``out_dir`` is given it also writes its CSV/JSON reports there.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ..lang import Language, Registry
from ..loader import load_program
from ..simulator import SimConfig, simulate, sweep
from ..validator import validate
from . import source_text
from .analysis import analyze_phases, cnn_edge_oracle, cnn_states, interior_agreement, maxcut_phases
from .generators import (EDGE_A, EDGE_B, EDGE_B8, EDGE_Z, LineParams, cnn_grid,
                         connected_graphs, linear_tline)

EXPERIMENTS = ("tln-mismatch", "cnn-edge", "obc-maxcut")


def manifest(name: str) -> dict[str, Any]:
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    text = resources.files(__package__).joinpath("manifests", f"{name}.json").read_text()
    return json.loads(text)


def _write(out_dir: Path | None, name: str, text: str) -> None:
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text)


def _seed_range(bounds) -> range:
    lo, hi = bounds
    return range(int(lo), int(hi))


# -- t-line mismatch ---------------------------------------------------------------


def run_tln_mismatch(reg: Registry, m: dict[str, Any], out_dir: Path | None = None) -> dict[str, Any]:
    lang = reg.language(m["language"])
    cfg = SimConfig(t_end=float(m["t_end"]), samples=int(m["samples"]))
    t0, t1 = m["window"]
    seeds = _seed_range(m["seeds"])
    summary: dict[str, Any] = {"experiment": "tln-mismatch", "seeds": [seeds.start, seeds.stop],
                               "window": [t0, t1], "variants": {}}
    for variant, types in m["variants"].items():
        p = LineParams(types=dict(types))
        res = sweep(lambda s, p=p: linear_tline(lang, int(m["segments"]), seed=s, params=p),
                    lang, seeds, cfg, m["probe"])
        _write(out_dir, f"tln-mismatch-{variant}.csv", res.summary_csv())
        summary["variants"][variant] = {"types": types, "window_std": res.window_std(t0, t1)}
    v = summary["variants"]
    if "gm" in v and "cint" in v and v["cint"]["window_std"] > 0:
        summary["gm_over_cint"] = v["gm"]["window_std"] / v["cint"]["window_std"]
    _write(out_dir, "tln-mismatch.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# -- CNN edge detection ------------------------------------------------------------

TEMPLATES = {"laplace4": (EDGE_A, EDGE_B, EDGE_Z), "laplace8": (EDGE_A, EDGE_B8, EDGE_Z)}


def random_images(count: int, size: int, seed: int, black: float = 0.5) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [np.where(rng.random((size, size)) < black, 1.0, -1.0) for _ in range(count)]


def parse_image(rows: list[str]) -> np.ndarray:
    return np.array([[1.0 if ch == "#" else -1.0 for ch in row] for row in rows])


def cnn_error_rate(lang: Language, image: np.ndarray, *, types=None, seed: int = 0, template: str = "laplace4",
                   t_end: float = 20.0) -> float:
    """Fraction of interior pixels whose settled sign differs from the oracle."""
    A, B, z = TEMPLATES[template]
    g = cnn_grid(lang, image, A=A, B=B, z=z, types=types, seed=seed)
    report = validate(g, lang)
    if not report.ok:
        raise ValueError(report.to_text())
    traj = simulate(g, lang, SimConfig(t_end=t_end, samples=2))
    return 1.0 - interior_agreement(cnn_states(traj, image.shape), cnn_edge_oracle(image))


def run_cnn_edge(reg: Registry, m: dict[str, Any], out_dir: Path | None = None) -> dict[str, Any]:
    ideal, hw = reg.language(m["ideal_language"]), reg.language(m["hw_language"])
    images = random_images(int(m["images"]), int(m["size"]), int(m["image_seed"]), float(m["black_fraction"]))
    kw = {"template": m["template"], "t_end": float(m["t_end"])}
    ideal_err = [cnn_error_rate(ideal, img, **kw) for img in images]
    hw_seeds = _seed_range(m["hw_seeds"])
    test = parse_image(m["test_image"])
    summary: dict[str, Any] = {
        "experiment": "cnn-edge",
        "ideal_error": ideal_err,
        "ideal_min_agreement": 1.0 - max(ideal_err),
        "ideal_mean_error": float(np.mean(ideal_err)),
        "test_image_agreement": 1.0 - cnn_error_rate(ideal, test, **kw),
        "hw": {},
    }
    # seed k mismatches image k (cycling), so every variant sees the same pairs
    for variant, types in m["hw_variants"].items():
        errs = [cnn_error_rate(hw, images[k % len(images)], types=types, seed=s, **kw)
                for k, s in enumerate(hw_seeds)]
        summary["hw"][variant] = {"types": types, "error": errs, "mean_error": float(np.mean(errs))}
    _write(out_dir, "cnn-edge.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# -- OBC max-cut ---------------------------------------------------------------------


def offset_language(reg: Registry, base: str, s1: float) -> Language:
    """``base`` itself if it already declares offset spread ``s1``, else a recalibrated copy."""
    lang = reg.language(base)
    if lang.edge_types["Cpl_ofs"].attrs["offset"].mm == (0.0, s1):
        return lang
    name = f"{base}-s1"
    if reg.get(name) is None:
        text = source_text(base)
        old = "mm(0, {:g})".format(lang.edge_types["Cpl_ofs"].attrs["offset"].mm[1])
        if old not in text:
            raise ValueError(f"cannot recalibrate {base!r}: offset declaration not found")
        load_program(text.replace(f"lang {base} ", f"lang {name} ").replace(old, f"mm(0, {s1!r})"), reg)
    return reg.language(name)


def maxcut_instances(count: int, seed: int, n: int = 4) -> list[tuple[tuple[int, int], ...]]:
    pool = connected_graphs(n)
    rng = np.random.default_rng(seed)
    return [pool[int(i)] for i in rng.integers(0, len(pool), count)]


def run_obc_maxcut(reg: Registry, m: dict[str, Any], out_dir: Path | None = None) -> dict[str, Any]:
    n = int(m["vertices"])
    graphs = maxcut_instances(int(m["graphs"]), int(m["graph_seed"]), n)
    langs = {"ideal": reg.language(m["ideal_language"]),
             "offset": offset_language(reg, m["offset_language"], float(m["offset_s1"]))}
    ds = [float(x) for x in m["d_over_pi"]]
    summary: dict[str, Any] = {"experiment": "obc-maxcut", "graphs": len(graphs), "offset_s1": m["offset_s1"],
                               "variants": {}}
    rows = ["variant,index,seed,edges,d_over_pi,sync,solved,cut,best"]
    for variant, lang in langs.items():
        counts = {d: [0, 0] for d in ds}
        for i, edges in enumerate(graphs):
            phases = maxcut_phases(lang, edges, variant=variant, seed=i, n=n, t_end=float(m["t_end"]))
            for d in ds:
                a = analyze_phases(phases, n, edges, d * math.pi)
                counts[d][0] += a.sync
                counts[d][1] += a.solved
                es = " ".join(f"{x}-{y}" for x, y in edges)
                rows.append(f"{variant},{i},{i},{es},{d},{int(a.sync)},{int(a.solved)},"
                            f"{'' if a.cut is None else a.cut},{a.best}")
        summary["variants"][variant] = {
            f"{d:g}": {"sync": counts[d][0] / len(graphs), "solved": counts[d][1] / len(graphs)} for d in ds}
    _write(out_dir, "obc-maxcut.csv", "\n".join(rows) + "\n")
    _write(out_dir, "obc-maxcut.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


RUNNERS: dict[str, Callable[..., dict[str, Any]]] = {
    "tln-mismatch": run_tln_mismatch,
    "cnn-edge": run_cnn_edge,
    "obc-maxcut": run_obc_maxcut,
}


def run_experiment(name: str, reg: Registry, overrides: dict[str, Any] | None = None,
                   out_dir: Path | None = None) -> dict[str, Any]:
    m = manifest(name)
    for key, value in (overrides or {}).items():
        if key not in m:
            raise KeyError(f"experiment {name!r} has no parameter {key!r}")
        m[key] = value
    return RUNNERS[name](reg, m, out_dir)

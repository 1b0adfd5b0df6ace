"""Transient simulation: Dormand-Prince 5(4) with PI step control and dense output.

The integrator follows the classic DOPRI5 formulation: FSAL stages, an
RMS error norm scaled by ``atol + rtol*max(|y_n|, |y_{n+1}|)``, a
PI controller on the step size and the fourth-order continuous extension for
sampling on a uniform output grid.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .compiler import OdeSystem, compile_graph
from .errors import ArkError, NumericError
from .graph import DynamicalGraph
from .lang import Language
from .validator import validate

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# error coefficients (5th minus embedded 4th order)
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# dense output
D1, D3, D4 = -12715105075 / 11282082432, 87487479700 / 32700410799, -10690763975 / 1880347072
D5, D6, D7 = 701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423


@dataclass
class SimConfig:
    t_end: float
    samples: int = 501
    rtol: float = 1e-6
    atol: float = 1e-9
    max_step: float | None = None  # default t_end/100
    first_step: float | None = None
    max_steps: int = 2_000_000

    def __post_init__(self) -> None:
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.samples < 2:
            raise ValueError(f"sample count must be at least 2, got {self.samples!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")

    @property
    def h_max(self) -> float:
        return self.max_step if self.max_step is not None else self.t_end / 100.0


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # shape (samples, n_vars)
    labels: list[str]
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0

    def __getitem__(self, label: str) -> np.ndarray:
        try:
            return self.values[:, self.labels.index(label)]
        except ValueError:
            raise KeyError(f"no variable {label!r}; available: {', '.join(self.labels[:8])}...") from None

    def to_csv(self, columns: Sequence[str] | None = None) -> str:
        cols = list(columns) if columns is not None else list(self.labels)
        idx = [self.labels.index(c) for c in cols]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", *cols])
        for k, t in enumerate(self.times):
            w.writerow([f"{t:.17e}", *(f"{self.values[k, j]:.17e}" for j in idx)])
        return buf.getvalue()


RhsFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def _initial_step(f: RhsFn, t0: float, y0: np.ndarray, f0: np.ndarray, rtol: float, atol: float,
                  h_max: float) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2))) if y0.size else 0.0
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2))) if y0.size else 0.0
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1, np.empty_like(y0))
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0 if y0.size else 0.0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, h_max)


def dopri5(f: RhsFn, y0: np.ndarray, t_out: np.ndarray, *, rtol: float, atol: float, h_max: float,
           first_step: float | None = None, max_steps: int = 2_000_000) -> tuple[np.ndarray, dict[str, int]]:
    """Integrate ``y' = f(t, y)`` from ``t_out[0]`` and sample at every ``t_out``."""
    y = np.array(y0, dtype=float)
    n = y.size
    t0, t_end = float(t_out[0]), float(t_out[-1])
    out = np.empty((len(t_out), n))
    out[0] = y
    stats = {"steps": 0, "rejected": 0, "evaluations": 0}
    if n == 0:
        return out, stats

    def call(t: float, yy: np.ndarray, buf: np.ndarray) -> np.ndarray:
        stats["evaluations"] += 1
        return f(t, yy, buf)

    k1 = call(t0, y, np.empty(n))
    k2, k3, k4, k5, k6, k7 = (np.empty(n) for _ in range(6))
    h = first_step if first_step is not None else _initial_step(call, t0, y, k1, rtol, atol, h_max)
    h = min(h, h_max)
    beta = 0.04
    expo1 = 0.2 - beta * 0.75
    safe, facl, facr = 0.9, 0.2, 10.0
    facold = 1e-4
    t = t0
    next_out = 1
    last_rejected = False
    eps = np.finfo(float).eps
    while next_out < len(t_out):
        if stats["steps"] + stats["rejected"] >= max_steps:
            raise NumericError(f"step limit {max_steps} reached at t={t!r}")
        if h < 16 * eps * max(abs(t), 1e-300):
            raise NumericError(f"step size underflow at t={t!r} (h={h!r})")
        final = t + 1.01 * h >= t_end
        if final:
            h = t_end - t
        y2 = y + h * (A21 * k1)
        call(t + C2 * h, y2, k2)
        y2 = y + h * (A31 * k1 + A32 * k2)
        call(t + C3 * h, y2, k3)
        y2 = y + h * (A41 * k1 + A42 * k2 + A43 * k3)
        call(t + C4 * h, y2, k4)
        y2 = y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)
        call(t + C5 * h, y2, k5)
        y2 = y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)
        call(t + h, y2, k6)
        y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        call(t + h, y_new, k7)
        err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if not math.isfinite(err):
            raise NumericError(f"non-finite state at t={t + h!r}")
        fac11 = err ** expo1
        fac = fac11 / facold ** beta
        fac = max(1 / facr, min(1 / facl, fac / safe))
        h_new = h / fac
        if err <= 1.0:
            facold = max(err, 1e-4)
            stats["steps"] += 1
            t_next = t_end if final else t + h
            if next_out < len(t_out) and t_out[next_out] <= t_next:
                r1 = y
                r2 = y_new - y
                r3 = h * k1 - r2
                r4 = r2 - h * k7 - r3
                r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
                while next_out < len(t_out) and t_out[next_out] <= t_next:
                    if t_out[next_out] == t_next:
                        out[next_out] = y_new
                    else:
                        th = (t_out[next_out] - t) / h
                        th1 = 1.0 - th
                        out[next_out] = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
                    next_out += 1
            y = y_new
            k1, k7 = k7, k1
            t = t_next
            if abs(h_new) > h_max:
                h_new = h_max
            if last_rejected:
                h_new = min(h_new, h)
            last_rejected = False
        else:
            h_new = h / min(1 / facl, fac11 / safe)
            last_rejected = True
            stats["rejected"] += 1
        h = h_new
    return out, stats


def integrate(sys: OdeSystem, cfg: SimConfig) -> Trajectory:
    times = np.linspace(0.0, cfg.t_end, cfg.samples)
    values, stats = dopri5(sys.rhs, sys.x0, times, rtol=cfg.rtol, atol=cfg.atol, h_max=cfg.h_max,
                           first_step=cfg.first_step, max_steps=cfg.max_steps)
    if not np.isfinite(values).all():
        raise NumericError("trajectory contains non-finite samples")
    return Trajectory(times, values, list(sys.labels), stats["steps"], stats["rejected"], stats["evaluations"])


def simulate(graph: DynamicalGraph, lang: Language, cfg: SimConfig) -> Trajectory:
    return integrate(compile_graph(graph, lang), cfg)


# ---------------------------------------------------------------------------
# Monte Carlo sweeps


class SweepError(ArkError):
    code = "sweep"

    def __init__(self, seed: int, cause: ArkError):
        super().__init__(f"seed {seed}: {cause}", cause.span)
        self.seed = seed
        self.cause = cause


@dataclass
class SweepResult:
    seeds: list[int]
    probe: str
    times: np.ndarray
    samples: np.ndarray  # (n_seeds, n_times) probe values
    trajectories: list[Trajectory] = field(default_factory=list)

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        return self.samples.std(axis=0)

    @property
    def lo(self) -> np.ndarray:
        return self.samples.min(axis=0)

    @property
    def hi(self) -> np.ndarray:
        return self.samples.max(axis=0)

    def window_std(self, t0: float, t1: float) -> float:
        """Time-averaged standard deviation across seeds over [t0, t1]."""
        mask = (self.times >= t0) & (self.times <= t1)
        return float(self.std[mask].mean())

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "mean", "std", "min", "max"])
        for row in zip(self.times, self.mean, self.std, self.lo, self.hi):
            w.writerow([f"{v:.17e}" for v in row])
        return buf.getvalue()


def sweep(build: Callable[[int], DynamicalGraph], lang: Language, seeds: Iterable[int], cfg: SimConfig,
          probe: str, keep: bool = False) -> SweepResult:
    """One build+validate+compile+integrate per seed.

    ``build(seed)`` returns the graph for that seed, typically
    ``lambda s: invoke(func, lang, args, s)``.  Any failure aborts the sweep
    and names the seed.
    """
    seeds = list(seeds)
    rows = []
    trajs = []
    times = np.linspace(0.0, cfg.t_end, cfg.samples)
    for seed in seeds:
        try:
            g = build(seed)
            report = validate(g, lang)
            if not report.ok:
                raise ArkError("graph is invalid:\n" + report.to_text(), code="validation")
            traj = integrate(compile_graph(g, lang), cfg)
        except ArkError as exc:
            raise SweepError(seed, exc) from exc
        rows.append(traj[probe])
        if keep:
            trajs.append(traj)
    samples = np.array(rows) if rows else np.empty((0, len(times)))
    return SweepResult(seeds, probe, times, samples, trajs)


# ---------------------------------------------------------------------------
# steady state


@dataclass
class SteadyState:
    value: float
    converged: bool
    max_slope: float


def steady_state(traj: Trajectory, window: tuple[float, float], threshold: float = 1e-3,
                 labels: Sequence[str] | None = None) -> dict[str, SteadyState]:
    """Window mean per variable plus a slope-based convergence flag.

    A variable has converged when its largest sample-to-sample slope inside
    the window is at most ``threshold`` times its scale per unit of the
    trajectory's duration; the scale is the larger of the variable's
    peak-to-peak range over the whole run and its window mean magnitude.
    """
    t0, t1 = window
    if t0 > t1 or t0 < traj.times[0] or t1 > traj.times[-1] + 1e-12 * abs(traj.times[-1]):
        raise ValueError(f"window [{t0}, {t1}] lies outside the trajectory")
    mask = (traj.times >= t0) & (traj.times <= t1)
    if not mask.any():
        raise ValueError(f"window [{t0}, {t1}] contains no samples")
    duration = float(traj.times[-1] - traj.times[0])
    ts = traj.times[mask]
    out = {}
    for label in labels if labels is not None else traj.labels:
        col = traj[label]
        w = col[mask]
        mean = float(w.mean())
        slope = float(np.max(np.abs(np.diff(w) / np.diff(ts)))) if len(w) > 1 else 0.0
        scale = max(float(col.max() - col.min()), abs(mean))
        out[label] = SteadyState(mean, slope <= threshold * scale / duration, slope)
    return out

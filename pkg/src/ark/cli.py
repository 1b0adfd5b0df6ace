"""The ``ark`` command line.

Exit status: 0 success, 1 parse/semantic/usage error, 2 invalid graph,
3 numeric failure during evaluation or integration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from .compiler import compile_graph, pretty_equations
from .compiler import to_json_data as system_json
from .errors import ArkError, ArkSyntaxError, CheckFailed, Diagnostic, NumericError
from .graph import DynamicalGraph, export_dot, export_json, invoke
from .lang import Language, Registry
from .loader import load_program
from .simulator import SimConfig, integrate, sweep
from .validator import validate

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default; 2 means "invalid graph" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class InvalidGraph(Exception):
    def __init__(self, text: str):
        super().__init__(text)
        self.text = text


# -- argument helpers -------------------------------------------------------------


def parse_bindings(items: Sequence[str] | None) -> dict[str, str]:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            key, sep, value = part.partition("=")
            if not sep or not key:
                raise UsageError(f"argument binding {part!r} is not of the form name=value")
            out[key.strip()] = value.strip()
    return out


def parse_seeds(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            return range(int(text), int(text) + 1)
        r = range(int(lo), int(hi))
    except ValueError:
        raise UsageError(f"--seeds expects A..B, got {text!r}") from None
    if len(r) == 0:
        raise UsageError(f"--seeds {text!r} is empty")
    return r


def _number(kind: str, key: str, text: str) -> float | int:
    try:
        if kind == "int":
            return int(text)
        return float(text)
    except ValueError:
        raise UsageError(f"argument {key!r} expects a{'n int' if kind == 'int' else ' real'}, got {text!r}") from None


# -- graph sources ---------------------------------------------------------------------


def _generators() -> dict[str, tuple[str, dict[str, str], Callable[..., DynamicalGraph]]]:
    from .stdlib import generators as gen
    from .stdlib.experiments import random_images

    def line(lang, a, seed):
        p = gen.LineParams(**{k: a[k] for k in ("c", "l", "term", "width") if k in a})
        return gen.linear_tline(lang, int(a.get("segments", 21)), seed=seed, params=p)

    def branched(lang, a, seed):
        p = gen.LineParams(**{k: a[k] for k in ("c", "l", "term", "width") if k in a})
        return gen.branched_tline(lang, int(a.get("br", 1)), main=int(a.get("main", 21)),
                                  branch=int(a.get("branch", 32)), seed=seed, params=p)

    def cnn(lang, a, seed):
        img = random_images(1, int(a.get("size", 16)), int(a.get("image_seed", 0)))[0]
        types = gen.HW_CNN_TYPES if lang.is_ancestor_language("hw-cnn") else None
        return gen.cnn_grid(lang, img, types=types, seed=seed)

    tline = {"c": "real", "l": "real", "term": "real", "width": "real"}
    return {
        "linear-tline": ("tln", {"segments": "int", **tline}, line),
        "branched-tline": ("tln", {"br": "int", "main": "int", "branch": "int", **tline}, branched),
        "malformed-tline": ("tln", {}, lambda lang, a, seed: gen.malformed_tline(lang, seed=seed)),
        "cnn-random": ("cnn", {"size": "int", "image_seed": "int"}, cnn),
    }


def load_registry(paths: Sequence[str]) -> Registry:
    if os.environ.get("ARK_STDLIB_DISABLE") == "1":
        reg = Registry()
    else:
        from .stdlib import stdlib_registry
        reg = stdlib_registry()
    for path in paths:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
        try:
            load_program(text, reg)
        except ArkError as exc:
            exc.path = path  # type: ignore[attr-defined]
            raise
    return reg


class GraphSource:
    """Resolves ``--func`` to a textual function or a bundled generator."""

    def __init__(self, reg: Registry, func: str, lang_name: str | None, raw_args: dict[str, str]):
        self.reg = reg
        if func in reg.functions:
            fdef = reg.function(func)
            self.lang = reg.language(lang_name or fdef.lang)
            kinds = {a.key: a.type.kind for a in fdef.args}
            for key, kind in kinds.items():
                if kind == "lambd" and key in raw_args:
                    raise UsageError(f"argument {key!r} is a lambda; set it from .ark source instead")
            unknown = sorted(set(raw_args) - set(kinds))
            if unknown:
                raise UsageError(f"function {func!r} has no argument(s) {', '.join(unknown)}")
            args = {k: _number(kinds[k], k, v) for k, v in raw_args.items()}
            self.build = lambda seed: invoke(fdef, self.lang, args, seed)
            return
        gens = _generators()
        if func not in gens:
            raise UsageError(f"unknown function or generator {func!r}")
        default_lang, sig, fn = gens[func]
        self.lang = reg.language(lang_name or default_lang)
        if not self.lang.is_ancestor_language(default_lang):
            raise UsageError(f"generator {func!r} needs a language inheriting {default_lang!r}")
        unknown = sorted(set(raw_args) - set(sig))
        if unknown:
            raise UsageError(f"generator {func!r} has no argument(s) {', '.join(unknown)}")
        args = {k: _number(sig[k], k, v) for k, v in raw_args.items()}

        def build(seed: int) -> DynamicalGraph:
            try:
                return fn(self.lang, args, seed)
            except ValueError as exc:
                raise UsageError(f"{func}: {exc}") from None

        self.build = build


def _graph(ns: argparse.Namespace, reg: Registry) -> tuple[GraphSource, DynamicalGraph]:
    if not ns.func:
        raise UsageError("--func is required")
    src = GraphSource(reg, ns.func, ns.lang, parse_bindings(ns.args))
    return src, src.build(ns.seed)


def _validated(ns, reg) -> tuple[Language, DynamicalGraph, Any]:
    src, g = _graph(ns, reg)
    report = validate(g, src.lang)
    if ns.dot:
        Path(ns.dot).write_text(export_dot(g))
    if getattr(ns, "export", None):
        Path(ns.export).write_text(export_json(g))
    return src.lang, g, report


def _emit(ns, text: str) -> None:
    out = getattr(ns, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _sim_config(ns) -> SimConfig:
    try:
        return SimConfig(t_end=ns.t_end, samples=ns.samples, rtol=ns.rtol, atol=ns.atol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands ---------------------------------------------------------------------------


def cmd_check(ns) -> int:
    reg = load_registry(ns.paths)
    names = sorted(reg.languages)
    if ns.json:
        print(json.dumps({"ok": True, "languages": names, "functions": sorted(reg.functions)}, indent=2))
    else:
        print(f"ok: {len(names)} language(s), {len(reg.functions)} function(s)")
    return EXIT_OK


def cmd_validate(ns) -> int:
    _, _, report = _validated(ns, load_registry(ns.paths))
    print(json.dumps(report.to_dict(), indent=2) if ns.json else report.to_text())
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_compile(ns) -> int:
    lang, g, report = _validated(ns, load_registry(ns.paths))
    if not report.ok:
        raise InvalidGraph(report.to_text())
    system = compile_graph(g, lang)
    _emit(ns, json.dumps(system_json(system), indent=2) + "\n" if ns.json else pretty_equations(system) + "\n")
    return EXIT_OK


def cmd_sim(ns) -> int:
    cfg = _sim_config(ns)
    lang, g, report = _validated(ns, load_registry(ns.paths))
    if not report.ok:
        raise InvalidGraph(report.to_text())
    traj = integrate(compile_graph(g, lang), cfg)
    cols = ns.probe.split(",") if ns.probe else None
    if cols:
        missing = [c for c in cols if c not in traj.labels]
        if missing:
            raise UsageError(f"unknown probe(s) {', '.join(missing)}")
    _emit(ns, traj.to_csv(cols))
    return EXIT_OK


def cmd_sweep(ns) -> int:
    cfg = _sim_config(ns)
    reg = load_registry(ns.paths)
    if not ns.func:
        raise UsageError("--func is required")
    src = GraphSource(reg, ns.func, ns.lang, parse_bindings(ns.args))
    res = sweep(src.build, src.lang, parse_seeds(ns.seeds), cfg, ns.probe)
    if ns.json:
        text = json.dumps({"seeds": [res.seeds[0], res.seeds[-1] + 1], "probe": res.probe,
                           "window_std": res.window_std(0.0, cfg.t_end)}, indent=2) + "\n"
    else:
        text = res.summary_csv()
    _emit(ns, text)
    return EXIT_OK


def cmd_experiment(ns) -> int:
    from .stdlib.experiments import EXPERIMENTS, manifest, run_experiment
    if ns.name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {ns.name!r}; choose from {', '.join(EXPERIMENTS)}")
    m = manifest(ns.name)
    overrides: dict[str, Any] = {}
    for key, text in parse_bindings(ns.set).items():
        if key not in m:
            raise UsageError(f"experiment {ns.name!r} has no parameter {key!r}")
        try:
            overrides[key] = json.loads(text)
        except json.JSONDecodeError:
            raise UsageError(f"--set {key}: value {text!r} is not JSON") from None
    reg = load_registry([])
    summary = run_experiment(ns.name, reg, overrides, Path(ns.out) if ns.out else None)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ark", description="Compile and simulate Ark dynamical-system languages.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_flags(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("paths", nargs="*", help=".ark files loaded on top of the stdlib")
        sp.add_argument("--func", help="function name or bundled generator")
        sp.add_argument("--lang", help="language to invoke under (default: the function's own)")
        sp.add_argument("--args", action="append", metavar="K=V", help="argument bindings")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--dot", metavar="FILE", help="also write the graph as Graphviz DOT")
        sp.add_argument("--export", metavar="FILE", help="also write the graph as JSON")
        sp.add_argument("--json", action="store_true", help="JSON output")

    def sim_flags(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--t-end", type=float, required=True)
        sp.add_argument("--samples", type=int, default=501)
        sp.add_argument("--rtol", type=float, default=1e-6)
        sp.add_argument("--atol", type=float, default=1e-9)
        sp.add_argument("--out", metavar="FILE")

    sp = sub.add_parser("check", help="parse and check source files")
    sp.add_argument("paths", nargs="*")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(run=cmd_check)

    sp = sub.add_parser("validate", help="build a graph and check it against its language")
    graph_flags(sp)
    sp.set_defaults(run=cmd_validate)

    sp = sub.add_parser("compile", help="print the generated equations")
    graph_flags(sp)
    sp.add_argument("--out", metavar="FILE")
    sp.set_defaults(run=cmd_compile)

    sp = sub.add_parser("sim", help="simulate one graph and write a CSV trajectory")
    graph_flags(sp)
    sim_flags(sp)
    sp.add_argument("--probe", help="comma-separated columns (default: all states)")
    sp.set_defaults(run=cmd_sim)

    sp = sub.add_parser("sweep", help="mismatch sweep over a seed range")
    graph_flags(sp)
    sim_flags(sp)
    sp.add_argument("--seeds", required=True, metavar="A..B", help="half-open seed range")
    sp.add_argument("--probe", required=True)
    sp.set_defaults(run=cmd_sweep)

    sp = sub.add_parser("experiment", help="run a bundled experiment")
    sp.add_argument("name")
    sp.add_argument("--set", action="append", metavar="K=V", help="manifest overrides (JSON values)")
    sp.add_argument("--out", metavar="DIR")
    sp.set_defaults(run=cmd_experiment)
    return p


def _report(exc: ArkError) -> None:
    prefix = getattr(exc, "path", None)
    diags: list[Diagnostic] = exc.diagnostics if isinstance(exc, CheckFailed) else [exc.diagnostic()]
    for d in diags:
        print(f"{prefix}:{d}" if prefix else str(d), file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.run(ns)
    except UsageError as exc:
        print(f"ark: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidGraph as exc:
        print(exc.text, file=sys.stderr)
        print("ark: validation failed", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        _report(exc)
        print("ark: numeric failure during simulation", file=sys.stderr)
        return EXIT_NUMERIC
    except ArkError as exc:
        stage = "syntax" if isinstance(exc, ArkSyntaxError) else "semantic"
        if getattr(exc, "code", "") == "sweep" and isinstance(getattr(exc, "cause", None), NumericError):
            _report(exc)
            return EXIT_NUMERIC
        if getattr(exc, "code", "") == "sweep" and getattr(exc.cause, "code", "") == "validation":
            _report(exc)
            return EXIT_INVALID
        _report(exc)
        print(f"ark: {stage} error", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Ark: typed graph languages for analog dynamical systems.

A language declares node and edge types plus production rules; a function
builds a dynamical graph in that language; the compiler turns a valid graph
into an ODE system that the simulator integrates.

    >>> from ark import stdlib_registry, invoke, validate, compile_graph
    >>> reg = stdlib_registry()
    >>> tln = reg.language("tln")
    >>> g = invoke(reg.function("br-func"), tln, {"br": 1})
    >>> validate(g, tln).ok
    True
    >>> compile_graph(g, tln).size
    7
"""

from .compiler import OdeSystem, compile_graph, eval_rhs, pretty_equations
from .errors import (ArkError, ArkSemanticError, ArkSyntaxError, CheckFailed, CompileError, Diagnostic,
                     GraphError, NumericError, Span)
from .frontend import parse, parse_expression
from .graph import DynamicalGraph, GraphBuilder, export_dot, export_json, import_json, invoke
from .lang import Language, Registry, lookup_production, subtype_of
from .loader import load_program
from .simulator import SimConfig, Trajectory, integrate, simulate, steady_state, sweep
from .stdlib import load_stdlib, stdlib_registry
from .validator import ValidationReport, validate

compile = compile_graph  # noqa: A001  (the pipeline stage's natural name)

__version__ = "1.0.0"

__all__ = [
    "ArkError", "ArkSemanticError", "ArkSyntaxError", "CheckFailed", "CompileError", "Diagnostic",
    "DynamicalGraph", "GraphBuilder", "GraphError", "Language", "NumericError", "OdeSystem", "Registry",
    "SimConfig", "Span", "Trajectory", "ValidationReport", "compile", "compile_graph", "eval_rhs",
    "export_dot", "export_json", "import_json", "integrate", "invoke", "load_program", "load_stdlib",
    "lookup_production", "parse", "parse_expression", "pretty_equations", "simulate", "stdlib_registry",
    "steady_state", "subtype_of", "sweep", "validate",
]

"""Turning source text into registered languages and functions."""

from __future__ import annotations

from .errors import CheckFailed, Diagnostic
from .frontend import check_function, parse
from .frontend import nodes as ast
from .graph import check_function_static
from .lang import Registry


def load_program(source: str, registry: Registry) -> ast.SourceProgram:
    """Parse ``source``, resolve its languages into ``registry`` and check its functions.

    The registry is left untouched when anything fails.
    """
    prog = parse(source)
    trial = registry.copy()
    trial.add_program(prog)
    diags: list[Diagnostic] = []
    for func in prog.functions:
        lang = trial.get(func.lang)
        if lang is None:
            diags.extend(check_function(func))
            diags.append(Diagnostic(f"function {func.name!r} uses unknown language {func.lang!r}",
                                    func.span, "unknown-language"))
        else:
            diags.extend(check_function_static(func, lang))
    if diags:
        raise CheckFailed(diags)
    registry.languages, registry.functions = trial.languages, trial.functions
    return prog

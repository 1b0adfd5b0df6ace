"""Lexing, parsing, pretty-printing and scope checks for Ark source text."""

from .checks import BUILTINS, check_expressions, check_function, check_rule
from .nodes import SourceProgram, to_dict, walk
from .parser import parse, parse_bool_expression, parse_expression
from .printer import program as pretty

__all__ = [
    "BUILTINS",
    "SourceProgram",
    "check_expressions",
    "check_function",
    "check_rule",
    "parse",
    "parse_bool_expression",
    "parse_expression",
    "pretty",
    "to_dict",
    "walk",
]

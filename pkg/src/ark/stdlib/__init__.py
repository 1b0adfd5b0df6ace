"""Bundled languages, example functions, graph generators and experiments."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..lang import Registry
from ..loader import load_program
from . import checks as _checks  # noqa: F401  (registers the extern global checks)

# load order respects inheritance across files
SOURCES = ("tln", "gmc-tln", "cnn", "hw-cnn", "obc", "ofs-obc", "intercon-obc", "examples")


def source_text(name: str) -> str:
    return resources.files(__package__).joinpath("sources", f"{name}.ark").read_text()


def load_stdlib(registry: Registry) -> Registry:
    for name in SOURCES:
        load_program(source_text(name), registry)
    return registry


@lru_cache(maxsize=1)
def _cached() -> Registry:
    return load_stdlib(Registry())


def stdlib_registry() -> Registry:
    """A fresh registry preloaded with the bundled sources (safe to mutate)."""
    return _cached().copy()

from __future__ import annotations

import pytest

from ark import CheckFailed, Registry, load_program, lookup_production, subtype_of
from ark.errors import ArkSemanticError
from ark.lang import AmbiguousRuleError

BASE = """
lang base {
  node-type(1, sum) A {
    attr k = real[0, 1]
    attr f = lambd(u)
    init(0) real[-1, 1]
  }
  node-type(0, sum) Z {}
  edge-type W {}
  prod(e:W, s:A->t:A) t <= s.k*var(s)
  prod(e:W, s:A->s:A) s <= -var(s)
}
"""


def derive(body: str, name: str = "child") -> Registry:
    reg = Registry()
    load_program(BASE, reg)
    load_program(f"lang {name} inherits base {{\n{body}\n}}\n", reg)
    return reg


def codes(body: str) -> set[str]:
    with pytest.raises(CheckFailed) as info:
        derive(body)
    return {d.code for d in info.value.diagnostics}


@pytest.mark.parametrize("body,code", [
    ("node-type B inherits A { attr k = real[0, 2] }", "widened-range"),
    ("node-type B inherits A { attr k = int[0, 1] }", "datatype-change"),
    ("node-type B inherits A { attr f = lambd(u, v) }", "datatype-change"),
    ("node-type(2, sum) B inherits A { init(1) real[0, 1] }", "order-mismatch"),
    ("node-type(1, mul) B inherits A {}", "order-mismatch"),
    ("node-type B inherits Q {}", "unknown-type"),
    ("node-type(1, sum) A { init(0) real[0, 1] }", "duplicate-type"),
    ("node-type(2, sum) B { init(0) real[0, 1] }", "missing-init"),
    ("node-type(1, sum) B { init(0) real[0, 1]  init(0) real[0, 1] }", "duplicate-init"),
    ("node-type(1, sum) B { init(3) real[0, 1] }", "init-slot"),
    ("prod(e:W, s:A->t:A) t <= var(s)", "override"),
    ("prod(e:W, s:A->t:Z) t <= var(s)", "no-new-type"),
    ("node-type B inherits A {}\nprod(e:W, s:B->t:A) t <= 1\nprod(e:W, s:B->t:A) t <= 2", "duplicate-rule"),
    ("prod(e:Q, s:A->t:A) t <= 1", "unknown-type"),
    ("node-type B inherits A {}\nprod(e:W, s:A->s:B) s <= 1", "binding"),
    ("cstr n:A { acc match(0, 1, W) }", "no-new-type"),
    ("node-type B inherits A {}\ncstr n:B { acc match(0, 1, W, m->[A]) }", "unbound"),
])
def test_language_errors(body, code):
    assert code in codes(body)


def test_widened_range_message_cites_rule():
    with pytest.raises(CheckFailed) as info:
        derive("node-type B inherits A { attr k = real[0, 2] }")
    assert "smaller value range" in str(info.value)


def test_narrowing_is_allowed_and_attributes_are_inherited():
    reg = derive("node-type B inherits A { attr k = real[0.1, 0.5] mm(0.1, 0) }")
    child = reg.language("child")
    b = child.node_types["B"]
    assert b.order == 1 and b.reduction == "sum"
    assert b.attrs["k"].lo == 0.1 and b.attrs["k"].mm == (0.1, 0.0)
    assert "f" in b.attrs and 0 in b.inits


def test_fixed_edges_stay_fixed():
    reg = Registry()
    load_program("lang f { edge-type fixed W {} }\nlang g inherits f { edge-type W2 inherits W {} }", reg)
    assert reg.language("g").edge_types["W2"].fixed


def test_subtyping_and_distance():
    reg = derive("node-type B inherits A {}\nnode-type C inherits B {}")
    lang = reg.language("child")
    assert subtype_of(lang, "C", "A") and not subtype_of(lang, "A", "C")
    assert lang.distance("C", "A") == 2 and lang.distance("Z", "A") is None
    assert lang.is_ancestor_language("base")


def test_dispatch_prefers_minimum_distance():
    reg = derive("node-type B inherits A {}\nprod(e:W, s:B->t:A) t <= 7")
    lang = reg.language("child")
    rule, dist = lang.dispatch("W", "B", "B", target="dst")
    assert str(rule.ast.expr) and dist == 1 and rule.ast.src_type == "B"
    rule, dist = lang.dispatch("W", "A", "B", target="dst")
    assert rule.ast.src_type == "A" and dist == 1
    assert lookup_production(lang, "W", "B", "A") is not None


def test_dispatch_ambiguity_is_an_error():
    reg = derive("node-type B inherits A {}\nprod(e:W, s:B->t:A) t <= 1\nprod(e:W, s:A->t:B) t <= 2")
    with pytest.raises(AmbiguousRuleError):
        reg.language("child").dispatch("W", "B", "B", target="dst")


def test_self_rules_apply_only_to_self_loops():
    lang = derive("node-type B inherits A {}").language("child")
    assert lang.dispatch("W", "A", "A", target="self") is not None
    assert lang.dispatch("W", "A", "A", target="src") is None  # no src rule exists
    assert lang.dispatch("W", "B", "B", target="self")[1] == 2


def test_registry_rejects_duplicates_and_unknown_parents():
    reg = Registry()
    load_program(BASE, reg)
    with pytest.raises(ArkSemanticError):
        load_program(BASE, reg)
    with pytest.raises(ArkSemanticError):
        load_program("lang x inherits nowhere {}", reg)
    with pytest.raises(ArkSemanticError):
        load_program("lang p inherits q {}\nlang q inherits p {}", reg)


def test_program_order_of_languages_does_not_matter():
    reg = Registry()
    load_program("lang kid inherits mom { node-type B inherits A {} }\n"
                 "lang mom { node-type(1, sum) A { init(0) real[0, 1] } }", reg)
    assert reg.language("kid").parent.name == "mom"


def test_failed_load_leaves_registry_untouched():
    reg = Registry()
    load_program(BASE, reg)
    with pytest.raises(CheckFailed):
        load_program("lang bad inherits base { node-type B inherits A { attr k = real[0, 9] } }", reg)
    assert reg.get("bad") is None


def test_stdlib_languages_resolve(stdlib):
    assert set(stdlib.languages) == {"tln", "gmc-tln", "cnn", "hw-cnn", "obc", "ofs-obc", "intercon-obc"}
    gmc = stdlib.language("gmc-tln")
    assert gmc.dispatch("Em", "Vm", "Im", target="src")[0].lang == "gmc-tln"
    assert gmc.dispatch("E", "Vm", "Im", target="src")[0].lang == "tln"
    assert "groups-respected" in stdlib.language("intercon-obc").global_checks
    assert "Osc_grp" in stdlib.language("intercon-obc").describe()

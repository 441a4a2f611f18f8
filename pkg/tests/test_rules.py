import pytest

from mlmkit.hierarchy import Multiplicity
from mlmkit.rules import (
    RuleError,
    parse_rules,
    render_rule,
    render_rules,
    substitute_parameters,
)

from conftest import FIXTURES


def test_fire_transition_shape(robolang_rules):
    ft = robolang_rules["FireTransition"]
    assert ft.depth == 2
    assert {e.name for e in ft.lhs.nodes()} == {"x", "i"}
    assert len(ft.lhs.elements) == 2
    # the creating block re-declares the kept variables plus the fired parts
    assert len(ft.rhs.elements) == 7
    assert {e.name for e in ft.rhs.nodes()} == {"x", "i", "t", "y"}
    assert {e.name for e in ft.rhs.arrows()} == {"in", "out", "inputs"}
    assert ft.preserved() == {"x", "i"}
    assert ft.deleted() == set()


def test_meta_constants_marked(robolang_rules):
    ft = robolang_rules["FireTransition"]
    mm1 = ft.meta_level(1)
    assert all(el.constant for el in mm1.elements.values())
    mm2 = ft.meta_level(2)
    assert not any(el.constant for el in mm2.elements.values())


def test_empty_from_to_valid():
    text = "rule Tiny { meta { mm1 { N$ } } from { } to { } }"
    (rule,) = parse_rules(text)
    assert rule.depth == 1 and not rule.lhs.elements and not rule.rhs.elements


def test_meta_required():
    with pytest.raises(RuleError):
        parse_rules("rule Bad { meta { } from { } to { } }")


def test_duplicate_declaration_rejected():
    with pytest.raises(RuleError):
        parse_rules("rule Bad { meta { mm1 { N$ N$ } } from { } to { } }")


def test_unknown_meta_reference_rejected():
    with pytest.raises(RuleError) as err:
        parse_rules("rule Bad { meta { mm1 { N$ } } from { x : Missing @ mm1 } to { } }")
    assert "unknown type" in str(err.value)


def test_syntax_error_carries_position():
    with pytest.raises(RuleError) as err:
        parse_rules("rule Bad {\n  meta ( mm1 { N$ } }\n}")
    assert "2:" in str(err.value)


def test_to_arrow_with_unknown_endpoint_rejected():
    text = """
rule Bad {
  meta { mm1 { N$ ; e$ (N -> N) } }
  from { a : N @ mm1 }
  to { a : N @ mm1 ; f : e @ mm1 (a -> ghost) }
}
"""
    with pytest.raises(RuleError) as err:
        parse_rules(text)
    assert "unknown target" in str(err.value)


def test_meta_typed_from_below_rejected():
    text = """
rule Bad {
  meta { mm1 { A : B @ mm2 } mm2 { B$ } }
  from { }
  to { }
}
"""
    with pytest.raises(RuleError) as err:
        parse_rules(text)
    assert "not above" in str(err.value)


def test_parse_print_parse_fixpoint_on_fixture_files():
    for name in ("robolang.mcmt", "pls.mcmt", "pls_prefix.mcmt", "ltl.mcmt"):
        rules = parse_rules((FIXTURES / name).read_text())
        printed = render_rules(rules)
        reparsed = parse_rules(printed)
        assert render_rules(reparsed) == printed


def test_interface_union_and_identity(robolang_rules, pls_rules):
    delete_input = robolang_rules["DeleteInput"]
    iface = delete_input.interface()
    assert set(iface.elements) == set(delete_input.lhs.elements)  # TO empty: I = L
    ft = robolang_rules["FireTransition"]
    iface = ft.interface()
    assert {e.name for e in iface.nodes()} == {"x", "i", "t", "y"}
    assert len(iface.arrows()) == 3


def test_interface_conflicting_declarations_rejected():
    text = """
rule Bad {
  meta { mm1 { A$ ; B$ } }
  from { x : A @ mm1 }
  to { x : B @ mm1 }
}
"""
    with pytest.raises(RuleError):
        parse_rules(text)


def test_parameter_substitution(robolang_rules):
    st = robolang_rules["StepTime"]
    assert st.params == ["x"]
    bound = substitute_parameters(st, {"x": 1})
    assert not bound.params
    clause = bound.rhs.by_name("s").attrs["time"]
    assert clause.kind == "ref" and clause.delta == 1
    zero = substitute_parameters(st, {"x": 0})
    assert zero.rhs.by_name("s").attrs["time"].delta == 0
    with pytest.raises(RuleError):
        substitute_parameters(st, {})
    # rules without parameters are unchanged
    ft = robolang_rules["FireTransition"]
    again = substitute_parameters(ft, {})
    assert render_rule(again) == render_rule(ft)


def test_multiplicity_and_symbolic_suffixes():
    text = """
rule M {
  meta { mm1 { A$ ; e$ (A -> A) } }
  from {
    x : A @ mm1
    y : A @ mm1
    f[1..2] : e @ mm1 (x -> y)
    g[n] : e @ mm1 (y -> x)
  }
  to { }
}
"""
    (rule,) = parse_rules(text)
    f = rule.lhs.by_name("f")
    assert f.mult == Multiplicity(1, 2)
    assert rule.lhs.by_name("g").mult == "n"
    assert "f[1..2]" in render_rule(rule)
    assert "g[n]" in render_rule(rule)


def test_potency_constraint_parses():
    text = """
rule P {
  meta { mm1 { A$ } }
  from { x : A @ mm1 pot 1-2-* }
  to { }
}
"""
    (rule,) = parse_rules(text)
    assert str(rule.lhs.by_name("x").potency) == "1-2-*"
    assert "pot 1-2-*" in render_rule(rule)


def test_sigma_families_are_valid_partial_morphisms(robolang_rules, pls_rules):
    for rule in list(robolang_rules.values()) + list(pls_rules.values()):
        for block in (rule.lhs, rule.rhs, rule.interface()):
            for sig in rule.sigma(block):
                assert sig.validate() == []


def test_type_compatibility_of_interface_inclusions(robolang_rules):
    # the typing of FROM equals the interface typing restricted to FROM
    for rule in robolang_rules.values():
        sig_l = rule.sigma(rule.lhs)
        sig_i = rule.sigma(rule.interface())
        for sl, si in zip(sig_l, sig_i):
            for key, value in sl.nodes.items():
                assert si.nodes.get(key) == value
            for key, value in sl.arrows.items():
                assert si.arrows.get(key) == value


def test_duplicate_rule_names_rejected():
    text = "rule A { meta { mm1 { N$ } } from { } to { } }\n" * 2
    with pytest.raises(RuleError):
        parse_rules(text)


def test_interface_typing_restricts_exactly(robolang_rules, pls_rules):
    """Both directions of the compatibility equations: the FROM/TO typings are
    exactly the interface typing restricted to their elements."""
    for rules in (robolang_rules, pls_rules):
        for rule in rules.values():
            iface = rule.interface()
            sig_i = rule.sigma(iface)
            for blk in (rule.lhs, rule.rhs):
                sig_b = rule.sigma(blk)
                for sb, si in zip(sig_b, sig_i):
                    for key in blk.elements:
                        assert sb.get(key) == si.get(key)

#!/usr/bin/env python3
"""Regenerate fixtures/ltl.mcmt: rewrite rules for temporal formulas.

The full set is mechanical: each unrolling, next-removal and boolean folding
rule needs one variant per kind of arrow pointing at the rewritten node
(root marker, unary operand, left or right operand).  Writing the variants by
hand is error-prone, so this script is the source of truth for the file.
"""

from pathlib import Path

PARENT_KINDS = {
    "rootf": "Root",
    "formula": "Unary",
    "left": "Binary",
    "right": "Binary",
}

META = """  meta {
    mm1 {
      Formula$
      Unary$
      Binary$
      Root$
      Not$
      X$
      F$
      G$
      And$
      Or$
      Implication$
      U$
      R$
      True$
      False$
      left$ (Binary -> Formula)
      right$ (Binary -> Formula)
      formula$ (Unary -> Formula)
      rootf$ (Root -> Formula)
    }
  }
"""


def rule(name, pk, from_lines, to_lines):
    pt = PARENT_KINDS[pk]
    body = [f"rule {name}_{pk} {{", META.rstrip("\n"), "  from {", f"    p : {pt} @ mm1"]
    body += [f"    {line}" for line in from_lines]
    body += ["  }", "  to {", f"    p : {pt} @ mm1"]
    body += [f"    {line}" for line in to_lines]
    body += ["  }", "}"]
    return "\n".join(body) + "\n"


def unroll_binary(op, now_shape):
    """now_shape: ("Or", "And") for until, ("And", "Or") for release."""
    outer, inner = now_shape
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            f"u : {op} @ mm1",
            "phi : Formula @ mm1",
            "psi : Formula @ mm1",
            f"pa : {pk} @ mm1 (p -> u)",
            "l : left @ mm1 (u -> phi)",
            "r : right @ mm1 (u -> psi)",
        ]
        to = [
            f"u : {op} @ mm1",
            "phi : Formula @ mm1",
            "psi : Formula @ mm1",
            "l : left @ mm1 (u -> phi)",
            "r : right @ mm1 (u -> psi)",
            f"o1 : {outer} @ mm1",
            f"o2 : {inner} @ mm1",
            "x1 : X @ mm1",
            f"pa2 : {pk} @ mm1 (p -> o1)",
            "w1 : left @ mm1 (o1 -> psi)",
            "w2 : right @ mm1 (o1 -> o2)",
            "w3 : left @ mm1 (o2 -> phi)",
            "w4 : right @ mm1 (o2 -> x1)",
            "w5 : formula @ mm1 (x1 -> u)",
        ]
        rules.append(rule(f"Unroll{op}", pk, frm, to))
    return rules


def unroll_unary(op, outer):
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            f"u : {op} @ mm1",
            "phi : Formula @ mm1",
            f"pa : {pk} @ mm1 (p -> u)",
            "l : formula @ mm1 (u -> phi)",
        ]
        to = [
            f"u : {op} @ mm1",
            "phi : Formula @ mm1",
            "l : formula @ mm1 (u -> phi)",
            f"o1 : {outer} @ mm1",
            "x1 : X @ mm1",
            f"pa2 : {pk} @ mm1 (p -> o1)",
            "w1 : left @ mm1 (o1 -> phi)",
            "w2 : right @ mm1 (o1 -> x1)",
            "w3 : formula @ mm1 (x1 -> u)",
        ]
        rules.append(rule(f"Unroll{op}", pk, frm, to))
    return rules


def delete_next():
    # the next node is kept (it may be shared); only the parent arrow moves
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            "n : X @ mm1",
            "phi : Formula @ mm1",
            f"pa : {pk} @ mm1 (p -> n)",
            "f1 : formula @ mm1 (n -> phi)",
        ]
        to = [
            "n : X @ mm1",
            "phi : Formula @ mm1",
            "f1 : formula @ mm1 (n -> phi)",
            f"pa2 : {pk} @ mm1 (p -> phi)",
        ]
        rules.append(rule("DeleteNext", pk, frm, to))
    return rules


def fold_unary(name, opnode, operand_const, result_const):
    """Not(True) -> False and Not(False) -> True."""
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            f"n : {opnode} @ mm1",
            f"c : {operand_const} @ mm1",
            f"pa : {pk} @ mm1 (p -> n)",
            "f1 : formula @ mm1 (n -> c)",
        ]
        to = [
            f"n : {opnode} @ mm1",
            f"c : {operand_const} @ mm1",
            "f1 : formula @ mm1 (n -> c)",
            f"k : {result_const} @ mm1",
            f"pa2 : {pk} @ mm1 (p -> k)",
        ]
        rules.append(rule(name, pk, frm, to))
    return rules


def fold_binary_keep(name, opnode, const, const_side, keep_side):
    """Fold to the other operand: True & phi -> phi etc."""
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            "phi : Formula @ mm1",
            f"pa : {pk} @ mm1 (p -> n)",
            f"cl : {const_side} @ mm1 (n -> c)",
            f"kl : {keep_side} @ mm1 (n -> phi)",
        ]
        to = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            "phi : Formula @ mm1",
            f"cl : {const_side} @ mm1 (n -> c)",
            f"kl : {keep_side} @ mm1 (n -> phi)",
            f"pa2 : {pk} @ mm1 (p -> phi)",
        ]
        rules.append(rule(name, pk, frm, to))
    return rules


def fold_binary_const(name, opnode, const, const_side, other_side, result):
    """Fold to a constant: phi & False -> False etc."""
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            "phi : Formula @ mm1",
            f"pa : {pk} @ mm1 (p -> n)",
            f"cl : {const_side} @ mm1 (n -> c)",
            f"kl : {other_side} @ mm1 (n -> phi)",
        ]
        to = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            "phi : Formula @ mm1",
            f"cl : {const_side} @ mm1 (n -> c)",
            f"kl : {other_side} @ mm1 (n -> phi)",
            f"k : {result} @ mm1",
            f"pa2 : {pk} @ mm1 (p -> k)",
        ]
        rules.append(rule(name, pk, frm, to))
    return rules


def fold_temporal_binary(name, opnode, const, const_side, other_side, to_const):
    """Until/release against a constant: retarget to the constant or to the
    other operand, keeping the operator node for other parents."""
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            "phi : Formula @ mm1",
            f"pa : {pk} @ mm1 (p -> n)",
            f"cl : {const_side} @ mm1 (n -> c)",
            f"kl : {other_side} @ mm1 (n -> phi)",
        ]
        target = "c" if to_const else "phi"
        to = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            "phi : Formula @ mm1",
            f"cl : {const_side} @ mm1 (n -> c)",
            f"kl : {other_side} @ mm1 (n -> phi)",
            f"pa2 : {pk} @ mm1 (p -> {target})",
        ]
        rules.append(rule(name, pk, frm, to))
    return rules


def fold_temporal_unary(name, opnode, const):
    """Eventually over true, globally over false: retarget to the constant."""
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            f"pa : {pk} @ mm1 (p -> n)",
            "f1 : formula @ mm1 (n -> c)",
        ]
        to = [
            f"n : {opnode} @ mm1",
            f"c : {const} @ mm1",
            "f1 : formula @ mm1 (n -> c)",
            f"pa2 : {pk} @ mm1 (p -> c)",
        ]
        rules.append(rule(name, pk, frm, to))
    return rules


def fold_impl_negate():
    """phi -> False is the negation of phi."""
    rules = []
    for pk in PARENT_KINDS:
        frm = [
            "n : Implication @ mm1",
            "c : False @ mm1",
            "phi : Formula @ mm1",
            f"pa : {pk} @ mm1 (p -> n)",
            "cl : right @ mm1 (n -> c)",
            "kl : left @ mm1 (n -> phi)",
        ]
        to = [
            "n : Implication @ mm1",
            "c : False @ mm1",
            "phi : Formula @ mm1",
            "cl : right @ mm1 (n -> c)",
            "kl : left @ mm1 (n -> phi)",
            "k : Not @ mm1",
            f"pa2 : {pk} @ mm1 (p -> k)",
            "w1 : formula @ mm1 (k -> phi)",
        ]
        rules.append(rule("FoldImplNegate", pk, frm, to))
    return rules


def main():
    rules = []
    rules += unroll_binary("U", ("Or", "And"))
    rules += unroll_binary("R", ("And", "Or"))
    rules += unroll_unary("F", "Or")
    rules += unroll_unary("G", "And")
    rules += delete_next()
    rules += fold_unary("FoldNotTrue", "Not", "True", "False")
    rules += fold_unary("FoldNotFalse", "Not", "False", "True")
    rules += fold_binary_keep("FoldAndTrueL", "And", "True", "left", "right")
    rules += fold_binary_keep("FoldAndTrueR", "And", "True", "right", "left")
    rules += fold_binary_const("FoldAndFalseL", "And", "False", "left", "right", "False")
    rules += fold_binary_const("FoldAndFalseR", "And", "False", "right", "left", "False")
    rules += fold_binary_keep("FoldOrFalseL", "Or", "False", "left", "right")
    rules += fold_binary_keep("FoldOrFalseR", "Or", "False", "right", "left")
    rules += fold_binary_const("FoldOrTrueL", "Or", "True", "left", "right", "True")
    rules += fold_binary_const("FoldOrTrueR", "Or", "True", "right", "left", "True")
    rules += fold_binary_keep("FoldImplTrueL", "Implication", "True", "left", "right")
    rules += fold_binary_const("FoldImplFalseL", "Implication", "False", "left", "right", "True")
    rules += fold_binary_const("FoldImplTrueR", "Implication", "True", "right", "left", "True")
    rules += fold_impl_negate()
    rules += fold_temporal_binary("FoldUntilTrueR", "U", "True", "right", "left", True)
    rules += fold_temporal_binary("FoldUntilFalseL", "U", "False", "left", "right", False)
    rules += fold_temporal_binary("FoldReleaseFalseR", "R", "False", "right", "left", True)
    rules += fold_temporal_binary("FoldReleaseTrueL", "R", "True", "left", "right", False)
    rules += fold_temporal_unary("FoldEventuallyTrue", "F", "True")
    rules += fold_temporal_unary("FoldGloballyFalse", "G", "False")
    header = (
        "// Rewrite rules for temporal formula models: unrolling, next-removal\n"
        "// and boolean folding, one variant per incoming-arrow kind.\n"
        "// Generated by scripts/gen_ltl_rules.py; edit there, not here.\n\n"
    )
    out = Path(__file__).resolve().parent.parent / "fixtures" / "ltl.mcmt"
    out.write_text(header + "\n".join(rules), encoding="utf-8")
    print(f"wrote {out} ({len(rules)} rules)")


if __name__ == "__main__":
    main()

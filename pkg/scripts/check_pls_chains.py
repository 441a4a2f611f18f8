#!/usr/bin/env python3
"""Replay the chain-level diagnostics on the plant fixtures: the refactoring
squares of the running configuration, the level-pair classification of the
shipped transfer rule, and the failure pattern of its earlier draft."""

from pathlib import Path

from mlmkit.diagnose import binding_report, refactoring_report
from mlmkit.mlhio import load_hierarchy
from mlmkit.rules import parse_rules

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    system = load_hierarchy((FIXTURES / "pls.mlh").read_text())
    print(refactoring_report(system, "hammer_config"))
    fixed = {r.name: r for r in parse_rules((FIXTURES / "pls.mcmt").read_text())}
    print(binding_report(system, fixed["TransferPart"], "hammer_config"))
    prefix = parse_rules((FIXTURES / "pls_prefix.mcmt").read_text())[0]
    print("earlier draft of the same rule:")
    print(binding_report(system, prefix, "hammer_config"))


if __name__ == "__main__":
    main()

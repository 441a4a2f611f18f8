#!/usr/bin/env python3
"""Drive the robot workflow simulation from the command line and print a
compact account of every pass: which rules fired and which task is current.

    python scripts/run_robolang_sim.py [steps] [seed]
"""

import sys
from pathlib import Path

from mlmkit.hierarchy import transitive_types
from mlmkit.mlhio import load_hierarchy
from mlmkit.rules import parse_rules
from mlmkit.simulate import SeededChoice, Trace, parse_layers, step

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    steps = int(sys.argv[1]) if len(sys.argv) > 1 else 8
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    system = load_hierarchy((FIXTURES / "robolang.mlh").read_text())
    rules = {r.name: r for r in parse_rules((FIXTURES / "robolang.mcmt").read_text())}
    config = parse_layers((FIXTURES / "robolang.layers").read_text())
    chooser = SeededChoice(seed)
    trace = Trace(seed)
    model = "robot_1_run_1"
    for k in range(1, steps + 1):
        before = len(trace.entries)
        system, applied = step(system, model, rules, config, chooser, trace, k)
        fired = [e.rule for e in trace.entries[before:] if not e.rule.endswith("!rejected")]
        snap = system.find_model(model)
        tasks = [
            f"{n}:{transitive_types(system, model, n).get('legolang')}"
            for n in sorted(snap.graph.nodes)
            if transitive_types(system, model, n).get("robolang") == "Task"
        ]
        print(f"pass {k}: fired={fired} current={tasks}")
        if not applied:
            print("fixpoint reached")
            break
    print(f"\ntrace ({len(trace.entries)} applications):")
    print(trace.render(), end="")


if __name__ == "__main__":
    main()

from pathlib import Path

import pytest

from mlmkit.mlhio import load_hierarchy
from mlmkit.rules import parse_rules

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_fixture(name: str):
    return load_hierarchy((FIXTURES / name).read_text(encoding="utf-8"))


def load_rule_file(name: str):
    return {r.name: r for r in parse_rules((FIXTURES / name).read_text(encoding="utf-8"))}


@pytest.fixture()
def robolang_system():
    return load_fixture("robolang.mlh")


@pytest.fixture()
def fragment_system():
    return load_fixture("robolang_fragment.mlh")


@pytest.fixture()
def pls_system():
    return load_fixture("pls.mlh")


@pytest.fixture()
def clock_system():
    return load_fixture("clock.mlh")


@pytest.fixture()
def combined_system():
    return load_fixture("robolang_ltl.mlh")


@pytest.fixture(scope="session")
def robolang_rules():
    return load_rule_file("robolang.mcmt")


@pytest.fixture(scope="session")
def pls_rules():
    return load_rule_file("pls.mcmt")


@pytest.fixture(scope="session")
def ltl_rules():
    return load_rule_file("ltl.mcmt")

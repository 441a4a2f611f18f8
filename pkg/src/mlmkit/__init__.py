"""Multilevel modelling kernel: typed graph hierarchies, coupled
transformation rules with proliferation, a layered simulation driver and
temporal-formula rewriting."""

__version__ = "0.1.0"

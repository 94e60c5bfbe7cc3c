"""Equivalence checking for timed-automata processes via zone valuation graphs and timed games."""

__version__ = "0.1.0"

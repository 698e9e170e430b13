"""Reversible circuits for solving GF(2) linear systems held in qubits, with
an exact sparse simulator and Simon-type search pipelines built on them."""

__version__ = "0.1.0"

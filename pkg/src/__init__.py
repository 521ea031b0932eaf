"""Zeta integrals, Laurent expansions and verification harnesses on simple Euclidean Jordan algebras."""

__version__ = "1.0.0"

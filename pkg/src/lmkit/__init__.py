"""Desk-scale language modeling: GRU LMs, Kneser-Ney n-grams, lattice rescoring."""

__version__ = "0.1.0"

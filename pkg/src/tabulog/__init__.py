"""tabulog: a small tabled logic language with CP, SAT and MIP backends."""

__version__ = "0.1.0"

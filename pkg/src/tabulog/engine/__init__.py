from tabulog.engine.machine import Engine

__all__ = ["Engine"]

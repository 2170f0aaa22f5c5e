from tabulog.tabling.tables import AnswerTable, Tables

__all__ = ["AnswerTable", "Tables"]

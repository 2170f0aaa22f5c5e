from tabulog.planner.search import Planner, PlanTableEntry, replay_plan

__all__ = ["PlanTableEntry", "Planner", "replay_plan"]

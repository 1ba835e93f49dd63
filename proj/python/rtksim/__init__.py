"""Tick-level RTOS simulator with time and energy annotated threads."""

from ._rtksim import SimError, Simulation, demo_scenario_text, normalize_scenario

__all__ = ["SimError", "Simulation", "demo_scenario_text", "normalize_scenario"]

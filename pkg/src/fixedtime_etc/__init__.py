"""Adaptive fixed-time backstepping control of state-constrained plants under
event-triggered actuation, as a simulation library and CLI."""

__version__ = "0.1.0"

"""Simulation of an ultrasonic beacon positioning system for indoor robots."""

__version__ = "0.1.0"

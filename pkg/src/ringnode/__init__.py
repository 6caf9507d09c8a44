"""Simulator for a flux-tunable nanotube ring cavity coupled to a tripod emitter."""

__version__ = "0.1.0"

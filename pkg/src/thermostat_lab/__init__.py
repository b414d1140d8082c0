"""Simulation and verification lab for thermostatted particles with Maxwellian collisions."""

__version__ = "0.1.0"

"""Exact local orbital integrals for chain orders, their matched combinations,
and prime-geodesic counting for principal congruence subgroups."""

__version__ = "0.1.0"

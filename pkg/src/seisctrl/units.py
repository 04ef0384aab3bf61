"""Unit conventions and fixed conversion factors.

Canonical internal units are km, hr and MPa.  Well fluxes cross module
boundaries in m^3/hr (the currency of configs, CSV output and demand
schedules) and are converted to km^3/hr wherever they enter the physics.
"""

KM3_PER_M3 = 1e-9
M3_PER_KM3 = 1e9

HOURS_PER_MONTH = 730.0
HOURS_PER_YEAR = 8760.0


def m3_to_km3(q):
    """Convert a flux from m^3/hr to km^3/hr."""
    return q * KM3_PER_M3


def km3_to_m3(q):
    """Convert a flux from km^3/hr to m^3/hr."""
    return q * M3_PER_KM3

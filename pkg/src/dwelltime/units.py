"""Unit bookkeeping.

All formulas in this package are written with explicit hbar and mass, so a
UnitSystem is simply the pair of constants the caller works in.  The default
is natural units hbar = m = 1; figure data is usually quoted in units of
m*L**2/hbar, which ``time_unit`` provides.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class UnitSystem:
    """Constants defining the unit system: hbar and the particle mass."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")

    def time_unit(self, length: float) -> float:
        """Natural dwell-time unit m*L**2/hbar for a region of length L."""
        return self.mass * length**2 / self.hbar

    def classical_crossing_time(self, k: float, length: float) -> float:
        """m*L/(hbar*k): time for a classical particle of wavenumber k."""
        return self.mass * length / (self.hbar * k)

    def wavenumber_from_velocity(self, v: float) -> float:
        return self.mass * v / self.hbar


NATURAL = UnitSystem()

# CODATA-2018 hbar, handy for laboratory scenarios (SI units).
HBAR_SI = 1.054571817e-34

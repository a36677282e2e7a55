"""Time of residence in a quantum state, and oscillator fraction-of-time.

For systems with a point spectrum the region-projector average over one
period (or over all time) is diagonal in the energy basis, turning dwell
time into a fraction-of-time observable.  The two-level Rabi system makes
the windowed version explicit: with H = (hbar Omega / 2) sigma_x and P the
projector on the excited basis state, the operator

    tau_P(0; T) = Int_0^T U+(t) P U(t) dt

has the closed 2x2 form implemented below, eigenvalues
T/2 +- |sin(Omega T / 2)| / Omega, and commutes with H exactly at the full
Rabi periods T = 2 pi n / Omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import QuadratureSpec, adaptive_quad, hermite_density
from .packets import Region
from .units import NATURAL, UnitSystem


@dataclass(frozen=True)
class BlochVector:
    """State rho = (1 + r . sigma)/2; |r| <= 1."""

    r_x: float
    r_y: float
    r_z: float

    def __post_init__(self):
        if self.norm > 1.0 + 1e-12:
            raise ValueError("Bloch vector must lie in or on the unit sphere")

    @property
    def norm(self) -> float:
        return math.sqrt(self.r_x**2 + self.r_y**2 + self.r_z**2)


def residence_matrix(omega: float, T: float) -> np.ndarray:
    """Time-of-residence operator over [0, T] for the Rabi two-level system.

    [[T/2 + sin(Omega T)/(2 Omega),  -i (1 - cos(Omega T))/(2 Omega)],
     [ i (1 - cos(Omega T))/(2 Omega),  T/2 - sin(Omega T)/(2 Omega)]]
    """
    if omega <= 0 or T <= 0:
        raise ValueError("require Omega > 0 and T > 0")
    s = math.sin(omega * T) / (2.0 * omega)
    c = (1.0 - math.cos(omega * T)) / (2.0 * omega)
    return np.array([[T / 2.0 + s, -1j * c], [1j * c, T / 2.0 - s]], dtype=complex)


def residence_eigenvalues(omega: float, T: float) -> tuple[float, float]:
    """(tau_plus, tau_minus) = T/2 +- |sin(Omega T / 2)| / Omega, descending."""
    if omega <= 0 or T <= 0:
        raise ValueError("require Omega > 0 and T > 0")
    split = abs(math.sin(0.5 * omega * T)) / omega
    return T / 2.0 + split, T / 2.0 - split


def residence_average(omega: float, T: float, r: BlochVector) -> float:
    """Average residence time for the Bloch-vector state r.

    T/2 + [(1 - cos(Omega T)) r_y + sin(Omega T) r_x] / (2 Omega); sweeps
    [tau_minus, tau_plus] as r covers the unit sphere.
    """
    if omega <= 0 or T <= 0:
        raise ValueError("require Omega > 0 and T > 0")
    return T / 2.0 + ((1.0 - math.cos(omega * T)) * r.r_y
                      + math.sin(omega * T) * r.r_x) / (2.0 * omega)


def residence_commutator_norm(omega: float, T: float, hbar: float = 1.0) -> float:
    """Frobenius norm of [H, tau_P(0;T)]: the operator is not stationary.

    sqrt(2) * hbar * |sin(Omega T / 2)|; vanishes exactly at Omega T = 2 pi n.
    """
    if omega <= 0 or T <= 0:
        raise ValueError("require Omega > 0 and T > 0")
    c = 1.0 - math.cos(omega * T)
    s = math.sin(omega * T)
    # entries of [H, tau] = (i hbar / 2) [[c, i s], [-i s, -c]]
    return 0.5 * hbar * math.sqrt(2.0 * c * c + 2.0 * s * s)


def ho_fraction_of_time(n: int, D: Region, omega: float = 1.0,
                        units: UnitSystem = NATURAL) -> tuple[float, float]:
    """Fraction of a period the oscillator eigenstate n spends in D.

    Returns (fraction, eigenvalue) with fraction = Int_D |phi_n|^2 dx and
    eigenvalue = (2 pi / omega) * fraction, the dwell time restricted to one
    period.  D may have infinite endpoints.  The quadrature window is
    clipped to the classically allowed region plus tunnelling tails,
    +-(sqrt(2n+1) + 8) oscillator lengths, beyond which the density is
    below 1e-14.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if omega <= 0:
        raise ValueError("omega must be positive")
    a0 = math.sqrt(units.hbar / (units.mass * omega))
    u_max = math.sqrt(2.0 * n + 1.0) + 8.0
    lo = max(D.x1 / a0, -u_max)
    hi = min(D.x2 / a0, u_max)
    if hi <= lo:
        return 0.0, 0.0
    spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=400)
    frac, _ = adaptive_quad(lambda u: hermite_density(n, u), lo, hi, spec)
    frac = float(frac)
    return frac, (2.0 * math.pi / omega) * frac

"""Spatial regions and momentum-space wavepackets.

The workhorse packet family is

    psi_tilde(k) = N (1 - exp(-alpha k^2)) exp(-(k-k0)^2/(4 dk^2)) exp(-i k x0)

restricted to k > 0.  The (1 - exp(-alpha k^2)) factor makes the amplitude
vanish like k^2 at the origin, which keeps the dwell-time average and second
moment finite (packets with weight at k = 0 linger in any region arbitrarily
long).  The normalisation N is computed numerically at construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .numerics import QuadratureSpec, adaptive_quad


class DomainConditionWarning(UserWarning):
    """The packet decays too slowly at k=0 for finite dwell-time moments."""


@dataclass(frozen=True)
class Region:
    """Spatial interval D = [x1, x2]."""

    x1: float
    x2: float

    def __post_init__(self):
        if not self.x2 > self.x1:
            raise ValueError(f"region requires x2 > x1, got [{self.x1}, {self.x2}]")

    @property
    def length(self) -> float:
        return self.x2 - self.x1

    def translated(self, a: float) -> "Region":
        return Region(self.x1 + a, self.x2 + a)

    def contains_interval(self, lo: float, hi: float) -> bool:
        return self.x1 <= lo and hi <= self.x2


@dataclass(frozen=True)
class MomentumWavepacket:
    """Complex momentum amplitude psi_tilde(k) with support metadata.

    amplitude must accept numpy arrays of k.  ``k_support`` bounds the region
    where |psi_tilde| is non-negligible (used to window quadratures and root
    scans).  Packets built by ``gaussian_truncated`` are normalised to
    Int |psi_tilde|^2 dk = 1; auxiliary superpositions may carry
    normalized=False.
    """

    amplitude: Callable[[np.ndarray], np.ndarray]
    support: Literal["positive", "full"]
    k_support: tuple[float, float]
    normalized: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.k_support
        if not hi > lo:
            raise ValueError("k_support must be an increasing pair")
        if self.support == "positive" and lo < 0:
            raise ValueError("positive-support packet cannot extend to k < 0")

    def k_window(self, rel_threshold: float = 1e-12) -> tuple[float, float]:
        """Sub-interval of k_support where |psi_tilde|^2 > rel_threshold * peak."""
        lo, hi = self.k_support
        ks = np.linspace(lo, hi, 4001)
        dens = np.abs(self.amplitude(ks)) ** 2
        peak = dens.max()
        if peak == 0.0:
            raise ValueError("amplitude vanishes on its declared support")
        keep = np.flatnonzero(dens > rel_threshold * peak)
        return float(ks[max(keep[0] - 1, 0)]), float(ks[min(keep[-1] + 1, ks.size - 1)])

    def norm_squared(self) -> float:
        lo, hi = self.k_window(1e-16)
        spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=400)
        val, _ = adaptive_quad(lambda k: abs(self.amplitude(np.asarray(k))) ** 2, lo, hi, spec)
        return float(val)

    def domain_condition(self) -> dict:
        """Decay diagnostics at k -> 0+ for dwell-moment convergence.

        The first moment needs psi_tilde(k)/k -> 0; the probe accepts the
        packet when |psi_tilde(k)| <= bound * k^(3/2) holds on a mesh near the
        origin (the k^(1/2) margin over the bare condition).  The second
        moment needs faster decay, probed against k^(3/2) growth of
        |psi_tilde|/k.  Results are advisory flags, not hard errors.
        """
        lo, hi = self.k_support
        if lo > 0:
            return {"m1_ok": True, "m2_ok": True, "detail": "support bounded away from k=0"}
        ks = np.geomspace(1e-6, max(1e-3, 1e-2 * hi), 40)
        amp = np.abs(self.amplitude(ks))
        scale = float(np.max(np.abs(self.amplitude(np.linspace(lo, hi, 2001)))))
        m1_ok = bool(np.all(amp <= 1e3 * scale * ks**1.5))
        m2_ok = bool(np.all(amp <= 1e3 * scale * ks**1.5))
        if amp[0] > 1e-6 * scale:  # finite weight at the origin
            m1_ok = m2_ok = False
        return {"m1_ok": m1_ok, "m2_ok": m2_ok, "detail": f"|psi(1e-6)|/peak = {amp[0]/scale:.2e}"}

    def warn_if_divergent(self, need_m2: bool = False):
        cond = self.domain_condition()
        if not cond["m1_ok"]:
            warnings.warn(
                "packet amplitude does not vanish fast enough at k=0; "
                "dwell-time average may diverge", DomainConditionWarning, stacklevel=3)
        elif need_m2 and not cond["m2_ok"]:
            warnings.warn(
                "packet decays too slowly at k=0 for a finite dwell-time "
                "second moment", DomainConditionWarning, stacklevel=3)


def gaussian_truncated(
    k0: float = 2.0,
    dk: float = 0.4,
    alpha: float = 0.5,
    x0: float = -10.0,
    n_sigma: float = 12.0,
) -> MomentumWavepacket:
    """Normalised positive-momentum Gaussian packet with a k^2 cutoff at 0.

    k0: central wavenumber, dk: momentum width, alpha: cutoff length^2,
    x0: initial packet centre (pure phase exp(-i k x0)).
    """
    if k0 <= 0 or dk <= 0 or alpha < 0:
        raise ValueError("require k0 > 0, dk > 0, alpha >= 0")
    k_hi = k0 + n_sigma * dk

    def raw(k):
        k = np.asarray(k, dtype=float)
        out = (1.0 - np.exp(-alpha * k**2)) * np.exp(-((k - k0) ** 2) / (4.0 * dk**2))
        out = out * np.exp(-1j * k * x0)
        return np.where(k > 0.0, out, 0.0 + 0.0j)

    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-13, max_subdivisions=400)
    nsq, _ = adaptive_quad(lambda k: abs(raw(np.asarray(k))) ** 2, 0.0, k_hi, spec)
    norm = 1.0 / math.sqrt(nsq)

    return MomentumWavepacket(
        amplitude=lambda k: norm * raw(k),
        support="positive",
        k_support=(0.0, k_hi),
        normalized=True,
        params={"k0": k0, "dk": dk, "alpha": alpha, "x0": x0, "norm": norm},
    )


def superpose(psi_a: MomentumWavepacket, psi_b: MomentumWavepacket,
              ca: complex = 1.0, cb: complex = 1.0) -> MomentumWavepacket:
    """Unnormalised linear combination ca*psi_a + cb*psi_b."""
    if psi_a.support != psi_b.support:
        raise ValueError("cannot superpose packets with different support types")
    lo = min(psi_a.k_support[0], psi_b.k_support[0])
    hi = max(psi_a.k_support[1], psi_b.k_support[1])
    fa, fb = psi_a.amplitude, psi_b.amplitude
    return MomentumWavepacket(
        amplitude=lambda k: ca * fa(k) + cb * fb(k),
        support=psi_a.support,
        k_support=(lo, hi),
        normalized=False,
    )


def overlap(psi_a: MomentumWavepacket, psi_b: MomentumWavepacket) -> complex:
    """<psi_a | psi_b> = Int conj(a~) b~ dk."""
    lo = min(psi_a.k_support[0], psi_b.k_support[0])
    hi = max(psi_a.k_support[1], psi_b.k_support[1])
    spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=400)
    val, _ = adaptive_quad(
        lambda k: np.conj(psi_a.amplitude(np.asarray(k))) * psi_b.amplitude(np.asarray(k)),
        lo, hi, spec)
    return complex(val)

"""Dwell-time operator for free 1-D motion on a region D = [x1, x2].

At each wavenumber k > 0 the operator restricted to the doubly degenerate
energy shell is a 2x2 Hermitian matrix whose eigenvalues

    t_pm(k) = (m L / hbar k) (1 +- sin(kL)/(kL))

split the single classical crossing time m L / (hbar k).  The labels follow
the eigenvector structure (|k> +- e^{ikL} |-k>)/sqrt(2): "plus" is the branch
symmetric about the interval centre, which is the larger eigenvalue wherever
sin(kL) > 0.  The two branches cross at kL = n*pi.

The dwell-time distribution of a positive-momentum packet is assembled by
inverting the (multivalued) eigenvalue curves:

    Pi_psi(tau) = 1/2 sum_j sum_br |psi_tilde(k_j)|^2 / |t_br'(k_j)|

summing over all roots k_j of t_br(k) = tau inside the packet window.  The
distribution develops integrable |tau - tau_c|^(-1/2) spikes at the values
tau_c where an eigenvalue branch has zero slope (every branch crossing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import QuadratureSpec, adaptive_quad
from .packets import MomentumWavepacket, Region
from .units import NATURAL, UnitSystem

_MOMENT_SPEC = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=500)


@dataclass(frozen=True)
class DwellEigenpair:
    """Eigenvalue pair of the on-shell free dwell matrix at wavenumber k.

    t_plus/t_minus carry the branch labels of the symmetric/antisymmetric
    eigenvectors; use t_max/t_min for magnitude ordering (the labels swap
    order wherever sin(kL) < 0).  ``phase`` is the relative eigenvector
    phase e^{i k L}.
    """

    k: float
    t_plus: float
    t_minus: float
    phase: complex

    @property
    def t_max(self) -> float:
        return max(self.t_plus, self.t_minus)

    @property
    def t_min(self) -> float:
        return min(self.t_plus, self.t_minus)


@dataclass(frozen=True)
class OnShellDwellMatrix:
    """2x2 dwell matrix in the (|k>, |-k>) basis at fixed energy."""

    k: float
    matrix: np.ndarray  # complex, shape (2, 2)

    def hermiticity_defect(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m - m.conj().T)))

    def eigenvalues(self) -> tuple[float, float]:
        """Eigenvalues sorted descending."""
        ev = np.linalg.eigvalsh(self.matrix)
        return float(ev[1]), float(ev[0])

    @property
    def trace(self) -> float:
        return float(self.matrix.trace().real)


@dataclass(frozen=True)
class SampledDistribution:
    """Dwell-time density on a tau grid, with singular-point metadata.

    Grid points inside the excluded neighbourhoods of the singular abscissae
    (half-width 1e-4 * tau_c) are dropped from ``abscissae``; integrals
    across them are handled by the quadrature in distribution_moment.
    """

    abscissae: np.ndarray
    density: np.ndarray
    truncation: tuple[float, float]
    singular_points: np.ndarray


def _branch_value(k, L, sign, units):
    k = np.asarray(k, dtype=float)
    q = k * L
    return (units.mass * L / (units.hbar * k)) * (1.0 + sign * np.sinc(q / np.pi))


def _branch_value_scalar(k: float, L: float, sign: int, c: float) -> float:
    # c = mass/hbar; scalar math path for the root-refinement hot loop
    return c * (L / k + sign * math.sin(k * L) / (k * k))


def _branch_deriv_scalar(k: float, L: float, sign: int, c: float) -> float:
    return c * (-L / (k * k) + sign * (L * math.cos(k * L) / (k * k)
                                       - 2.0 * math.sin(k * L) / (k * k * k)))


def _branch_deriv(k, L, sign, units):
    k = np.asarray(k, dtype=float)
    q = k * L
    return (units.mass / units.hbar) * (
        -L / k**2 + sign * (L * np.cos(q) / k**2 - 2.0 * np.sin(q) / k**3))


def _branch_deriv2(k, L, sign, units):
    k = np.asarray(k, dtype=float)
    q = k * L
    return (units.mass / units.hbar) * (
        2.0 * L / k**3
        + sign * (-(L**2) * np.sin(q) / k**2 - 4.0 * L * np.cos(q) / k**3
                  + 6.0 * np.sin(q) / k**4))


def free_eigenvalues(k: float, D: Region, units: UnitSystem = NATURAL) -> DwellEigenpair:
    """Dwell-time eigenvalue pair t_pm(k) = (mL/hbar k)(1 +- sin(kL)/kL)."""
    if k <= 0:
        raise ValueError("free dwell eigenvalues are defined for k > 0")
    L = D.length
    return DwellEigenpair(
        k=k,
        t_plus=float(_branch_value(k, L, +1, units)),
        t_minus=float(_branch_value(k, L, -1, units)),
        phase=complex(np.exp(1j * k * L)),
    )


def free_onshell_matrix(k: float, D: Region, units: UnitSystem = NATURAL) -> OnShellDwellMatrix:
    """On-shell 2x2 dwell matrix in the (|k>, |-k>) basis.

    Diagonal entries are the classical crossing time mL/(hbar k); the
    off-diagonal interference term carries phase e^{-ik(2 x1 + L)} (reducing
    to e^{-ikL} for D = [0, L]) and modulus (m/hbar k^2)|sin kL|.
    """
    if k <= 0:
        raise ValueError("require k > 0")
    L = D.length
    diag = units.mass * L / (units.hbar * k)
    off = (units.mass / (units.hbar * k**2)) * math.sin(k * L) * np.exp(-1j * k * (2.0 * D.x1 + L))
    m = np.array([[diag, off], [np.conj(off), diag]], dtype=complex)
    return OnShellDwellMatrix(k=k, matrix=m)


class _FreeDistribution:
    """Evaluates Pi_psi(tau) by inverting the eigenvalue branches."""

    def __init__(self, psi: MomentumWavepacket, D: Region, units: UnitSystem):
        if psi.support != "positive":
            raise ValueError("dwell-time distribution requires a positive-momentum packet")
        self.psi, self.D, self.units = psi, D, units
        self.L = D.length
        self._c = units.mass / units.hbar
        self.k_lo, self.k_hi = psi.k_window(1e-12)
        if self.k_lo <= 0.0:
            self.k_lo = max(self.k_lo, 1e-9 * self.k_hi)
        # resolve the pi/L oscillation of t_pm(k) with >= 20 samples per period
        self.n_scan = max(1000, math.ceil(20.0 * self.k_hi * self.L))
        self.ks = np.linspace(self.k_lo, self.k_hi, self.n_scan)
        self.t_branch = {
            s: _branch_value(self.ks, self.L, s, units) for s in (+1, -1)
        }
        self.dk = self.ks[1] - self.ks[0]
        # Stationary points of each branch.  Root pairs of t(k) = tau hide
        # from the sign-change scan near these points, so the surrounding
        # cells are owned by a dedicated per-extremum bracket search.
        # Critical points come in pairs: one exactly at kL = n*pi (branch
        # parity alternates with n) and a companion at kL ~ n*pi - 4/(n*pi);
        # the companion distance shrinks like 1/q, so they are enumerated by
        # analytic bracketing rather than scanning.  Nearby criticals are
        # clustered into a single window with breakpoints at each extremum.
        self.criticals = {}
        self.cell_owned = {}
        for s in (+1, -1):
            kc = self._critical_wavenumbers(s)
            owned = np.zeros(self.n_scan - 1, dtype=bool)
            clusters: list[list[float]] = []
            for k_star in kc:
                if clusters and k_star - clusters[-1][-1] < 8.0 * self.dk:
                    clusters[-1].append(k_star)
                else:
                    clusters.append([k_star])
            windows = []
            for group in clusters:
                lo_i = max(int(np.searchsorted(self.ks, group[0])) - 4, 0)
                hi_i = min(int(np.searchsorted(self.ks, group[-1])) + 4, self.n_scan - 1)
                if windows:
                    lo_i = max(lo_i, windows[-1][1])
                owned[lo_i:hi_i] = True
                taus = [float(_branch_value(k, self.L, s, units)) for k in group]
                windows.append((lo_i, hi_i, tuple(group), tuple(taus)))
            self.criticals[s] = windows
            self.cell_owned[s] = owned

    def _critical_wavenumbers(self, s: int) -> list[float]:
        """Zeros of t_s'(k) on the window, ascending."""
        import scipy.optimize

        deriv = lambda k: _branch_deriv_scalar(k, self.L, s, self._c)
        out = []
        q_lo, q_hi = self.k_lo * self.L, self.k_hi * self.L
        n_min = max(1, int(math.floor(q_lo / math.pi)))
        n_max = int(math.ceil(q_hi / math.pi)) + 1
        for n in range(n_min, n_max + 1):
            parity = +1 if n % 2 == 0 else -1
            if parity != s:
                continue
            q_n = n * math.pi
            k_n = q_n / self.L
            # companion extremum below n*pi (absent for n = 1: t_- rises
            # monotonically from k = 0 to its first maximum at q = pi)
            if n >= 2:
                lo_k = max((q_n - max(1.0, 8.0 / q_n)) / self.L, self.k_lo)
                hi_k = k_n * (1.0 - 1e-12)
                if lo_k < hi_k and deriv(lo_k) * deriv(hi_k) < 0.0:
                    r = scipy.optimize.brentq(deriv, lo_k, hi_k, xtol=1e-14, rtol=4e-15)
                    if self.k_lo <= r <= self.k_hi:
                        out.append(float(r))
            if self.k_lo <= k_n <= self.k_hi:
                out.append(k_n)
        return sorted(out)

    def singular_points(self) -> np.ndarray:
        """tau values where an eigenvalue branch is stationary in the window."""
        taus = [t for s in (+1, -1) for w in self.criticals[s] for t in w[3]]
        return np.sort(np.asarray(taus))

    def _root_contribution(self, s: int, k_root: float) -> float:
        slope = abs(_branch_deriv_scalar(k_root, self.L, s, self._c))
        if slope == 0.0:
            return math.inf
        return 0.5 * abs(self.psi.amplitude(np.asarray(k_root))) ** 2 / slope

    def density(self, tau: float) -> float:
        total = 0.0
        for s in (+1, -1):
            f = lambda k, s=s: _branch_value_scalar(k, self.L, s, self._c) - tau
            owned = self.cell_owned[s]
            grid = self.t_branch[s] - tau
            for i in np.flatnonzero(grid[:-1] * grid[1:] < 0.0):
                if owned[i]:
                    continue
                total += self._root_contribution(s, _refine_root(f, self.ks[i], self.ks[i + 1]))
            for i in np.flatnonzero(grid == 0.0):
                in_window = (i > 0 and owned[i - 1]) or (i < owned.size and owned[i])
                if not in_window:
                    total += self._root_contribution(s, self.ks[i])
            for lo_i, hi_i, k_stars, _ in self.criticals[s]:
                # t_s is monotone between consecutive breakpoints
                pts = [self.ks[lo_i], *k_stars, self.ks[hi_i]]
                if f(pts[0]) == 0.0:
                    total += self._root_contribution(s, pts[0])
                for a, b in zip(pts[:-1], pts[1:]):
                    if not a < b:
                        continue
                    fa, fb = f(a), f(b)
                    if fb == 0.0:
                        total += self._root_contribution(s, b)
                    elif fa * fb < 0.0:
                        total += self._root_contribution(s, _refine_root(f, a, b))
        return float(total)

    def tau_range(self) -> tuple[float, float]:
        lo = min(float(self.t_branch[+1].min()), float(self.t_branch[-1].min()))
        hi = max(float(self.t_branch[+1].max()), float(self.t_branch[-1].max()))
        return lo, hi


def _refine_root(f, a, b):
    import scipy.optimize
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    return scipy.optimize.brentq(f, a, b, xtol=1e-13, rtol=4e-15)


def free_dwell_distribution(
    psi: MomentumWavepacket,
    D: Region,
    tau_grid,
    units: UnitSystem = NATURAL,
) -> SampledDistribution:
    """Sampled dwell-time distribution Pi_psi on a tau grid.

    Points falling inside the 1e-4*tau_c exclusion windows around singular
    abscissae are dropped (the density is not representable there by a finite
    sample).  Use distribution_moment for integrals across the spikes.
    """
    dist = _FreeDistribution(psi, D, units)
    tau_grid = np.asarray(tau_grid, dtype=float)
    sing = dist.singular_points()
    keep = np.ones(tau_grid.shape, dtype=bool)
    for tc in sing:
        keep &= np.abs(tau_grid - tc) > 1e-4 * tc
    taus = tau_grid[keep]
    dens = np.array([dist.density(t) for t in taus])
    return SampledDistribution(
        abscissae=taus,
        density=dens,
        truncation=(float(tau_grid.min()), float(tau_grid.max())),
        singular_points=sing,
    )


def distribution_moment(
    psi: MomentumWavepacket,
    D: Region,
    order: int = 0,
    units: UnitSystem = NATURAL,
    tau_range: tuple[float, float] | None = None,
) -> float:
    """Int tau^order Pi_psi(tau) dtau by singularity-aware quadrature.

    The tau axis is split at every singular abscissa; each segment is
    integrated adaptively, which resolves the integrable inverse-square-root
    endpoints.  With the default range (the full image of the eigenvalue
    branches over the packet window) the zeroth moment recovers the packet
    norm and the first two moments match dwell_moments_free.
    """
    dist = _FreeDistribution(psi, D, units)
    lo, hi = tau_range if tau_range is not None else dist.tau_range()
    cuts = dist.singular_points()
    edges = np.concatenate(([lo], cuts[(cuts > lo) & (cuts < hi)], [hi]))
    spec = QuadratureSpec(abs_tol=2e-7, rel_tol=1e-6, max_subdivisions=200)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < 1e-13 * max(1.0, abs(b)):
            continue
        cap = min(1e-4, 2e-6 * max(1.0, b**order))
        total += _quad_sqrt_endpoints(lambda t: t**order * dist.density(t), a, b, spec, cap)
    return float(total)


def _quad_sqrt_endpoints(f, a, b, spec, cap=2e-6):
    """Adaptive integral of f on [a, b] with integrable 1/sqrt endpoints.

    Substituting tau = a + u^2 (resp. b - u^2) on each half turns the
    inverse-square-root behaviour into a bounded integrand.  Micro-segments
    between companion extrema are accepted at a few-1e-6 error cap; the
    moment integrals carry hundreds of segments, so the cumulative effect
    stays well below the 1e-3 tolerances they serve.
    """
    mid = 0.5 * (a + b)
    total = 0.0
    for edge, width, direction in ((a, mid - a, +1.0), (b, b - mid, -1.0)):
        # start just above the float resolution of the edge: tau values that
        # round onto a singular abscissa would evaluate as infinite, and the
        # u-space integrand is bounded there anyway (2u * A/u -> 2A)
        u_min = math.sqrt(max(abs(edge), 1e-6) * 1e-14)
        u_max = math.sqrt(width)
        if u_max <= u_min:
            continue
        val, _ = adaptive_quad(lambda u: 2.0 * u * f(edge + direction * u * u),
                               u_min, u_max, spec, best_effort=cap)
        total += val
    return total


def classical_dwell_distribution(
    psi: MomentumWavepacket, D: Region, tau, units: UnitSystem = NATURAL
):
    """Classical-operator dwell density pi_psi(tau) = (mL/hbar tau^2)|psi~(mL/hbar tau)|^2."""
    if psi.support != "positive":
        raise ValueError("classical dwell distribution requires positive-momentum support")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0.0):
        raise ValueError("tau must be positive")
    c = units.mass * D.length / units.hbar
    k_of_tau = c / tau
    out = (c / tau**2) * np.abs(psi.amplitude(k_of_tau)) ** 2
    return float(out) if out.ndim == 0 else out


def characteristic_function(
    psi: MomentumWavepacket, D: Region, omega: float, units: UnitSystem = NATURAL
) -> complex:
    """Fourier transform f_psi(omega) of the dwell-time distribution.

    Computed spectrally from the eigenvalue branches.  Full-line packets get
    the interference (cross) term coupling psi~(k) with psi~(-k); it vanishes
    identically for positive-support packets.
    """
    L = D.length
    m, hbar = units.mass, units.hbar
    spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9, max_subdivisions=800)

    def diagonal(k):
        k = np.asarray(k, dtype=float)
        phase = np.exp(1j * omega * m * L / (np.abs(k) * hbar))
        return phase * np.cos(omega * m * np.sin(k * L) / (k**2 * hbar)) * np.abs(psi.amplitude(k)) ** 2

    k_lo, k_hi = psi.k_window(1e-14)
    if psi.support == "positive":
        val, _ = adaptive_quad(diagonal, max(k_lo, 1e-12), k_hi, spec)
        return complex(val)

    def cross(k):
        k = np.asarray(k, dtype=float)
        phase = np.exp(1j * omega * m * L / (np.abs(k) * hbar))
        s = np.sin(omega * m * np.sin(k * L) / (np.abs(k) * k * hbar))
        return phase * s * np.exp(-1j * k * L) * psi.amplitude(k) * np.conj(psi.amplitude(-k))

    lim = max(abs(k_lo), abs(k_hi))
    v1, _ = adaptive_quad(diagonal, -lim, lim, spec, points=[0.0])
    v2, _ = adaptive_quad(cross, -lim, lim, spec, points=[0.0])
    return complex(v1 + 1j * v2)


def dwell_moments_free(
    psi: MomentumWavepacket, D: Region, units: UnitSystem = NATURAL
) -> tuple[float, float]:
    """First and second dwell-time moments of a positive-momentum packet.

    m1 = Int |psi~|^2 (mL/hbar k) dk
    m2 = Int |psi~|^2 (mL/hbar k)^2 (1 + sin^2(kL)/(kL)^2) dk

    The extra sin^2 term in m2 has no classical counterpart; it is the
    on-shell interference of the two degenerate eigenvalues.
    """
    if psi.support != "positive":
        raise ValueError("dwell moments require positive-momentum support")
    psi.warn_if_divergent(need_m2=True)
    L = D.length
    c = units.mass * L / units.hbar
    k_lo, k_hi = psi.k_window(1e-14)
    k_lo = max(k_lo, 1e-12)

    def f1(k):
        k = np.asarray(k, dtype=float)
        return np.abs(psi.amplitude(k)) ** 2 * (c / k)

    def f2(k):
        k = np.asarray(k, dtype=float)
        return np.abs(psi.amplitude(k)) ** 2 * (c / k) ** 2 * (1.0 + np.sinc(k * L / np.pi) ** 2)

    m1, _ = adaptive_quad(f1, k_lo, k_hi, _MOMENT_SPEC)
    m2, _ = adaptive_quad(f2, k_lo, k_hi, _MOMENT_SPEC)
    return float(m1), float(m2)


def classical_operator_moments(
    psi: MomentumWavepacket, D: Region, units: UnitSystem = NATURAL
) -> tuple[float, float]:
    """Moments of the classical-like operator mL/|p|: no interference term."""
    if psi.support != "positive":
        raise ValueError("classical moments require positive-momentum support")
    psi.warn_if_divergent(need_m2=True)
    c = units.mass * D.length / units.hbar
    k_lo, k_hi = psi.k_window(1e-14)
    k_lo = max(k_lo, 1e-12)

    def f(k, n):
        k = np.asarray(k, dtype=float)
        return np.abs(psi.amplitude(k)) ** 2 * (c / k) ** n

    m1, _ = adaptive_quad(lambda k: f(k, 1), k_lo, k_hi, _MOMENT_SPEC)
    m2, _ = adaptive_quad(lambda k: f(k, 2), k_lo, k_hi, _MOMENT_SPEC)
    return float(m1), float(m2)


def mirror_average_dwell(
    k: float, D: Region, X: float, units: UnitSystem = NATURAL
) -> float:
    """Average dwell time in D of the standing wave set up by a mirror at X.

    2 (mL/hbar k) {1 - cos[k(L + 2 x1 + 2X)] sin(kL)/(kL)}; the extrema over
    mirror positions are twice the eigenvalue pair (the particle crosses D
    once in and once out).
    """
    if k <= 0:
        raise ValueError("require k > 0")
    if X <= D.x2:
        raise ValueError("mirror must sit beyond the region, X > x2")
    L = D.length
    t_cl = units.mass * L / (units.hbar * k)
    return float(2.0 * t_cl * (1.0 - math.cos(k * (L + 2.0 * D.x1 + 2.0 * X))
                               * np.sinc(k * L / np.pi)))


def translate_region_check(
    k: float, D: Region, a: float, units: UnitSystem = NATURAL
) -> tuple[DwellEigenpair, DwellEigenpair]:
    """Eigenvalue pairs for D and the translated region D + a (identical)."""
    return free_eigenvalues(k, D, units), free_eigenvalues(k, D.translated(a), units)


def translated_eigenvector_overlap(k: float, D: Region, a: float, branch: int) -> complex:
    """<t_branch, D+a | exp(-i a k_hat) | t_branch, D> in the (|k>,|-k>) basis.

    Unity for both branches: translating the region is implemented by the
    momentum boost on the eigenvectors.
    """
    if branch not in (+1, -1):
        raise ValueError("branch must be +1 or -1")
    L = D.length
    v_d = np.array([np.exp(-1j * k * D.x1), branch * np.exp(1j * k * (D.x1 + L))]) / np.sqrt(2.0)
    x1p = D.x1 + a
    v_dp = np.array([np.exp(-1j * k * x1p), branch * np.exp(1j * k * (x1p + L))]) / np.sqrt(2.0)
    boosted = v_d * np.array([np.exp(-1j * a * k), np.exp(1j * a * k)])
    return complex(np.vdot(v_dp, boosted))

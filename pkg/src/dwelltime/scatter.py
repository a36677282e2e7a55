"""1-D scattering on piecewise-constant potentials and its dwell times.

The potential is a finite sequence of constant complex steps V = V_R - i V_I
(V_I >= 0 models absorption).  Scattering amplitudes and interior solution
coefficients come from a 2x2 transfer-matrix product; overlaps of the
stationary states over a region D (the chi(x) matrix elements that control
the dwell-time eigenproblem) follow by closed-form integration of the
piecewise exponentials, so the only approximations anywhere are in the
wavepacket quadratures.

On the energy shell the dwell operator reduces to the 2x2 Hermitian matrix

    (2 pi m / hbar k) [ <k+|chi_D|k+>    <k+|chi_D|-k+> ]
                      [ <-k+|chi_D|k+>   <-k+|chi_D|-k+> ]

parameterised by the shorthand xi(+-k) = diag / sigma, sigma = |offdiag|,
e^{i phi} = offdiag / sigma, mu = (xi(-k) - xi(k))/2, giving

    t_pm = (2 pi m sigma / hbar k) [ (xi(k)+xi(-k))/2 +- sqrt(1 + mu^2) ].

For the square barrier the symmetry x -> L-x forces mu = 0 and the pair
collapses to the closed form implemented in barrier_eigenvalues_closed_form.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import QuadratureSpec, adaptive_quad
from .packets import MomentumWavepacket, Region
from .units import NATURAL, UnitSystem

_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=500)


@dataclass(frozen=True)
class PiecewisePotential:
    """Ordered contiguous segments (x_start, x_end, V) of constant complex V.

    V = V_R - i V_I with V_I >= 0 (absorption only).  An empty segment tuple
    is free motion.
    """

    segments: tuple[tuple[float, float, complex], ...]

    def __post_init__(self):
        segs = tuple((float(a), float(b), complex(v)) for a, b, v in self.segments)
        object.__setattr__(self, "segments", segs)
        for a, b, v in segs:
            if not b > a:
                raise ValueError(f"segment [{a}, {b}] is empty")
            if v.imag > 1e-15:
                raise ValueError("only absorbing potentials allowed: Im(V) <= 0")
        for (_, b0, _), (a1, _, _) in zip(segs[:-1], segs[1:]):
            if abs(b0 - a1) > 1e-12 * max(1.0, abs(b0)):
                raise ValueError("segments must be contiguous and ordered")

    @property
    def support(self) -> tuple[float, float] | None:
        if not self.segments:
            return None
        return self.segments[0][0], self.segments[-1][1]

    @property
    def is_free(self) -> bool:
        return not self.segments or all(v == 0 for _, _, v in self.segments)

    @property
    def has_absorption(self) -> bool:
        return any(v.imag < 0 for _, _, v in self.segments)

    @classmethod
    def free(cls) -> "PiecewisePotential":
        return cls(())

    @classmethod
    def square_barrier(cls, height: float, length: float, x_start: float = 0.0,
                       v_imag: float = 0.0) -> "PiecewisePotential":
        """Barrier of complex height V_R - i V_I on [x_start, x_start+length]."""
        return cls(((x_start, x_start + length, complex(height, -v_imag)),))


@dataclass(frozen=True)
class ScatteringAmplitudes:
    """Transmission/reflection amplitudes for left (l) and right (r) incidence."""

    k: float
    T_l: complex
    R_l: complex
    T_r: complex
    R_r: complex

    def unitarity_defect(self) -> float:
        """|T|^2 + |R|^2 - 1; zero for real potentials, <= 0 with absorption."""
        return abs(self.T_l) ** 2 + abs(self.R_l) ** 2 - 1.0


@dataclass(frozen=True)
class DwellDecomposition:
    """Eigen-decomposition of the on-shell dwell matrix at wavenumber k."""

    k: float
    xi_plus: float      # xi(k)
    xi_minus: float     # xi(-k)
    sigma: float
    phi: float
    mu: float
    t_plus: float
    t_minus: float
    n_plus: float
    n_minus: float
    degenerate: bool = False

    def eigenvector(self, branch: int) -> np.ndarray:
        """Coefficients on (|k+>, |-k+>) for the t_+ (branch=+1) / t_- state."""
        if branch not in (+1, -1):
            raise ValueError("branch must be +1 or -1")
        root = math.sqrt(1.0 + self.mu**2)
        n = self.n_plus if branch == +1 else self.n_minus
        return n * np.array([1.0, cmath.exp(1j * self.phi) * (self.mu + branch * root)])


def _segment_kappas(pot: PiecewisePotential, k: float, units: UnitSystem) -> list[complex]:
    """Wavenumber inside each segment, principal branch Im kappa >= 0."""
    out = []
    for _, _, v in pot.segments:
        ksq = complex(k * k - 2.0 * units.mass * v / units.hbar**2)
        kap = cmath.sqrt(ksq)
        if kap.imag < 0:
            kap = -kap
        out.append(kap)
    return out


def _interface(x0: float, kap_in: complex, kap_out: complex) -> np.ndarray:
    """Coefficient map (A,B)_in -> (A,B)_out across the step at x0."""
    r = kap_in / kap_out
    ein = cmath.exp(1j * kap_in * x0)
    eout = cmath.exp(1j * kap_out * x0)
    return 0.5 * np.array([
        [(1 + r) * ein / eout, (1 - r) / (ein * eout)],
        [(1 - r) * ein * eout, (1 + r) * eout / ein],
    ])


def _transfer_chain(pot: PiecewisePotential, k: float, units: UnitSystem):
    """Interface matrices and segment kappas for magnitude-k scattering.

    Media sequence: free(k) | seg_1(kappa_1) | ... | seg_n(kappa_n) | free(k).
    """
    if k <= 0:
        raise ValueError("require k > 0")
    kappas = _segment_kappas(pot, k, units)
    for i, kap in enumerate(kappas):
        if abs(kap) < 1e-12 * k:
            warnings.warn(
                f"segment {i} at its energy threshold (kappa ~ 0); "
                "perturbing k by 1e-12 relative", stacklevel=3)
            return _transfer_chain(pot, k * (1.0 + 1e-12), units)
    media = [complex(k)] + kappas + [complex(k)]
    edges = [pot.segments[0][0]] + [b for _, b, _ in pot.segments]
    mats = [_interface(x0, media[i], media[i + 1]) for i, x0 in enumerate(edges)]
    return mats, kappas, edges


def _solve(pot: PiecewisePotential, k: float, units: UnitSystem):
    """Amplitudes plus per-medium coefficients for both incidence directions.

    Returns (amps, coeffs_left, coeffs_right) where each coeffs list holds the
    (A, B) pair of every medium (leftmost free region first), in the
    A e^{i kappa x} + B e^{-i kappa x} convention at magnitude-k energy.
    """
    if pot.is_free and not pot.segments:
        amps = ScatteringAmplitudes(k=k, T_l=1.0, R_l=0.0, T_r=1.0, R_r=0.0)
        return amps, [np.array([1.0, 0.0], complex)], [np.array([0.0, 1.0], complex)]

    mats, _, _ = _transfer_chain(pot, k, units)
    m_total = np.eye(2, dtype=complex)
    for m in mats:
        m_total = m @ m_total
    det = m_total[0, 0] * m_total[1, 1] - m_total[0, 1] * m_total[1, 0]
    t_l = det / m_total[1, 1]
    r_l = -m_total[1, 0] / m_total[1, 1]
    t_r = 1.0 / m_total[1, 1]
    r_r = m_total[0, 1] / m_total[1, 1]
    amps = ScatteringAmplitudes(k=k, T_l=t_l, R_l=r_l, T_r=t_r, R_r=r_r)

    def propagate(c0):
        cs = [np.asarray(c0, dtype=complex)]
        for m in mats:
            cs.append(m @ cs[-1])
        return cs

    coeffs_left = propagate([1.0, r_l])
    coeffs_right = propagate([0.0, t_r])
    return amps, coeffs_left, coeffs_right


def scattering_amplitudes(pot: PiecewisePotential, k: float,
                          units: UnitSystem = NATURAL) -> ScatteringAmplitudes:
    """Transfer-matrix scattering amplitudes at wavenumber k > 0."""
    amps, _, _ = _solve(pot, k, units)
    return amps


def stationary_state(pot: PiecewisePotential, k: float, x,
                     units: UnitSystem = NATURAL):
    """Delta-normalised incoming scattering state <x|k+>.

    k > 0 is left incidence, k < 0 right incidence (|k| sets the energy).
    Vectorised over x.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    kmag = abs(k)
    amps, cl, cr = _solve(pot, kmag, units)
    coeffs = cl if k > 0 else cr
    kappas = _segment_kappas(pot, kmag, units)
    media_k = [complex(kmag)] + kappas + [complex(kmag)]
    if pot.segments:
        edges = [pot.segments[0][0]] + [b for _, b, _ in pot.segments]
    else:
        edges = []

    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    idx = np.searchsorted(edges, x, side="right")
    out = np.empty(x.shape, dtype=complex)
    for j in np.unique(idx):
        sel = idx == j
        a, b = coeffs[j]
        kap = media_k[j]
        out[sel] = a * np.exp(1j * kap * x[sel]) + b * np.exp(-1j * kap * x[sel])
    out /= math.sqrt(2.0 * math.pi)
    return complex(out[0]) if scalar else out


def _segment_cover(pot: PiecewisePotential, D: Region):
    """Medium index and bounds of each piece of D (free gaps included)."""
    sup = pot.support
    if sup is not None and not D.contains_interval(*sup):
        raise ValueError("potential support must lie inside the region D")
    pieces = []
    if not pot.segments:
        return [(0, D.x1, D.x2)]
    if D.x1 < pot.segments[0][0]:
        pieces.append((0, D.x1, pot.segments[0][0]))
    for i, (a, b, _) in enumerate(pot.segments):
        pieces.append((i + 1, a, b))
    if pot.segments[-1][1] < D.x2:
        pieces.append((len(pot.segments) + 1, pot.segments[-1][1], D.x2))
    return pieces


def _exp_integral(mu: complex, a: float, b: float) -> complex:
    """Int_a^b e^{i mu x} dx, stable for small |mu|(b-a)."""
    w = b - a
    z = 0.5 * mu * w
    if abs(z) < 1e-6:
        sinc = 1.0 + (-(z * z) / 6.0) * (1.0 + (-(z * z) / 20.0))
    else:
        sinc = cmath.sin(z) / z
    return w * cmath.exp(1j * mu * 0.5 * (a + b)) * sinc


def chi_matrix_elements(pot: PiecewisePotential, D: Region, k: float,
                        units: UnitSystem = NATURAL) -> np.ndarray:
    """2x2 matrix <s k+| chi_D |s' k+>, s,s' = +,- in the order (k, -k).

    Products of the interior piecewise-exponential solutions are integrated
    segment by segment in closed form; requires the potential support inside
    D.  Hermitian for real potentials.
    """
    if k <= 0:
        raise ValueError("require k > 0")
    _, cl, cr = _solve(pot, k, units)
    kappas = _segment_kappas(pot, k, units)
    media_k = [complex(k)] + kappas + [complex(k)]
    states = (cl, cr)
    out = np.zeros((2, 2), dtype=complex)
    for j, a, b in _segment_cover(pot, D):
        kap = media_k[j]
        kc = np.conj(kap)
        ints = {
            (+1, +1): _exp_integral(kap - kc, a, b),
            (+1, -1): _exp_integral(-kap - kc, a, b),
            (-1, +1): _exp_integral(kap + kc, a, b),
            (-1, -1): _exp_integral(kc - kap, a, b),
        }
        for r, bra in enumerate(states):
            for c, ket in enumerate(states):
                ab, cd = np.conj(bra[j]), ket[j]
                out[r, c] += (ab[0] * cd[0] * ints[(+1, +1)] + ab[0] * cd[1] * ints[(+1, -1)]
                              + ab[1] * cd[0] * ints[(-1, +1)] + ab[1] * cd[1] * ints[(-1, -1)])
    return out / (2.0 * math.pi)


def dwell_eigen_decomposition(pot: PiecewisePotential, D: Region, k: float,
                              units: UnitSystem = NATURAL) -> DwellDecomposition:
    """Dwell-time eigenvalues and eigenvectors from the chi matrix elements.

    t_pm = (2 pi m sigma / hbar k) [(xi(k)+xi(-k))/2 +- sqrt(1+mu^2)], which
    is the eigensystem of the Hermitian on-shell matrix written in the
    (xi, sigma, phi, mu) shorthand.  When sigma vanishes (no coupling of the
    two incidence directions) the matrix is already diagonal and the
    decomposition degenerates to its diagonal entries.
    """
    chi = chi_matrix_elements(pot, D, k, units)
    pref = 2.0 * math.pi * units.mass / (units.hbar * k)
    a = chi[0, 0].real
    b = chi[1, 1].real
    c = chi[1, 0]
    sigma = abs(c)
    scale = max(abs(a), abs(b), D.length / (2.0 * math.pi))
    if sigma < 1e-14 * scale:
        hi, lo = max(a, b), min(a, b)
        return DwellDecomposition(
            k=k, xi_plus=math.inf, xi_minus=math.inf, sigma=0.0, phi=0.0, mu=0.0,
            t_plus=pref * hi, t_minus=pref * lo,
            n_plus=1.0 / math.sqrt(2.0), n_minus=1.0 / math.sqrt(2.0),
            degenerate=True)
    xi_p = a / sigma
    xi_m = b / sigma
    mu = 0.5 * (xi_m - xi_p)
    phi = cmath.phase(c / sigma)
    root = math.sqrt(1.0 + mu * mu)
    t_plus = pref * sigma * (0.5 * (xi_p + xi_m) + root)
    t_minus = pref * sigma * (0.5 * (xi_p + xi_m) - root)
    n_plus = 1.0 / math.sqrt(2.0 * (1.0 + mu * mu + mu * root))
    n_minus = 1.0 / math.sqrt(2.0 * (1.0 + mu * mu - mu * root))
    return DwellDecomposition(
        k=k, xi_plus=xi_p, xi_minus=xi_m, sigma=sigma, phi=phi, mu=mu,
        t_plus=t_plus, t_minus=t_minus, n_plus=n_plus, n_minus=n_minus)


def _csinc(z: complex) -> complex:
    if abs(z) < 1e-6:
        return 1.0 - z * z / 6.0 * (1.0 - z * z / 20.0)
    return cmath.sin(z) / z


def _one_minus_sinc_over_z2(z: complex) -> complex:
    """(1 - sin(z)/z)/z^2, stable at z -> 0."""
    if abs(z) < 1e-3:
        z2 = z * z
        return 1.0 / 6.0 - z2 / 120.0 + z2 * z2 / 5040.0
    return (1.0 - _csinc(z)) / (z * z)


def _cos_minus_one_over_z2(z: complex) -> complex:
    """(cos z - 1)/z^2, stable at z -> 0."""
    if abs(z) < 1e-3:
        z2 = z * z
        return -0.5 + z2 / 24.0 - z2 * z2 / 720.0
    return (cmath.cos(z) - 1.0) / (z * z)


def barrier_transmission_sq(k: float, L: float, V0: float,
                            units: UnitSystem = NATURAL) -> float:
    """|T|^2 for the square barrier, stable through the threshold kappa = 0."""
    kap = cmath.sqrt(complex(k * k - 2.0 * units.mass * V0 / units.hbar**2))
    denom = cmath.cos(kap * L) - 0.5j * ((k * k + kap * kap) / k) * L * _csinc(kap * L)
    return 1.0 / abs(denom) ** 2


def barrier_eigenvalues_closed_form(k: float, L: float, V0: float,
                                    units: UnitSystem = NATURAL) -> tuple[float, float]:
    """Dwell eigenvalues for the square barrier of height V0 on [0, L].

    t_pm = (|T|^2 m L / 2 hbar k kappa^2) [k^2 + kappa^2 +- (kappa^2 - k^2) cos(kappa L)]
           * [1 +- sin(kappa L)/(kappa L)]

    with kappa = sqrt(k^2 - 2 m V0 / hbar^2) (positive imaginary under the
    barrier, where the trigonometric factors continue to hyperbolic ones).
    Both bracket/kappa^2 ratios are evaluated through series forms so the
    threshold kappa -> 0 is regular.  The equivalent dimensionless form in
    q = kL, Q^2 = 2 m V0 L^2 / hbar^2,

        t_pm = (2 m L^2/hbar) [q +- q sin(s)/s] / [2q^2 - Q^2 +- Q^2 cos(s)],
        s = sqrt(q^2 - Q^2),

    is evaluated as a cross-check; the two must coincide to 1e-10 relative.
    """
    if k <= 0:
        raise ValueError("require k > 0")
    m, hbar = units.mass, units.hbar
    kap2 = complex(k * k - 2.0 * m * V0 / hbar**2)
    kap = cmath.sqrt(kap2)
    if kap.imag < 0:
        kap = -kap
    tsq = barrier_transmission_sq(k, L, V0, units)
    pref = tsq * m * L / (2.0 * hbar * k)
    z = kap * L
    # bracket_+/kappa^2 = 2 + (kappa^2-k^2) L^2 (cos z - 1)/z^2
    br_p = 2.0 + (kap2 - k * k) * L * L * _cos_minus_one_over_z2(z)
    t_plus = pref * br_p * (1.0 + _csinc(z))
    # bracket_- (1 - sinc z)/kappa^2 = [2k^2 - (kappa^2-k^2)(cos z - 1)] L^2 S(z)
    br_m = (2.0 * k * k - (kap2 - k * k) * (cmath.cos(z) - 1.0)) * L * L
    t_minus = pref * br_m * _one_minus_sinc_over_z2(z)

    tp, tm = t_plus.real, t_minus.real
    if max(abs(t_plus.imag), abs(t_minus.imag)) > 1e-10 * max(abs(tp), abs(tm)):
        raise ArithmeticError("closed-form eigenvalues acquired an imaginary part")

    # dimensionless cross-check
    q = k * L
    qsq = 2.0 * m * V0 * L * L / hbar**2
    s = cmath.sqrt(complex(q * q - qsq))
    unit = 2.0 * m * L * L / hbar
    alt_p = unit * q * (1.0 + _csinc(s)) / (2.0 * q * q - qsq + qsq * cmath.cos(s))
    alt_m = unit * q * (1.0 - _csinc(s)) / (2.0 * q * q - qsq - qsq * cmath.cos(s))
    for closed, alt in ((tp, alt_p.real), (tm, alt_m.real)):
        if abs(closed - alt) > 1e-10 * max(1e-300, abs(closed)):
            raise ArithmeticError(
                f"closed-form and dimensionless eigenvalues disagree: {closed} vs {alt}")
    return tp, tm


def stationary_dwell(pot: PiecewisePotential, D: Region, k: float,
                     units: UnitSystem = NATURAL) -> float:
    """Stationary average dwell time: probability in D over incoming flux.

    (2 pi m / hbar k) <k+|chi_D|k+> for the delta-normalised state; equal to
    (t_+ + t_-)/2 whenever the potential is left-right symmetric.
    """
    chi = chi_matrix_elements(pot, D, k, units)
    return float((2.0 * math.pi * units.mass / (units.hbar * k)) * chi[0, 0].real)


def wavepacket_dwell_moments(pot: PiecewisePotential, D: Region,
                             psi: MomentumWavepacket,
                             units: UnitSystem = NATURAL) -> tuple[float, float]:
    """First two dwell moments of an incident positive-momentum packet.

    m1 = Int dk |psi~|^2 T_kk,
    m2 = Int dk |psi~|^2 (2 pi m/hbar k)^2 [ <k|chi|k>^2 + |<-k|chi|k>|^2 ],

    the second moment picking up the interference term through the
    off-diagonal chi element.
    """
    if psi.support != "positive":
        raise ValueError("incident packet must have positive-momentum support")
    psi.warn_if_divergent(need_m2=True)
    k_lo, k_hi = psi.k_window(1e-14)
    k_lo = max(k_lo, 1e-9)
    pref = 2.0 * math.pi * units.mass / units.hbar

    def f1(k):
        chi = chi_matrix_elements(pot, D, float(k), units)
        return abs(psi.amplitude(np.asarray(k))) ** 2 * (pref / k) * chi[0, 0].real

    def f2(k):
        chi = chi_matrix_elements(pot, D, float(k), units)
        return abs(psi.amplitude(np.asarray(k))) ** 2 * (pref / k) ** 2 * (
            chi[0, 0].real ** 2 + abs(chi[1, 0]) ** 2)

    spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9, max_subdivisions=500)
    m1, _ = adaptive_quad(f1, k_lo, k_hi, spec)
    m2, _ = adaptive_quad(f2, k_lo, k_hi, spec)
    return float(m1), float(m2)


def absorption_probability(pot: PiecewisePotential, k: float,
                           units: UnitSystem = NATURAL) -> float:
    """A(k) = 1 - |T|^2 - |R|^2, the probability lost to absorption."""
    amps = scattering_amplitudes(pot, k, units)
    a = -(amps.unitarity_defect())
    if not -1e-12 <= a <= 1.0 + 1e-12:
        raise ArithmeticError(f"absorption probability {a} outside [0, 1]: solver inconsistency")
    return float(min(max(a, 0.0), 1.0))


def fluorescence_dwell_estimate(v_real: float, v_imag: float, L: float, k: float,
                                units: UnitSystem = NATURAL) -> float:
    """Operational dwell-time estimate hbar A / (2 V_I) for a weakly absorbing barrier.

    The complex barrier V_R - i V_I on [0, L] removes norm at rate
    (2 V_I/hbar) * (probability inside), so the integrated absorption A is
    proportional to the time spent in the barrier; dividing out the
    absorption strength recovers the average dwell time up to O(V_I)
    distortion of the dynamics.
    """
    if v_imag <= 0:
        raise ValueError("fluorescence estimate needs V_I > 0")
    pot = PiecewisePotential.square_barrier(v_real, L, 0.0, v_imag=v_imag)
    a = absorption_probability(pot, k, units)
    return float(units.hbar * a / (2.0 * v_imag))


def laser_parameters(v_real: float, v_imag: float, gamma: float,
                     hbar: float = 1.0) -> tuple[float, float]:
    """Detuning and Rabi frequency realising V = V_R - i V_I.

    Inverts V_R = hbar Omega^2/(4 Delta), V_I = hbar gamma Omega^2/(8 Delta^2):
    Delta = gamma V_R / (2 V_I), Omega = sqrt(4 Delta V_R / hbar).
    """
    if v_real <= 0 or v_imag <= 0 or gamma <= 0:
        raise ValueError("require positive V_R, V_I, gamma")
    delta = gamma * v_real / (2.0 * v_imag)
    omega = math.sqrt(4.0 * delta * v_real / hbar)
    return delta, omega


def amplitude_k_derivatives(pot: PiecewisePotential, k: float,
                            units: UnitSystem = NATURAL, h: float | None = None):
    """d/dk of all four amplitudes by Richardson-extrapolated central differences."""
    h = h if h is not None else 1e-6 * k

    def stack(kk):
        a = scattering_amplitudes(pot, kk, units)
        return np.array([a.T_l, a.R_l, a.T_r, a.R_r])

    def central(hh):
        return (stack(k + hh) - stack(k - hh)) / (2.0 * hh)

    d1, d2 = central(h), central(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


def chi_elements_from_amplitudes(pot: PiecewisePotential, k: float,
                                 units: UnitSystem = NATURAL) -> np.ndarray:
    """chi_D matrix elements from scattering data, D = [0, L] = the support.

    Unitarity trades the interior integrals for amplitude values and their
    k-derivatives:

      <k+|chi|k+>   = L|T_l|^2/2pi + (i/2pi)[R_l dRbar_l + T_l dTbar_l]
                      + (i/4pik)[Rbar_l - R_l]
      <-k+|chi|-k+> = L(1+|R_r|^2)/2pi + (i/2pi)[R_r dRbar_r + T_r dTbar_r]
                      + (i/4pik)[e^{-2ikL} Rbar_r - e^{2ikL} R_r]
      <-k+|chi|k+>  = L T_l Rbar_r/2pi + (i/2pi)[R_l dTbar_r + T_l dRbar_r]
                      + (i/4pik)[Tbar_r - e^{2ikL} T_l]

    The middle terms are the on-shell Smith delay matrix.  This is the
    independent cross-check route; chi_matrix_elements integrates the states
    directly instead of differentiating amplitudes.
    """
    sup = pot.support
    if sup is None or abs(sup[0]) > 1e-12:
        raise ValueError("amplitude route assumes the support starts at x = 0")
    L = sup[1]
    a = scattering_amplitudes(pot, k, units)
    d = amplitude_k_derivatives(pot, k, units)
    # d/dk of the conjugated amplitude = conj of d/dk (k is real)
    dTl, dRl, dTr, dRr = np.conj(d[0]), np.conj(d[1]), np.conj(d[2]), np.conj(d[3])
    e2 = cmath.exp(2j * k * L)
    diag_p = (L * abs(a.T_l) ** 2 / (2 * math.pi)
              + 1j / (2 * math.pi) * (a.R_l * dRl + a.T_l * dTl)
              + 1j / (4 * math.pi * k) * (np.conj(a.R_l) - a.R_l))
    diag_m = (L * (1 + abs(a.R_r) ** 2) / (2 * math.pi)
              + 1j / (2 * math.pi) * (a.R_r * dRr + a.T_r * dTr)
              + 1j / (4 * math.pi * k) * (np.conj(a.R_r) / e2 - e2 * a.R_r))
    off = (L * a.T_l * np.conj(a.R_r) / (2 * math.pi)
           + 1j / (2 * math.pi) * (a.R_l * dTr + a.T_l * dRr)
           + 1j / (4 * math.pi * k) * (np.conj(a.T_r) - e2 * a.T_l))
    return np.array([[diag_p, np.conj(off)], [off, diag_m]])


def load_potential(path) -> tuple[PiecewisePotential, UnitSystem]:
    """Read a potential from a plain-text key-value file.

    Format: one `key = value` per line, '#' comments.  Keys: hbar, mass
    (optional, default 1.0) and one or more `segment = x_start x_end V_R V_I`
    rows.
    """
    hbar, mass = 1.0, 1.0
    segments = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip().lower(), val.strip()
            if key == "hbar":
                hbar = float(val)
            elif key == "mass":
                mass = float(val)
            elif key == "segment":
                parts = val.split()
                if len(parts) != 4:
                    raise ValueError(
                        f"{path}:{lineno}: segment needs 'x_start x_end V_R V_I'")
                x0, x1, vr, vi = map(float, parts)
                segments.append((x0, x1, complex(vr, -vi)))
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return PiecewisePotential(tuple(segments)), UnitSystem(hbar=hbar, mass=mass)

"""Flux-flux correlation functions and their dwell-time moment identities.

Correlating the probability current at the two boundaries of D (with self
terms at each boundary subtracted) gives a function C(tau) whose first and
second moments reproduce the first and second dwell-time moments; the third
moment does not follow (the stationary closed forms below make the mismatch
explicit).  For free motion the wavepacket C(tau) reduces to a single
k-integral over the kernel bracket

    B(tau; k) = 2 g(v tau) - g(v tau - L) - g(v tau + L),    v = hbar k / m,
    g(x) = -2 e^{i m x^2/(2 hbar tau)} sqrt(i pi hbar tau/(2m))
           + i pi x erfi(sqrt(i m/(2 hbar tau)) x),

via C(tau) = Re Int dk |psi~(k)|^2 (m / 2 pi hbar k) d^2 B / d tau^2 (total
derivative in tau).  The same-boundary self correlations (the 2g(v tau)
term) diverge like tau^(-3/2) as tau -> 0; the tau^n weights of the moment
integrals suppress that head.

The zeroth-order measurable approximation C_0 replaces operator products by
products of current-density expectations; the polarization identity
(cross_flux_from_diagonal) reconstructs the off-diagonal corrections from
diagonal measurements on auxiliary superpositions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from .freedwell import free_eigenvalues
from .numerics import free_wavefunction_grid, gauss_legendre
from .packets import MomentumWavepacket, Region, overlap, superpose
from .scatter import PiecewisePotential, chi_matrix_elements
from .units import NATURAL, UnitSystem


@dataclass(frozen=True)
class FfcfSample:
    """One sampled point of the flux-flux correlation function."""

    tau: float
    value: float
    components: tuple[float, float] | None = None  # optional (C0, C1) split

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("ffcf samples live at tau > 0")


@dataclass(frozen=True)
class StationaryMoments:
    """First three on-shell moments of the stationary ffcf.

    order1/order2 coincide with the dwell-time matrix moments T_kk and
    (T^2)_kk; order3 is the ffcf value, which differs from the dwell moment
    (T^3)_kk kept in order3_dwell.
    """

    order1: float
    order2: float
    order3: float
    order3_dwell: float


def pm_free_moments(k: float, D: Region, units: UnitSystem = NATURAL) -> StationaryMoments:
    """Closed-form stationary ffcf moments for free motion at wavenumber k.

    order1 = mL/(hbar k)
    order2 = (mL/hbar k)^2 (1 + sin^2(kL)/(kL)^2)
    order3 = (mL/hbar k)^3 [1 - 3(1+cos^2 kL)/(kL)^2 + 3 sin(2kL)/(kL)^3]
    order3_dwell = (mL/hbar k)^3 (1 + 3 sin^2(kL)/(kL)^2)
    """
    if k <= 0:
        raise ValueError("require k > 0")
    L = D.length
    q = k * L
    t = units.mass * L / (units.hbar * k)
    s2 = math.sin(q) ** 2 / q**2
    order3 = t**3 * (1.0 - 3.0 * (1.0 + math.cos(q) ** 2) / q**2
                     + 3.0 * math.sin(2.0 * q) / q**3)
    return StationaryMoments(
        order1=t,
        order2=t**2 * (1.0 + s2),
        order3=order3,
        order3_dwell=t**3 * (1.0 + 3.0 * s2),
    )


@dataclass(frozen=True)
class StationaryIdentity:
    """Two routes to the first two on-shell dwell moments (they must agree)."""

    moment1: float
    moment2: float
    dwell1: float
    dwell2: float


def pm_stationary_identity_check(pot: PiecewisePotential, D: Region, k: float,
                                 units: UnitSystem = NATURAL) -> StationaryIdentity:
    """T_kk and (T^2)_kk via chi matrix elements vs spectral weights.

    moment1/moment2 use the proven identities
    T_kk = (2 pi m/hbar k) <k+|chi_D|k+> and
    (T^2)_kk = (T_kk)^2 + |T_{k,-k}|^2; dwell1/dwell2 recompute them from the
    eigenvalues and eigenvector weights of the on-shell matrix
    (1/2 (t_+^n + t_-^n) in the symmetric case).
    """
    chi = chi_matrix_elements(pot, D, k, units)
    if abs(chi[0, 0].imag) > 1e-10 * max(1.0, abs(chi[0, 0])):
        raise ArithmeticError("diagonal chi element acquired an imaginary part")
    pref = 2.0 * math.pi * units.mass / (units.hbar * k)
    m = pref * chi
    moment1 = float(m[0, 0].real)
    moment2 = float(m[0, 0].real ** 2 + abs(m[1, 0]) ** 2)
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.abs(evecs[0, :]) ** 2
    dwell1 = float(np.dot(w, evals))
    dwell2 = float(np.dot(w, evals**2))
    return StationaryIdentity(moment1, moment2, dwell1, dwell2)


def g_kernel(x, tau: float, units: UnitSystem = NATURAL):
    """Boundary kernel g(x) at delay tau (vectorised over x).

    g = -2 e^{i m x^2/(2 hbar tau)} sqrt(i pi hbar tau / 2m)
        + i pi x erfi(sqrt(i m / (2 hbar tau)) x),
    principal square roots.  The erfi argument lies on the exp(i pi/4) ray
    for real x, where the Faddeeva evaluation stays bounded and accurate for
    any |x|/sqrt(tau).
    """
    if tau <= 0:
        raise ValueError("require tau > 0")
    x = np.asarray(x, dtype=complex)
    m, hbar = units.mass, units.hbar
    root_i = np.exp(1j * np.pi / 4.0)
    phase = np.exp(1j * m * x**2 / (2.0 * hbar * tau))
    erfi_arg = root_i * np.sqrt(m / (2.0 * hbar * tau)) * x
    out = (-2.0 * phase * root_i * math.sqrt(math.pi * hbar * tau / (2.0 * m))
           + 1j * np.pi * x * scipy.special.erfi(erfi_arg))
    if not np.all(np.isfinite(out.real)) or not np.all(np.isfinite(out.imag)):
        raise OverflowError("g kernel overflowed; erfi argument left the bounded ray")
    return out if out.ndim else complex(out)


def _g_dtau(x, v, tau, units):
    """Total d/dtau of g(x(tau), tau) with dx/dtau = v (vectorised).

    The exponential pieces of dg/dx cancel, leaving
    dg/dtau = i pi v erfi(z) - sqrt(i pi hbar/(2 m tau)) e^{i m x^2/(2 hbar tau)},
    z = sqrt(i m/(2 hbar tau)) x.
    """
    x = np.asarray(x, dtype=complex)
    m, hbar = units.mass, units.hbar
    root_i = np.exp(1j * np.pi / 4.0)
    z = root_i * np.sqrt(m / (2.0 * hbar * tau)) * x
    phase = np.exp(1j * m * x**2 / (2.0 * hbar * tau))
    return (1j * np.pi * v * scipy.special.erfi(z)
            - root_i * math.sqrt(math.pi * hbar / (2.0 * m * tau)) * phase)


def _g_dtau2(x, v, tau, units):
    """Total second tau-derivative of g(x(tau), tau), analytic form."""
    x = np.asarray(x, dtype=complex)
    m, hbar = units.mass, units.hbar
    a = m / (2.0 * hbar)
    root_i = np.exp(1j * np.pi / 4.0)
    phase = np.exp(1j * a * x**2 / tau)
    term1 = 2j * math.sqrt(math.pi) * v * root_i * np.sqrt(a / tau) \
        * (v - x / (2.0 * tau)) * phase
    term2 = -root_i * math.sqrt(math.pi * hbar / (2.0 * m)) * phase * (
        -0.5 * tau**-1.5 + tau**-0.5 * 1j * a * (2.0 * x * v / tau - x**2 / tau**2))
    return term1 + term2


def _kernel_nodes(psi, D, tau_max, units, n_nodes=None):
    """Gauss-Legendre k-grid resolving the kernel phases up to tau_max."""
    k_lo, k_hi = psi.k_window(1e-12)
    k_lo = max(k_lo, 1e-6)
    if n_nodes is None:
        rate = units.hbar * k_hi * tau_max / units.mass + D.length
        cycles = (k_hi - k_lo) * rate / (2.0 * math.pi)
        n_nodes = max(400, int(4.0 * cycles))
    k, w = gauss_legendre(k_lo, k_hi, n_nodes)
    weight = np.abs(psi.amplitude(k)) ** 2 * w * units.mass / (2.0 * math.pi * units.hbar * k)
    return k, weight


def _bracket(k, tau, L, units, parts=False):
    """B(tau; k) = 2 g(v tau) - g(v tau - L) - g(v tau + L)."""
    y = units.hbar * k * tau / units.mass
    self_term = 2.0 * g_kernel(y, tau, units)
    cross = -g_kernel(y - L, tau, units) - g_kernel(y + L, tau, units)
    if parts:
        return self_term, cross
    return self_term + cross


def ffcf_free(psi: MomentumWavepacket, D: Region, tau, units: UnitSystem = NATURAL,
              n_nodes: int | None = None, parts: bool = False,
              derivative: str = "fd"):
    """Flux-flux correlation function C(tau) of a free positive-momentum packet.

    The total second tau-derivative of the kernel bracket is taken by
    central differences with step 1e-4*tau plus one Richardson step
    (derivative="fd", the default) or from the closed-form derivative
    expressions (derivative="analytic", the slower validation path).  With
    parts=True returns (C, C_self, C_cross): the same-boundary
    self-correlation term (divergent as tau -> 0) and the cross-boundary
    term carrying the dwell-time hump.
    """
    if psi.support != "positive":
        raise ValueError("free ffcf requires a positive-momentum packet")
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(taus <= 0.0):
        raise ValueError("tau must be positive")
    k, weight = _kernel_nodes(psi, D, float(taus.max()), units, n_nodes)
    L = D.length

    def second_derivative(t):
        if derivative == "analytic":
            v = units.hbar * k / units.mass
            y = v * t
            d2_self = 2.0 * _g_dtau2(y, v, t, units)
            d2_cross = -_g_dtau2(y - L, v, t, units) - _g_dtau2(y + L, v, t, units)
            return d2_self, d2_cross
        if derivative != "fd":
            raise ValueError("derivative must be 'fd' or 'analytic'")
        h = 1e-4 * t

        def curv(hh):
            s_hi, c_hi = _bracket(k, t + hh, L, units, parts=True)
            s_lo, c_lo = _bracket(k, t - hh, L, units, parts=True)
            s_0, c_0 = _bracket(k, t, L, units, parts=True)
            return (s_hi - 2.0 * s_0 + s_lo) / hh**2, (c_hi - 2.0 * c_0 + c_lo) / hh**2

        s1, c1 = curv(h)
        s2, c2 = curv(0.5 * h)
        return (4.0 * s2 - s1) / 3.0, (4.0 * c2 - c1) / 3.0

    c_self = np.empty(taus.shape)
    c_cross = np.empty(taus.shape)
    for i, t in enumerate(taus):
        d2s, d2c = second_derivative(float(t))
        c_self[i] = float(np.dot(weight, d2s).real)
        c_cross[i] = float(np.dot(weight, d2c).real)
    total = c_self + c_cross
    if parts:
        if np.ndim(tau) == 0:
            return float(total[0]), float(c_self[0]), float(c_cross[0])
        return total, c_self, c_cross
    return float(total[0]) if np.ndim(tau) == 0 else total


def ffcf_running_integral(psi: MomentumWavepacket, D: Region, tau,
                          units: UnitSystem = NATURAL,
                          n_nodes: int | None = None):
    """Antiderivative W(tau) of C: Int_a^b C dtau = W(b) - W(a), exactly.

    Uses the closed-form first tau-derivative of the kernel bracket.  The
    improper normalisation statement Int_0^inf C dtau = 0 appears here as
    W(tau) -> 0 for tau beyond the hump (the divergent tau -> 0 head of the
    self-correlation is the reason W(tau_min) itself diverges as
    tau_min -> 0, so the integral from 0 exists only in this boundary
    sense).
    """
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    k, weight = _kernel_nodes(psi, D, float(taus.max()), units, n_nodes)
    L = D.length
    v = units.hbar * k / units.mass
    out = np.empty(taus.shape)
    for i, t in enumerate(taus):
        y = v * t
        d1 = (2.0 * _g_dtau(y, v, t, units) - _g_dtau(y - L, v, t, units)
              - _g_dtau(y + L, v, t, units))
        out[i] = float(np.dot(weight, d1).real)
    return float(out[0]) if np.ndim(tau) == 0 else out


def ffcf_sample_curve(psi: MomentumWavepacket, D: Region,
                      units: UnitSystem = NATURAL,
                      tau_min: float = 1e-3, tau_max: float | None = None,
                      n_head: int = 400, n_body: int = 1400) -> list[FfcfSample]:
    """Sample C(tau) on a grid suited for moment integrals.

    Log-spaced points resolve the tau^(-3/2) self-correlation head up to
    tau = 2 (natural units of the packet), linear points cover the hump out
    to tau_max (default: 3x the classical crossing time at the packet
    centre).
    """
    if tau_max is None:
        k0 = psi.params.get("k0")
        if k0 is None:
            k0 = 0.5 * sum(psi.k_window())
        tau_max = 3.0 * units.mass * D.length / (units.hbar * k0)
    split = min(2.0, 0.1 * tau_max)
    grid = np.unique(np.concatenate([
        np.geomspace(tau_min, split, n_head),
        np.linspace(split, tau_max, n_body),
    ]))
    values = ffcf_free(psi, D, grid, units)
    return [FfcfSample(tau=float(t), value=float(c)) for t, c in zip(grid, values)]


def ffcf_moments(samples: list[FfcfSample], orders=(1, 2)) -> tuple[float, ...]:
    """Int tau^n C(tau) dtau over the sampled window, for each order n >= 1.

    The tau^n weight suppresses the tau -> 0 self-correlation divergence, so
    a trapezoid over the samples converges; the omitted head below the first
    sample scales like tau_min^(n - 1/2).
    """
    if any(n < 1 for n in orders):
        raise ValueError("moment orders must be >= 1 (the n=0 integral is improper)")
    taus = np.array([s.tau for s in samples])
    vals = np.array([s.value for s in samples])
    if np.any(np.diff(taus) <= 0):
        raise ValueError("samples must be sorted by tau")
    return tuple(float(np.trapezoid(taus**n * vals, taus)) for n in orders)


def current_density(psi: MomentumWavepacket, x: float, t: float,
                    units: UnitSystem = NATURAL, n_nodes: int = 800) -> float:
    """Probability current J(x, t) = (hbar/m) Im[psi* dpsi/dx] of a free packet."""
    val, dval = free_wavefunction_grid(psi, x, t, units, n_nodes=n_nodes, derivative=True)
    j = (units.hbar / units.mass) * np.imag(np.conj(val) * dval)
    return float(j[0])


def flux_matrix_element(psi_a: MomentumWavepacket, psi_b: MomentumWavepacket,
                        x: float, t: float, units: UnitSystem = NATURAL,
                        n_nodes: int = 800) -> complex:
    """<psi_a| J(x, t) |psi_b> = (hbar/2mi)[psi_a* psi_b' - psi_a*' psi_b]."""
    va, da = free_wavefunction_grid(psi_a, x, t, units, n_nodes=n_nodes, derivative=True)
    vb, db = free_wavefunction_grid(psi_b, x, t, units, n_nodes=n_nodes, derivative=True)
    out = (units.hbar / (2j * units.mass)) * (np.conj(va) * db - np.conj(da) * vb)
    return complex(out[0])


def ffcf_zeroth_approx(psi: MomentumWavepacket, D: Region, tau,
                       units: UnitSystem = NATURAL, dt: float | None = None,
                       n_nodes: int | None = None):
    """Zeroth-order ffcf from products of current-density expectations.

    C_0(tau) = Int dt [J2(t+tau) J1(t) + J1(t+tau) J2(t) - J1(t+tau) J1(t)
                       - J2(t+tau) J2(t)],

    with J_i the expectation current at the region boundaries.  Real by
    construction and finite at tau = 0 (the operator self-correlation
    divergence is an ordering effect that products of expectations miss).
    """
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    lags, c0 = _c0_curve(psi, D, units, dt=dt, n_nodes=n_nodes)
    out = np.interp(taus, lags, c0, left=np.nan, right=0.0)
    return float(out[0]) if np.ndim(tau) == 0 else out


def _xcorr_positive_lags(a: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    """R(m) = dt * sum_j a[j + m] b[j] for m = 0 .. len-1."""
    n = len(a)
    return dt * np.correlate(a, b, mode="full")[n - 1:]


def _c0_params(psi, units):
    k0 = psi.params.get("k0", 0.5 * sum(psi.k_window()))
    dk = psi.params.get("dk", 0.25 * (psi.k_window()[1] - psi.k_window()[0]))
    return k0, dk


def _c0_curve(psi, D, units, dt=None, n_nodes=None):
    k0, dk = _c0_params(psi, units)
    if dt is None:
        # resolves the packet crossing time at the centre velocity
        dt = 0.02 * units.mass / (units.hbar * k0 * dk)
    if n_nodes is None:
        k_lo, k_hi = psi.k_window(1e-12)
        # t_end is unknown up front; bound the phase rate by the slow tail
        x0 = abs(psi.params.get("x0", 0.0))
        t_guess = (x0 + D.x2 - D.x1) / (units.hbar * max(k0 - 4.0 * dk, 0.2 * k0) / units.mass) * 4.0
        rate = units.hbar * k_hi * t_guess / units.mass + abs(D.x2) + abs(D.x1)
        n_nodes = max(800, int(4.0 * (k_hi - k_lo) * rate / (2.0 * math.pi)))
    _, (j1, j2) = _current_series_vec(psi, (D.x1, D.x2), units, dt, n_nodes)
    corr = (_xcorr_positive_lags(j2, j1, dt) + _xcorr_positive_lags(j1, j2, dt)
            - _xcorr_positive_lags(j1, j1, dt) - _xcorr_positive_lags(j2, j2, dt))
    lags = dt * np.arange(len(corr))
    return lags, corr


def _current_series_vec(psi, xs, units, dt, n_nodes, threshold=1e-10):
    """Vectorised version of _current_series: one phase matrix per block."""
    k_lo, k_hi = psi.k_window(1e-12)
    k, w = gauss_legendre(max(k_lo, 1e-9), k_hi, n_nodes)
    amp = psi.amplitude(k) * w
    disp = np.exp(-0.5j * units.hbar * k**2 * dt / units.mass)
    block = 1024
    series = [np.empty(0) for _ in xs]
    ts_len = 0
    max_blocks = 200
    for _ in range(max_blocks):
        ts = dt * np.arange(ts_len, ts_len + block)
        phases = np.exp(-0.5j * units.hbar * k**2 / units.mass * ts[:, None])
        quiet = True
        for i, x in enumerate(xs):
            base = amp * np.exp(1j * k * x)
            psi_t = phases @ base / math.sqrt(2.0 * math.pi)
            dpsi_t = phases @ (1j * k * base) / math.sqrt(2.0 * math.pi)
            j = (units.hbar / units.mass) * np.imag(np.conj(psi_t) * dpsi_t)
            series[i] = np.concatenate([series[i], j])
            if np.max(np.abs(j)) > threshold:
                quiet = False
        ts_len += block
        if quiet and ts_len >= 2 * block:
            break
    else:
        raise RuntimeError("current did not decay below threshold; grid too short")
    return dt * np.arange(ts_len), series


def c0_second_moment(psi: MomentumWavepacket, D: Region,
                     units: UnitSystem = NATURAL, dt: float | None = None,
                     n_nodes: int | None = None) -> float:
    """Int tau^2 C_0(tau) dtau, the measurable estimate of <T_D^2>."""
    lags, c0 = _c0_curve(psi, D, units, dt=dt, n_nodes=n_nodes)
    return float(np.trapezoid(lags**2 * c0, lags))


def cross_flux_from_diagonal(psi: MomentumWavepacket, psi_q: MomentumWavepacket,
                             x: float, t: float,
                             units: UnitSystem = NATURAL) -> complex:
    """<psi| J(x,t) |psi_q> from diagonal currents of auxiliary superpositions.

    With psi_1 = psi + psi_q, psi_2 = psi + i psi_q, psi_3 = psi - i psi_q,

        <psi|J|psi_q> = 1/2 <1|J|1> - (1+i)/4 <2|J|2> - (1-i)/4 <3|J|3>,

    valid when <psi|psi_q> = 0 (the diagonal pieces then cancel exactly).
    """
    ov = overlap(psi, psi_q)
    scale = math.sqrt(max(psi.norm_squared() * psi_q.norm_squared(), 1e-300))
    if abs(ov) > 1e-10 * scale:
        raise ValueError(f"states must be orthogonal, got <psi|psi_q> = {ov}")
    psi1 = superpose(psi, psi_q, 1.0, 1.0)
    psi2 = superpose(psi, psi_q, 1.0, 1j)
    psi3 = superpose(psi, psi_q, 1.0, -1j)
    j11 = flux_matrix_element(psi1, psi1, x, t, units).real
    j22 = flux_matrix_element(psi2, psi2, x, t, units).real
    j33 = flux_matrix_element(psi3, psi3, x, t, units).real
    return complex(0.5 * j11 - 0.25 * (1.0 + 1j) * j22 - 0.25 * (1.0 - 1j) * j33)


def gram_schmidt_partners(psi: MomentumWavepacket, count: int,
                          units: UnitSystem = NATURAL) -> list[MomentumWavepacket]:
    """Orthonormal packets spanning low Hermite modulations of psi~.

    Seeds H_j((k - k0)/(2 dk)) psi~(k) are Gram-Schmidt orthogonalised
    against psi and each other (two passes, residual overlaps < 1e-12).
    Used to decompose the identity as |psi><psi| + sum |psi_j^Q><psi_j^Q| in
    the subspace the flux correlators explore.
    """
    k0, dk = _c0_params(psi, units)
    basis: list[MomentumWavepacket] = []
    herm = np.polynomial.hermite.Hermite
    for j in range(1, count + 1):
        coeffs = np.zeros(j + 1)
        coeffs[j] = 1.0
        hj = herm(coeffs)
        seed = MomentumWavepacket(
            amplitude=lambda k, hj=hj: hj((np.asarray(k) - k0) / (2.0 * dk)) * psi.amplitude(k),
            support=psi.support,
            k_support=psi.k_support,
            normalized=False,
        )
        for _ in range(2):  # two passes keep residual overlaps at round-off
            for prev in [psi, *basis]:
                c = overlap(prev, seed) / prev.norm_squared()
                seed = superpose(seed, prev, 1.0, -c)
        nrm = math.sqrt(seed.norm_squared())
        if nrm < 1e-10:
            raise ValueError(f"Hermite seed {j} is linearly dependent on the basis")
        basis.append(superpose(seed, seed, 1.0 / nrm, 0.0))
    return basis

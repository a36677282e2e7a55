"""Special functions, quadrature, root finding and free propagation.

These are the shared numerical primitives for the physics modules:

- erfi on the complex plane (imaginary error function),
- adaptive 1-D quadrature for real- or complex-valued integrands,
- bracketing root finder for oscillatory functions on an interval,
- orthonormal harmonic-oscillator eigenfunction densities |phi_n(u)|**2,
- free-particle wavepacket propagation psi(x,t) from a momentum amplitude.

Everything here is pure and reentrant; no module-level mutable state apart
from a cache of Gauss-Legendre nodes.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.special


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and subdivision budget for adaptive quadrature."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class Bracket:
    """Interval [lo, hi] across which a target function changes sign."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("bracket requires lo < hi")


def erfi_complex(z: complex) -> complex:
    """Imaginary error function erfi(z) = -i*erf(i*z) for complex z.

    Evaluated through the Faddeeva function, which keeps full relative
    accuracy on rays where the result stays bounded (in particular the
    exp(i*pi/4) ray that the free-motion correlation kernel uses, out to
    |z| ~ 1e3).  For arguments near the real axis the result grows like
    exp(z**2); an OverflowError is raised when it leaves double range.
    """
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError(f"erfi argument must be finite, got {z}")
    w = complex(scipy.special.erfi(z))
    if not (np.isfinite(w.real) and np.isfinite(w.imag)):
        raise OverflowError(f"erfi({z}) exceeds double-precision range")
    return w


def adaptive_quad(
    f: Callable[[float], float | complex],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    points: Sequence[float] | None = None,
    best_effort: float | None = None,
):
    """Integrate f on [a, b] adaptively; returns (value, error_estimate).

    Real- and complex-valued integrands are supported (the latter are
    integrated component-wise).  ``points`` marks known awkward interior
    abscissae (kinks, integrable singularities).  Raises QuadratureError
    when the subdivision budget is exhausted without meeting
    max(abs_tol, rel_tol*|result|); with ``best_effort`` set, a
    non-converged result is still returned as long as its error estimate
    stays below that cap.
    """
    if np.isfinite(a) and np.isfinite(b):
        probe_at = a + 0.5 * (b - a)
    elif np.isfinite(a):
        probe_at = a + 1.0
    elif np.isfinite(b):
        probe_at = b - 1.0
    else:
        probe_at = 0.0
    probe = f(probe_at)
    is_complex = np.iscomplexobj(probe) or isinstance(probe, complex)

    def run(g):
        out = scipy.integrate.quad(
            g, a, b,
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=spec.max_subdivisions,
            points=list(points) if points is not None else None,
            full_output=1,
        )
        val, err = out[0], out[1]
        converged = len(out) <= 3 or err <= max(spec.abs_tol, spec.rel_tol * abs(val))
        if not converged and best_effort is not None and err <= best_effort:
            converged = True
        return val, err, converged

    if is_complex:
        re, err_re, ok_re = run(lambda x: f(x).real)
        im, err_im, ok_im = run(lambda x: f(x).imag)
        if not (ok_re and ok_im):
            raise QuadratureError(
                f"quadrature did not converge on [{a}, {b}] "
                f"(error estimate {err_re:.3g}+{err_im:.3g}j)")
        return complex(re, im), err_re + err_im
    val, err, ok = run(f)
    if not ok:
        raise QuadratureError(
            f"quadrature did not converge on [{a}, {b}] (error estimate {err:.3g})")
    return val, err


def find_roots(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    n_scan: int = 1000,
    tangential: bool = True,
) -> np.ndarray:
    """All sign-change roots of f on [lo, hi], sorted ascending.

    A uniform n_scan-point scan brackets the sign changes, each bracket is
    refined with Brent's method.  Tangential (non-sign-changing) roots are
    best effort: local minima of |f| from the scan are polished and accepted
    only when |f| drops below 1e-12 of the scan scale.  The scan must be
    dense enough to separate neighbouring roots; for t(k)-type curves with
    oscillation period pi/L this means n_scan >= 20*(hi-lo)*L/pi or so.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if n_scan < 2:
        raise ValueError("n_scan must be >= 2")
    xs = np.linspace(lo, hi, n_scan)
    try:
        fs = np.asarray(f(xs), dtype=float)
        if fs.shape != xs.shape:
            raise TypeError
    except (TypeError, ValueError):
        fs = np.array([f(x) for x in xs], dtype=float)

    scale = max(1.0, float(np.nanmax(np.abs(fs))))
    roots: list[float] = []

    exact = np.flatnonzero(fs == 0.0)
    roots.extend(xs[exact])

    sign_change = np.flatnonzero(fs[:-1] * fs[1:] < 0.0)
    for i in sign_change:
        r = scipy.optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-15, rtol=8.9e-16)
        roots.append(float(r))

    if tangential:
        af = np.abs(fs)
        interior = np.arange(1, n_scan - 1)
        is_min = (af[interior] <= af[interior - 1]) & (af[interior] <= af[interior + 1])
        for i in interior[is_min]:
            if fs[i] == 0.0 or fs[i - 1] * fs[i] < 0.0 or fs[i] * fs[i + 1] < 0.0:
                continue  # handled above
            if af[i] > 1e-8 * scale:
                continue
            res = scipy.optimize.minimize_scalar(
                lambda x: abs(f(x)), bracket=(xs[i - 1], xs[i], xs[i + 1]), method="brent")
            if res.success and abs(res.fun) <= 1e-12 * scale:
                roots.append(float(res.x))

    if not roots:
        return np.empty(0)
    out = np.sort(np.asarray(roots))
    # drop duplicates produced by adjacent brackets hitting the same root
    keep = np.concatenate(([True], np.diff(out) > 1e-12 * max(1.0, hi - lo)))
    return out[keep]


def hermite_density(n: int, u) -> np.ndarray | float:
    """|phi_n(u)|**2 for the orthonormal oscillator eigenfunction phi_n.

    u is the dimensionless coordinate x*sqrt(m*omega/hbar).  Uses the stable
    upward recurrence on the Gaussian-weighted Hermite functions
    h_{n+1} = sqrt(2/(n+1)) u h_n - sqrt(n/(n+1)) h_{n-1}, valid for n <= 200.
    """
    if not 0 <= n <= 200:
        raise ValueError(f"n must be in [0, 200], got {n}")
    u = np.asarray(u, dtype=float)
    h_prev = np.pi**-0.25 * np.exp(-0.5 * u**2)
    if n == 0:
        out = h_prev**2
        return float(out) if out.ndim == 0 else out
    h_cur = np.sqrt(2.0) * u * h_prev
    for j in range(1, n):
        h_prev, h_cur = h_cur, np.sqrt(2.0 / (j + 1)) * u * h_cur - np.sqrt(j / (j + 1)) * h_prev
    out = h_cur**2
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(a: float, b: float, n: int):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def free_wavefunction_grid(psi, x, t, units, n_nodes: int = 800, derivative: bool = False):
    """psi(x, t) for a free packet on an array of positions, fixed t.

    Vectorised Gauss-Legendre evaluation of
    (2*pi)**-1/2 * Int dk psi_tilde(k) exp(i(kx - hbar k^2 t / 2m)).
    With derivative=True also returns d(psi)/dx (an extra factor ik under the
    integral).  n_nodes must resolve the fastest phase |x - hbar*k*t/m| over
    the packet's k-window; callers pick it from their geometry.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k_lo, k_hi = psi.k_window()
    k, w = gauss_legendre(k_lo, k_hi, n_nodes)
    amp = psi.amplitude(k) * w * np.exp(-0.5j * units.hbar * k**2 * t / units.mass)
    phase = np.exp(1j * np.outer(x, k))
    val = phase @ amp / np.sqrt(2.0 * np.pi)
    if not derivative:
        return val
    dval = phase @ (1j * k * amp) / np.sqrt(2.0 * np.pi)
    return val, dval


def propagate_free(psi, x: float, t: float, units, spec: QuadratureSpec | None = None) -> complex:
    """Free time evolution psi(x, t) of a momentum-space wavepacket.

    Direct adaptive quadrature of the propagation integral; accurate for
    single-point evaluations at any (x, t).  For dense grids use
    free_wavefunction_grid, which shares the phase matrix across positions.
    """
    spec = spec or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9, max_subdivisions=800)
    k_lo, k_hi = psi.k_window()
    c = 0.5 * units.hbar * t / units.mass

    def integrand(k):
        return psi.amplitude(k) * np.exp(1j * (k * x - c * k**2))

    val, _ = adaptive_quad(integrand, k_lo, k_hi, spec)
    return val / np.sqrt(2.0 * np.pi)

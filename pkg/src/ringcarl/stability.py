"""Linear stability of the homogeneous state.

The homogeneous steady state is unstable iff the dispersion function

    D(s) = delta^2 + (s+1)^2 + [(s+1) A - i delta S] I(s)

has a zero with Re(s) > 0.  The velocity integral over the Maxwellian,

    I(s) = [N u0^2 rho_r / (1 + delta^2)] * K(s),
    K(s) = integral F'(u) / (s + i u) du,

reduces to the plasma dispersion function Z (Faddeeva function):

    K(s) = (2 i / u_t^2) * (1 + zeta Z(zeta)),   zeta = i s / u_t,

which is entire in s, so the Landau continuation onto and past the
imaginary axis is automatic.  An adaptive-quadrature evaluation (valid for
Re s > 0 only) is kept as an independent oracle and as the fallback for
non-Maxwellian velocity distributions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import wofz

from .core import DomainError, SystemParams

__all__ = [
    "PumpPoint",
    "BoundaryCurve",
    "RegimeResult",
    "landau_integral",
    "landau_integral_quadrature",
    "dispersion",
    "dispersion_derivative",
    "max_growth_rate",
    "boundary_curve",
    "threshold_sc_a0",
    "carl_bound",
    "s_bgk",
    "classify_regime",
    "count_unstable_roots",
    "WARM_GAS_UT",
]

WARM_GAS_UT = 20.0  # u_t at and above which the warm-gas closed forms apply


@dataclass(frozen=True)
class PumpPoint:
    """One (S, A) cell of the pump-parameter plane."""

    s_total: float
    a_asym: float

    def __post_init__(self):
        if self.s_total < 0:
            raise DomainError(f"S must be >= 0, got {self.s_total}")
        if abs(self.a_asym) > self.s_total * (1 + 1e-12):
            raise DomainError(f"|A| = {abs(self.a_asym)} exceeds S = {self.s_total}")


@dataclass
class BoundaryCurve:
    """Marginal-stability samples (omega, S, A), one per retained omega."""

    omega: np.ndarray
    s_total: np.ndarray
    a_asym: np.ndarray

    def __len__(self) -> int:
        return self.omega.size


def _plasma_z(zeta: np.ndarray | complex) -> np.ndarray | complex:
    """Plasma dispersion function Z(zeta) = i sqrt(pi) w(zeta), entire."""
    return 1j * np.sqrt(np.pi) * wofz(zeta)


def _landau_prefactor(params: SystemParams) -> float:
    return params.n_particles * params.u0**2 * params.rho_r / (1.0 + params.delta**2)


def landau_integral(s, params: SystemParams):
    """Landau-continued velocity integral I(s), Re(s) >= 0.

    Vectorized over s.  For u_t = 0 the cold-gas limit i/s^2 (times the
    prefactor) is returned.
    """
    s = np.asarray(s, dtype=complex)
    if np.any(s.real < -1e-15):
        raise DomainError("landau_integral requires Re(s) >= 0")
    pref = _landau_prefactor(params)
    if params.u_t == 0.0:
        return pref * 1j / s**2
    zeta = 1j * s / params.u_t
    k = (2j / params.u_t**2) * (1.0 + zeta * _plasma_z(zeta))
    return pref * k


def _landau_kernel_derivative(s, params: SystemParams):
    """d/ds of landau_integral (analytic, for Newton polishing)."""
    s = np.asarray(s, dtype=complex)
    pref = _landau_prefactor(params)
    if params.u_t == 0.0:
        return pref * (-2j) / s**3
    zeta = 1j * s / params.u_t
    z = _plasma_z(zeta)
    # d/dzeta [zeta Z] = Z + zeta Z',  Z' = -2 (1 + zeta Z)
    dk_dzeta = (2j / params.u_t**2) * (z - 2.0 * zeta * (1.0 + zeta * z))
    return pref * dk_dzeta * (1j / params.u_t)


def landau_integral_quadrature(
    s: complex, params: SystemParams, rel_tol: float = 1e-11
) -> complex:
    """Direct adaptive quadrature of the velocity integral, Re(s) > 0 only.

    Independent of the Faddeeva route; used as the accuracy oracle and as
    the fallback for non-Maxwellian distributions.
    """
    if params.u_t <= 0:
        raise DomainError("quadrature oracle needs a thermal distribution")
    if np.real(s) <= 0:
        raise DomainError("quadrature route valid only for Re(s) > 0")
    ut = params.u_t

    def fprime(u):
        return -2.0 * u * np.exp(-((u / ut) ** 2)) / (np.sqrt(np.pi) * ut**3)

    def integrand(u, part):
        val = fprime(u) / (s + 1j * u)
        return val.real if part == "re" else val.imag

    lim = 12.0 * ut + 4.0 * abs(s)
    re, _ = integrate.quad(
        integrand, -lim, lim, args=("re",), epsabs=0, epsrel=rel_tol, limit=400
    )
    im, _ = integrate.quad(
        integrand, -lim, lim, args=("im",), epsabs=0, epsrel=rel_tol, limit=400
    )
    return _landau_prefactor(params) * complex(re, im)


def dispersion(s, point: PumpPoint, params: SystemParams):
    """D(s) = delta^2 + (s+1)^2 + [(s+1) A - i delta S] I(s)."""
    s = np.asarray(s, dtype=complex)
    i_s = landau_integral(s, params)
    d = params.delta
    return d**2 + (s + 1.0) ** 2 + ((s + 1.0) * point.a_asym - 1j * d * point.s_total) * i_s


def dispersion_derivative(s, point: PumpPoint, params: SystemParams):
    s = np.asarray(s, dtype=complex)
    d = params.delta
    i_s = landau_integral(s, params)
    di_s = _landau_kernel_derivative(s, params)
    return (
        2.0 * (s + 1.0)
        + point.a_asym * i_s
        + ((s + 1.0) * point.a_asym - 1j * d * point.s_total) * di_s
    )


# ---------------------------------------------------------------------------
# Right-half-plane root counting and polishing
# ---------------------------------------------------------------------------


def _winding_number(fun, corners, n0: int = 64, max_depth: int = 24) -> int:
    """Winding of fun along the closed rectangle through `corners`.

    Phase increments are refined recursively until each is below pi/2, which
    guarantees an unambiguous branch.  Raises RuntimeError if refinement
    bottoms out (contour passing too close to a zero).
    """
    pts = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        ts = np.linspace(0.0, 1.0, n0, endpoint=False)
        pts.extend(a + (b - a) * ts)
    vals = [fun(p) for p in pts]
    total = 0.0
    m = len(pts)
    for i in range(m):
        p0, p1 = pts[i], pts[(i + 1) % m]
        v0, v1 = vals[i], vals[(i + 1) % m]
        total += _phase_step(fun, p0, p1, v0, v1, max_depth)
    return int(round(total / (2.0 * np.pi)))


def _phase_step(fun, p0, p1, v0, v1, depth):
    if v0 == 0 or v1 == 0:
        raise RuntimeError("contour hit a zero of D")
    dphi = np.angle(v1 / v0)
    if abs(dphi) < np.pi / 2:
        return dphi
    if depth <= 0:
        raise RuntimeError("contour too close to a zero of D")
    pm = 0.5 * (p0 + p1)
    vm = fun(pm)
    return _phase_step(fun, p0, pm, v0, vm, depth - 1) + _phase_step(
        fun, pm, p1, vm, v1, depth - 1
    )


def _newton_polish(fun, dfun, s0, tol=1e-12, max_iter=60):
    s = complex(s0)
    for _ in range(max_iter):
        f = fun(s)
        df = dfun(s)
        if df == 0:
            break
        ds = f / df
        s -= ds
        if abs(ds) < tol * max(1.0, abs(s)):
            return s
    return s


def _find_roots_in_rect(fun, dfun, re_lo, re_hi, im_lo, im_hi, depth=0):
    """Recursive rectangle subdivision by the argument principle."""
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
    ]
    for shrink in range(6):
        try:
            count = _winding_number(fun, corners)
            break
        except RuntimeError:
            # a zero (near-)on the contour: nudge the rectangle outward
            pad = 1e-3 * (1 + shrink) * max(re_hi - re_lo, im_hi - im_lo)
            re_hi += pad
            im_lo -= pad
            im_hi += pad
            corners = [
                complex(re_lo, im_lo),
                complex(re_hi, im_lo),
                complex(re_hi, im_hi),
                complex(re_lo, im_hi),
            ]
    else:
        raise RuntimeError("could not separate contour from zeros of D")
    if count == 0:
        return []
    small = max(re_hi - re_lo, im_hi - im_lo) < 1e-6
    if count == 1 or small or depth > 40:
        s0 = complex(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi))
        root = _newton_polish(fun, dfun, s0)
        return [root] * count if small and count > 1 else [root]
    if re_hi - re_lo >= im_hi - im_lo:
        mid = 0.5 * (re_lo + re_hi) + 1.2345e-7 * (re_hi - re_lo)
        return _find_roots_in_rect(fun, dfun, re_lo, mid, im_lo, im_hi, depth + 1) + \
            _find_roots_in_rect(fun, dfun, mid, re_hi, im_lo, im_hi, depth + 1)
    mid = 0.5 * (im_lo + im_hi) + 1.2345e-7 * (im_hi - im_lo)
    return _find_roots_in_rect(fun, dfun, re_lo, re_hi, im_lo, mid, depth + 1) + \
        _find_roots_in_rect(fun, dfun, re_lo, re_hi, mid, im_hi, depth + 1)


def _search_rectangle(params: SystemParams):
    im_max = 4.0 * max(1.0, params.u_t, abs(params.delta))
    return 10.0, im_max


def _cold_roots(point: PumpPoint, params: SystemParams) -> np.ndarray:
    """All roots of D for u_t = 0, where D * s^2 is a quartic in s.

    The cold integral i/s^2 puts a pole of D at s = 0 directly on the
    contour used by the argument-principle search, so the cold case is
    solved as a polynomial instead.
    """
    pref = _landau_prefactor(params)
    d = params.delta
    a, s_tot = point.a_asym, point.s_total
    poly = np.array(
        [1.0, 2.0, 1.0 + d**2, 1j * a * pref, 1j * a * pref + d * s_tot * pref],
        dtype=complex,
    )
    return np.roots(poly)


def count_unstable_roots(point: PumpPoint, params: SystemParams) -> int:
    """Number of zeros of D in the open right half-plane (search rectangle)."""
    if params.u_t == 0.0:
        return int(np.sum(_cold_roots(point, params).real > 0))
    re_max, im_max = _search_rectangle(params)

    def fun(s):
        return complex(dispersion(s, point, params))

    corners = [
        complex(1e-9, -im_max),
        complex(re_max, -im_max),
        complex(re_max, im_max),
        complex(1e-9, im_max),
    ]
    for shift in (0.0, 3e-4, -1.7e-4, 1.1e-3):
        try:
            shifted = [c + 1j * shift * im_max for c in corners]
            return _winding_number(fun, shifted)
        except RuntimeError:
            continue
    raise RuntimeError("argument-principle count failed repeatedly")


def max_growth_rate(point: PumpPoint, params: SystemParams) -> complex | None:
    """Dominant unstable root of D, or None if the state is stable.

    Zeros in [0, re_max] x [-im_max, im_max] are located by recursive
    argument-principle bisection and Newton-polished; the one with the
    largest real part is returned.
    """
    if params.u_t == 0.0:
        roots = [complex(r) for r in _cold_roots(point, params) if r.real > 0]
        return max(roots, key=lambda r: r.real) if roots else None
    re_max, im_max = _search_rectangle(params)

    def fun(s):
        return complex(dispersion(s, point, params))

    def dfun(s):
        return complex(dispersion_derivative(s, point, params))

    roots = _find_roots_in_rect(fun, dfun, 1e-9, re_max, -im_max, im_max)
    roots = [r for r in roots if r.real > 0]
    if not roots:
        return None
    return max(roots, key=lambda r: r.real)


# ---------------------------------------------------------------------------
# Stability boundary and closed-form thresholds
# ---------------------------------------------------------------------------


def default_omega_grid(params: SystemParams, n: int = 2048) -> np.ndarray:
    """Symmetric omega grid, log-dense near 0, spanning the Doppler width."""
    w_max = 6.0 * max(1.0, params.u_t, abs(params.delta))
    half = np.geomspace(1e-4 * w_max, w_max, n // 2)
    return np.concatenate([-half[::-1], [0.0], half])


def boundary_curve(params: SystemParams, omega_grid: np.ndarray | None = None) -> BoundaryCurve:
    """Marginal curve: solve D(i omega) = 0 for (S, A) at each omega.

    D(i omega) = 0 splits into two real equations linear in (S, A); samples
    with a singular 2x2 system, S < 0, or |A| > S are dropped.
    """
    if omega_grid is None:
        omega_grid = default_omega_grid(params)
    d = params.delta
    keep_w, keep_s, keep_a = [], [], []
    i_vals = landau_integral(1j * np.asarray(omega_grid, dtype=float), params)
    for w, i_w in zip(omega_grid, i_vals):
        c_s = -1j * d * i_w
        c_a = (1.0 + 1j * w) * i_w
        m = np.array([[c_s.real, c_a.real], [c_s.imag, c_a.imag]])
        b = np.array([-(d**2 + 1.0 - w**2), -2.0 * w])
        det = np.linalg.det(m)
        if abs(det) < 1e-300:
            continue
        s_val, a_val = np.linalg.solve(m, b)
        if s_val < 0 or abs(a_val) > s_val:
            continue
        keep_w.append(w)
        keep_s.append(s_val)
        keep_a.append(a_val)
    return BoundaryCurve(np.array(keep_w), np.array(keep_s), np.array(keep_a))


def threshold_sc_a0(params: SystemParams) -> float:
    """Symmetric-pump instability threshold.

    S_c(A=0) = u_t^2 (1 + delta^2)^2 / (2 rho_r N u0^2 |delta|).
    """
    d = params.delta
    if d == 0:
        raise DomainError("threshold diverges at delta = 0")
    return (
        params.u_t**2
        * (1.0 + d**2) ** 2
        / (2.0 * params.rho_r * params.n_particles * params.u0**2 * abs(d))
    )


def carl_bound(params: SystemParams) -> float:
    """Asymmetry bound |A|/S above which no travelling-wave solution exists."""
    d = params.delta
    return abs(d) / np.sqrt(1.0 + d**2)


def s_bgk(params: SystemParams, a_asym: float) -> float:
    """Pump threshold for settling into a travelling (BGK) wave, warm gas.

    S_BGK = S_c(A=0) * [1 + (rho_r A N u0^2 / (u_t^2 sqrt(1+delta^2)))^2].
    Quantitatively valid for u_t >> 1 (warm gas).
    """
    if params.u_t == 0:
        raise DomainError("s_bgk requires a thermal gas (u_t > 0)")
    d = params.delta
    corr = (
        params.rho_r
        * a_asym
        * params.n_particles
        * params.u0**2
        / (params.u_t**2 * np.sqrt(1.0 + d**2))
    )
    return threshold_sc_a0(params) * (1.0 + corr**2)


def is_warm_gas(params: SystemParams) -> bool:
    return params.u_t >= WARM_GAS_UT


@dataclass(frozen=True)
class RegimeResult:
    regime: str                 # 'stable' | 'bgk-ordered' | 'carl'
    growth: complex | None      # dominant root if unstable
    low_confidence: bool = False


def classify_regime(point: PumpPoint, params: SystemParams) -> RegimeResult:
    """Analytic phase-diagram classification of one pump point.

    stable: no right-half-plane root.  carl: unstable and either the
    asymmetry exceeds the travelling-wave bound or (warm gas) S stays below
    S_BGK.  bgk-ordered otherwise; for a cold gas the warm-gas S_BGK
    criterion does not apply and the label carries a low-confidence flag.
    """
    root = max_growth_rate(point, params)
    if root is None:
        return RegimeResult("stable", None)
    if point.s_total > 0 and abs(point.a_asym) / point.s_total > carl_bound(params):
        return RegimeResult("carl", root)
    if is_warm_gas(params):
        if point.s_total > s_bgk(params, point.a_asym):
            return RegimeResult("bgk-ordered", root)
        return RegimeResult("carl", root)
    return RegimeResult("bgk-ordered", root, low_confidence=True)

"""Shared domain types and the optical-potential kernel.

Unit conventions (cavity decay rate kappa = 1 throughout):

* time        tau = kappa * t
* position    chi = 2 k x           (one lattice period is 2 pi in chi)
* velocity    u   = 2 k v / kappa
* pumps and mode amplitudes are kept as-is, in kappa units.

In these units the recoil parameter ``rho_r = 2 k v_R / kappa``
(v_R = 2 hbar k / m) and the thermal velocity ``u_t = 2 k v_T / kappa``
are the only places where mass and wavenumber enter.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "DomainError",
    "SystemParams",
    "FieldState",
    "ParticleEnsemble",
    "compute_order_parameter",
    "potential_coefficient",
    "dimensionless_potential",
    "force",
    "sample_maxwellian",
    "steady_state_fields",
    "TWO_PI",
]

TWO_PI = 2.0 * np.pi


class DomainError(ValueError):
    """Raised when an operation is called outside its physical domain."""


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless physical parameters of one experiment.

    ``delta`` is the effective cavity detuning (pump-cavity detuning shifted
    by the collective dispersive shift), ``u0`` the single-particle light
    shift per photon, both in units of kappa.  ``eta_plus``/``eta_minus``
    drive the two counterpropagating, orthogonally polarized modes.
    """

    delta: float
    n_particles: int
    u0: float
    eta_plus: complex
    eta_minus: complex
    rho_r: float = 0.01
    u_t: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 1:
            raise DomainError(f"n_particles must be >= 1, got {self.n_particles}")
        if not self.rho_r > 0:
            raise DomainError(f"rho_r must be > 0, got {self.rho_r}")
        if self.u_t < 0:
            raise DomainError(f"u_t must be >= 0, got {self.u_t}")
        for name in ("delta", "rho_r", "u_t", "u0"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not (np.isfinite(self.eta_plus) and np.isfinite(self.eta_minus)):
            raise DomainError("pump amplitudes must be finite")

    # -- derived pump groups ------------------------------------------------

    @property
    def s_total(self) -> float:
        """Total pump parameter S = |eta+|^2 + |eta-|^2."""
        return abs(self.eta_plus) ** 2 + abs(self.eta_minus) ** 2

    @property
    def a_asym(self) -> float:
        """Pump asymmetry A = |eta+|^2 - |eta-|^2 (|A| <= S always)."""
        return abs(self.eta_plus) ** 2 - abs(self.eta_minus) ** 2

    @property
    def nu0(self) -> float:
        """Collective coupling N * u0."""
        return self.n_particles * self.u0

    @classmethod
    def from_pump_split(cls, s_total: float, a_asym: float, **kwargs) -> "SystemParams":
        """Build params with real pump amplitudes realizing given (S, A)."""
        if s_total < 0:
            raise DomainError(f"s_total must be >= 0, got {s_total}")
        if abs(a_asym) > s_total * (1 + 1e-12):
            raise DomainError(f"|A| = {abs(a_asym)} exceeds S = {s_total}")
        ep = np.sqrt(max((s_total + a_asym) / 2.0, 0.0))
        em = np.sqrt(max((s_total - a_asym) / 2.0, 0.0))
        return cls(eta_plus=complex(ep), eta_minus=complex(em), **kwargs)

    def with_pumps(self, eta_plus: complex, eta_minus: complex) -> "SystemParams":
        return replace(self, eta_plus=eta_plus, eta_minus=eta_minus)


@dataclass
class FieldState:
    """The four complex mode amplitudes (two per polarization)."""

    alpha_plus: complex = 0.0 + 0.0j
    alpha_minus: complex = 0.0 + 0.0j
    beta_plus: complex = 0.0 + 0.0j
    beta_minus: complex = 0.0 + 0.0j

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.alpha_plus, self.alpha_minus, self.beta_plus, self.beta_minus],
            dtype=complex,
        )

    @classmethod
    def from_array(cls, a: np.ndarray) -> "FieldState":
        return cls(complex(a[0]), complex(a[1]), complex(a[2]), complex(a[3]))

    def intensities(self) -> np.ndarray:
        return np.abs(self.as_array()) ** 2

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


@dataclass
class ParticleEnsemble:
    """N scaled positions (mod 2 pi) and velocities."""

    chi: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=float) % TWO_PI
        self.u = np.asarray(self.u, dtype=float)
        if self.chi.shape != self.u.shape or self.chi.ndim != 1:
            raise DomainError("chi and u must be 1-d arrays of equal length")
        if self.chi.size == 0:
            raise DomainError("ensemble must contain at least one particle")

    @property
    def n(self) -> int:
        return self.chi.size


def compute_order_parameter(ensemble: ParticleEnsemble) -> complex:
    """Bunching order parameter theta = (1/N) sum_j exp(-i chi_j)."""
    return complex(np.mean(np.exp(-1j * ensemble.chi)))


def potential_coefficient(fields: FieldState) -> complex:
    """Interference coefficient C = alpha+ alpha-^* + beta+ beta-^*.

    The dimensionless optical potential is phi(chi) = 2 u0 Re[C e^{i chi}];
    C = 0 means a flat potential (no backscattered light).
    """
    return fields.alpha_plus * np.conj(fields.alpha_minus) + fields.beta_plus * np.conj(
        fields.beta_minus
    )


def dimensionless_potential(chi, fields: FieldState, params: SystemParams):
    """phi(chi) = 2 u0 Re[C e^{i chi}]; accepts scalar or array chi."""
    c = potential_coefficient(fields)
    return 2.0 * params.u0 * np.real(c * np.exp(1j * np.asarray(chi)))


def force(chi, fields: FieldState, params: SystemParams):
    """Scaled acceleration du/dtau = 2 rho_r u0 Im[C e^{i chi}].

    This is exactly -rho_r * d(phi)/d(chi) with phi = 2 u0 Re[C e^{i chi}],
    i.e. particles are pushed towards the minima of the optical potential.
    """
    c = potential_coefficient(fields)
    return 2.0 * params.rho_r * params.u0 * np.imag(c * np.exp(1j * np.asarray(chi)))


def sample_maxwellian(
    params: SystemParams,
    n: int,
    mean_u: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Draw n velocities from the thermal distribution.

    The scaled Maxwell-Boltzmann distribution is a Gaussian with standard
    deviation u_t / sqrt(2) around ``mean_u``.  Without an explicit ``rng``
    a fresh generator seeded from ``params.seed`` is used, so repeated calls
    with the same params are bit-identical.
    """
    if n <= 0:
        raise DomainError(f"sample size must be positive, got {n}")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    if params.u_t == 0.0:
        return np.full(n, float(mean_u))
    return rng.normal(loc=mean_u, scale=params.u_t / np.sqrt(2.0), size=n)


def steady_state_fields(params: SystemParams) -> FieldState:
    """Homogeneous stationary fields: only the pumped modes are populated.

    alpha+ = eta+ / (1 - i delta), beta- = eta- / (1 - i delta); with theta = 0
    all four mode equations then have vanishing right-hand sides.
    """
    d = 1.0 - 1j * params.delta
    return FieldState(
        alpha_plus=params.eta_plus / d,
        alpha_minus=0.0 + 0.0j,
        beta_plus=0.0 + 0.0j,
        beta_minus=params.eta_minus / d,
    )

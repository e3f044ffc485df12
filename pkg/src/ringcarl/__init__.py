"""Collective recoil and self-ordering dynamics in a two-side pumped ring cavity.

Subpackages by concern:

* :mod:`ringcarl.core`      -- shared types, unit system, optical-potential kernel
* :mod:`ringcarl.nbody`     -- coupled mode-particle ODE integration and diagnostics
* :mod:`ringcarl.vlasov`    -- semi-Lagrangian kinetic solver on a phase-space grid
* :mod:`ringcarl.stability` -- dispersion relation, growth rates, stability boundary
* :mod:`ringcarl.bgk`       -- travelling-wave relations and run validation
* :mod:`ringcarl.cli`       -- configuration, presets, sweeps, persistence
"""

from .core import (
    FieldState,
    ParticleEnsemble,
    SystemParams,
    compute_order_parameter,
    force,
    potential_coefficient,
    sample_maxwellian,
    steady_state_fields,
)

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "FieldState",
    "ParticleEnsemble",
    "compute_order_parameter",
    "potential_coefficient",
    "force",
    "sample_maxwellian",
    "steady_state_fields",
    "__version__",
]

"""Revised rigid body with three linear controls."""

from .dynamics import FieldKind, VectorField, integral_rates, jacobian, rhs_hp, rhs_revised
from .equilibria import (
    Equilibrium,
    Family,
    distance_to_equilibria,
    e2_point,
    equilibria_on_level,
    is_equilibrium,
    level_polynomial,
    line_family_point,
    scalar_g,
    scalar_h,
)
from .integrate import Direction, IntegratorSettings, Trajectory, integrate, rk_step
from .model import (
    SystemConfig,
    build_metric_generic,
    casimir,
    drift_v,
    hamiltonian,
    m_vector,
    metric_matrix,
    poisson_matrix,
)
from .stability import (
    Kind,
    LimitReport,
    ProbeOutcome,
    Provenance,
    StabilityVerdict,
    classify,
    instability_certificate,
    limit_report,
    lyapunov_K,
    probe_stability,
)

__version__ = "0.1.0"

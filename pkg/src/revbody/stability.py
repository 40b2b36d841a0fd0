"""Stability of equilibria of the revised field for ``eps > 0``.

Theorem-backed verdicts are issued only after their hypotheses are checked
on the concrete equilibrium; everything else is ``UNDETERMINED``.  The
empirical probe and the limit report integrate trajectories and are
independent of the theorem table.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import VectorField
from .equilibria import (
    Equilibrium,
    Family,
    distance_to_equilibria,
    e2_coords,
    equilibria_on_level,
)
from .integrate import Direction, IntegratorSettings, integrate
from .model import SystemConfig, as_state, cross, hamiltonian, m_vector

NORM_GAP = 1e-9
STAY_FACTOR = 50.0
ESCAPE_FACTOR = 0.05
ORDERING_SLACK = 1e-6

PROBE_SETTINGS = IntegratorSettings(rtol=1e-10, atol=1e-12, t_end=200.0)
LIMIT_SETTINGS = IntegratorSettings(rtol=1e-10, atol=1e-12, t_end=500.0)


class EpsilonNotPositive(ValueError):
    pass


class LambdaNotNegative(ValueError):
    pass


class Inconclusive(RuntimeError):
    def __init__(self, message, max_excursion=None):
        super().__init__(message)
        self.max_excursion = max_excursion


class Kind(enum.Enum):
    LYAPUNOV_STABLE = "LyapunovStable"
    UNSTABLE = "Unstable"
    UNDETERMINED = "Undetermined"


class Provenance(enum.Enum):
    THEOREM_61 = "Theorem61"
    THEOREM_62 = "Theorem62"
    THEOREM_63_CERTIFICATE = "Theorem63Certificate"
    THEOREM_64 = "Theorem64"
    THEOREM_65 = "Theorem65"
    EMPIRICAL_ONLY = "EmpiricalOnly"
    NOT_COVERED = "NotCovered"


class ProbeOutcome(enum.Enum):
    STAYS_NEAR = "StaysNear"
    ESCAPES = "Escapes"


@dataclass(frozen=True)
class StabilityVerdict:
    kind: Kind
    provenance: Provenance
    notes: str = ""

    @property
    def stable(self):
        return self.kind is Kind.LYAPUNOV_STABLE

    @property
    def unstable(self):
        return self.kind is Kind.UNSTABLE


@dataclass(frozen=True)
class LimitReport:
    """Forward (``x_m``) and backward (``x_M``) limit estimates of one orbit."""

    x_m: np.ndarray
    x_M: np.ndarray
    d_forward: float
    d_backward: float
    norms_monotone: bool
    flagged: bool = False


def _same_point(p, q):
    return float(np.linalg.norm(np.asarray(p) - np.asarray(q))) <= 1e-12 * (1.0 + float(np.linalg.norm(q)))


def instability_certificate(cfg: SystemConfig, eq: Equilibrium):
    """Equilibrium on the same energy level with strictly smaller norm, or ``None``.

    Returns the smallest-norm witness.
    """
    k = hamiltonian(cfg, eq.point)
    bound = eq.norm - NORM_GAP
    if bound <= 0.0:
        return None
    witnesses = [y for y in equilibria_on_level(cfg, k) if y.norm < bound]
    if not witnesses:
        return None
    return min(witnesses, key=lambda y: y.norm)


def classify(cfg: SystemConfig, eq: Equilibrium) -> StabilityVerdict:
    """Stability verdict for an equilibrium of the revised field, ``eps > 0``."""
    if not cfg.epsilon > 0.0:
        raise EpsilonNotPositive(
            f"classification requires epsilon > 0, got {cfg.epsilon!r}; use probe_stability"
        )
    point = eq.point
    if eq.family is Family.E1 or not np.any(point):
        return StabilityVerdict(Kind.LYAPUNOV_STABLE, Provenance.THEOREM_61, "origin; |x| nonincreasing")

    if eq.family is Family.E2 and eq.param is not None and not cfg.free:
        lam = eq.param
        on_curve = _same_point(point, e2_coords(cfg, lam))
        if on_curve and lam == 0.0 and _same_point(point, cfg.energy_minimizer):
            return StabilityVerdict(
                Kind.LYAPUNOV_STABLE, Provenance.THEOREM_62, "global minimum of H"
            )
        if on_curve and lam < 0.0:
            return StabilityVerdict(
                Kind.LYAPUNOV_STABLE,
                Provenance.THEOREM_65,
                f"lambda={lam:.17g} < 0; K = H - lambda C decreasing",
            )
        if on_curve and 0.0 < lam < cfg.a1:
            return StabilityVerdict(
                Kind.UNSTABLE, Provenance.THEOREM_64, f"lambda={lam:.17g} in (0, a1)"
            )

    witness = instability_certificate(cfg, eq)
    if witness is not None:
        return StabilityVerdict(
            Kind.UNSTABLE,
            Provenance.THEOREM_63_CERTIFICATE,
            f"witness {witness.label()} with |y|={witness.norm:.17g} < |x0|={eq.norm:.17g}",
        )
    return StabilityVerdict(Kind.UNDETERMINED, Provenance.NOT_COVERED, f"{eq.label()} not covered")


def lyapunov_K(cfg: SystemConfig, lam, z):
    """Quadratic Lyapunov function about the E2 point at ``lam < 0``.

    Returns ``(K(z), eps lam |x cross m(x)|^2)`` with ``x = z + e2(lam)``;
    the second value is dK/dt along the revised field.
    """
    if not lam < 0.0:
        raise LambdaNotNegative(f"lambda must be negative, got {lam!r}")
    z = np.asarray(z, dtype=float)
    value = 0.5 * float(z @ (cfg.inverse_inertia * z)) - 0.5 * lam * float(z @ z)
    x = z + e2_coords(cfg, lam)
    v = cross(x, m_vector(cfg, x))
    return value, cfg.epsilon * lam * float(v @ v)


def _rng(seed, index):
    # counter-based stream keyed by (seed, sample index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def random_direction(seed, index):
    rng = _rng(seed, index)
    while True:
        d = rng.standard_normal(3)
        n = float(np.linalg.norm(d))
        if n > 1e-12:
            return d / n


def probe_stability(
    cfg: SystemConfig,
    eq: Equilibrium,
    delta=1e-3,
    horizon=200.0,
    n_samples=20,
    seed=0,
    settings: IntegratorSettings = PROBE_SETTINGS,
    stay_factor=STAY_FACTOR,
    escape_factor=ESCAPE_FACTOR,
) -> ProbeOutcome:
    """Integrate random perturbations of size ``delta`` and watch them.

    ``STAYS_NEAR`` when every orbit keeps within ``stay_factor * delta`` of
    the equilibrium, ``ESCAPES`` as soon as one leaves the ball of radius
    ``escape_factor * (1 + |eq|)``.  Anything else raises :class:`Inconclusive`.
    """
    if delta == 0.0:
        return ProbeOutcome.STAYS_NEAR
    if not 1e-6 <= delta <= 1e-2:
        raise ValueError(f"delta must lie in [1e-6, 1e-2], got {delta}")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    center = eq.point
    stay = stay_factor * delta
    escape = escape_factor * (1.0 + eq.norm)
    field = VectorField.revised(cfg)
    run = settings.replace(t_end=horizon, direction=Direction.FORWARD)
    c1, c2, c3 = (float(v) for v in center)

    def escaped(t, x):
        return math.sqrt((x[0] - c1) ** 2 + (x[1] - c2) ** 2 + (x[2] - c3) ** 2) > escape

    worst = 0.0
    for i in range(n_samples):
        x0 = center + delta * random_direction(seed, i)
        traj = integrate(field, x0, run, stop=escaped)
        excursion = float(np.max(np.linalg.norm(traj.states - center, axis=1)))
        worst = max(worst, excursion)
        if excursion > escape:
            return ProbeOutcome.ESCAPES
    if worst <= stay:
        return ProbeOutcome.STAYS_NEAR
    raise Inconclusive(
        f"max excursion {worst:.3e} between stay bound {stay:.3e} and escape radius {escape:.3e}",
        worst,
    )


def _monotone(values, increasing, jitter):
    diffs = np.diff(values)
    if increasing:
        return bool(np.all(diffs >= -jitter))
    return bool(np.all(diffs <= jitter))


def limit_report(cfg: SystemConfig, x0, horizon=500.0, settings: IntegratorSettings = LIMIT_SETTINGS):
    """Estimate the forward and backward limits of the orbit through ``x0``."""
    if cfg.epsilon == 0.0:
        raise ValueError("limit_report requires epsilon != 0")
    x0 = as_state(x0)
    field = VectorField.revised(cfg)
    fwd = integrate(field, x0, settings.replace(t_end=horizon, direction=Direction.FORWARD))
    bwd = integrate(field, x0, settings.replace(t_end=horizon, direction=Direction.BACKWARD))
    x_m, x_M = fwd.final_state, bwd.final_state

    jitter = 10.0 * settings.rtol
    # along increasing time |x|^2 decreases for eps > 0; backward samples run in reverse time
    shrinking = cfg.epsilon > 0.0
    sq_f = 2.0 * fwd.C_series
    sq_b = 2.0 * bwd.C_series
    tol_f = jitter * (1.0 + float(np.max(sq_f)))
    tol_b = jitter * (1.0 + float(np.max(sq_b)))
    monotone = _monotone(sq_f, not shrinking, tol_f) and _monotone(sq_b, shrinking, tol_b)

    nm, nM = float(x_m @ x_m), float(x_M @ x_M)
    if cfg.epsilon > 0.0:
        flagged = nM < nm - ORDERING_SLACK
    else:
        flagged = nM > nm + ORDERING_SLACK
    return LimitReport(
        x_m,
        x_M,
        distance_to_equilibria(cfg, x_m),
        distance_to_equilibria(cfg, x_M),
        monotone,
        flagged,
    )


def empirical_verdict(cfg: SystemConfig, eq: Equilibrium, **probe_kwargs) -> StabilityVerdict:
    """Probe-only verdict, used where no theorem applies (e.g. ``eps <= 0``)."""
    try:
        outcome = probe_stability(cfg, eq, **probe_kwargs)
    except Inconclusive as exc:
        return StabilityVerdict(Kind.UNDETERMINED, Provenance.EMPIRICAL_ONLY, str(exc))
    if outcome is ProbeOutcome.STAYS_NEAR:
        return StabilityVerdict(Kind.LYAPUNOV_STABLE, Provenance.EMPIRICAL_ONLY, "probe: stays near")
    return StabilityVerdict(Kind.UNSTABLE, Provenance.EMPIRICAL_ONLY, "probe: escapes")

"""Adaptive Dormand-Prince 5(4) integration with invariant monitoring."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .dynamics import VectorField
from .model import as_state

# Dormand-Prince tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth- minus fourth-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class IntegrationError(RuntimeError):
    """Base class; ``trajectory`` holds the samples gathered before failure."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepFailure(IntegrationError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float = 1e-3
    h_max: float = 1.0
    t_end: float = 100.0
    direction: Direction = Direction.FORWARD
    max_steps: int = 10_000_000

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        for name in ("rtol", "atol", "h_init", "h_max", "t_end"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 1e-13 <= self.rtol <= 1e-2:
            raise ValueError(f"rtol must lie in [1e-13, 1e-2], got {self.rtol}")
        if not self.atol > 0:
            raise ValueError(f"atol must be positive, got {self.atol}")
        if not 0 < self.h_init <= self.h_max:
            raise ValueError(f"requires 0 < h_init <= h_max, got {self.h_init}, {self.h_max}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps}")

    def replace(self, **changes):
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return IntegratorSettings(**values)


@dataclass(frozen=True)
class Trajectory:
    """Accepted-step samples of one run.

    ``times`` run from 0 towards ``+t_end`` (forward) or ``-t_end``
    (backward).  ``H_series``, ``C_series`` and ``diss_residual`` are
    evaluated at every sample; the residual is
    ``|x . x' + eps |x cross m|^2|`` with ``x'`` the physical time derivative.
    """

    times: np.ndarray
    states: np.ndarray
    H_series: np.ndarray
    C_series: np.ndarray
    diss_residual: np.ndarray
    accepted: int
    rejected: int
    direction: Direction = Direction.FORWARD
    stopped_early: bool = False
    extra: dict = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self):
        return self.states[-1].copy()

    @property
    def final_time(self):
        return float(self.times[-1])


def _stages(f, x1, x2, x3, k1, h):
    """The six stage evaluations after ``k1`` plus the 5th-order solution."""
    p1, p2, p3 = k1
    k2 = f(x1 + h * _A21 * p1, x2 + h * _A21 * p2, x3 + h * _A21 * p3)
    q1, q2, q3 = k2
    k3 = f(
        x1 + h * (_A31 * p1 + _A32 * q1),
        x2 + h * (_A31 * p2 + _A32 * q2),
        x3 + h * (_A31 * p3 + _A32 * q3),
    )
    r1, r2, r3 = k3
    k4 = f(
        x1 + h * (_A41 * p1 + _A42 * q1 + _A43 * r1),
        x2 + h * (_A41 * p2 + _A42 * q2 + _A43 * r2),
        x3 + h * (_A41 * p3 + _A42 * q3 + _A43 * r3),
    )
    s1, s2, s3 = k4
    k5 = f(
        x1 + h * (_A51 * p1 + _A52 * q1 + _A53 * r1 + _A54 * s1),
        x2 + h * (_A51 * p2 + _A52 * q2 + _A53 * r2 + _A54 * s2),
        x3 + h * (_A51 * p3 + _A52 * q3 + _A53 * r3 + _A54 * s3),
    )
    u1, u2, u3 = k5
    k6 = f(
        x1 + h * (_A61 * p1 + _A62 * q1 + _A63 * r1 + _A64 * s1 + _A65 * u1),
        x2 + h * (_A61 * p2 + _A62 * q2 + _A63 * r2 + _A64 * s2 + _A65 * u2),
        x3 + h * (_A61 * p3 + _A62 * q3 + _A63 * r3 + _A64 * s3 + _A65 * u3),
    )
    w1, w2, w3 = k6
    y1 = x1 + h * (_B1 * p1 + _B3 * r1 + _B4 * s1 + _B5 * u1 + _B6 * w1)
    y2 = x2 + h * (_B1 * p2 + _B3 * r2 + _B4 * s2 + _B5 * u2 + _B6 * w2)
    y3 = x3 + h * (_B1 * p3 + _B3 * r3 + _B4 * s3 + _B5 * u3 + _B6 * w3)
    k7 = f(y1, y2, y3)
    z1, z2, z3 = k7
    e1 = h * (_E1 * p1 + _E3 * r1 + _E4 * s1 + _E5 * u1 + _E6 * w1 + _E7 * z1)
    e2 = h * (_E1 * p2 + _E3 * r2 + _E4 * s2 + _E5 * u2 + _E6 * w2 + _E7 * z2)
    e3 = h * (_E1 * p3 + _E3 * r3 + _E4 * s3 + _E5 * u3 + _E6 * w3 + _E7 * z3)
    return (y1, y2, y3), (e1, e2, e3), k7


def rk_step(field: VectorField, x, t, h):
    """One Dormand-Prince step of size ``h`` from ``x``.

    Returns ``(x_new, error_estimate)`` where the estimate is the difference
    between the fifth- and fourth-order solutions.  The fields are
    autonomous, so ``t`` only documents where the step starts.
    """
    if not (math.isfinite(h) and h > 0):
        raise ValueError(f"step size must be positive and finite, got {h}")
    x1, x2, x3 = (float(v) for v in as_state(x))
    f = field.tuple_rhs()
    y, err, _ = _stages(f, x1, x2, x3, f(x1, x2, x3), h)
    if not all(math.isfinite(v) for v in y + err):
        raise StepFailure(f"non-finite stage value at t={t}, h={h}")
    return np.array(y), np.array(err)


def _build_trajectory(field, times, states, accepted, rejected, direction, stopped):
    cfg = field.cfg
    eps = field.epsilon
    X = np.array(states, dtype=float).reshape(-1, 3)
    a = cfg.inverse_inertia
    ctrl = cfg.controls
    M = X * a + ctrl
    H = 0.5 * np.einsum("ij,ij->i", X * a, X) + X @ ctrl
    C = 0.5 * np.einsum("ij,ij->i", X, X)
    V = np.cross(X, M)
    xdot = V + eps * np.cross(V, M)
    resid = np.abs(np.einsum("ij,ij->i", X, xdot) + eps * np.einsum("ij,ij->i", V, V))
    arrays = [np.array(times, dtype=float), X, H, C, resid]
    for arr in arrays:
        arr.setflags(write=False)
    return Trajectory(*arrays, accepted, rejected, direction, stopped)


def integrate(field: VectorField, x0, settings: IntegratorSettings = IntegratorSettings(), stop=None):
    """Integrate ``field`` from ``x0`` over ``settings.t_end``.

    Backward runs integrate the negated field and report negative times.
    ``stop(t, x)`` may be given; when it returns true the run ends early at
    that accepted step and the trajectory is flagged ``stopped_early``.

    Raises :class:`StepSizeUnderflow` or :class:`MaxStepsExceeded` with the
    partial trajectory attached.
    """
    x0 = as_state(x0)
    backward = settings.direction is Direction.BACKWARD
    sgn = -1.0 if backward else 1.0
    f = field.tuple_rhs(sign=sgn)
    rtol, atol = settings.rtol, settings.atol
    t_end = settings.t_end
    h_min = 1e-14 * t_end
    h = min(settings.h_init, settings.h_max)

    x1, x2, x3 = (float(v) for v in x0)
    tau = 0.0
    times = [0.0]
    states = [(x1, x2, x3)]
    accepted = rejected = 0
    k1 = f(x1, x2, x3)
    stopped = False

    def partial():
        return _build_trajectory(field, times, states, accepted, rejected, settings.direction, False)

    while tau < t_end:
        if accepted >= settings.max_steps:
            raise MaxStepsExceeded(f"exceeded {settings.max_steps} steps at |t|={tau}", partial())
        remaining = t_end - tau
        last = h >= remaining
        if last:
            h = remaining
        y, e, k7 = _stages(f, x1, x2, x3, k1, h)
        y1, y2, y3 = y
        s1 = max(atol, rtol * max(abs(x1), abs(y1)))
        s2 = max(atol, rtol * max(abs(x2), abs(y2)))
        s3 = max(atol, rtol * max(abs(x3), abs(y3)))
        err = math.sqrt(((e[0] / s1) ** 2 + (e[1] / s2) ** 2 + (e[2] / s3) ** 2) / 3.0)
        if not math.isfinite(err):
            rejected += 1
            h *= _MIN_FACTOR
        elif err <= 1.0:
            tau = t_end if last else tau + h
            x1, x2, x3 = y1, y2, y3
            k1 = k7
            accepted += 1
            times.append(sgn * tau)
            states.append((x1, x2, x3))
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err**-0.2))
            h = min(h * factor, settings.h_max)
            if stop is not None and stop(sgn * tau, (x1, x2, x3)):
                stopped = True
                break
        else:
            rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err**-0.2)
        if h < h_min and tau < t_end:
            raise StepSizeUnderflow(f"step size {h:.3e} below {h_min:.3e} at |t|={tau}", partial())

    return _build_trajectory(field, times, states, accepted, rejected, settings.direction, stopped)

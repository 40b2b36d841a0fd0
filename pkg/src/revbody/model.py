"""Algebraic objects of the controlled rigid body.

The state ``x`` is the body angular momentum.  Everything here is a pure
function of a :class:`SystemConfig` and a state:

    H(x) = 1/2 (a1 x1^2 + a2 x2^2 + a3 x3^2) + a x1 + b x2 + c x3
    C(x) = 1/2 |x|^2
    m(x) = grad H = (a1 x1 + a, a2 x2 + b, a3 x3 + c)

together with the Poisson matrix, the symmetric metric built from ``grad H``
and the metric drift ``v = g(x) grad C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SKEW = "skew"
SYM = "sym"

MAX_GENERIC_DIM = 16


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    """Inverse principal moments, feedback controls and revision parameter.

    ``a1 < a2 < a3`` are the inverse principal moments of inertia, ``ctrl_a``,
    ``ctrl_b``, ``ctrl_c`` the linear feedback gains and ``epsilon`` the
    weight of the metric (dissipative) term.
    """

    a1: float
    a2: float
    a3: float
    ctrl_a: float = 0.0
    ctrl_b: float = 0.0
    ctrl_c: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "ctrl_a", "ctrl_b", "ctrl_c", "epsilon"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise InvalidConfig(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not 0.0 < self.a1 < self.a2 < self.a3:
            raise InvalidConfig(
                f"requires 0 < a1 < a2 < a3, got ({self.a1!r}, {self.a2!r}, {self.a3!r})"
            )

    @classmethod
    def from_moments(cls, I1, I2, I3, ctrl_a=0.0, ctrl_b=0.0, ctrl_c=0.0, epsilon=0.0):
        """Build from principal moments of inertia ``I1 > I2 > I3 > 0``."""
        for name, value in (("I1", I1), ("I2", I2), ("I3", I3)):
            if not math.isfinite(value):
                raise InvalidConfig(f"{name} must be finite, got {value!r}")
        if not I1 > I2 > I3 > 0.0:
            raise InvalidConfig(f"requires I1 > I2 > I3 > 0, got ({I1!r}, {I2!r}, {I3!r})")
        return cls(1.0 / I1, 1.0 / I2, 1.0 / I3, ctrl_a, ctrl_b, ctrl_c, epsilon)

    @property
    def moments(self):
        return (1.0 / self.a1, 1.0 / self.a2, 1.0 / self.a3)

    @property
    def inverse_inertia(self):
        return np.array([self.a1, self.a2, self.a3])

    @property
    def controls(self):
        return np.array([self.ctrl_a, self.ctrl_b, self.ctrl_c])

    @property
    def free(self):
        """True when all three controls vanish (free rigid body)."""
        return self.ctrl_a == 0.0 and self.ctrl_b == 0.0 and self.ctrl_c == 0.0

    @property
    def min_energy(self):
        """Global minimum of H, attained at ``-(a/a1, b/a2, c/a3)``."""
        return -0.5 * (self.ctrl_a**2 / self.a1 + self.ctrl_b**2 / self.a2 + self.ctrl_c**2 / self.a3)

    @property
    def energy_minimizer(self):
        return np.array([-self.ctrl_a / self.a1, -self.ctrl_b / self.a2, -self.ctrl_c / self.a3])

    def with_epsilon(self, epsilon):
        return SystemConfig(self.a1, self.a2, self.a3, self.ctrl_a, self.ctrl_b, self.ctrl_c, epsilon)

    def with_controls(self, ctrl_a, ctrl_b, ctrl_c):
        return SystemConfig(self.a1, self.a2, self.a3, ctrl_a, ctrl_b, ctrl_c, self.epsilon)


def as_state(x) -> np.ndarray:
    """Validate and copy a 3-vector of momentum coordinates."""
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"state must have 3 components, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"state must be finite, got {arr}")
    return arr


def cross(u, w) -> np.ndarray:
    u1, u2, u3 = u
    w1, w2, w3 = w
    return np.array([u2 * w3 - u3 * w2, u3 * w1 - u1 * w3, u1 * w2 - u2 * w1])


class Matrix3:
    """A 3x3 float matrix tagged as skew-symmetric or symmetric.

    The tag is checked exactly on construction.
    """

    __slots__ = ("values", "role")

    def __init__(self, values, role):
        values = np.array(values, dtype=float)
        if values.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {values.shape}")
        if role == SKEW:
            ok = np.array_equal(values.T, -values)
        elif role == SYM:
            ok = np.array_equal(values.T, values)
        else:
            raise ValueError(f"unknown role {role!r}")
        if not ok:
            raise ValueError(f"matrix is not {role}")
        values.setflags(write=False)
        self.values = values
        self.role = role

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __matmul__(self, other):
        return self.values @ np.asarray(other, dtype=float)

    def __repr__(self):
        return f"Matrix3({self.values.tolist()!r}, role={self.role!r})"


@dataclass(frozen=True)
class GenericMetric:
    n: int
    values: np.ndarray


def hamiltonian(cfg: SystemConfig, x) -> float:
    x1, x2, x3 = x
    return (
        0.5 * (cfg.a1 * x1 * x1 + cfg.a2 * x2 * x2 + cfg.a3 * x3 * x3)
        + cfg.ctrl_a * x1
        + cfg.ctrl_b * x2
        + cfg.ctrl_c * x3
    )


def hamiltonian_centered(cfg: SystemConfig, x) -> float:
    """H in completed-square form around its minimizer."""
    x1, x2, x3 = x
    return (
        0.5
        * (
            cfg.a1 * (x1 + cfg.ctrl_a / cfg.a1) ** 2
            + cfg.a2 * (x2 + cfg.ctrl_b / cfg.a2) ** 2
            + cfg.a3 * (x3 + cfg.ctrl_c / cfg.a3) ** 2
        )
        + cfg.min_energy
    )


def casimir(x) -> float:
    x1, x2, x3 = x
    return 0.5 * (x1 * x1 + x2 * x2 + x3 * x3)


def m_vector(cfg: SystemConfig, x) -> np.ndarray:
    x1, x2, x3 = x
    return np.array([cfg.a1 * x1 + cfg.ctrl_a, cfg.a2 * x2 + cfg.ctrl_b, cfg.a3 * x3 + cfg.ctrl_c])


def poisson_matrix(x) -> Matrix3:
    x1, x2, x3 = (float(v) for v in x)
    return Matrix3(
        [[0.0, -x3, x2], [x3, 0.0, -x1], [-x2, x1, 0.0]],
        SKEW,
    )


def metric_matrix(cfg: SystemConfig, x) -> Matrix3:
    """Symmetric tensor ``g`` annihilating ``grad H``."""
    m1, m2, m3 = m_vector(cfg, x)
    g = [
        [-(m2 * m2) - m3 * m3, m1 * m2, m1 * m3],
        [m1 * m2, -(m1 * m1) - m3 * m3, m2 * m3],
        [m1 * m3, m2 * m3, -(m1 * m1) - m2 * m2],
    ]
    return Matrix3(g, SYM)


def drift_v(cfg: SystemConfig, x) -> np.ndarray:
    """Metric drift ``g(x) grad C(x)``; equals ``(x cross m) cross m``."""
    return metric_matrix(cfg, x) @ np.asarray(x, dtype=float)


def build_metric_generic(grad_h1, n=None) -> GenericMetric:
    """Symmetric matrix ``g`` with ``g @ grad_h1 == 0`` in dimension ``n``.

    Diagonal entries are minus the sum of squares of the other gradient
    components, off-diagonal entries are products of gradient components.
    """
    grad = np.asarray(grad_h1, dtype=float).reshape(-1)
    if n is None:
        n = grad.size
    if not 2 <= n <= MAX_GENERIC_DIM:
        raise ValueError(f"dimension must be in [2, {MAX_GENERIC_DIM}], got {n}")
    if grad.size != n:
        raise ValueError(f"gradient has {grad.size} components, expected {n}")
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient must be finite")
    g = np.empty((n, n))
    for i in range(n):
        acc = None
        for k in range(n):
            if k == i:
                continue
            sq = grad[k] * grad[k]
            acc = sq if acc is None else acc + sq
        g[i, i] = -acc
        for j in range(i + 1, n):
            g[i, j] = g[j, i] = grad[i] * grad[j]
    return GenericMetric(n, g)

"""Vector fields of the controlled rigid body.

Two fields share one configuration:

* the Hamilton-Poisson field ``x' = x cross m(x)``
* the revised field ``x' = x cross m + eps (x cross m) cross m``

Along the revised field H is conserved and ``d/dt C = -eps |x cross m|^2``.
"""

from __future__ import annotations

import enum

import numpy as np

from .model import SystemConfig, as_state, cross, m_vector


class FieldKind(enum.Enum):
    HAMILTON_POISSON = "hamilton_poisson"
    EPSILON_REVISED = "epsilon_revised"


def rhs_hp(cfg: SystemConfig, x) -> np.ndarray:
    return cross(x, m_vector(cfg, x))


def rhs_revised(cfg: SystemConfig, x) -> np.ndarray:
    if cfg.epsilon == 0.0:
        return rhs_hp(cfg, x)
    m = m_vector(cfg, x)
    v = cross(x, m)
    return v + cfg.epsilon * cross(v, m)


def integral_rates(cfg: SystemConfig, x):
    """Time derivatives ``(dH/dt, dC/dt)`` along the revised field at ``x``."""
    xdot = rhs_revised(cfg, x)
    dH = float(np.dot(m_vector(cfg, x), xdot))
    dC = float(np.dot(np.asarray(x, dtype=float), xdot))
    return dH, dC


def dissipation_rate(cfg: SystemConfig, x) -> float:
    """Closed-form ``dC/dt = -eps |x cross m|^2``."""
    v = rhs_hp(cfg, x)
    return -cfg.epsilon * float(np.dot(v, v))


class VectorField:
    """One of the two vector fields bound to a configuration.

    Calling the field returns ``x'`` as a numpy array; :meth:`tuple_rhs`
    is a scalar kernel for the integrator's inner loop.
    """

    __slots__ = ("_kind", "_cfg")

    def __init__(self, kind, cfg: SystemConfig):
        self._kind = FieldKind(kind)
        self._cfg = cfg

    @classmethod
    def hamilton_poisson(cls, cfg):
        return cls(FieldKind.HAMILTON_POISSON, cfg)

    @classmethod
    def revised(cls, cfg):
        return cls(FieldKind.EPSILON_REVISED, cfg)

    @property
    def kind(self):
        return self._kind

    @property
    def cfg(self):
        return self._cfg

    @property
    def epsilon(self):
        """Effective weight of the metric term (zero for the Hamilton-Poisson field)."""
        return self._cfg.epsilon if self._kind is FieldKind.EPSILON_REVISED else 0.0

    def __call__(self, x):
        if self._kind is FieldKind.HAMILTON_POISSON:
            return rhs_hp(self._cfg, x)
        return rhs_revised(self._cfg, x)

    def tuple_rhs(self, sign=1.0):
        """Return ``f(x1, x2, x3) -> (dx1, dx2, dx3)`` working on python floats."""
        c = self._cfg
        a1, a2, a3 = c.a1, c.a2, c.a3
        ca, cb, cc = c.ctrl_a, c.ctrl_b, c.ctrl_c
        eps = self.epsilon

        if eps == 0.0:

            def f(x1, x2, x3):
                m1 = a1 * x1 + ca
                m2 = a2 * x2 + cb
                m3 = a3 * x3 + cc
                return (
                    sign * (x2 * m3 - x3 * m2),
                    sign * (x3 * m1 - x1 * m3),
                    sign * (x1 * m2 - x2 * m1),
                )

        else:

            def f(x1, x2, x3):
                m1 = a1 * x1 + ca
                m2 = a2 * x2 + cb
                m3 = a3 * x3 + cc
                v1 = x2 * m3 - x3 * m2
                v2 = x3 * m1 - x1 * m3
                v3 = x1 * m2 - x2 * m1
                return (
                    sign * (v1 + eps * (v2 * m3 - v3 * m2)),
                    sign * (v2 + eps * (v3 * m1 - v1 * m3)),
                    sign * (v3 + eps * (v1 * m2 - v2 * m1)),
                )

        return f

    def __repr__(self):
        return f"VectorField({self._kind.value}, {self._cfg!r})"


def jacobian(cfg: SystemConfig, x, field=FieldKind.EPSILON_REVISED) -> np.ndarray:
    """Central finite-difference Jacobian of the selected field at ``x``.

    The step is ``1e-6 (1 + |x|)``.  ``field`` is a :class:`VectorField`
    (whose own configuration is then ignored in favour of ``cfg``) or a
    :class:`FieldKind`.
    """
    kind = field.kind if isinstance(field, VectorField) else FieldKind(field)
    f = VectorField(kind, cfg)
    x = as_state(x)
    h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    J = np.empty((3, 3))
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = h
        J[:, j] = (f(x + dx) - f(x - dx)) / (2.0 * h)
    return J

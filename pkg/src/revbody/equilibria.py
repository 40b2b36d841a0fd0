"""Equilibrium families and their enumeration on energy levels.

Equilibria are the zeros of ``x cross m(x)``; both vector fields share them.
They come in five families:

* ``E1``: the origin;
* ``E2(lam)``: ``(a/(lam-a1), b/(lam-a2), c/(lam-a3))``, where ``m = lam x``;
* ``E3(alpha)``, ``E4(alpha)``, ``E5(alpha)``: lines parallel to the first,
  second and third axis, present only when the matching control vanishes.

On a level ``H = k`` the E2 parameters are the real roots of a polynomial of
degree at most six, and each line meets the ellipsoid at most twice.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import SystemConfig, as_state, cross, hamiltonian, m_vector

POLE_GAP = 1e-9
ROOT_POLE_GAP = 1e-7
IMAG_TOL = 1e-9
RESIDUAL_TOL = 1e-9
GRID_POINTS = 2001
GRID_POLE_GAP = 1e-6
# angle-variable bracket width; 1e-10 is too coarse in x close to a pole
GOLDEN_WIDTH = 1e-13


class PoleProximity(ValueError):
    pass


class FamilyNotApplicable(ValueError):
    pass


class DegenerateLevel(ValueError):
    """Every E2 parameter solves the level equation (free body at k = 0)."""


class EmptyLevel(ValueError):
    pass


class NotAnEquilibrium(ValueError):
    pass


class Family(enum.Enum):
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    E4 = "E4"
    E5 = "E5"


# line family -> index of the free coordinate
_LINE_AXIS = {Family.E3: 0, Family.E4: 1, Family.E5: 2}


def _residual(cfg, x):
    return float(np.linalg.norm(cross(x, m_vector(cfg, x))))


def _scale(cfg, x):
    return 1.0 + float(np.linalg.norm(x)) * float(np.linalg.norm(m_vector(cfg, x)))


@dataclass(frozen=True)
class Equilibrium:
    """An equilibrium point with its family tag.

    ``param`` is ``lam`` for E2, ``alpha`` for the line families and ``None``
    for E1.  Use :meth:`create` to build a checked instance.
    """

    point: np.ndarray
    family: Family
    param: float | None
    residual: float

    @classmethod
    def create(cls, cfg: SystemConfig, point, family, param=None):
        family = Family(family)
        point = as_state(point)
        if family in _LINE_AXIS and cfg.controls[_LINE_AXIS[family]] != 0.0:
            raise FamilyNotApplicable(
                f"{family.value} requires control {'abc'[_LINE_AXIS[family]]} = 0"
            )
        residual = _residual(cfg, point)
        if residual > RESIDUAL_TOL * _scale(cfg, point):
            raise NotAnEquilibrium(f"|x cross m| = {residual:.3e} at {point}")
        point.setflags(write=False)
        return cls(point, family, None if param is None else float(param), residual)

    @property
    def norm(self):
        return float(np.linalg.norm(self.point))

    def label(self):
        if self.param is None:
            return self.family.value
        return f"{self.family.value}({self.param:.17g})"


def _check_pole(cfg, lam):
    if not math.isfinite(lam):
        raise ValueError(f"parameter must be finite, got {lam}")
    gap = min(abs(lam - cfg.a1), abs(lam - cfg.a2), abs(lam - cfg.a3))
    if gap <= POLE_GAP:
        raise PoleProximity(f"lambda={lam!r} is within {POLE_GAP} of a pole")


def e2_coords(cfg: SystemConfig, lam) -> np.ndarray:
    _check_pole(cfg, lam)
    return np.array(
        [cfg.ctrl_a / (lam - cfg.a1), cfg.ctrl_b / (lam - cfg.a2), cfg.ctrl_c / (lam - cfg.a3)]
    )


def e2_point(cfg: SystemConfig, lam) -> Equilibrium:
    return Equilibrium.create(cfg, e2_coords(cfg, lam), Family.E2, lam)


def line_base(cfg: SystemConfig, family) -> np.ndarray:
    """The point of a line family with free coordinate set to zero."""
    family = Family(family)
    a1, a2, a3 = cfg.a1, cfg.a2, cfg.a3
    a, b, c = cfg.ctrl_a, cfg.ctrl_b, cfg.ctrl_c
    if family is Family.E3:
        return np.array([0.0, -b / (a2 - a1), c / (a1 - a3)]) + 0.0
    if family is Family.E4:
        return np.array([a / (a2 - a1), 0.0, -c / (a3 - a2)]) + 0.0
    if family is Family.E5:
        # limit lam -> a3 of the E2 curve
        return np.array([a / (a3 - a1), b / (a3 - a2), 0.0]) + 0.0
    raise FamilyNotApplicable(f"{family.value} is not a line family")


def line_families(cfg: SystemConfig):
    """Line families present for this configuration."""
    return [fam for fam, i in _LINE_AXIS.items() if cfg.controls[i] == 0.0]


def line_family_point(cfg: SystemConfig, family, alpha) -> Equilibrium:
    family = Family(family)
    if family not in _LINE_AXIS:
        raise FamilyNotApplicable(f"{family.value} is not a line family")
    axis = _LINE_AXIS[family]
    if cfg.controls[axis] != 0.0:
        raise FamilyNotApplicable(f"{family.value} requires control {'abc'[axis]} = 0")
    point = line_base(cfg, family)
    point[axis] = alpha
    return Equilibrium.create(cfg, point, family, alpha)


def is_equilibrium(cfg: SystemConfig, x, tol=1e-9) -> bool:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _residual(cfg, x) <= tol * _scale(cfg, x)


def scalar_g(cfg: SystemConfig, lam) -> float:
    """Squared norm of the E2 point at ``lam``."""
    _check_pole(cfg, lam)
    return (
        (cfg.ctrl_a / (lam - cfg.a1)) ** 2
        + (cfg.ctrl_b / (lam - cfg.a2)) ** 2
        + (cfg.ctrl_c / (lam - cfg.a3)) ** 2
    )


def scalar_h(cfg: SystemConfig, sigma) -> float:
    """Energy of the E2 point at ``sigma``, written around the energy minimum."""
    _check_pole(cfg, sigma)
    total = 0.0
    for ai, ci in zip(cfg.inverse_inertia, cfg.controls):
        # sigma^2 / (sigma - ai)^2 as a square of a ratio: no overflow for large sigma
        r = sigma / (sigma - ai)
        total += ci * ci / ai * r * r
    return 0.5 * total + cfg.min_energy


def scalar_h_prime(cfg: SystemConfig, sigma) -> float:
    _check_pole(cfg, sigma)
    total = 0.0
    for ai, ci in zip(cfg.inverse_inertia, cfg.controls):
        d = sigma - ai
        total += ci * ci * (sigma / d) / d / d
    return -total


@dataclass(frozen=True)
class LevelPolynomial:
    """``p(lam) = (h(lam) - k) prod_i (lam - a_i)^2``, coefficients ascending."""

    coeffs: np.ndarray
    level: float

    def __call__(self, lam):
        return np.polynomial.polynomial.polyval(lam, self.coeffs)

    @property
    def degenerate(self):
        return not np.any(self.coeffs)

    @property
    def degree(self):
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else -1


def level_polynomial(cfg: SystemConfig, k) -> LevelPolynomial:
    P = np.polynomial.polynomial
    poles = cfg.inverse_inertia
    sq = [P.polymul([-ai, 1.0], [-ai, 1.0]) for ai in poles]
    denom = P.polymul(P.polymul(sq[0], sq[1]), sq[2])
    coeffs = P.polymul(denom, [-(k - cfg.min_energy)])
    for i, (ai, ci) in enumerate(zip(poles, cfg.controls)):
        others = P.polymul(sq[(i + 1) % 3], sq[(i + 2) % 3])
        term = P.polymul(others, [0.0, 0.0, ci * ci / (2.0 * ai)])
        coeffs = P.polyadd(coeffs, term)
    out = np.zeros(7)
    out[: len(coeffs)] = coeffs
    # h(lam) - k -> -k at infinity, so the degree-6 coefficient is exactly -k
    out[6] = -float(k)
    return LevelPolynomial(out, float(k))


def _companion_roots(coeffs):
    c = np.asarray(coeffs, dtype=float)
    big = np.max(np.abs(c))
    nz = np.flatnonzero(np.abs(c) > 1e-14 * big)
    c = c[: nz[-1] + 1]
    n = len(c) - 1
    if n < 1:
        return np.array([], dtype=complex)
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(comp)


def _newton_polish(cfg, lam, k, iters=50):
    for _ in range(iters):
        try:
            f = scalar_h(cfg, lam) - k
            df = scalar_h_prime(cfg, lam)
        except PoleProximity:
            return lam
        if df == 0.0 or not math.isfinite(df) or not math.isfinite(f):
            return lam
        step = f / df
        lam_new = lam - step
        if not math.isfinite(lam_new):
            return lam
        lam = lam_new
        if abs(step) <= 1e-15 * (1.0 + abs(lam)):
            break
    return lam


def level_parameters(cfg: SystemConfig, k) -> list[float]:
    """Sorted E2 parameters ``lam`` with ``h(lam) = k``.

    Raises :class:`DegenerateLevel` when the level polynomial vanishes
    identically.
    """
    poly = level_polynomial(cfg, k)
    if poly.degenerate:
        raise DegenerateLevel(f"level polynomial vanishes identically at k={k!r}")
    tol = RESIDUAL_TOL * (1.0 + abs(k))
    found = []
    for r in _companion_roots(poly.coeffs):
        if abs(r.imag) > IMAG_TOL * (1.0 + abs(r.real)):
            continue
        lam = _newton_polish(cfg, float(r.real), k)
        if min(abs(lam - ai) for ai in cfg.inverse_inertia) <= ROOT_POLE_GAP:
            continue
        if abs(scalar_h(cfg, lam) - k) > tol:
            continue
        if any(abs(lam - q) <= 1e-9 * (1.0 + abs(q)) for q in found):
            continue
        found.append(lam)
    return sorted(found)


def _line_intersections(cfg, family, k):
    """Parameters ``alpha`` where a line family meets ``H = k`` (at most two)."""
    axis = _LINE_AXIS[family]
    ai = cfg.inverse_inertia[axis]
    base = line_base(cfg, family)
    # control on this axis is zero: H(base + alpha e) = H(base) + ai alpha^2 / 2
    rhs = 2.0 * (k - hamiltonian(cfg, base)) / ai
    if rhs < 0.0:
        return []
    if rhs == 0.0:
        return [0.0]
    r = math.sqrt(rhs)
    return [-r, r]


def equilibria_on_level(cfg: SystemConfig, k) -> list[Equilibrium]:
    """All equilibria on the ellipsoid ``H = k``.

    Includes up to six E2 points, up to two points per applicable line
    family and the origin when ``k == 0``.  For the free body (all controls
    zero) the E2 branch collapses onto the origin and only the axis
    intersections remain.
    """
    k = float(k)
    kmin = cfg.min_energy
    if k < kmin and not math.isclose(k, kmin, rel_tol=1e-12, abs_tol=1e-15):
        raise EmptyLevel(f"level {k!r} lies below the minimum energy {kmin!r}")
    if abs(k - kmin) <= 1e-12 * (1.0 + abs(kmin)):
        if cfg.free:
            return [Equilibrium.create(cfg, np.zeros(3), Family.E1)]
        return [e2_point(cfg, 0.0)]

    out = []
    if k == 0.0:
        out.append(Equilibrium.create(cfg, np.zeros(3), Family.E1))
    try:
        params = level_parameters(cfg, k)
    except DegenerateLevel:
        params = []
    if not cfg.free:
        out.extend(e2_point(cfg, lam) for lam in params)
    for fam in line_families(cfg):
        for alpha in _line_intersections(cfg, fam, k):
            out.append(line_family_point(cfg, fam, alpha))
    return out


def _golden_min(fun, lo, hi, width=GOLDEN_WIDTH):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = fun(c), fun(d)
    while hi - lo > width:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = fun(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = fun(d)
    t = 0.5 * (lo + hi)
    return min((fun(t), t), (fc, c), (fd, d))


def _distance_to_curve(cfg, x):
    poles = cfg.inverse_inertia
    ctrl = cfg.controls

    def dist_lam(lam):
        if min(abs(lam - p) for p in poles) <= GRID_POLE_GAP:
            return math.inf
        diff = ctrl / (lam - poles) - x
        return math.sqrt(float(diff @ diff))

    def dist(t):
        return dist_lam(math.tan(t))

    half = 0.5 * math.pi
    ts = np.linspace(-half, half, GRID_POINTS)[1:-1]
    lams = np.tan(ts)
    with np.errstate(divide="ignore", invalid="ignore"):
        pts = ctrl[None, :] / (lams[:, None] - poles[None, :])
        d = np.linalg.norm(pts - x[None, :], axis=1)
    near_pole = np.min(np.abs(lams[:, None] - poles[None, :]), axis=1) <= GRID_POLE_GAP
    d[near_pole | ~np.isfinite(d)] = math.inf
    best = math.inf
    # refine every local minimum of the grid
    for i in range(len(ts)):
        if not math.isfinite(d[i]):
            continue
        left = d[i - 1] if i > 0 else math.inf
        right = d[i + 1] if i + 1 < len(ts) else math.inf
        if d[i] <= left and d[i] <= right:
            lo = ts[i - 1] if i > 0 else -half + 1e-12
            hi = ts[i + 1] if i + 1 < len(ts) else half - 1e-12
            val, t = _golden_min(dist, lo, hi)
            # the angle variable loses resolution where the curve moves fast; finish in lam
            span = 1e3 * GOLDEN_WIDTH
            lam_lo = math.tan(max(t - span, lo))
            lam_hi = math.tan(min(t + span, hi))
            width = 4.0 * np.finfo(float).eps * (1.0 + abs(math.tan(t)))
            val2, _ = _golden_min(dist_lam, lam_lo, lam_hi, width)
            best = min(best, val, val2, d[i])
    return best


def _distance_to_line(x, base, axis):
    diff = x - base
    diff[axis] = 0.0
    return float(np.linalg.norm(diff))


def distance_to_equilibria(cfg: SystemConfig, x) -> float:
    """Euclidean distance from ``x`` to the equilibrium set."""
    x = as_state(x)
    best = float(np.linalg.norm(x))
    if not cfg.free:
        best = min(best, _distance_to_curve(cfg, x))
    for fam in line_families(cfg):
        best = min(best, _distance_to_line(x, line_base(cfg, fam), _LINE_AXIS[fam]))
    return best

"""Randomized invariant suite behind the ``verify`` subcommand.

Each check draws its own samples from a seeded generator and returns a
:class:`CheckResult`.  ``samples`` scales the pointwise checks; the
integration checks use a fixed handful of orbits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import VectorField, integral_rates, rhs_hp, rhs_revised
from .equilibria import (
    Family,
    e2_coords,
    e2_point,
    equilibria_on_level,
    distance_to_equilibria,
    level_parameters,
    line_families,
    line_family_point,
    scalar_g,
    scalar_h,
)
from .integrate import Direction, IntegratorSettings, integrate
from .model import (
    SystemConfig,
    build_metric_generic,
    cross,
    drift_v,
    hamiltonian,
    hamiltonian_centered,
    m_vector,
    metric_matrix,
    poisson_matrix,
)
from .stability import classify, lyapunov_K, probe_stability


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def random_config(rng, epsilon=None, controls=True):
    a = np.sort(rng.uniform(0.2, 4.0, 3))
    while not (a[0] < a[1] < a[2]) or np.min(np.diff(a)) < 0.05:
        a = np.sort(rng.uniform(0.2, 4.0, 3))
    ctrl = rng.uniform(-2.0, 2.0, 3) if controls else np.zeros(3)
    eps = rng.uniform(-1.0, 1.0) if epsilon is None else epsilon
    return SystemConfig(*a, *ctrl, eps)


def _points(rng, n, scale=2.0):
    return rng.uniform(-scale, scale, (n, 3))


def check_poisson_skew(rng, n):
    bad = 0
    worst = 0.0
    for x in _points(rng, n, 10.0):
        P = np.asarray(poisson_matrix(x))
        bad += not np.array_equal(P.T, -P)
        worst = max(worst, float(np.linalg.norm(P @ x)) / max(1.0, float(x @ x)))
    return bad == 0 and worst <= 1e-13, f"asymmetric={bad} max|Pi x|/|x|^2={worst:.2e}"


def check_metric_annihilation(rng, n):
    worst = 0.0
    for _ in range(n):
        cfg = random_config(rng)
        x = rng.uniform(-3, 3, 3)
        m = m_vector(cfg, x)
        g = metric_matrix(cfg, x)
        nm = float(np.linalg.norm(m))
        worst = max(worst, float(np.linalg.norm(g @ m)) / (1.0 + nm**3))
    return worst <= 1e-12, f"max scaled |g m|={worst:.2e}"


def check_drift_identity(rng, n):
    worst = 0.0
    for _ in range(n):
        cfg = random_config(rng)
        x = rng.uniform(-3, 3, 3)
        m = m_vector(cfg, x)
        ref = cross(cross(x, m), m)
        err = float(np.linalg.norm(drift_v(cfg, x) - ref))
        worst = max(worst, err / (1.0 + np.linalg.norm(x) * np.linalg.norm(m) ** 2))
    return worst <= 1e-12, f"max scaled error={worst:.2e}"


def check_triple_product(rng, n):
    worst = 0.0
    for _ in range(n):
        u, w = rng.standard_normal(3), rng.standard_normal(3)
        uw = cross(u, w)
        lhs = float(u @ cross(w, uw))
        rhs = float(uw @ uw)
        worst = max(worst, abs(lhs - rhs) / (1e-300 + np.linalg.norm(u) ** 2 * np.linalg.norm(w) ** 2))
    return worst <= 1e-12, f"max relative error={worst:.2e}"


def check_hamiltonian_forms(rng, n):
    worst = 0.0
    for _ in range(n):
        cfg = random_config(rng)
        x = rng.uniform(-3, 3, 3)
        H = hamiltonian(cfg, x)
        worst = max(worst, abs(H - hamiltonian_centered(cfg, x)) / (1.0 + abs(H)))
    return worst <= 1e-12, f"max scaled difference={worst:.2e}"


def check_generic_builder(rng, n):
    worst = 0.0
    asym = 0
    for dim in range(2, 7):
        for _ in range(n):
            grad = rng.uniform(-3, 3, dim)
            g = build_metric_generic(grad, dim).values
            asym += not np.array_equal(g, g.T)
            worst = max(worst, float(np.linalg.norm(g @ grad)) / (1.0 + np.linalg.norm(grad) ** 3))
    cfg = random_config(rng)
    x = rng.uniform(-3, 3, 3)
    same = np.array_equal(build_metric_generic(m_vector(cfg, x), 3).values, np.asarray(metric_matrix(cfg, x)))
    return asym == 0 and same and worst <= 1e-12, f"asymmetric={asym} bitwise={same} max={worst:.2e}"


def check_integral_rates(rng, n):
    worst_h = worst_c = 0.0
    for _ in range(n):
        cfg = random_config(rng)
        x = rng.uniform(-3, 3, 3)
        m = m_vector(cfg, x)
        nm, nx = np.linalg.norm(m), np.linalg.norm(x)
        scale = 1.0 + nm**2 * nx * (1.0 + abs(cfg.epsilon) * nm)
        dH, dC = integral_rates(cfg, x)
        v = cross(x, m)
        worst_h = max(worst_h, abs(dH) / scale)
        worst_c = max(worst_c, abs(dC + cfg.epsilon * float(v @ v)) / scale)
    ok = worst_h <= 1e-12 and worst_c <= 1e-12
    return ok, f"max scaled dH/dt={worst_h:.2e} dissipation error={worst_c:.2e}"


def check_zero_epsilon(rng, n):
    bad = 0
    for _ in range(n):
        cfg = random_config(rng, epsilon=0.0)
        x = rng.uniform(-3, 3, 3)
        bad += not np.array_equal(rhs_revised(cfg, x), rhs_hp(cfg, x))
    return bad == 0, f"mismatches={bad}"


def _family_points(cfg, rng, count):
    pts = []
    for lam in rng.uniform(-5, 8, count):
        if min(abs(lam - a) for a in cfg.inverse_inertia) > 1e-3:
            pts.append(e2_coords(cfg, lam))
    for fam in line_families(cfg):
        pts.extend(line_family_point(cfg, fam, a).point for a in rng.uniform(-3, 3, 2))
    pts.append(np.zeros(3))
    return pts


def check_equilibrium_equivalence(rng, n):
    tol = 1e-9
    bad = 0
    for eps in (0.1, 1.0, -0.5):
        cfg = random_config(rng, epsilon=eps)
        pts = list(_points(rng, n, 3.0)) + _family_points(cfg, rng, 10)
        for x in pts:
            m = m_vector(cfg, x)
            hp = float(np.linalg.norm(rhs_hp(cfg, x))) <= tol
            rv = float(np.linalg.norm(rhs_revised(cfg, x))) <= tol * (1.0 + abs(eps) * np.linalg.norm(m))
            bad += hp != rv
    return bad == 0, f"disagreements={bad}"


def check_family_substitution(rng, n):
    worst = 0.0
    for _ in range(max(1, n // 10)):
        cfg = random_config(rng)
        for lam in rng.uniform(-5, 8, 10):
            if min(abs(lam - a) for a in cfg.inverse_inertia) < 1e-3:
                continue
            x = e2_coords(cfg, lam)
            m = m_vector(cfg, x)
            worst = max(worst, float(np.linalg.norm(m - lam * x)) / (1.0 + abs(lam) * np.linalg.norm(x)))
            worst = max(worst, e2_point(cfg, lam).residual / (1.0 + np.linalg.norm(x) * np.linalg.norm(m)))
        for axis, fam in enumerate((Family.E3, Family.E4, Family.E5)):
            ctrl = list(cfg.controls)
            ctrl[axis] = 0.0
            sub = cfg.with_controls(*ctrl)
            for alpha in rng.uniform(-3, 3, 3):
                eq = line_family_point(sub, fam, alpha)
                m = m_vector(sub, eq.point)
                worst = max(worst, eq.residual / (1.0 + eq.norm * np.linalg.norm(m)))
    return worst <= 1e-12, f"max scaled residual={worst:.2e}"


def check_scalar_shapes(rng, n):
    ok = True
    for _ in range(5):
        cfg = random_config(rng)
        a1, a3 = cfg.a1, cfg.a3
        grid = np.linspace(-50.0, a1 - 0.01, n)
        g = np.array([scalar_g(cfg, s) for s in grid])
        ok &= bool(np.all(np.diff(g) > 0))
        left = np.linspace(-50.0, -1e-3, n)
        mid = np.linspace(1e-3, a1 - 1e-3, n)
        right = np.linspace(a3 + 1e-3, a3 + 50.0, n)
        hl = np.array([scalar_h(cfg, s) for s in left])
        hm = np.array([scalar_h(cfg, s) for s in mid])
        hr = np.array([scalar_h(cfg, s) for s in right])
        ok &= bool(np.all(np.diff(hl) < 0) and np.all(np.diff(hm) > 0) and np.all(np.diff(hr) < 0))
        h0 = scalar_h(cfg, 0.0)
        ok &= bool(h0 <= min(hl.min(), hm.min(), hr.min()))
    return ok, "g increasing; h decreasing/increasing/decreasing with minimum at 0"


def check_level_enumeration(rng, n):
    worst = 0.0
    too_many = 0
    for _ in range(max(1, n // 10)):
        cfg = random_config(rng)
        k = cfg.min_energy + rng.uniform(0.01, 5.0)
        lams = level_parameters(cfg, k)
        for lam in lams:
            worst = max(worst, abs(scalar_h(cfg, lam) - k) / (1.0 + abs(k)))
        eqs = equilibria_on_level(cfg, k)
        too_many += sum(e.family is Family.E2 for e in eqs) > 6
    return worst <= 1e-9 and too_many == 0, f"max |h-k|={worst:.2e} over-count={too_many}"


def check_accumulation(rng, n):
    cfg = SystemConfig(1.0, 2.0, 3.0, 1.0, 1.0, 1.0)
    vals = [float(np.linalg.norm(e2_coords(cfg, s))) for s in (-1e3, 1e3)]
    return max(vals) <= 3.2e-3, f"|e2(+-1e3)|={vals[0]:.3e},{vals[1]:.3e}"


def check_trajectory_laws(rng, n, cfg=None):
    settings = IntegratorSettings(rtol=1e-10, t_end=50.0)
    ok = True
    worst = 0.0
    for i in range(3):
        c = cfg if (cfg is not None and i == 0) else random_config(rng)
        x0 = rng.uniform(-1.5, 1.5, 3)
        for direction in (Direction.FORWARD, Direction.BACKWARD):
            tr = integrate(VectorField.revised(c), x0, settings.replace(direction=direction))
            H0 = tr.H_series[0]
            drift = float(np.max(np.abs(tr.H_series - H0)))
            ok &= drift <= 100 * settings.rtol * (1 + abs(H0)) * settings.t_end
            M = tr.states * c.inverse_inertia + c.controls
            scale = 1.0 + np.einsum("ij,ij->i", tr.states, tr.states) * np.einsum("ij,ij->i", M, M)
            ok &= bool(np.all(tr.diss_residual <= 1e-6 * scale))
            dC = np.diff(tr.C_series)
            jitter = 10 * settings.rtol * (1 + tr.C_series[:-1])
            shrinking = (c.epsilon > 0) == (direction is Direction.FORWARD)
            if c.epsilon != 0.0:
                ok &= bool(np.all(dC <= jitter)) if shrinking else bool(np.all(dC >= -jitter))
            worst = max(worst, drift)
    return ok, f"max |H drift|={worst:.2e}"


def check_time_reversal(rng, n):
    cfg = random_config(rng, epsilon=0.3)
    x0 = rng.uniform(-1.5, 1.5, 3)
    s = IntegratorSettings(rtol=1e-10, t_end=1.0)
    fwd = integrate(VectorField.revised(cfg), x0, s)
    back = integrate(VectorField.revised(cfg), fwd.final_state, s.replace(direction=Direction.BACKWARD))
    err = float(np.linalg.norm(back.final_state - x0))
    return err <= 1e-5 * (1 + np.linalg.norm(x0)), f"return error={err:.2e}"


def check_convergence(rng, n):
    cfg = SystemConfig(1.0, 2.0, 3.0, 1.0, 1.0, 1.0, 0.5)
    worst = 0.0
    for _ in range(2):
        x0 = rng.uniform(-1.0, 1.0, 3)
        for direction in (Direction.FORWARD, Direction.BACKWARD):
            tr = integrate(VectorField.revised(cfg), x0, IntegratorSettings(t_end=500.0, direction=direction))
            worst = max(worst, distance_to_equilibria(cfg, tr.final_state))
    return worst <= 1e-3, f"max d(x(T),E)={worst:.2e}"


def check_lyapunov(rng, n):
    cfg = SystemConfig(1.0, 2.0, 3.0, 1.0, 1.0, 1.0, 0.5)
    ok = True
    worst = 0.0
    for lam in (-2.0, -1.0, -0.1):
        for z in rng.standard_normal((max(1, n // 10), 3)):
            value, rate = lyapunov_K(cfg, lam, z)
            ok &= value >= 0.5 * (cfg.a1 - lam) * float(z @ z) * (1 - 1e-12)
            x = z + e2_coords(cfg, lam)
            grad = cfg.inverse_inertia * z - lam * z
            chain = float(grad @ rhs_revised(cfg, x))
            worst = max(worst, abs(chain - rate) / max(abs(rate), 1e-300))
    return ok and worst <= 1e-10, f"max relative rate error={worst:.2e}"


def check_classification(rng, n):
    cfg = SystemConfig(1.0, 2.0, 3.0, 1.0, 1.0, 1.0, 0.5)
    bad = []
    for lam, want_stable in ((-1.0, True), (0.5, False)):
        eq = e2_point(cfg, lam)
        verdict = classify(cfg, eq)
        probe = probe_stability(cfg, eq, delta=1e-3, horizon=200.0, n_samples=3, seed=1)
        if verdict.stable != want_stable or (probe.value == "StaysNear") != want_stable:
            bad.append(lam)
    return not bad, f"mismatched lambdas={bad}"


CHECKS = [
    ("poisson skew + casimir annihilation", check_poisson_skew),
    ("metric annihilates grad H", check_metric_annihilation),
    ("drift equals (x cross m) cross m", check_drift_identity),
    ("u.[w x (u x w)] = |u x w|^2", check_triple_product),
    ("H expanded = H completed square", check_hamiltonian_forms),
    ("generic metric builder", check_generic_builder),
    ("dH/dt = 0 and dC/dt = -eps|x cross m|^2", check_integral_rates),
    ("eps = 0 revised field equals Hamilton-Poisson", check_zero_epsilon),
    ("shared equilibria of both fields", check_equilibrium_equivalence),
    ("family substitution and m = lam x", check_family_substitution),
    ("g monotone, h shape", check_scalar_shapes),
    ("level enumeration cardinality and roots", check_level_enumeration),
    ("E2 accumulates at the origin", check_accumulation),
    ("time reversal", check_time_reversal),
    ("convergence to equilibria", check_convergence),
    ("Lyapunov function and rate", check_lyapunov),
    ("classification agrees with probe", check_classification),
]


def run_suite(cfg: SystemConfig | None = None, samples=1000, seed=0):
    """Run every check; the trajectory check also uses ``cfg`` when given."""
    results = []
    for index, (name, fn) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, index])
        try:
            passed, detail = fn(rng, samples)
        except Exception as exc:  # a crashing check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    rng = np.random.default_rng([seed, len(CHECKS)])
    try:
        passed, detail = check_trajectory_laws(rng, samples, cfg)
    except Exception as exc:
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    results.append(CheckResult("H conserved, C monotone, residual along orbits", bool(passed), detail))
    return results

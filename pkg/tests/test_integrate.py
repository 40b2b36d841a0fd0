import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from revbody.dynamics import VectorField, rhs_hp, rhs_revised
from revbody.equilibria import e2_coords
from revbody.integrate import (
    Direction,
    IntegratorSettings,
    MaxStepsExceeded,
    StepFailure,
    StepSizeUnderflow,
    integrate,
    rk_step,
)
from revbody.model import SystemConfig, casimir, hamiltonian, m_vector


def reference_solution(cfg, x0, T, eps_field=True):
    rhs = rhs_revised if eps_field else rhs_hp
    sol = solve_ivp(lambda t, y: rhs(cfg, y), (0.0, T), x0, method="DOP853", rtol=1e-13, atol=1e-15)
    return sol.y[:, -1]


class TestSettings:
    def test_defaults(self):
        s = IntegratorSettings()
        assert (s.rtol, s.atol, s.h_init, s.h_max, s.max_steps) == (1e-10, 1e-12, 1e-3, 1.0, 10**7)
        assert s.direction is Direction.FORWARD

    @pytest.mark.parametrize(
        "bad",
        [
            {"rtol": 1e-14},
            {"rtol": 0.1},
            {"atol": 0.0},
            {"h_init": 2.0, "h_max": 1.0},
            {"h_init": 0.0},
            {"t_end": 0.0},
            {"t_end": float("inf")},
            {"max_steps": 0},
        ],
    )
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            IntegratorSettings(**bad)

    def test_replace(self):
        s = IntegratorSettings().replace(t_end=3.0)
        assert s.t_end == 3.0 and s.rtol == 1e-10


class TestStep:
    def test_at_equilibrium(self, std):
        x = e2_coords(std, -1.0)
        f = VectorField.hamilton_poisson(std)
        x_new, err = rk_step(f, x, 0.0, 0.1)
        assert np.allclose(x_new, x, atol=1e-16)
        assert np.allclose(err, 0.0, atol=1e-16)

    def test_origin_free_body_exact(self, std0):
        x_new, err = rk_step(VectorField.revised(std0.with_epsilon(1.0)), (0, 0, 0), 0.0, 0.5)
        assert np.array_equal(x_new, np.zeros(3)) and np.array_equal(err, np.zeros(3))

    def test_consistency(self, std):
        f = VectorField.revised(std.with_epsilon(0.5))
        x = np.array([1.0, 1.0, 1.0])
        gaps = []
        for h in (1e-2, 5e-3, 2.5e-3):
            x_new, _ = rk_step(f, x, 0.0, h)
            gaps.append(np.linalg.norm(x_new - x - h * f(x)))
        # O(h^2): halving h quarters the gap
        for g0, g1 in zip(gaps, gaps[1:]):
            assert 3.5 < g0 / g1 < 4.5

    def test_non_finite(self):
        cfg = SystemConfig(1.0, 2.0, 3.0, epsilon=1.0)
        with pytest.raises(StepFailure):
            rk_step(VectorField.revised(cfg), (1e120, 1e120, -1e120), 0.0, 1.0)

    def test_bad_step(self, std):
        with pytest.raises(ValueError):
            rk_step(VectorField.revised(std), (1, 1, 1), 0.0, -0.1)

    def test_estimate_is_fifth_order_local(self, std0):
        # embedded estimate ~ C h^5, so halving divides it by ~2^5
        f = VectorField.hamilton_poisson(std0)
        x = np.array([1.0, 1.0, 1.0])
        errs = [np.linalg.norm(rk_step(f, x, 0.0, h)[1]) for h in (0.025, 0.0125)]
        assert 25.6 <= errs[0] / errs[1] <= 38.4

    def test_global_order_against_reference(self, std0):
        x0 = np.array([1.0, 1.0, 1.0])
        ref = reference_solution(std0, x0, 1.0, eps_field=False)
        f = VectorField.hamilton_poisson(std0)

        def fixed(h):
            x = x0
            for _ in range(round(1.0 / h)):
                x, _ = rk_step(f, x, 0.0, h)
            return np.linalg.norm(x - ref)

        ratio = fixed(0.05) / fixed(0.025)
        assert 25.6 <= ratio <= 38.4


class TestIntegrate:
    def test_tiny_horizon(self, std0):
        traj = integrate(VectorField.revised(std0), (1, 2, 3), IntegratorSettings(t_end=1e-300))
        assert np.all(traj.states == [1.0, 2.0, 3.0])
        assert traj.times[0] == 0.0 and traj.final_time == 1e-300

    def test_free_body_conserves_both_integrals(self, std0):
        traj = integrate(VectorField.revised(std0), (1, 1, 1), IntegratorSettings(t_end=100.0))
        assert np.max(np.abs(traj.H_series - 3.0)) <= 1e-7
        assert np.max(np.abs(traj.C_series - 1.5)) <= 1e-7

    def test_matches_reference(self, std):
        cfg = std.with_epsilon(0.5)
        traj = integrate(VectorField.revised(cfg), (1, 1, 1), IntegratorSettings(t_end=5.0))
        ref = reference_solution(cfg, np.ones(3), 5.0)
        assert np.linalg.norm(traj.final_state - ref) <= 1e-7

    def test_trajectory_shape(self, std):
        traj = integrate(VectorField.revised(std.with_epsilon(0.5)), (1, 1, 1), IntegratorSettings(t_end=10.0))
        n = len(traj)
        assert traj.states.shape == (n, 3)
        assert len(traj.H_series) == len(traj.C_series) == len(traj.diss_residual) == n
        assert n == traj.accepted + 1
        assert np.all(np.diff(traj.times) > 0)
        assert traj.final_time == 10.0
        with pytest.raises(ValueError):
            traj.states[0, 0] = 5.0

    def test_backward_times_decrease(self, std):
        s = IntegratorSettings(t_end=5.0, direction=Direction.BACKWARD)
        traj = integrate(VectorField.revised(std.with_epsilon(0.5)), (1, 1, 1), s)
        assert np.all(np.diff(traj.times) < 0) and traj.final_time == -5.0
        assert traj.direction is Direction.BACKWARD

    def test_backward_matches_reference(self, std):
        cfg = std.with_epsilon(0.3)
        s = IntegratorSettings(t_end=2.0, direction=Direction.BACKWARD)
        traj = integrate(VectorField.revised(cfg), (0.5, -0.2, 0.1), s)
        sol = solve_ivp(
            lambda t, y: rhs_revised(cfg, y), (0.0, -2.0), [0.5, -0.2, 0.1], method="DOP853", rtol=1e-13, atol=1e-15
        )
        assert np.linalg.norm(traj.final_state - sol.y[:, -1]) <= 1e-8

    @pytest.mark.parametrize("eps", [0.5, -0.5])
    def test_time_reversal(self, std, eps):
        cfg = std.with_epsilon(eps)
        f = VectorField.revised(cfg)
        x0 = np.array([0.4, -0.3, 0.8])
        # short horizon: orbits collapse onto equilibria, so reversal loses digits fast
        fwd = integrate(f, x0, IntegratorSettings(t_end=1.0))
        back = integrate(f, fwd.final_state, IntegratorSettings(t_end=1.0, direction=Direction.BACKWARD))
        assert np.linalg.norm(back.final_state - x0) <= 1e-5 * (1 + np.linalg.norm(x0))

    @pytest.mark.parametrize("eps", [0.5, -0.5])
    def test_monitors(self, std, eps):
        cfg = std.with_epsilon(eps)
        s = IntegratorSettings(t_end=50.0)
        x0 = np.array([1.0, 1.0, 1.0]) if eps > 0 else np.array([0.2, 0.1, -0.1])
        traj = integrate(VectorField.revised(cfg), x0, s)
        H0 = hamiltonian(cfg, x0)
        assert np.max(np.abs(traj.H_series - H0)) <= 100 * s.rtol * (1 + abs(H0)) * s.t_end
        dC = np.diff(traj.C_series)
        jitter = 10 * s.rtol * (1 + np.max(traj.C_series))
        assert np.all(dC <= jitter) if eps > 0 else np.all(dC >= -jitter)
        X = traj.states
        M = np.array([m_vector(cfg, x) for x in X])
        scale = 1 + np.sum(X * X, axis=1) * np.sum(M * M, axis=1)
        assert np.all(traj.diss_residual <= 1e-6 * scale)

    def test_bounded_by_ellipsoid(self, std):
        cfg = std.with_epsilon(0.5)
        x0 = np.array([1.0, 1.0, 1.0])
        traj = integrate(VectorField.revised(cfg), x0, IntegratorSettings(t_end=100.0))
        # H(x) = 1/2 sum a_i (x_i - c_i)^2 + kmin, centre c = minimizer
        H0 = hamiltonian(cfg, x0)
        centre = cfg.energy_minimizer
        radius = math.sqrt(2 * (H0 - cfg.min_energy) / cfg.a1)
        R = np.linalg.norm(centre) + radius
        assert np.max(np.linalg.norm(traj.states, axis=1)) <= R + 1e-9

    def test_revised_free_body_limit(self, std0):
        cfg = std0.with_epsilon(0.1)
        traj = integrate(VectorField.revised(cfg), (1, 1, 1), IntegratorSettings(t_end=500.0))
        target = np.array([0.0, 0.0, math.sqrt(2.0)]) * np.sign(traj.final_state[2])
        assert np.linalg.norm(traj.final_state - target) <= 1e-3

    def test_max_steps(self, std):
        s = IntegratorSettings(t_end=100.0, max_steps=10)
        with pytest.raises(MaxStepsExceeded) as info:
            integrate(VectorField.revised(std.with_epsilon(0.5)), (1, 1, 1), s)
        partial = info.value.trajectory
        assert len(partial) == 11 and np.array_equal(partial.states[0], [1, 1, 1])

    def test_underflow(self, std0):
        # x1' = x1^2 from x1 = 1 blows up at t = 1
        class BlowUp:
            cfg = std0
            epsilon = 0.0

            def tuple_rhs(self, sign=1.0):
                return lambda x1, x2, x3: (sign * x1 * x1, 0.0, 0.0)

            def __call__(self, x):
                return np.array(self.tuple_rhs()(*x))

        with pytest.raises(StepSizeUnderflow) as info:
            integrate(BlowUp(), (1.0, 0.0, 0.0), IntegratorSettings(t_end=2.0))
        partial = info.value.trajectory
        assert partial.final_time < 1.0 and partial.final_state[0] > 1e3

    def test_stop_callback(self, std):
        traj = integrate(
            VectorField.revised(std.with_epsilon(0.5)),
            (1, 1, 1),
            IntegratorSettings(t_end=100.0),
            stop=lambda t, x: t > 1.0,
        )
        assert traj.stopped_early and 1.0 < traj.final_time < 3.0

    def test_deterministic(self, std):
        f = VectorField.revised(std.with_epsilon(0.5))
        a = integrate(f, (1, 1, 1), IntegratorSettings(t_end=20.0))
        b = integrate(f, (1, 1, 1), IntegratorSettings(t_end=20.0))
        assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)

    def test_casimir_series(self, std):
        traj = integrate(VectorField.revised(std.with_epsilon(0.5)), (1, 1, 1), IntegratorSettings(t_end=1.0))
        assert np.allclose(traj.C_series, [casimir(x) for x in traj.states], rtol=1e-15, atol=0)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revbody.model import (
    GenericMetric,
    InvalidConfig,
    Matrix3,
    SKEW,
    SYM,
    SystemConfig,
    build_metric_generic,
    casimir,
    cross,
    drift_v,
    hamiltonian,
    hamiltonian_centered,
    m_vector,
    metric_matrix,
    poisson_matrix,
)

from conftest import random_config

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


class TestSystemConfig:
    def test_ordering_enforced(self):
        with pytest.raises(InvalidConfig, match="a1 < a2 < a3"):
            SystemConfig(2.0, 1.0, 3.0)
        with pytest.raises(InvalidConfig):
            SystemConfig(0.0, 1.0, 3.0)
        with pytest.raises(InvalidConfig):
            SystemConfig(1.0, 2.0, 2.0)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidConfig):
            SystemConfig(1.0, 2.0, 3.0, epsilon=float("nan"))
        with pytest.raises(InvalidConfig):
            SystemConfig(1.0, 2.0, float("inf"))

    def test_from_moments(self):
        cfg = SystemConfig.from_moments(1.0, 0.5, 0.25, 1.0, 2.0, 3.0, 0.5)
        assert (cfg.a1, cfg.a2, cfg.a3) == (1.0, 2.0, 4.0)
        assert (cfg.ctrl_a, cfg.ctrl_b, cfg.ctrl_c, cfg.epsilon) == (1.0, 2.0, 3.0, 0.5)
        with pytest.raises(InvalidConfig, match="I1 > I2 > I3 > 0"):
            SystemConfig.from_moments(0.5, 1.0, 0.25)

    @given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0))
    def test_moments_round_trip(self, p, q, r):
        I1, I2, I3 = sorted({p, q, r}, reverse=True) + [0.0] * (3 - len({p, q, r}))
        if not I1 > I2 > I3 > 0:
            return
        cfg = SystemConfig.from_moments(I1, I2, I3)
        back = cfg.moments
        assert np.allclose(back, (I1, I2, I3), rtol=1e-15, atol=0)

    def test_min_energy(self, std):
        assert std.min_energy == pytest.approx(-11 / 12, rel=1e-15)
        assert np.array_equal(std.energy_minimizer, [-1.0, -0.5, -1 / 3])


class TestHamiltonian:
    def test_values(self, std):
        assert hamiltonian(std, (0, 0, 0)) == 0.0
        assert hamiltonian(std, (1, 0, 0)) == 1.5
        assert hamiltonian(std, (-1, -0.5, -1 / 3)) == pytest.approx(-11 / 12, rel=1e-14)

    def test_completed_square_agrees(self, rng):
        for _ in range(10_000):
            cfg = random_config(rng)
            x = rng.uniform(-5, 5, 3)
            H = hamiltonian(cfg, x)
            assert abs(H - hamiltonian_centered(cfg, x)) <= 1e-12 * (1 + abs(H))

    def test_casimir(self):
        assert casimir((0, 0, 0)) == 0.0
        assert casimir((1, 2, 2)) == 4.5
        assert casimir((-1, -1, -1)) == 1.5 == casimir((1, 1, 1))


class TestGradient:
    def test_values(self, std, std0):
        assert np.array_equal(m_vector(std0, (1, 1, 1)), [1, 2, 3])
        assert np.allclose(m_vector(std, (-1, -0.5, -1 / 3)), 0.0, atol=1e-15)
        assert np.array_equal(m_vector(std, (1, 1, 1)), [2, 3, 4])

    def test_matches_finite_difference_of_H(self, std, rng):
        x = rng.uniform(-2, 2, 3)
        h = 1e-6
        fd = [(hamiltonian(std, x + h * e) - hamiltonian(std, x - h * e)) / (2 * h) for e in np.eye(3)]
        assert np.allclose(m_vector(std, x), fd, rtol=1e-8)


class TestPoisson:
    def test_examples(self):
        assert np.array_equal(np.asarray(poisson_matrix((0, 0, 0))), np.zeros((3, 3)))
        expected = [[0, -3, 2], [3, 0, -1], [-2, 1, 0]]
        assert np.array_equal(np.asarray(poisson_matrix((1, 2, 3))), expected)

    def test_skew_and_casimir_annihilation(self, rng):
        for x in rng.uniform(-100, 100, (10_000, 3)):
            P = poisson_matrix(x)
            assert P.role == SKEW
            assert np.array_equal(P.values.T, -P.values)
            assert np.linalg.norm(P @ x) <= 1e-13 * (x @ x)

    def test_is_cross_product(self, rng):
        x, y = rng.standard_normal((2, 3))
        assert np.allclose(poisson_matrix(x) @ y, cross(x, y), rtol=1e-15)

    def test_role_enforced(self):
        with pytest.raises(ValueError):
            Matrix3([[0, 1, 0], [1, 0, 0], [0, 0, 0]], SKEW)
        with pytest.raises(ValueError):
            Matrix3([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], SYM)
        with pytest.raises(ValueError):
            Matrix3(np.zeros((2, 2)), SYM)


class TestMetric:
    def test_example(self, std0):
        g = metric_matrix(std0, (1, 1, 1))
        assert g.role == SYM
        assert np.array_equal(np.asarray(g), [[-13, 2, 3], [2, -10, 6], [3, 6, -5]])
        assert np.array_equal(g @ [1, 2, 3], [0, 0, 0])

    def test_zero_at_energy_minimum(self, std):
        g = np.asarray(metric_matrix(std, std.energy_minimizer))
        assert np.allclose(g, 0.0, atol=1e-30)

    def test_annihilates_gradient(self, rng):
        for _ in range(10_000):
            cfg = random_config(rng)
            x = rng.uniform(-5, 5, 3)
            m = m_vector(cfg, x)
            g = metric_matrix(cfg, x)
            assert np.array_equal(g.values, g.values.T)
            assert np.linalg.norm(g @ m) <= 1e-12 * (1 + np.linalg.norm(m) ** 3)


class TestDrift:
    def test_examples(self, std, std0):
        assert np.array_equal(drift_v(std0, (1, 1, 1)), [-8, -2, 4])
        assert np.array_equal(drift_v(std, (1, 1, 1)), [-11, -2, 7])

    def test_vanishes_on_equilibria(self, std):
        # m(e2(-1)) = -e2(-1), so x cross m = 0
        x = np.array([-0.5, -1 / 3, -0.25])
        assert np.allclose(drift_v(std, x), 0.0, atol=1e-15)

    def test_component_formulas(self, rng):
        # the three printed component formulas, written out term by term
        for _ in range(1000):
            cfg = random_config(rng)
            x1, x2, x3 = x = rng.uniform(-3, 3, 3)
            m1, m2, m3 = m_vector(cfg, x)
            v = [
                -(m2**2 + m3**2) * x1 + m1 * (m2 * x2 + m3 * x3),
                -(m1**2 + m3**2) * x2 + m2 * (m1 * x1 + m3 * x3),
                -(m1**2 + m2**2) * x3 + m3 * (m1 * x1 + m2 * x2),
            ]
            scale = 1 + np.linalg.norm(x) * np.linalg.norm([m1, m2, m3]) ** 2
            assert np.linalg.norm(drift_v(cfg, x) - v) <= 1e-12 * scale

    def test_double_cross_identity(self, rng):
        for _ in range(10_000):
            cfg = random_config(rng)
            x = rng.uniform(-5, 5, 3)
            m = m_vector(cfg, x)
            ref = cross(cross(x, m), m)
            scale = 1 + np.linalg.norm(x) * np.linalg.norm(m) ** 2
            assert np.linalg.norm(drift_v(cfg, x) - ref) <= 1e-12 * scale


@settings(max_examples=300, deadline=None)
@given(vec3, vec3)
def test_triple_product_identity(u, w):
    uw = cross(u, w)
    lhs = u @ cross(w, uw)
    scale = max((u @ u) * (w @ w), 1e-300)
    assert abs(lhs - uw @ uw) <= 1e-12 * scale


class TestGenericBuilder:
    def test_matches_concrete_metric(self, std0):
        g = build_metric_generic([1, 2, 3], 3)
        assert isinstance(g, GenericMetric) and g.n == 3
        assert np.array_equal(g.values, np.asarray(metric_matrix(std0, (1, 1, 1))))

    def test_bitwise_same_as_metric_matrix(self, rng):
        for _ in range(1000):
            cfg = random_config(rng)
            x = rng.uniform(-5, 5, 3)
            g = build_metric_generic(m_vector(cfg, x), 3).values
            assert np.array_equal(g, np.asarray(metric_matrix(cfg, x)))

    @pytest.mark.parametrize("n", range(2, 17))
    def test_zero_gradient(self, n):
        assert np.array_equal(build_metric_generic(np.zeros(n), n).values, np.zeros((n, n)))

    def test_two_dimensional(self):
        p, q = 1.5, -0.25
        g = build_metric_generic([p, q], 2).values
        assert np.array_equal(g, [[-(q**2), p * q], [p * q, -(p**2)]])
        assert np.array_equal(g @ [p, q], [0.0, 0.0])

    def test_dimension_range(self):
        with pytest.raises(ValueError):
            build_metric_generic([1.0], 1)
        with pytest.raises(ValueError):
            build_metric_generic(np.ones(17), 17)
        with pytest.raises(ValueError):
            build_metric_generic([1.0, 2.0], 3)

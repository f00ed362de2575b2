import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holomenta import mechanics as mech
from holomenta.mechanics import MechanicalSystem, MPoint
from holomenta.systems import NAMES, builtin


@pytest.fixture(scope="module")
def particle():
    return builtin("particle")


@pytest.fixture(scope="module")
def disk():
    return builtin("disk")


def free_particle(n=3):
    eye = np.eye(n)
    return MechanicalSystem(
        tuple(f"q{i}" for i in range(n)), lambda q: eye, lambda q: eye, lambda q: np.zeros((n, 0)), r=n
    )


def test_momenta_particle(particle):
    p = mech.momenta(particle.system, MPoint([0, 1, 0], [1, 1]))
    np.testing.assert_allclose(p, [1, 1, 1])
    assert p[2] == 1.0 * p[0]  # p_z = y p_x on M
    np.testing.assert_array_equal(mech.momenta(particle.system, MPoint([0.3, 2, 1], [0, 0])), np.zeros(3))


def test_momenta_disk(disk):
    psi = 0.8
    p = mech.momenta(disk.system, MPoint([0, 0, 0, psi], [2, 3]))
    np.testing.assert_allclose(p, [2 * math.cos(psi), 2 * math.sin(psi), 2, 3], atol=1e-15)


def test_hamiltonian_values(particle, disk):
    assert mech.hamiltonian_M(particle.system, MPoint([0, 1, 0], [1, 1])) == pytest.approx(1.5)
    assert mech.hamiltonian_M(particle.system, MPoint([0, 1, 0], [0, 0])) == 0.0
    assert mech.hamiltonian_M(disk.system, MPoint([0.1, 0.2, 0.3, 0.4], [2, 3])) == pytest.approx(8.5)


def test_c_basis_particle(particle):
    v1, v2 = 0.7, -1.3
    c = mech.c_basis(particle.system, MPoint([0, 0, 0], [v1, v2]))
    expected = np.array(
        [
            [0, 1, 0, 0, 0, v2],
            [1, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 1, 0],
            [0, 0, 0, 1, 0, 0],
        ]
    )
    np.testing.assert_allclose(c, expected, atol=1e-9)


def test_c_basis_constant_frame():
    sys_ = free_particle()
    c = mech.c_basis(sys_, MPoint([0.1, 0.2, 0.3], [1, 2, 3]))
    assert c.shape == (6, 6)
    np.testing.assert_array_equal(c[:3, 3:], 0.0)


def test_two_form_particle(particle):
    a = mech.constrained_two_form(particle.system, MPoint([0, 0, 0], [0.5, 0.2]))
    np.testing.assert_allclose(a, [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]], atol=1e-9)


def test_two_form_unconstrained():
    a = mech.constrained_two_form(free_particle(), MPoint([1, 2, 3], [0.1, 0.2, 0.3]))
    z, i = np.zeros((3, 3)), np.eye(3)
    np.testing.assert_array_equal(a, np.block([[z, i], [-i, z]]))


def test_degenerate_form_detected():
    # a frame that collapses at the origin makes the form singular there
    sys_ = MechanicalSystem(("x",), lambda q: np.eye(1), lambda q: np.array([[q[0]]]), lambda q: np.zeros((1, 0)), r=1)
    with pytest.raises(mech.DegenerateForm):
        mech.constrained_two_form(sys_, MPoint([0.0], [1.0]))


@pytest.mark.parametrize("name", NAMES)
def test_two_form_antisymmetric_random(name):
    fx = builtin(name)
    for m in fx.sample_states(100, seed=3):
        a = mech.constrained_two_form(fx.system, m)
        np.testing.assert_array_equal(a, -a.T)
        assert np.linalg.cond(a) < 1e8


def test_hamiltonian_vector_field_of_y(particle):
    # Omega(X_f, .) = df: the field of the coordinate y moves the momentum conjugate to y backwards
    t = mech.ham_vector_field(particle.system, MPoint([0, 0, 0], [0.3, 0.4]), lambda q, v: q[1])
    np.testing.assert_allclose(t.qdot, 0.0, atol=1e-12)
    np.testing.assert_allclose(t.vdot, [-1.0, 0.0], atol=1e-9)
    assert t.residual <= 1e-10


def test_constant_function_zero_field(particle):
    t = mech.ham_vector_field(particle.system, MPoint([0.2, 0.5, 0.1], [0.3, 0.4]), lambda q, v: 4.0)
    np.testing.assert_array_equal(t.state, 0.0)


def test_nonholonomic_particle(particle):
    x = mech.nonholonomic_vector_field(particle.system, MPoint([0, 1, 0], [1, 1]))
    np.testing.assert_allclose(x.qdot, [1, 1, 1], atol=1e-12)
    np.testing.assert_allclose(x.vdot, [0, -0.5], atol=1e-9)
    assert x.residual <= 1e-10
    h = mech.hamiltonian(particle.system)
    y = mech.ham_vector_field(particle.system, MPoint([0, 1, 0], [1, 1]), h)
    np.testing.assert_allclose(y.state, x.state, atol=1e-8)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=40, deadline=None)
def test_nonholonomic_particle_closed_form(x, y, z, vy, vx):
    particle = builtin("particle")
    f = mech.nonholonomic_vector_field(particle.system, MPoint([x, y, z], [vy, vx]))
    np.testing.assert_allclose(f.qdot, [vx, vy, y * vx], atol=1e-12)
    np.testing.assert_allclose(f.vdot, [0.0, -y * vx * vy / (1 + y * y)], atol=1e-8)


def test_equilibrium(particle):
    f = mech.nonholonomic_vector_field(particle.system, MPoint([0.5, -1, 2], [0, 0]))
    np.testing.assert_allclose(f.state, 0.0, atol=1e-14)


def test_disk_quasi_velocities_constant(disk):
    for m in disk.sample_states(20, seed=1):
        np.testing.assert_allclose(mech.nonholonomic_vector_field(disk.system, m).vdot, 0.0, atol=1e-8)


def test_potential_enters_dynamics():
    k = 2.0
    sys_ = MechanicalSystem(
        ("x",), lambda q: np.eye(1), lambda q: np.eye(1), lambda q: np.zeros((1, 0)), r=1, potential=lambda q: 0.5 * k * q[0] ** 2
    )
    f = mech.nonholonomic_vector_field(sys_, MPoint([0.5], [0.0]))
    assert f.vdot[0] == pytest.approx(-k * 0.5, abs=1e-8)


def test_bracket_examples(particle):
    m = MPoint([0, 0, 0], [0.2, 0.9])
    f = lambda q, v: q[1]
    v1 = lambda q, v: v[0]
    assert mech.nh_bracket(particle.system, m, f, f) == pytest.approx(0.0, abs=1e-12)
    # {y, v1} = -X_y(v1) = +1 under the forward convention
    assert mech.nh_bracket(particle.system, m, f, v1) == pytest.approx(1.0, abs=1e-8)
    gauge = lambda q, v: mech.momenta(particle.system, MPoint(q, v))[0] * math.sqrt(1 + q[1] ** 2)
    for s in particle.sample_states(10, seed=2):
        assert abs(mech.nh_bracket(particle.system, s, gauge, mech.hamiltonian(particle.system))) <= 1e-7


def _random_observables(rng):
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    f = lambda q, v: float(np.sin(a[: len(q)] @ np.resize(q, 3)[: len(q)]) * v[0] + v[-1] ** 2)
    g = lambda q, v: float(np.cos(b[0] * q[0]) + q[-1] * v[0] * v[-1])
    return f, g


@pytest.mark.parametrize("name", NAMES)
def test_linearity_tangency_antisymmetry_leibniz(name):
    fx = builtin(name)
    sys_ = fx.system
    rng = np.random.default_rng(11)
    for m in fx.sample_states(8, seed=5):
        f, g = _random_observables(rng)
        xf = mech.ham_vector_field(sys_, m, f)
        xg = mech.ham_vector_field(sys_, m, g)
        xs = mech.ham_vector_field(sys_, m, lambda q, v: 2.0 * f(q, v) - 3.0 * g(q, v))
        np.testing.assert_allclose(xs.state, (2.0 * xf - 3.0 * xg).state, atol=1e-8 * (1 + np.abs(xs.state).max()))
        d = sys_.d_space(m.q)
        assert d.contains(xf.qdot, atol=1e-9)
        fg = mech.nh_bracket(sys_, m, f, g)
        assert fg == pytest.approx(-mech.nh_bracket(sys_, m, g, f), abs=1e-6)
        h = lambda q, v: float(q[0] + v[0])
        prod = lambda q, v: g(q, v) * h(q, v)
        lhs = mech.nh_bracket(sys_, m, f, prod)
        rhs = mech.nh_bracket(sys_, m, f, g) * h(m.q, m.v) + g(m.q, m.v) * mech.nh_bracket(sys_, m, f, h)
        assert lhs == pytest.approx(rhs, abs=1e-6 * (1 + abs(lhs)))


def test_validate_rejects_bad_models():
    bad_metric = MechanicalSystem(("x", "y"), lambda q: np.diag([1.0, -1.0]), lambda q: np.eye(2), lambda q: np.zeros((2, 0)), r=2)
    with pytest.raises(mech.ModelError):
        bad_metric.validate([np.zeros(2)])
    overlap = MechanicalSystem(
        ("x", "y"), lambda q: np.eye(2), lambda q: np.array([[1.0], [0.0]]), lambda q: np.array([[1.0], [0.0]]), r=1
    )
    with pytest.raises(mech.ModelError):
        overlap.validate([np.zeros(2)])

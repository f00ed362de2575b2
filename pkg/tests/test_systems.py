import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from holomenta import geomcore as gc
from holomenta import symmetry as sym
from holomenta.integrate import conservation_report, integrate
from holomenta.mechanics import MPoint, momenta, rhs
from holomenta.systems import (
    NAMES,
    UnknownBuiltin,
    ball_body_oracle,
    ball_body_state,
    builtin,
    gamma_of,
    hat,
    inertia_of,
    rotation,
)


@pytest.fixture(scope="module")
def ball():
    return builtin("ball")


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltin) as info:
        builtin("helix")
    assert "unknown builtin" in str(info.value)


def test_unknown_complement():
    with pytest.raises(KeyError):
        builtin("particle", "Wq")


def test_expected_ranks_and_vertical_symmetry():
    for name in NAMES:
        fx = builtin(name)
        qs = fx.sample_q(10)
        assert sym.algebra_splitting(fx.system, fx.action, qs[0]).rank_s == fx.expected_rank_s
        assert sym.vertical_symmetry_condition(fx.system, fx.action, qs) == fx.expected_vertical_symmetry[fx.complement]


def test_sampling_deterministic_and_in_box():
    fx = builtin("ball")
    a, b = fx.sample_states(5, seed=3), fx.sample_states(5, seed=3)
    for m, n in zip(a, b):
        assert m.state.tobytes() == n.state.tobytes()
        assert np.all(m.q >= fx.chart_box[:, 0]) and np.all(m.q <= fx.chart_box[:, 1])


def test_disk_params():
    fx = builtin("disk", I=2.0, R=3.0)
    m = MPoint([0, 0, 0, 0], [1.0, 0.0])
    p = momenta(fx.system, m)
    np.testing.assert_allclose(p, [3.0, 0.0, 2.0, 0.0])
    assert fx.observables["J1"](m) == pytest.approx((9 / 2 + 1) * 2.0)


def test_particle_rescaled_complement_spans_unscaled_form():
    fx = builtin("particle", "Wrescaled")
    for y in (-1.5, -0.2, 0.7, 2.0):
        w = fx.system.complement([0.0, y, 0.0])[:, 0]
        unscaled = np.array([1 - math.sqrt(1 + y * y), 0.0, y])
        assert gc.rank(np.vstack([w, unscaled])) == 1


def test_ball_metric_identity(ball):
    mr2 = ball.params["m"] * ball.params["r"] ** 2
    for q in ball.sample_q(50, seed=5):
        x = ball.system.frame(q)
        g = gamma_of(q)
        lhs = x.T @ ball.system.kappa(q) @ x
        rhs_ = inertia_of(ball) + mr2 * (np.eye(3) - np.outer(g, g))
        np.testing.assert_allclose(lhs, rhs_, atol=1e-9)


def test_ball_gamma_is_third_row(ball):
    for q in ball.sample_q(10):
        np.testing.assert_allclose(rotation(*q[:3])[2], gamma_of(q), atol=1e-15)


def test_ball_chart_rates_reproduce_body_velocity(ball):
    # g^T dg/dt = hat(Omega) with qdot = X v, Omega = v
    rng = np.random.default_rng(0)
    for q in ball.sample_q(20, seed=2):
        v = rng.uniform(-1, 1, 3)
        qdot = ball.system.frame(q) @ v
        dg = gc.jacobian(lambda x: rotation(*x[:3]).ravel(), q) @ qdot
        omega_hat = rotation(*q[:3]).T @ dg.reshape(3, 3)
        np.testing.assert_allclose(omega_hat, hat(v), atol=1e-7)


def test_ball_matrix_ode_side_by_side(ball):
    f = rhs(ball.system)
    n = ball.system.n

    def joint(t, y):
        state, rot = y[: n + 3], y[n + 3 :].reshape(3, 3)
        return np.concatenate([f(t, state), (rot @ hat(state[n:])).ravel()])

    m0 = ball.initial_state
    y0 = np.concatenate([m0.state, rotation(*m0.q[:3]).ravel()])
    sol = solve_ivp(joint, (0, 3), y0, method="DOP853", rtol=1e-11, atol=1e-11, t_eval=np.linspace(0, 3, 31))
    assert sol.success
    for y in sol.y.T:
        np.testing.assert_allclose(rotation(*y[:3]), y[n + 3 :].reshape(3, 3), atol=1e-7)


def test_ball_matches_body_frame_oracle(ball):
    traj = integrate(ball.system, ball.initial_state, 5.0)
    k_ref, g_ref = ball_body_oracle(ball, ball.initial_state, traj.times)
    k = np.array([ball_body_state(ball, m)[0] for m in traj.states])
    g = np.array([gamma_of(m.q) for m in traj.states])
    assert np.abs(k - k_ref).max() <= 1e-6
    assert np.abs(g - g_ref).max() <= 1e-6


def test_ball_theta_stays_in_chart(ball):
    traj = integrate(ball.system, ball.initial_state, 10.0)
    theta = traj.array[:, 1]
    assert theta.min() > 0.2 and theta.max() < math.pi - 0.2


@pytest.mark.parametrize("name", NAMES)
def test_fixture_observables_conserved(name):
    fx = builtin(name)
    drift = conservation_report(integrate(fx.system, fx.initial_state, 10.0), fx.observables)
    for key, d in drift.items():
        assert d <= 1e-8, (key, d)


def test_ball_k_matches_body_formula(ball):
    mr2 = ball.params["m"] * ball.params["r"] ** 2
    for m in ball.sample_states(10, seed=1):
        k, g, om = ball_body_state(ball, m)
        np.testing.assert_allclose(k, inertia_of(ball) @ om + mr2 * (om - (g @ om) * g), atol=1e-12)

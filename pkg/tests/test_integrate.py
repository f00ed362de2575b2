import math

import numpy as np
import pytest

from holomenta.integrate import StepFailure, Trajectory, conservation_report, dopri5_solve, integrate, rk4_solve
from holomenta.mechanics import MPoint, momenta, rhs
from holomenta.systems import NAMES, builtin


def particle_exact(t):
    """From q=0, v=(1,1): y = t, p_x = 1/sqrt(1+t^2), x = asinh t, z = sqrt(1+t^2) - 1."""
    return np.array([math.asinh(t), t, math.sqrt(1 + t * t) - 1, 1.0, 1 / math.sqrt(1 + t * t)])


@pytest.fixture(scope="module")
def particle():
    return builtin("particle")


def test_particle_closed_form(particle):
    traj = integrate(particle.system, MPoint([0, 0, 0], [1, 1]), 1.0)
    end = traj.final
    assert end.q[1] == pytest.approx(1.0, abs=1e-10)
    assert momenta(particle.system, end)[0] == pytest.approx(1 / math.sqrt(2), abs=1e-8)
    for t, m in zip(traj.times[::20], traj.states[::20]):
        np.testing.assert_allclose(m.state, particle_exact(t), atol=1e-8)


def test_stationary():
    for name in NAMES:
        fx = builtin(name)
        traj = integrate(fx.system, MPoint(fx.q0, np.zeros(fx.system.r)), 1.0)
        np.testing.assert_allclose(traj.array, np.tile(traj.array[0], (traj.times.size, 1)), atol=1e-14)


def test_disk_line_and_circle():
    disk = builtin("disk")
    line = integrate(disk.system, MPoint([0, 0, 0, 0.3], [1.5, 0.0]), 5.0)
    for t, m in zip(line.times, line.states):
        np.testing.assert_allclose(m.v, [1.5, 0.0], atol=1e-8)
        np.testing.assert_allclose(m.q[:2], 1.5 * t * np.array([math.cos(0.3), math.sin(0.3)]), atol=1e-8)
    circ = integrate(disk.system, MPoint([0, 0, 0, 0], [1.0, 0.5]), 10.0)
    # x = (R phidot / psidot) sin(psidot t), y = (R phidot / psidot)(1 - cos(psidot t))
    for t, m in zip(circ.times, circ.states):
        np.testing.assert_allclose(m.v, [1.0, 0.5], atol=1e-8)
        np.testing.assert_allclose(m.q[:2], [2 * math.sin(0.5 * t), 2 * (1 - math.cos(0.5 * t))], atol=1e-8)


def test_rk4_order(particle):
    errs = []
    for dt in (0.1, 0.05):
        traj = integrate(particle.system, MPoint([0, 0, 0], [1, 1]), 1.0, method="rk4", dt=dt)
        errs.append(np.abs(traj.final.state - particle_exact(1.0)).max())
    assert 12 <= errs[0] / errs[1] <= 20


@pytest.mark.parametrize("name", NAMES)
def test_rk45_against_fine_rk4(name):
    fx = builtin(name)
    tol = 1e-10
    fast = integrate(fx.system, fx.initial_state, 2.0, tol=tol, n_samples=2)
    ref = integrate(fx.system, fx.initial_state, 2.0, method="rk4", dt=2e-3, n_samples=2)
    assert np.abs(fast.final.state - ref.final.state).max() <= 100 * tol


@pytest.mark.parametrize("name", NAMES)
def test_time_reversal(name):
    fx = builtin(name)
    fwd = integrate(fx.system, fx.initial_state, 3.0)
    f = rhs(fx.system)
    back = integrate(fx.system, fwd.final, 3.0, field_=lambda t, y: -f(t, y))
    np.testing.assert_allclose(back.final.state, fx.initial_state.state, atol=1e-7)


def test_conservation_report_examples(particle):
    traj = integrate(particle.system, MPoint([0, 0, 0], [1, 1]), 1.0)
    drift = conservation_report(
        traj,
        {
            "const": lambda m: 3.0,
            "gauge": particle.observables["f"],
            "p_x": lambda m: float(momenta(particle.system, m)[0]),
        },
    )
    assert drift["const"] == 0.0
    assert drift["gauge"] <= 1e-8
    assert drift["p_x"] == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-8)
    with pytest.raises(ValueError):
        conservation_report(Trajectory(np.zeros(0), []), {"a": lambda m: 0.0})


def test_sample_grid_and_stats(particle):
    traj = integrate(particle.system, particle.initial_state, 2.0, n_samples=11)
    np.testing.assert_array_equal(traj.times, np.linspace(0, 2, 11))
    assert np.all(np.diff(traj.times) > 0)
    assert traj.stats["integrator"] == "rk45" and traj.stats["steps"] > 0


def test_bad_arguments(particle):
    with pytest.raises(ValueError):
        integrate(particle.system, particle.initial_state, 0.0)
    with pytest.raises(ValueError):
        integrate(particle.system, particle.initial_state, 1.0, method="rk4")
    with pytest.raises(ValueError):
        integrate(particle.system, particle.initial_state, 1.0, method="euler")


def test_step_failure_on_blowup():
    # y' = y^2 from y=1 blows up at t=1
    f = lambda t, y: y**2
    with pytest.raises(StepFailure):
        dopri5_solve(f, [1.0], np.array([0.0, 2.0]), tol=1e-10)
    with pytest.raises(StepFailure):
        rk4_solve(f, [1.0], np.array([0.0, 2.0]), dt=0.01)


def test_dopri5_exponential():
    out, stats = dopri5_solve(lambda t, y: -y, [1.0], np.linspace(0, 5, 6), tol=1e-10)
    np.testing.assert_allclose(out[:, 0], np.exp(-np.linspace(0, 5, 6)), rtol=1e-8)
    out4, _ = rk4_solve(lambda t, y: -y, [1.0], np.array([0.0, 0.25, 1.0]), dt=0.1)
    np.testing.assert_allclose(out4[:, 0], np.exp(-np.array([0.0, 0.25, 1.0])), rtol=1e-5)

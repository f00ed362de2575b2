"""Particle on the y-twisted plane: compare the integrator with the closed form.

With q0 = 0 and v0 = (1, 1) the motion is x = asinh(t), y = t, z = sqrt(1+t^2) - 1,
so p_x = 1/sqrt(1+t^2). Prints the max error and the drift of the conserved quantities.
"""

import argparse
import math

import numpy as np

from holomenta.integrate import conservation_report, integrate
from holomenta.mechanics import MPoint, hamiltonian_M, momenta
from holomenta.systems import builtin


def exact(t: float) -> np.ndarray:
    return np.array([math.asinh(t), t, math.sqrt(1 + t * t) - 1])


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-final", type=float, default=10.0)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args()

    fx = builtin("particle")
    traj = integrate(fx.system, MPoint([0, 0, 0], [1, 1]), args.t_final, tol=args.tol)
    q_err = max(np.abs(m.q - exact(t)).max() for t, m in zip(traj.times, traj.states))
    px_err = max(abs(momenta(fx.system, m)[0] - 1 / math.sqrt(1 + t * t)) for t, m in zip(traj.times, traj.states))
    obs = dict(fx.observables, energy=lambda m: hamiltonian_M(fx.system, m))
    print(f"max position error   {q_err:.3e}")
    print(f"max p_x error        {px_err:.3e}")
    for name, d in conservation_report(traj, obs).items():
        print(f"drift {name:<14s} {d:.3e}")
    print(f"steps {traj.stats['steps']}, rejected {traj.stats['rejected']}")


if __name__ == "__main__":
    main()

"""Time integration of the nonholonomic vector field on (q, v) and drift statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .exprlang import EvaluationError
from .geomcore import NonFiniteError
from .mechanics import DegenerateForm, MechanicalSystem, MPoint, rhs as nh_rhs

RHS = Callable[[float, np.ndarray], np.ndarray]


class StepFailure(RuntimeError):
    pass


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[MPoint]
    stats: dict = field(default_factory=dict)

    @property
    def array(self) -> np.ndarray:
        return np.array([m.state for m in self.states])

    @property
    def final(self) -> MPoint:
        return self.states[-1]


def hermite(t0, y0, f0, t1, y1, f1, t) -> np.ndarray:
    """Cubic Hermite interpolant between two accepted steps."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _check_finite(y: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise StepFailure(f"non-finite state at t={t:.6g}")


def rk4_solve(f: RHS, y0, t_eval: np.ndarray, dt: float) -> tuple[np.ndarray, dict]:
    """Classical RK4 with fixed step; states at `t_eval` by cubic Hermite interpolation."""
    y = np.asarray(y0, dtype=float).copy()
    t_eval = np.asarray(t_eval, dtype=float)
    t, t_end = float(t_eval[0]), float(t_eval[-1])
    out = np.empty((t_eval.size, y.size))
    out[0] = y
    idx = 1
    fy = f(t, y)
    steps = 0
    while idx < t_eval.size:
        h = min(dt, t_end - t)
        if t_end - (t + h) < 1e-12 * max(1.0, abs(t_end)):
            h = t_end - t
        k1 = fy
        with np.errstate(over="ignore", invalid="ignore"):
            k2 = f(t + h / 2, y + h / 2 * k1)
            k3 = f(t + h / 2, y + h / 2 * k2)
            k4 = f(t + h, y + h * k3)
            y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(y_new, t + h)
        t_new = t + h if t + h < t_end else t_end
        with np.errstate(over="ignore", invalid="ignore"):
            f_new = f(t_new, y_new)
        while idx < t_eval.size and t_eval[idx] <= t_new + 1e-12 * max(1.0, abs(t_new)):
            if abs(t_eval[idx] - t_new) <= 1e-12 * max(1.0, abs(t_new)):
                out[idx] = y_new
            else:
                out[idx] = hermite(t, y, fy, t_new, y_new, f_new, t_eval[idx])
            idx += 1
        t, y, fy = t_new, y_new, f_new
        steps += 1
    return out, {"integrator": "rk4", "dt": dt, "steps": steps, "rejected": 0}


def dopri5_solve(
    f: RHS,
    y0,
    t_eval: np.ndarray,
    tol: float = 1e-10,
    h0: float = 1e-3,
    h_min: float = 1e-12,
    max_steps: int = 1_000_000,
) -> tuple[np.ndarray, dict]:
    """Dormand-Prince 5(4) with mixed absolute/relative error control.

    Steps are shortened so that every requested time is hit exactly.
    """
    y = np.asarray(y0, dtype=float).copy()
    t_eval = np.asarray(t_eval, dtype=float)
    t = float(t_eval[0])
    out = np.empty((t_eval.size, y.size))
    out[0] = y
    k = np.empty((7, y.size))
    k[0] = f(t, y)
    h = h0
    steps = rejected = 0
    for idx in range(1, t_eval.size):
        target = float(t_eval[idx])
        while t < target:
            if steps + rejected > max_steps:
                raise StepFailure("maximum number of steps exceeded")
            clipped = h >= target - t
            hs = target - t if clipped else h
            # overflow in a trial step is handled as a rejection below
            with np.errstate(over="ignore", invalid="ignore"):
                for i in range(1, 7):
                    k[i] = f(t + _C[i] * hs, y + hs * (np.asarray(_A[i]) @ k[:i]))
                y_new = y + hs * (_B5 @ k)
                err_vec = hs * (_E @ k)
                scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
                err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if not np.isfinite(err):
                err = np.inf
            if err <= 1.0:
                _check_finite(y_new, t + hs)
                t = target if clipped else t + hs
                y = y_new
                k[0] = k[6]  # FSAL
                steps += 1
                factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                if not clipped or factor < 1.0:
                    h = hs * factor
            else:
                rejected += 1
                h = hs * max(0.2, 0.9 * err ** -0.2)
                if h < h_min:
                    raise StepFailure(f"step size underflow at t={t:.6g} (h={h:.3g})")
        out[idx] = y
    return out, {"integrator": "rk45", "tol": tol, "steps": steps, "rejected": rejected}


def integrate(
    sys: MechanicalSystem,
    m0: MPoint,
    t_final: float,
    method: str = "rk45",
    tol: float = 1e-10,
    dt: float | None = None,
    n_samples: int = 201,
    h0: float = 1e-3,
    h_min: float = 1e-12,
    field_: RHS | None = None,
) -> Trajectory:
    """Integrate X_nh from m0 over [0, t_final]; states reported on a uniform grid."""
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    f = field_ or nh_rhs(sys)
    t_eval = np.linspace(0.0, t_final, n_samples)
    if method == "rk4":
        if dt is None or dt <= 0:
            raise ValueError("rk4 requires a positive dt")
        solve = lambda: rk4_solve(f, m0.state, t_eval, dt)
    elif method == "rk45":
        solve = lambda: dopri5_solve(f, m0.state, t_eval, tol=tol, h0=h0, h_min=h_min)
    else:
        raise ValueError(f"unknown integrator {method!r}")
    try:
        ys, stats = solve()
    except (NonFiniteError, EvaluationError, DegenerateForm) as exc:
        # the trajectory left the region where the model is defined
        raise StepFailure(str(exc)) from exc
    n = sys.n
    return Trajectory(t_eval, [MPoint(y[:n], y[n:]) for y in ys], stats)


def conservation_report(traj: Trajectory, observables: Mapping[str, Callable[[MPoint], float]]) -> dict[str, float]:
    """drift(f) = max_t |f(m(t)) - f(m(0))| / max(1, |f(m(0))|)."""
    if not traj.states:
        raise ValueError("empty trajectory")
    out = {}
    for name, fn in observables.items():
        vals = np.array([fn(m) for m in traj.states])
        out[name] = float(np.max(np.abs(vals - vals[0])) / max(1.0, abs(vals[0])))
    return out

"""Builtin example systems with closed-form conserved quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .config import SystemConfig
from .mechanics import MechanicalSystem, MPoint, momenta
from .symmetry import LieAlgebraAction


class UnknownBuiltin(KeyError):
    def __str__(self) -> str:
        return f"unknown builtin {self.args[0]!r}"


@dataclass(frozen=True)
class BuiltinFixture:
    name: str
    system: MechanicalSystem
    action: LieAlgebraAction
    complements: dict[str, Callable[[np.ndarray], np.ndarray]]
    complement: str
    observables: dict[str, Callable[[MPoint], float]]
    expected_rank_s: int
    expected_vertical_symmetry: dict[str, bool]
    expected_verdicts: dict[str, tuple[str, ...]]
    chart_box: np.ndarray
    q0: np.ndarray
    v0: np.ndarray
    v_range: float = 1.0
    params: dict[str, float] = field(default_factory=dict)

    def with_complement(self, name: str) -> "BuiltinFixture":
        if name not in self.complements:
            raise KeyError(f"{self.name} has no complement {name!r}; choose from {sorted(self.complements)}")
        return replace(self, system=self.system.with_complement(self.complements[name]), complement=name)

    @property
    def initial_state(self) -> MPoint:
        return MPoint(self.q0, self.v0)

    def sample_q(self, count: int, seed: int = 0) -> list[np.ndarray]:
        rng = np.random.default_rng(seed)
        lo, hi = self.chart_box[:, 0], self.chart_box[:, 1]
        return [lo + (hi - lo) * rng.random(lo.size) for _ in range(count)]

    def sample_states(self, count: int, seed: int = 0) -> list[MPoint]:
        rng = np.random.default_rng(seed)
        lo, hi = self.chart_box[:, 0], self.chart_box[:, 1]
        out = []
        for _ in range(count):
            q = lo + (hi - lo) * rng.random(lo.size)
            v = rng.uniform(-self.v_range, self.v_range, self.system.r)
            out.append(MPoint(q, v))
        return out


# -- nonholonomic particle ---------------------------------------------------

PARTICLE_CONFIG = {
    "name": "particle",
    "coordinates": ["x", "y", "z"],
    "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
    "distribution": [["0", "1", "0"], ["1", "0", "y"]],
    "vertical_complement": [["0", "0", "1"]],
    "action_generators": [["1", "0", "0"], ["0", "0", "1"]],
}

# span{(1 - sqrt(1+y^2)) dx + y dz}, rescaled by 1/y so the frame stays regular at y = 0
PARTICLE_W_RESCALED = [["-y/(1+sqrt(1+y^2))", "0", "1"]]


def _particle(params: dict[str, float]) -> BuiltinFixture:
    system, action = SystemConfig.from_dict(PARTICLE_CONFIG).build()
    rescaled = SystemConfig.from_dict({**PARTICLE_CONFIG, "vertical_complement": PARTICLE_W_RESCALED}).build()[0]

    def f(m: MPoint) -> float:
        return float(momenta(system, m)[0] * math.sqrt(1.0 + m.q[1] ** 2))

    return BuiltinFixture(
        name="particle",
        system=system,
        action=action,
        complements={"Wz": system.w_basis, "Wrescaled": rescaled.w_basis},
        complement="Wz",
        observables={
            "f": f,
            "p_y": lambda m: float(momenta(system, m)[1]),
        },
        expected_rank_s=1,
        expected_vertical_symmetry={"Wz": True, "Wrescaled": False},
        expected_verdicts={"Wz": ("residual_failed",), "Wrescaled": ("empirical_only",)},
        chart_box=np.array([[-1.0, 1.0], [-2.0, 2.0], [-1.0, 1.0]]),
        q0=np.zeros(3),
        v0=np.array([1.0, 1.0]),
        params=dict(params),
    )


# -- vertical rolling disk -----------------------------------------------------

DISK_CONFIG = {
    "name": "disk",
    "coordinates": ["x", "y", "phi", "psi"],
    "metric": [["1", "0", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "I", "0"], ["0", "0", "0", "J"]],
    "distribution": [["R*cos(psi)", "R*sin(psi)", "1", "0"], ["0", "0", "0", "1"]],
    "vertical_complement": [["1", "0", "0", "0"], ["0", "1", "0", "0"]],
    # translations, rotation of the plane (shifts the heading psi), rolling angle
    "action_generators": [
        ["1", "0", "0", "0"],
        ["0", "1", "0", "0"],
        ["-y", "x", "0", "1"],
        ["0", "0", "1", "0"],
    ],
    "params": {"I": 1.0, "J": 1.0, "R": 1.0},
}


def _disk(params: dict[str, float]) -> BuiltinFixture:
    p = {**DISK_CONFIG["params"], **params}
    system, action = SystemConfig.from_dict({**DISK_CONFIG, "params": p}).build()
    inertia, radius = p["I"], p["R"]

    return BuiltinFixture(
        name="disk",
        system=system,
        action=action,
        complements={"W": system.w_basis},
        complement="W",
        observables={
            "J1": lambda m: float((radius**2 / inertia + 1.0) * momenta(system, m)[2]),
            "J2": lambda m: float(momenta(system, m)[3]),
        },
        expected_rank_s=2,
        expected_vertical_symmetry={"W": True},
        expected_verdicts={"W": ("certified", "certified")},
        chart_box=np.array([[-2.0, 2.0], [-2.0, 2.0], [0.0, 2 * math.pi], [0.0, 2 * math.pi]]),
        q0=np.zeros(4),
        v0=np.array([1.0, 0.5]),
        params=p,
    )


# -- Chaplygin ball ------------------------------------------------------------
# Chart (phi, theta, psi, x, y), orientation g = Rz(phi) Rx(theta) Rz(psi).


def rotation(phi: float, theta: float, psi: float) -> np.ndarray:
    def rz(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    c, s = math.cos(theta), math.sin(theta)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    return rz(phi) @ rx @ rz(psi)


def body_rate_matrix(theta: float, psi: float) -> np.ndarray:
    """B with Omega = B (phi', theta', psi') for the ZXZ chart."""
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(psi), math.cos(psi)
    return np.array([[st * sp, cp, 0.0], [st * cp, -sp, 0.0], [ct, 0.0, 1.0]])


def _inverse_rate_matrix(theta: float, psi: float) -> np.ndarray:
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(psi), math.cos(psi)
    return np.array([[sp / st, cp / st, 0.0], [cp, -sp, 0.0], [-ct * sp / st, -ct * cp / st, 1.0]])


def gamma_of(q) -> np.ndarray:
    _, theta, psi = q[0], q[1], q[2]
    st = math.sin(theta)
    return np.array([st * math.sin(psi), st * math.cos(psi), math.cos(theta)])


def _ball(params: dict[str, float]) -> BuiltinFixture:
    p = {"I1": 2.0, "I2": 3.0, "I3": 4.0, "m": 1.0, "r": 1.0, **params}
    inertia = np.diag([p["I1"], p["I2"], p["I3"]])
    mass, radius = p["m"], p["r"]

    def frame(q):
        g = rotation(q[0], q[1], q[2])
        X = np.zeros((5, 3))
        X[:3] = _inverse_rate_matrix(q[1], q[2])
        X[3] = radius * g[1]
        X[4] = -radius * g[0]
        return X

    def metric(q):
        b = body_rate_matrix(q[1], q[2])
        k = np.zeros((5, 5))
        k[:3, :3] = b.T @ inertia @ b
        k[3, 3] = k[4, 4] = mass
        return k

    def complement(q):
        w = np.zeros((5, 2))
        w[3, 0] = w[4, 1] = 1.0
        return w

    def generators(q):
        e = np.zeros((5, 3))
        e[0, 0] = 1.0
        e[3, 0] = -q[4]
        e[4, 0] = q[3]
        e[3, 1] = 1.0
        e[4, 2] = 1.0
        return e

    system = MechanicalSystem(("phi", "theta", "psi", "x", "y"), metric, frame, complement, r=3, name="ball")
    action = LieAlgebraAction(3, generators)

    def k_body(m: MPoint) -> np.ndarray:
        return system.frame(m.q).T @ momenta(system, m)

    return BuiltinFixture(
        name="ball",
        system=system,
        action=action,
        complements={"W": complement},
        complement="W",
        observables={
            "gamma_K": lambda m: float(gamma_of(m.q) @ k_body(m)),
            "K_norm2": lambda m: float(k_body(m) @ k_body(m)),
        },
        expected_rank_s=1,
        expected_vertical_symmetry={"W": True},
        expected_verdicts={"W": ("certified",)},
        chart_box=np.array([[0.0, 2 * math.pi], [0.2, math.pi - 0.2], [0.0, 2 * math.pi], [-2.0, 2.0], [-2.0, 2.0]]),
        q0=np.array([0.3, 1.0, 0.5, 0.0, 0.0]),
        v0=np.array([0.4, -0.3, 0.6]),
        params=p,
    )


_BUILDERS = {"particle": _particle, "disk": _disk, "ball": _ball}
NAMES = tuple(_BUILDERS)


def builtin(name: str, complement: str | None = None, **params: float) -> BuiltinFixture:
    if name not in _BUILDERS:
        raise UnknownBuiltin(name)
    fixture = _BUILDERS[name](params)
    return fixture.with_complement(complement) if complement else fixture


def inertia_of(fixture: BuiltinFixture) -> np.ndarray:
    return np.diag([fixture.params["I1"], fixture.params["I2"], fixture.params["I3"]])


def hat(w) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def ball_body_state(fixture: BuiltinFixture, m: MPoint) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(K, gamma, Omega) of a ball state; K_i = p . X_i and Omega = v."""
    k = fixture.system.frame(m.q).T @ momenta(fixture.system, m)
    return k, gamma_of(m.q), np.array(m.v, dtype=float)


def ball_omega_from_k(fixture: BuiltinFixture, k: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Invert K = I Omega + m r^2 (Omega - <gamma, Omega> gamma)."""
    mr2 = fixture.params["m"] * fixture.params["r"] ** 2
    mat = inertia_of(fixture) + mr2 * (np.eye(3) - np.outer(gamma, gamma))
    return np.linalg.solve(mat, k)


def ball_body_oracle(fixture: BuiltinFixture, m0: MPoint, t_eval: np.ndarray, tol: float = 1e-12):
    """Integrate K' = K x Omega, gamma' = gamma x Omega directly; returns (K, gamma) rows at t_eval."""
    from scipy.integrate import solve_ivp

    k0, g0, _ = ball_body_state(fixture, m0)

    def f(t, y):
        k, g = y[:3], y[3:]
        om = ball_omega_from_k(fixture, k, g)
        return np.concatenate([np.cross(k, om), np.cross(g, om)])

    sol = solve_ivp(f, (t_eval[0], t_eval[-1]), np.concatenate([k0, g0]), method="DOP853", t_eval=t_eval, rtol=tol, atol=tol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:3].T, sol.y[3:].T

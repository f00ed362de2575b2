"""Constrained Hamiltonian dynamics on M = kappa^flat(D) in quasi-velocity coordinates.

A point of M is stored as (q, v): v are the components of qdot in the
frame X(q) of D, so the canonical momenta are p = kappa(q) X(q) v and the
constraints hold identically. The C-distribution is spanned at (q, v) by the
chart vectors (X_j, 0) and (0, e_j); the equations of motion are solved
pointwise as a dense 2r x 2r linear system in that frame.

Sign convention: Omega_Q = dq ^ dp and X_f is defined by
Omega(X_f, Y) = df(Y) for Y in C, so X_H is the forward flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import geomcore
from .geomcore import SubspaceBasis

Matrix = Callable[[np.ndarray], np.ndarray]
Observable = Callable[[np.ndarray, np.ndarray], float]

COND_LIMIT = 1e12


class DegenerateForm(np.linalg.LinAlgError):
    pass


class ModelError(ValueError):
    pass


def _zero_potential(q: np.ndarray) -> float:
    return 0.0


@dataclass(frozen=True)
class MechanicalSystem:
    """Chart data of a nonholonomic system.

    `metric(q)` is the n x n kinetic metric, `d_basis(q)` an n x r matrix whose
    columns frame D, `w_basis(q)` an n x (n - r) matrix framing a complement W.
    """

    coord_names: tuple[str, ...]
    metric: Matrix
    d_basis: Matrix
    w_basis: Matrix
    r: int
    potential: Callable[[np.ndarray], float] = _zero_potential
    tol: float = geomcore.DEFAULT_TOL
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.coord_names)

    def with_complement(self, w_basis: Matrix) -> "MechanicalSystem":
        return replace(self, w_basis=w_basis)

    def frame(self, q) -> np.ndarray:
        return np.asarray(self.d_basis(np.asarray(q, dtype=float)), dtype=float).reshape(self.n, self.r)

    def complement(self, q) -> np.ndarray:
        return np.asarray(self.w_basis(np.asarray(q, dtype=float)), dtype=float).reshape(self.n, self.n - self.r)

    def kappa(self, q) -> np.ndarray:
        return np.asarray(self.metric(np.asarray(q, dtype=float)), dtype=float).reshape(self.n, self.n)

    def d_space(self, q) -> SubspaceBasis:
        return SubspaceBasis(self.n, self.frame(q).T, self.tol)

    def w_space(self, q) -> SubspaceBasis:
        return SubspaceBasis(self.n, self.complement(q).T, self.tol)

    def project_d(self, q, vec) -> np.ndarray:
        """P_D along W."""
        ca, _ = geomcore.decompose(vec, self.d_space(q), self.w_space(q))
        return self.frame(q) @ ca

    def validate(self, samples: Sequence[np.ndarray]) -> None:
        """Raise ModelError unless the metric is SPD and D + W = R^n at every sample."""
        for q in samples:
            k = self.kappa(q)
            if not np.allclose(k, k.T, rtol=1e-12, atol=1e-12):
                raise ModelError(f"metric not symmetric at q={list(q)}")
            if np.linalg.eigvalsh(0.5 * (k + k.T)).min() <= 0:
                raise ModelError(f"metric not positive definite at q={list(q)}")
            try:
                geomcore.decompose(np.zeros(self.n), self.d_space(q), self.w_space(q))
            except (geomcore.DirectSumViolation, ValueError) as exc:
                raise ModelError(f"D and W do not split R^n at q={list(q)}: {exc}") from exc


@dataclass
class MPoint:
    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).ravel()
        self.v = np.asarray(self.v, dtype=float).ravel()
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v))):
            raise ValueError("MPoint entries must be finite")

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.q, self.v])

    @classmethod
    def from_state(cls, y, n: int) -> "MPoint":
        y = np.asarray(y, dtype=float)
        return cls(y[:n], y[n:])


@dataclass
class CTangent:
    """Tangent vector to M with base part in D, in (q, v) chart components."""

    qdot: np.ndarray
    vdot: np.ndarray
    residual: float = field(default=0.0, compare=False)

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.qdot, self.vdot])

    def __add__(self, other: "CTangent") -> "CTangent":
        return CTangent(self.qdot + other.qdot, self.vdot + other.vdot)

    def __sub__(self, other: "CTangent") -> "CTangent":
        return CTangent(self.qdot - other.qdot, self.vdot - other.vdot)

    def __mul__(self, c: float) -> "CTangent":
        return CTangent(c * self.qdot, c * self.vdot)

    __rmul__ = __mul__


def momenta(sys: MechanicalSystem, m: MPoint) -> np.ndarray:
    return sys.kappa(m.q) @ (sys.frame(m.q) @ m.v)


def hamiltonian_M(sys: MechanicalSystem, m: MPoint) -> float:
    xv = sys.frame(m.q) @ m.v
    return float(0.5 * xv @ (sys.kappa(m.q) @ xv) + sys.potential(m.q))


def hamiltonian(sys: MechanicalSystem) -> Observable:
    return lambda q, v: hamiltonian_M(sys, MPoint(q, v))


@dataclass
class _Jet:
    """Everything at one point of M that needs q-derivatives, from a single stencil sweep."""

    X: np.ndarray
    kappa: np.ndarray
    p: np.ndarray
    dp_dq: np.ndarray
    dH_dq: np.ndarray


def _jet(sys: MechanicalSystem, m: MPoint) -> _Jet:
    n, v = sys.n, m.v

    def stacked(q):
        xv = sys.frame(q) @ v
        p = sys.kappa(q) @ xv
        return np.concatenate([p, xv, [float(sys.potential(q))]])

    X = sys.frame(m.q)
    k = sys.kappa(m.q)
    xv = X @ v
    p = k @ xv
    jac = geomcore.jacobian(stacked, m.q)
    dp_dq = jac[:n]
    dxv_dq = jac[n : 2 * n]
    dU = jac[2 * n]
    dH_dq = 0.5 * (dp_dq.T @ xv + dxv_dq.T @ p) + dU
    return _Jet(X, k, p, dp_dq, dH_dq)


def c_basis(sys: MechanicalSystem, m: MPoint, jet: _Jet | None = None) -> np.ndarray:
    """The 2r vectors spanning C at the embedded point, rows (dq, dp) in T(T*Q).

    Row j < r is the image of the chart vector (X_j, 0); row r + j of (0, e_j).
    """
    jet = jet or _jet(sys, m)
    n, r = sys.n, sys.r
    out = np.zeros((2 * r, 2 * n))
    kx = jet.kappa @ jet.X
    for j in range(r):
        out[j, :n] = jet.X[:, j]
        out[j, n:] = jet.dp_dq @ jet.X[:, j]
        out[r + j, n:] = kx[:, j]
    return out


def canonical_two_form(a: np.ndarray, b: np.ndarray) -> float:
    """Omega_Q((dq_a, dp_a), (dq_b, dp_b)) = dq_a . dp_b - dq_b . dp_a."""
    n = a.size // 2
    return float(a[:n] @ b[n:] - b[:n] @ a[n:])


def _form_matrix(basis: np.ndarray) -> np.ndarray:
    n = basis.shape[1] // 2
    dq, dp = basis[:, :n], basis[:, n:]
    a = dq @ dp.T
    return a - a.T


def constrained_two_form(sys: MechanicalSystem, m: MPoint, jet: _Jet | None = None, check: bool = True) -> np.ndarray:
    a = _form_matrix(c_basis(sys, m, jet))
    if check:
        _check_condition(a)
    return a


def _check_condition(a: np.ndarray) -> float:
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateForm(f"restricted two-form is degenerate (condition number {cond:.3g})")
    return cond


def _solve(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    # Omega(X, c_b) = b_b for all b  <=>  A^T w = b
    w = np.linalg.solve(a.T, b)
    scale = max(np.linalg.norm(b), np.linalg.norm(a) * np.linalg.norm(w))
    residual = float(np.linalg.norm(a.T @ w - b) / scale) if scale > 0 else 0.0
    return w, residual


def _as_tangent(sys: MechanicalSystem, X: np.ndarray, w: np.ndarray, residual: float) -> CTangent:
    r = sys.r
    return CTangent(X @ w[:r], w[r:].copy(), residual)


def differential_on_c(sys: MechanicalSystem, m: MPoint, f: Observable, jet: _Jet | None = None) -> np.ndarray:
    """df evaluated on the C basis: (grad_q f . X_j, df/dv_j)."""
    jet = jet or _jet(sys, m)
    gq = geomcore.gradient(lambda q: f(q, m.v), m.q)
    gv = geomcore.gradient(lambda v: f(m.q, v), m.v)
    return np.concatenate([jet.X.T @ gq, gv])


def ham_vector_field(sys: MechanicalSystem, m: MPoint, f: Observable, jet: _Jet | None = None) -> CTangent:
    """Nonholonomic Hamiltonian vector field X_f: Omega_M(X_f, .)|_C = df|_C."""
    jet = jet or _jet(sys, m)
    a = constrained_two_form(sys, m, jet)
    w, res = _solve(a, differential_on_c(sys, m, f, jet))
    return _as_tangent(sys, jet.X, w, res)


def nonholonomic_vector_field(sys: MechanicalSystem, m: MPoint) -> CTangent:
    jet = _jet(sys, m)
    a = constrained_two_form(sys, m, jet)
    # dH on C: grad_q H . X_j and dH/dv = X^T kappa X v = X^T p
    b = np.concatenate([jet.X.T @ jet.dH_dq, jet.X.T @ jet.p])
    w, res = _solve(a, b)
    return _as_tangent(sys, jet.X, w, res)


def pi_sharp(sys: MechanicalSystem, m: MPoint, f: Observable) -> CTangent:
    """pi_nh^sharp(df) = -X_f."""
    return -1.0 * ham_vector_field(sys, m, f)


def derivative_along(f: Observable, m: MPoint, t: CTangent) -> float:
    gq = geomcore.gradient(lambda q: f(q, m.v), m.q)
    gv = geomcore.gradient(lambda v: f(m.q, v), m.v)
    return float(gq @ t.qdot + gv @ t.vdot)


def nh_bracket(sys: MechanicalSystem, m: MPoint, f: Observable, g: Observable) -> float:
    """{f, g}_nh = -X_f(g)."""
    return -derivative_along(g, m, ham_vector_field(sys, m, f))


def rhs(sys: MechanicalSystem) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side y' = X_nh(y) on the stacked state y = (q, v)."""
    n = sys.n

    def f(t: float, y: np.ndarray) -> np.ndarray:
        return nonholonomic_vector_field(sys, MPoint(y[:n], y[n:])).state

    return f

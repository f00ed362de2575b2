"""Symmetry data: algebra splittings, momentum maps, M-cotangent lifts, W-curvature.

Algebra elements and sections are coefficient vectors over the fixed basis
eta_1..eta_s of g whose infinitesimal generators are the columns of
`act.generators(q)`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import subspace_angles

from . import geomcore
from .geomcore import SubspaceBasis
from .mechanics import (
    CTangent,
    MechanicalSystem,
    MPoint,
    Observable,
    _check_condition,
    _form_matrix,
    _jet,
    c_basis,
    ham_vector_field,
    momenta,
    nonholonomic_vector_field,
)

log = logging.getLogger(__name__)

Section = Callable[[np.ndarray], np.ndarray]

RESIDUAL_TOL = 1e-7
DRIFT_TOL = 1e-8
ANGLE_TOL = 1e-7


class SplitFailure(ValueError):
    pass


class DimensionAssumptionFailure(ValueError):
    pass


@dataclass(frozen=True)
class LieAlgebraAction:
    """Infinitesimal generators of a free action; `generators(q)` is n x s."""

    s: int
    generators: Callable[[np.ndarray], np.ndarray]

    def at(self, q) -> np.ndarray:
        g = np.asarray(self.generators(np.asarray(q, dtype=float)), dtype=float)
        if g.ndim == 2 and g.shape[1] == self.s:
            return g
        return g.reshape(-1, self.s)

    def generator(self, q, eta) -> np.ndarray:
        return self.at(q) @ np.asarray(eta, dtype=float)

    def is_free(self, q, tol: float = geomcore.DEFAULT_TOL) -> bool:
        return geomcore.rank(self.at(q).T, tol) == self.s


@dataclass
class AlgebraSplitting:
    q: np.ndarray
    gS_basis: np.ndarray
    gW_basis: np.ndarray

    @property
    def rank_s(self) -> int:
        return self.gS_basis.shape[0]


@dataclass
class GaugeMomentumReport:
    eta: np.ndarray
    section_samples: list[tuple[np.ndarray, np.ndarray]]
    jk_residual_max: float
    drift: float
    verdict: str
    observable: Callable[[MPoint], float] = field(repr=False, compare=False, default=None)
    lift_hamiltonian: Callable[[MPoint], float] = field(repr=False, compare=False, default=None)

    def to_json(self) -> dict:
        return {
            "eta": [float(x) for x in self.eta],
            "jk_residual_max": _finite_or_none(self.jk_residual_max),
            "drift": _finite_or_none(self.drift),
            "verdict": self.verdict,
        }


def _finite_or_none(x: float):
    return float(x) if np.isfinite(x) else None


# -- invariance diagnostics --------------------------------------------------


def invariance_residuals(sys: MechanicalSystem, act: LieAlgebraAction, q) -> dict[str, float]:
    """Lie-derivative residuals of metric, potential, D and W along each generator."""
    q = np.asarray(q, dtype=float)
    n = sys.n
    out = {"metric": 0.0, "potential": 0.0, "D": 0.0, "W": 0.0}
    dk = geomcore.jacobian(lambda x: sys.kappa(x).ravel(), q).reshape(n, n, n)
    du = geomcore.gradient(lambda x: float(sys.potential(x)), q)
    k = sys.kappa(q)
    d_space = sys.d_space(q).orthonormalized().matrix
    w_space = sys.w_space(q).orthonormalized().matrix if sys.r < n else np.zeros((n, 0))
    for a in range(act.s):
        eta = lambda x, a=a: act.at(x)[:, a]
        e = eta(q)
        de = geomcore.jacobian(eta, q)
        lie_k = np.einsum("ijk,k->ij", dk, e) + de.T @ k + k @ de
        out["metric"] = max(out["metric"], float(np.abs(lie_k).max()))
        out["potential"] = max(out["potential"], abs(float(du @ e)))
        for j in range(sys.r):
            br = geomcore.lie_bracket(eta, lambda x, j=j: sys.frame(x)[:, j], q)
            out["D"] = max(out["D"], float(np.linalg.norm(br - d_space @ (d_space.T @ br))))
        for j in range(n - sys.r):
            br = geomcore.lie_bracket(eta, lambda x, j=j: sys.complement(x)[:, j], q)
            out["W"] = max(out["W"], float(np.linalg.norm(br - w_space @ (w_space.T @ br))))
    return out


# -- splittings --------------------------------------------------------------


def dimension_assumption(sys: MechanicalSystem, act: LieAlgebraAction, q) -> bool:
    """T_qQ = D_q + V_q."""
    vecs = np.hstack([sys.frame(q), act.at(q)])
    return geomcore.rank(vecs.T, sys.tol) == sys.n


def _preimage(gens: np.ndarray, target: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (rows) of {c : gens c in span(target)}."""
    s = gens.shape[1]
    if s == 0:
        return np.zeros((0, 0))
    ns = geomcore.null_space(np.hstack([gens, -target]), tol)
    return SubspaceBasis.span(ns[:s].T, s, tol).vectors


def algebra_splitting(sys: MechanicalSystem, act: LieAlgebraAction, q) -> AlgebraSplitting:
    q = np.asarray(q, dtype=float)
    gens = act.at(q)
    gs = _preimage(gens, sys.frame(q), sys.tol)
    gw = _preimage(gens, sys.complement(q), sys.tol)
    if gs.shape[0] + gw.shape[0] != act.s or geomcore.rank(np.vstack([gs, gw]), sys.tol) != act.s:
        raise SplitFailure(
            f"g_S ({gs.shape[0]}) + g_W ({gw.shape[0]}) does not split g (dim {act.s}) at q={list(q)}"
        )
    return AlgebraSplitting(q, gs, gw)


def project_g_s(sys: MechanicalSystem, act: LieAlgebraAction, q, eta) -> np.ndarray:
    """Coefficients of P_{g_S}(eta): the unique element whose generator is P_D(eta_Q).

    The complementary part eta - P_{g_S}(eta) generates the W-component, so it
    lies in g_W; a W-component that is not vertical is a SplitFailure.
    """
    q = np.asarray(q, dtype=float)
    eta = np.asarray(eta, dtype=float)
    gens = act.at(q)
    target = gens @ eta
    ca, _ = geomcore.decompose(target, sys.d_space(q), sys.w_space(q))
    dpart = sys.frame(q) @ ca
    coeffs, *_ = np.linalg.lstsq(gens, dpart, rcond=None)
    scale = max(1.0, float(np.linalg.norm(target)))
    if np.linalg.norm(gens @ coeffs - dpart) > 1e-8 * scale:
        raise SplitFailure(f"D-component of eta_Q is not vertical at q={list(q)}")
    return coeffs


def projected_section(sys: MechanicalSystem, act: LieAlgebraAction, eta) -> Section:
    """The section q -> P_{g_S}(eta)."""
    eta = np.asarray(eta, dtype=float)
    return lambda q: project_g_s(sys, act, q, eta)


def vertical_symmetry_condition(sys: MechanicalSystem, act: LieAlgebraAction, samples: Sequence) -> bool:
    if len(samples) < 2:
        raise ValueError("need at least two sample points")
    bases = [algebra_splitting(sys, act, q).gW_basis for q in samples]
    ref = bases[0]
    for b in bases[1:]:
        if b.shape != ref.shape:
            return False
        if ref.shape[0] and np.max(subspace_angles(ref.T, b.T)) > ANGLE_TOL:
            return False
    return True


# -- momentum map and curvature ----------------------------------------------


def momentum_pairing(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint, xi_coeffs) -> float:
    """<J, xi>(m) = p(m) . xi_Q(q)."""
    return float(momenta(sys, m) @ act.generator(m.q, xi_coeffs))


def a_w(sys: MechanicalSystem, act: LieAlgebraAction, q, tangent) -> np.ndarray:
    """g-valued one-form: coefficients zeta with zeta_Q = W-part of the tangent vector."""
    q = np.asarray(q, dtype=float)
    _, cw = geomcore.decompose(tangent, sys.d_space(q), sys.w_space(q))
    wpart = sys.complement(q) @ cw
    gens = act.at(q)
    zeta, *_ = np.linalg.lstsq(gens, wpart, rcond=None)
    if np.linalg.norm(gens @ zeta - wpart) > 1e-8 * max(1.0, np.linalg.norm(wpart)):
        raise SplitFailure("W-component is not vertical")
    return zeta


def k_w(sys: MechanicalSystem, act: LieAlgebraAction, q, a, b) -> np.ndarray:
    """W-curvature on base vectors: -A_W([P_D a, P_D b]) with constant extensions projected to D."""
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ua = lambda x: sys.project_d(x, a)
    ub = lambda x: sys.project_d(x, b)
    return -a_w(sys, act, q, geomcore.lie_bracket(ua, ub, q))


def jk_pairing(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint, u: CTangent, w: CTangent) -> float:
    """<J, K_W>(u, w); depends only on the base parts of u and w."""
    zeta = k_w(sys, act, m.q, u.qdot, w.qdot)
    return momentum_pairing(sys, act, m, zeta)


def jk_form_matrix(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint) -> np.ndarray:
    """Matrix of Omega_M + <J, K_W> on the C basis."""
    jet = _jet(sys, m)
    a = _form_matrix(c_basis(sys, m, jet))
    r = sys.r
    for i in range(r):
        for j in range(i + 1, r):
            val = momentum_pairing(sys, act, m, k_w(sys, act, m.q, jet.X[:, i], jet.X[:, j]))
            a[i, j] += val
            a[j, i] -= val
    return a


def jk_condition_number(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint) -> float:
    return float(np.linalg.cond(jk_form_matrix(sys, act, m)))


# -- lifts ---------------------------------------------------------------------


def section_momentum(sys: MechanicalSystem, act: LieAlgebraAction, xi: Section) -> Observable:
    """f(q, v) = p(q, v) . xi_Q(q)."""

    def f(q, v):
        return float(sys.kappa(q) @ (sys.frame(q) @ v) @ act.generator(q, xi(q)))

    return f


def m_cotangent_lift(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint, xi: Section) -> CTangent:
    """M-cotangent lift of xi_Q, computed as -pi_nh^sharp(d<J^nh, xi>)."""
    return ham_vector_field(sys, m, section_momentum(sys, act, xi))


def generator_on_M(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint, eta) -> CTangent:
    """Infinitesimal generator of a constant element on M via the canonical cotangent lift.

    In (q, v): qdot = eta_Q(q) and vdot solves kappa X vdot = -(D eta_Q)^T p - (dp/dq) eta_Q.
    The result is tangent to M for any action preserving kappa and D.
    """
    eta = np.asarray(eta, dtype=float)
    jet = _jet(sys, m)
    field_ = lambda x: act.generator(x, eta)
    e = field_(m.q)
    de = geomcore.jacobian(field_, m.q)
    rhs = -de.T @ jet.p - jet.dp_dq @ e
    kx = jet.kappa @ jet.X
    vdot, *_ = np.linalg.lstsq(kx, rhs, rcond=None)
    res = float(np.linalg.norm(kx @ vdot - rhs) / max(1.0, np.linalg.norm(rhs)))
    return CTangent(e, vdot, res)


def m_cotangent_lift_split(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint, xi: Section) -> CTangent:
    """Same lift assembled as xi_M + sum_a <J, eta_a> X_{f_a}, f_a the section coefficients.

    Only valid for sections of g_S (then xi_M lies in C).
    """
    coeffs = np.asarray(xi(m.q), dtype=float)
    out = generator_on_M(sys, act, m, coeffs)
    out = CTangent(out.qdot, out.vdot)
    jet = _jet(sys, m)
    a = _form_matrix(c_basis(sys, m, jet))
    _check_condition(a)
    dxi = geomcore.jacobian(xi, m.q)
    p = momenta(sys, m)
    gens = act.at(m.q)
    r = sys.r
    for k in range(act.s):
        # f_k depends on q only: df_k on C is (grad f_k . X_j, 0)
        b = np.concatenate([jet.X.T @ dxi[k], np.zeros(r)])
        w = np.linalg.solve(a.T, b)
        out = out + float(p @ gens[:, k]) * CTangent(jet.X @ w[:r], w[r:])
    return out


def lift_hamiltonian_derivative(sys: MechanicalSystem, act: LieAlgebraAction, m: MPoint, xi: Section) -> float:
    """xi_Q^M(H_M); zero iff <J^nh, xi> is a first integral (for xi in g_S)."""
    lift = m_cotangent_lift(sys, act, m, xi)
    xnh = nonholonomic_vector_field(sys, m)
    # dH_M(Y) = Omega(X_H, Y) = -Omega(Y, X_H)
    return -_pair_on_c(sys, m, lift, xnh)


def _pair_on_c(sys: MechanicalSystem, m: MPoint, a: CTangent, b: CTangent) -> float:
    """Omega_M(a, b) for a, b in C given in chart components."""
    jet = _jet(sys, m)
    form = _form_matrix(c_basis(sys, m, jet))
    wa = _c_coords(sys, jet.X, a)
    wb = _c_coords(sys, jet.X, b)
    return float(wa @ form @ wb)


def _c_coords(sys: MechanicalSystem, X: np.ndarray, t: CTangent) -> np.ndarray:
    w1, *_ = np.linalg.lstsq(X, t.qdot, rcond=None)
    return np.concatenate([w1, t.vdot])


# -- discovery pipeline --------------------------------------------------------


def complete_basis(fixed: np.ndarray, s: int, tol: float = geomcore.DEFAULT_TOL) -> list[np.ndarray]:
    """Standard basis vectors that, added greedily, complete `fixed` (rows) to a basis of R^s."""
    chosen: list[np.ndarray] = []
    current = [row for row in np.atleast_2d(fixed) if row.size]
    for a in range(s):
        e = np.eye(s)[a]
        if geomcore.rank(np.array(current + [e]), tol) > len(current):
            current.append(e)
            chosen.append(e)
    return chosen


@dataclass
class TrajectoryOptions:
    q0: Sequence[float] | None = None
    v0: Sequence[float] | None = None
    t_final: float = 10.0
    method: str = "rk45"
    tol: float = 1e-10
    dt: float | None = None
    n_samples: int = 201


def horizontal_gauge_momenta(
    sys: MechanicalSystem,
    act: LieAlgebraAction,
    samples: Sequence[MPoint],
    traj_opts: TrajectoryOptions | None = None,
    residual_tol: float = RESIDUAL_TOL,
    drift_tol: float = DRIFT_TOL,
) -> list[GaugeMomentumReport]:
    """Candidate horizontal gauge momenta f_eta = <J^nh, P_{g_S}(eta)>, one per dimension of S."""
    from .integrate import conservation_report, integrate

    if not samples:
        raise ValueError("no sample states")
    traj_opts = traj_opts or TrajectoryOptions()
    qs = [m.q for m in samples]
    for q in qs:
        if not dimension_assumption(sys, act, q):
            raise DimensionAssumptionFailure(f"T_qQ != D_q + V_q at q={list(q)}")
    splits = [algebra_splitting(sys, act, q) for q in qs]
    ranks = {sp.rank_s for sp in splits}
    if len(ranks) != 1:
        raise SplitFailure(f"rank S varies across samples: {sorted(ranks)}")
    k = ranks.pop()
    vertical = vertical_symmetry_condition(sys, act, qs) if len(qs) > 1 else True
    etas = complete_basis(splits[0].gW_basis, act.s, sys.tol)
    assert len(etas) == k

    q0 = samples[0].q if traj_opts.q0 is None else traj_opts.q0
    v0 = samples[0].v if traj_opts.v0 is None else traj_opts.v0
    traj = integrate(
        sys,
        MPoint(q0, v0),
        traj_opts.t_final,
        method=traj_opts.method,
        tol=traj_opts.tol,
        dt=traj_opts.dt,
        n_samples=traj_opts.n_samples,
    )

    reports = []
    for eta in etas:
        xi = projected_section(sys, act, eta)
        obs = _observable(sys, act, xi)
        residual = 0.0
        for m in samples:
            xnh = nonholonomic_vector_field(sys, m)
            gen = CTangent(act.generator(m.q, xi(m.q)), np.zeros(sys.r))
            val = jk_pairing(sys, act, m, xnh, gen)
            scale = 1.0 + np.linalg.norm(momenta(sys, m)) * np.linalg.norm(xnh.qdot)
            residual = max(residual, abs(val) / scale)
        drift = conservation_report(traj, {"f": obs})["f"]
        if vertical and residual <= residual_tol and drift <= drift_tol:
            verdict = "certified"
        elif drift <= drift_tol:
            verdict = "empirical_only"
        else:
            verdict = "residual_failed"
        log.info("eta=%s residual=%.3g drift=%.3g verdict=%s", eta, residual, drift, verdict)
        reports.append(
            GaugeMomentumReport(
                eta=eta,
                section_samples=[(q.copy(), xi(q)) for q in qs],
                jk_residual_max=float(residual),
                drift=float(drift),
                verdict=verdict,
                observable=obs,
                lift_hamiltonian=lambda m, xi=xi: lift_hamiltonian_derivative(sys, act, m, xi),
            )
        )
    return reports


def _observable(sys: MechanicalSystem, act: LieAlgebraAction, xi: Section) -> Callable[[MPoint], float]:
    f = section_momentum(sys, act, xi)
    return lambda m: f(m.q, m.v)

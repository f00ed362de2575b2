"""Per-fixture invariant and drift suite used by `holomenta check` and the acceptance tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geomcore
from . import symmetry as sym
from .integrate import conservation_report, integrate
from .mechanics import (
    MPoint,
    _form_matrix,
    _jet,
    _solve,
    c_basis,
    differential_on_c,
    hamiltonian_M,
    momenta,
    nonholonomic_vector_field,
)
from .systems import BuiltinFixture, ball_body_oracle, ball_body_state, gamma_of


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    kind: str = "max"  # "max": value <= threshold; "min": value > threshold; "eq": exact match

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        op = {"max": "<=", "min": ">", "eq": "=="}[self.kind]
        return f"{status}  {self.name:<38s} {self.value:<12.4g} {op} {self.threshold:.3g}"


def _upper(name: str, value: float, threshold: float) -> CheckResult:
    return CheckResult(name, float(value), threshold, bool(value <= threshold))


def _exact(name: str, value, expected) -> CheckResult:
    return CheckResult(name, float(value), float(expected), bool(value == expected), "eq")


def prop33_gap(fx: BuiltinFixture, m: MPoint, xi) -> float:
    """|xi^M_Q(H_M) + sum_a <J, eta_a> X_nh(f_a)|; the two sides agree up to the overall sign."""
    sys_, act = fx.system, fx.action
    lhs = sym.lift_hamiltonian_derivative(sys_, act, m, xi)
    xnh = nonholonomic_vector_field(sys_, m)
    dxi = geomcore.jacobian(xi, m.q)
    p = momenta(sys_, m)
    rhs = float((p @ act.at(m.q)) @ (dxi @ xnh.qdot))
    return abs(lhs + rhs)


def structural_checks(fx: BuiltinFixture, n_states: int = 100, seed: int = 0) -> list[CheckResult]:
    sys_, act = fx.system, fx.action
    states = fx.sample_states(n_states, seed)
    split = sym.algebra_splitting(sys_, act, states[0].q)
    sections = [sym.projected_section(sys_, act, eta) for eta in sym.complete_basis(split.gW_basis, act.s, sys_.tol)]
    hm = lambda q, v: hamiltonian_M(sys_, MPoint(q, v))

    solve_res = antisym = cond = base = p33 = l32 = jk_cond = 0.0
    for m in states:
        jet = _jet(sys_, m)
        a = _form_matrix(c_basis(sys_, m, jet))
        antisym = max(antisym, float(np.abs(a + a.T).max()))
        cond = max(cond, float(np.linalg.cond(a)))
        _, res = _solve(a, differential_on_c(sys_, m, hm, jet))
        solve_res = max(solve_res, res, nonholonomic_vector_field(sys_, m).residual)
        jk_cond = max(jk_cond, sym.jk_condition_number(sys_, act, m))
        for xi in sections:
            lift = sym.m_cotangent_lift(sys_, act, m, xi)
            solve_res = max(solve_res, lift.residual)
            base = max(base, float(np.abs(lift.qdot - act.generator(m.q, xi(m.q))).max()))
            split_lift = sym.m_cotangent_lift_split(sys_, act, m, xi)
            l32 = max(l32, float(np.abs(lift.state - split_lift.state).max()))
            p33 = max(p33, prop33_gap(fx, m, xi))

    return [
        _upper("linear-solve residual", solve_res, 1e-10),
        _upper("two-form antisymmetry", antisym, 1e-12),
        _upper("two-form condition number", cond, 1e8),
        _upper("lift base projection", base, 1e-8),
        _upper("lift H-derivative identity", p33, 1e-6),
        _upper("lift split vs restricted solve", l32, 1e-6),
        _upper("J-curvature form condition number", jk_cond, 1e8),
    ]


def pipeline_checks(fx: BuiltinFixture, n_samples: int = 50, seed: int = 0) -> list[CheckResult]:
    sys_, act = fx.system, fx.action
    samples = fx.sample_states(n_samples, seed)
    qs = [m.q for m in samples]
    out = [
        _exact("dimension assumption", all(sym.dimension_assumption(sys_, act, q) for q in qs), True),
        _exact("rank S", sym.algebra_splitting(sys_, act, qs[0]).rank_s, fx.expected_rank_s),
        _exact(
            "vertical symmetry",
            sym.vertical_symmetry_condition(sys_, act, qs),
            fx.expected_vertical_symmetry[fx.complement],
        ),
    ]
    reports = sym.horizontal_gauge_momenta(sys_, act, samples, sym.TrajectoryOptions(q0=fx.q0, v0=fx.v0))
    expected = fx.expected_verdicts[fx.complement]
    got = tuple(r.verdict for r in reports)
    out.append(CheckResult(f"verdicts {','.join(got)}", float(got == expected), 1.0, got == expected, "eq"))
    return out


def drift_checks(fx: BuiltinFixture, t_final: float = 10.0) -> list[CheckResult]:
    sys_ = fx.system
    traj = integrate(sys_, fx.initial_state, t_final)
    obs = dict(fx.observables)
    obs["energy"] = lambda m: hamiltonian_M(sys_, m)
    drifts = conservation_report(traj, obs)
    limits = {"p_y": 1e-10}
    out = [_upper(f"drift {name}", d, limits.get(name, 1e-8)) for name, d in drifts.items()]
    if fx.name == "ball":
        out.append(_upper("body-frame oracle on [0,5]", ball_oracle_error(fx), 1e-6))
    return out


def ball_oracle_error(fx: BuiltinFixture, t_final: float = 5.0) -> float:
    traj = integrate(fx.system, fx.initial_state, t_final)
    k_ref, g_ref = ball_body_oracle(fx, fx.initial_state, traj.times)
    k = np.array([ball_body_state(fx, m)[0] for m in traj.states])
    g = np.array([gamma_of(m.q) for m in traj.states])
    return float(max(np.abs(k - k_ref).max(), np.abs(g - g_ref).max()))


def run_all(fx: BuiltinFixture, n_states: int = 100, seed: int = 0) -> list[CheckResult]:
    return pipeline_checks(fx, seed=seed) + structural_checks(fx, n_states, seed) + drift_checks(fx)

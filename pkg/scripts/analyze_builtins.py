"""Run the gauge-momentum pipeline on every builtin and complement choice and print a summary table."""

import argparse

from holomenta import symmetry as sym
from holomenta.systems import NAMES, builtin


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'system':<10}{'complement':<12}{'rank S':>7}  {'vertical':<9}{'residual':>11}{'drift':>11}  verdict")
    for name in NAMES:
        base = builtin(name)
        for comp in base.expected_verdicts:
            fx = base.with_complement(comp)
            states = fx.sample_states(args.samples, args.seed)
            qs = [m.q for m in states]
            rank_s = sym.algebra_splitting(fx.system, fx.action, qs[0]).rank_s
            vertical = sym.vertical_symmetry_condition(fx.system, fx.action, qs)
            opts = sym.TrajectoryOptions(q0=fx.q0, v0=fx.v0)
            for r in sym.horizontal_gauge_momenta(fx.system, fx.action, states, opts):
                print(f"{name:<10}{comp:<12}{rank_s:>7}  {str(vertical):<9}{r.jk_residual_max:>11.2e}{r.drift:>11.2e}  {r.verdict}")


if __name__ == "__main__":
    main()

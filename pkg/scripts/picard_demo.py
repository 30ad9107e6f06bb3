"""Picard iteration on the perturbed preset: contraction at short horizons, failure at long ones."""

import argparse

from mhdsim.errors import NoContraction
from mhdsim.iteration import IterationConfig, picard_solve
from mhdsim.scenarios import ScenarioConfig, build_scenario
from mhdsim.state import ModelConfig


def show(k, d, r):
    print(f"  iterate {k + 1}: distance {d:.3e}  ratio {r:.3g}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--horizons", type=float, nargs="+", default=[1.0, 5.0, 20.0])
    p.add_argument("--dt", type=float, default=0.25)
    p.add_argument("--n", type=int, default=8)
    args = p.parse_args()
    sc = build_scenario(ScenarioConfig("perturbed", eps=1e-6, k=(1, 1)), ModelConfig(n=args.n, m=args.n))
    for T in args.horizons:
        print(f"T = {T:g}")
        cfg = IterationConfig(T=T, n_steps=max(1, round(T / args.dt)), max_iters=6)
        try:
            res = picard_solve(sc.state, sc.model, cfg, callback=show)
            print(f"  converged={res.converged} contracted={res.contracted()}")
        except NoContraction as exc:
            print(f"  {exc}")

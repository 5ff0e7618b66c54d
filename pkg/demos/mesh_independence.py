#!/usr/bin/env python3
"""Mesh independence of the time-discretization error.

The noise in du = Laplace(u) dt + g(u) dbeta depends on time only, so the
time-discretization error of the splitting scheme does not degrade as the
spatial grid is refined: there is no CFL-type coupling between tau and h.
Each mesh is compared against its own fine-tau reference; the per-level
errors across meshes agree to within Monte Carlo noise.

Scaled down (reference level 12, 40 samples) to run in ~10 seconds.
"""

from spde_lab.experiments import ConvergenceConfig, mesh_independence_study
from spde_lab.integrators import IntegratorKind

MESHES = [2**4, 2**6, 2**8]
LEVELS = tuple(range(4, 10))

if __name__ == "__main__":
    cfg = ConvergenceConfig(
        g_name="rational",
        lam=1.5,
        levels=LEVELS,
        ref_level=12,
        samples=40,
        integrators=(IntegratorKind.LT,),
    )
    rep = mesh_independence_study(cfg, MESHES, jobs=2)
    by_level = {}
    for row in rep.rows:
        by_level.setdefault(row[5], {})[row[4]] = row[7]
    print("LT error per level, g(v) = 1.5 v/(1+v^2), one column per mesh:")
    print("level  " + "".join(f"{'N=' + str(N):>12}" for N in MESHES) + "   max/min")
    for j in LEVELS:
        vals = [by_level[j][N] for N in MESHES]
        ratio = max(vals) / min(vals)
        print(f"{j:>5}  " + "".join(f"{v:>12.3e}" for v in vals) + f"   {ratio:.3f}")
    print("\nThe columns coincide: the error is a function of tau alone, even")
    print("at tau * N^2 values where an explicit scheme would have exploded.")

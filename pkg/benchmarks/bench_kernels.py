"""Time the numba kernels against the numpy fallback on a real carrier.

    python3 benchmarks/bench_kernels.py [--samples N] [--repeat R] [--fixture NAME]

Each kernel runs once untimed per backend to absorb JIT compilation, then the
best of ``--repeat`` runs is reported. Outputs are checked for equality.
"""
from __future__ import annotations

import argparse
import logging
import time

import numpy as np

from step_parts import kernels
from step_parts.brep import build_brep
from step_parts.carrier import build_carrier
from step_parts.partition import partition_solid
from step_parts.step_parser import parse_step
from step_parts.synth import FIXTURES
from step_parts.tessellate import T1

log = logging.getLogger("bench")


def _best(fn, repeat: int) -> tuple:
    out = fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--fixture", default="rounded_plate", choices=sorted(FIXTURES))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    if not kernels.HAVE_NUMBA:
        log.warning("numba is not importable; only the numpy backend can run")
    solid = build_brep(parse_step(FIXTURES[args.fixture]()))
    c = build_carrier(solid, partition_solid(solid), T1)
    V, T = c.vertices, c.triangles
    rng = np.random.default_rng(args.seed)
    idx = rng.integers(0, len(T), args.samples)
    r1, r2 = rng.random(args.samples), rng.random(args.samples)
    # query points hover near the surface, like transferred evaluation samples
    pts = kernels.barycentric_points(V, T, idx, r1, r2, False)
    pts = pts + rng.normal(scale=1e-3 * c.diag(), size=pts.shape)
    ref = rng.integers(0, 12, args.samples)
    cand = rng.integers(0, 9, args.samples)

    cases = {
        "nearest_vertex": lambda nb: kernels.nearest_vertex(pts, V, nb),
        "nearest_triangle": lambda nb: kernels.nearest_triangle(pts, V, T, nb),
        "barycentric_points": lambda nb: kernels.barycentric_points(V, T, idx, r1, r2, nb),
        "confusion_matrix": lambda nb: kernels.confusion_matrix(ref, cand, 12, 9, nb),
    }
    log.info("fixture=%s vertices=%d triangles=%d queries=%d", args.fixture, len(V), len(T), args.samples)
    log.info("%-20s %12s %12s %9s %6s", "kernel", "numpy [s]", "numba [s]", "speedup", "equal")
    for name, fn in cases.items():
        t_np, out_np = _best(lambda: fn(False), args.repeat)
        if kernels.HAVE_NUMBA:
            t_nb, out_nb = _best(lambda: fn(True), args.repeat)
            same = np.array_equal(out_np, out_nb)
            log.info("%-20s %12.4f %12.4f %8.1fx %6s", name, t_np, t_nb, t_np / max(t_nb, 1e-12), same)
        else:
            log.info("%-20s %12.4f %12s %9s %6s", name, t_np, "-", "-", "-")


if __name__ == "__main__":
    main()

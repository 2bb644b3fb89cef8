#!/usr/bin/env python3
"""Build a power-of-two mesh hierarchy from one fit by pooling quadrics.

Example:
    python scripts/run_hierarchy.py --res 64 --levels 2 --out-prefix sphere
"""

import argparse
import sys
import time

from ponq.mesh import write_mesh
from ponq.metrics import check_self_intersection, check_watertight, eval_cd
from ponq.pipeline import mesh_fit, reconstruct
from ponq.shapes import icosphere
from ponq.simplify import coarsen_grid


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--res", type=int, default=64)
    parser.add_argument("--levels", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-prefix", default=None,
                        help="write one OBJ per level as <prefix>_levelN.obj")
    args = parser.parse_args()

    shape = icosphere(4, radius=0.5)
    t0 = time.perf_counter()
    result, elements, info = reconstruct(shape, res=args.res, seed=args.seed)
    print(f"fit at res={args.res}: {len(elements)} elements "
          f"({time.perf_counter() - t0:.1f}s)")

    levels = coarsen_grid(elements, grid_res=args.res, levels=args.levels,
                          bbox_min=info.bbox_min, bbox_max=info.bbox_max)
    for depth, level in enumerate(levels):
        t0 = time.perf_counter()
        mesh = result.mesh if depth == 0 else mesh_fit(level, info).mesh
        wt = check_watertight(mesh).watertight
        si = check_self_intersection(mesh).intersection_free
        cd = eval_cd(mesh, shape, n_samples=50_000, seed=args.seed)
        print(f"level {depth}: {len(level):6d} elements, "
              f"{mesh.n_triangles:6d} faces, cd={cd:.3e}, watertight={wt}, "
              f"intersection-free={si} ({time.perf_counter() - t0:.1f}s)")
        if args.out_prefix:
            write_mesh(f"{args.out_prefix}_level{depth}.obj", mesh)
    return 0


if __name__ == "__main__":
    sys.exit(main())

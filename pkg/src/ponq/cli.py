"""Command line interface.

Subcommands mirror the pipeline stages:

    ponq sample  mesh-in samples-out   [--count N] [--seed S] [--open-boundary]
    ponq fit     samples-in ponq-out   --res R [--epochs E] [--lr LR] [--seed S]
    ponq mesh    ponq-in mesh-out      [--edge-threshold T] [--h H] [--open]
                                       [--anisotropy A]
    ponq lite    ponq-in ponq-out      --levels L [--res R]
    ponq eval    mesh-a mesh-b json-out [--f1 T] [--ef1 T] [--edge-angle A]
                                       [--samples N] [--seed S]

Identical inputs and flags produce byte-identical outputs.  Errors print one
JSON line on stderr and exit with a stage-specific code (see EXIT_CODES).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import errors
from .fitting import FitConfig, default_learning_rate, fit_elements
from .mesh import read_mesh, write_mesh
from .metrics import evaluate_reconstruction
from .pipeline import mesh_fit
from .ponqfile import (dump_ponq_json, read_ponq, read_samples, write_ponq,
                       write_samples)
from .sampling import augmented_open_sampling, sample_surface
from .simplify import coarsen_grid

EXIT_CODES = {
    "usage": 2,
    "format": 3,        # unreadable or malformed input files
    "invalid": 4,       # arguments or data violating preconditions
    "empty-input": 5,   # nothing to sample (empty surface, closed boundary)
    "divergence": 6,    # optimization produced a non-finite loss
    "degenerate": 7,    # reconstruction has no interior / no surface
    "internal": 1,
}

_ERROR_EXIT = (
    (errors.FileFormatError, "format"),
    (errors.InvalidInputError, "invalid"),
    (errors.EmptySurfaceError, "empty-input"),
    (errors.NoBoundaryError, "empty-input"),
    (errors.DivergenceError, "divergence"),
    (errors.EmptyInteriorError, "degenerate"),
    (errors.EmptyMeshError, "degenerate"),
    (errors.DegenerateQuadricError, "degenerate"),
    (errors.DegenerateSimplexError, "degenerate"),
)


def _parse_angle(text: str) -> float:
    """Angles in radians; `pi` is allowed, as in `pi/6` or `0.75*pi`."""
    s = text.strip().lower().replace(" ", "")
    try:
        if "pi" not in s:
            return float(s)
        scale = 1.0
        if "*pi" in s:
            head, s = s.split("*pi", 1)
            scale = float(head)
        elif s.startswith("pi"):
            s = s[2:]
        value = math.pi * scale
        if s.startswith("/"):
            value /= float(s[1:])
        elif s:
            raise ValueError
        return value
    except ValueError as exc:
        raise errors.InvalidInputError(f"cannot parse angle {text!r}") from exc


def _cmd_sample(args) -> None:
    mesh = read_mesh(args.input)
    if args.open_boundary:
        boundary = args.boundary_count or max(args.count // 10, 1)
        samples = augmented_open_sampling(mesh, args.count, boundary,
                                          seed=args.seed)
    else:
        samples = sample_surface(mesh, args.count, seed=args.seed)
    write_samples(args.output, samples, open_fit=args.open_boundary)


def _cmd_fit(args) -> None:
    samples, flags = read_samples(args.input)
    lo = samples.positions.min(axis=0)
    hi = samples.positions.max(axis=0)
    lr = args.lr if args.lr is not None else default_learning_rate(lo, hi, args.res)
    cfg = FitConfig(grid_res=args.res, epochs=args.epochs, learning_rate=lr,
                    seed=args.seed)
    elements, _ = fit_elements(samples, cfg, bbox_min=lo, bbox_max=hi)
    write_ponq(args.output, elements, normalized=False, open_fit=flags["open"])
    if args.json:
        dump_ponq_json(args.json, elements, {"normalized": False,
                                             "open": flags["open"]})


def _cmd_mesh(args) -> None:
    elements, flags = read_ponq(args.input)
    open_surface = args.open or flags["open"]
    result = mesh_fit(elements, info=None, h=args.h,
                      edge_threshold=args.edge_threshold,
                      anisotropy_threshold=args.anisotropy,
                      open_surface=open_surface)
    write_mesh(args.output, result.mesh)


def _cmd_lite(args) -> None:
    elements, flags = read_ponq(args.input)
    res = args.res if args.res is not None else _estimate_grid_res(elements,
                                                                   args.levels)
    levels = coarsen_grid(elements, grid_res=res, levels=args.levels)
    write_ponq(args.output, levels[-1], normalized=flags["normalized"],
               open_fit=flags["open"])
    if args.json:
        dump_ponq_json(args.json, levels[-1], flags)


def _estimate_grid_res(elements, levels: int) -> int:
    """Nearest power of two to extent / median nearest-neighbor distance."""
    from scipy.spatial import cKDTree

    pos = np.array([e.p for e in elements])
    extent = float(np.max(pos.max(axis=0) - pos.min(axis=0)))
    if len(pos) < 2 or extent <= 0.0:
        return 1 << levels
    d, _ = cKDTree(pos).query(pos, k=2)
    median_nn = float(np.median(d[:, 1]))
    if median_nn <= 0.0:
        return 1 << levels
    power = int(round(math.log2(max(extent / median_nn, 1.0))))
    return max(1 << power, 1 << levels)


def _cmd_eval(args) -> None:
    mesh_a = read_mesh(args.mesh_a)
    mesh_b = read_mesh(args.mesh_b)
    report = evaluate_reconstruction(
        mesh_a, mesh_b, f1_threshold=args.f1, ef1_threshold=args.ef1,
        edge_angle=_parse_angle(args.edge_angle), n_samples=args.samples,
        seed=args.seed)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ponq",
        description="Point-normal-quadric surface reconstruction pipeline.",
        epilog="Exit codes: " + ", ".join(
            f"{code} = {name}" for name, code in sorted(EXIT_CODES.items(),
                                                        key=lambda kv: kv[1])),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample an OBJ/PLY surface")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--open-boundary", action="store_true",
                   help="augment with boundary samples and rotated twins")
    p.add_argument("--boundary-count", type=int, default=None,
                   help="boundary samples (default count // 10)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fit", help="optimize generators against samples")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--res", type=int, required=True,
                   help="initialization grid resolution per axis")
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--lr", type=float, default=None,
                   help="learning rate (default: quarter grid spacing)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default=None, help="also dump a JSON sidecar")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("mesh", help="extract a surface from an element file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--edge-threshold", type=float, default=None,
                   help="smallest-edge rule cutoff (default 4 x median "
                        "nearest-neighbor distance)")
    p.add_argument("--h", type=float, default=None,
                   help="quadric score weight (default inverse squared "
                        "median nearest-neighbor distance)")
    p.add_argument("--open", action="store_true",
                   help="cull anisotropic triangles to reopen boundaries")
    p.add_argument("--anisotropy", type=float, default=0.4)
    p.set_defaults(func=_cmd_mesh)

    p = sub.add_parser("lite", help="pool elements over a coarser grid")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--res", type=int, default=None,
                   help="finest grid resolution (default: estimated from "
                        "element spacing)")
    p.add_argument("--json", default=None, help="also dump a JSON sidecar")
    p.set_defaults(func=_cmd_lite)

    p = sub.add_parser("eval", help="compare two meshes and emit JSON metrics")
    p.add_argument("mesh_a")
    p.add_argument("mesh_b")
    p.add_argument("output")
    p.add_argument("--f1", type=float, default=0.003)
    p.add_argument("--ef1", type=float, default=0.005)
    p.add_argument("--edge-angle", default="pi/6")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
        return 0
    except errors.PonqError as exc:
        for klass, kind in _ERROR_EXIT:
            if isinstance(exc, klass):
                code = EXIT_CODES[kind]
                break
        else:
            code = EXIT_CODES["internal"]
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return code
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CODES["format"]


if __name__ == "__main__":
    sys.exit(main())

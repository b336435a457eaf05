"""Command-line front end.

Exit codes: 0 success, 1 runtime failure (unreadable or malformed input),
2 usage error (bad flags or flag values).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from typing import Any, Optional

import numpy as np

from . import __version__
from .core import InputError
from .data import (
    CHANNELS,
    DataFormatError,
    extract_patch_features,
    generate_blobs,
    generate_rings,
    load_csv,
    save_assignments_csv,
    save_csv,
)
from .dbscan import DbscanConfig, dbscan
from .gmm import CovarianceMode, em_multi_restart, hard_assignments_from_soft
from .kmeans import DEFAULT_REL_TOL, kmeans_multi_restart


@dataclass
class RunReport:
    algorithm: str
    parameters: dict
    final_objective: Optional[float]
    trajectory: list
    iterations: int
    converged: bool
    wall_time_ms: float
    seed: Optional[int]

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=False)
            fh.write("\n")


# -- argument types ----------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not np.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _mode(text: str) -> CovarianceMode:
    try:
        return CovarianceMode.parse(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _point_list(text: str) -> list[list[float]]:
    """``"0,0;6,6"`` -> [[0, 0], [6, 6]]."""
    pts = [_float_list(chunk) for chunk in text.split(";")]
    if len({len(p) for p in pts}) != 1:
        raise argparse.ArgumentTypeError("all centres must have the same dimension")
    return pts


def _columns(text: str) -> list[int]:
    names = [c.strip() for c in text.split(",")]
    bad = [c for c in names if c not in CHANNELS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"columns must be drawn from {','.join(CHANNELS)}")
    return [CHANNELS.index(c) for c in names]


# -- commands ----------------------------------------------------------------


def _floats(values) -> list:
    return [float(v) for v in values]


def cmd_kmeans(args) -> int:
    data = load_csv(args.input)
    start = time.perf_counter()
    result = kmeans_multi_restart(
        data, args.k, restarts=args.restarts, init=args.init, seed=args.seed, max_iter=args.max_iter, tol=args.tol
    )
    elapsed = (time.perf_counter() - start) * 1e3
    save_assignments_csv(args.out, result.assignments)
    if args.report:
        RunReport(
            algorithm="kmeans",
            parameters={
                "input": str(args.input),
                "k": args.k,
                "init": args.init,
                "restarts": args.restarts,
                "max_iter": args.max_iter,
                "tol": args.tol,
            },
            final_objective=result.error,
            trajectory=_floats(result.error_trajectory),
            iterations=result.iterations,
            converged=result.converged,
            wall_time_ms=elapsed,
            seed=args.seed,
        ).write(args.report)
    return 0


def cmd_gmm(args) -> int:
    data = load_csv(args.input)
    start = time.perf_counter()
    result = em_multi_restart(
        data, args.k, restarts=args.restarts, seed=args.seed, mode=args.mode, max_iter=args.max_iter, tol=args.tol
    )
    elapsed = (time.perf_counter() - start) * 1e3
    save_assignments_csv(args.out, hard_assignments_from_soft(result), result.responsibilities)
    if args.report:
        params = result.params
        RunReport(
            algorithm="gmm",
            parameters={
                "input": str(args.input),
                "k": args.k,
                "restarts": args.restarts,
                "max_iter": args.max_iter,
                "tol": args.tol,
                "mode": str(args.mode),
            },
            final_objective=result.nll,
            trajectory=_floats(result.nll_trajectory),
            iterations=result.iterations,
            converged=result.converged,
            wall_time_ms=elapsed,
            seed=args.seed,
        ).write(args.report)
    return 0


def cmd_dbscan(args) -> int:
    data = load_csv(args.input)
    start = time.perf_counter()
    result = dbscan(data, DbscanConfig(args.eps, args.min_near))
    elapsed = (time.perf_counter() - start) * 1e3
    save_assignments_csv(args.out, result.labels)
    if args.report:
        RunReport(
            algorithm="dbscan",
            parameters={"input": str(args.input), "eps": args.eps, "min_near": args.min_near},
            final_objective=None,
            trajectory=[],
            iterations=1,
            converged=True,
            wall_time_ms=elapsed,
            seed=None,
        ).write(args.report)
    return 0


def cmd_gen(args) -> int:
    if args.kind == "blobs":
        if args.centers is None:
            raise InputError("--centers is required for blobs")
        data, labels = generate_blobs(args.m, args.centers, sd=args.sd, priors=args.priors, seed=args.seed)
    else:
        data, labels = generate_rings(args.m_per_ring, args.radii, noise_sd=args.noise_sd, seed=args.seed)
    save_csv(args.out, data)
    if args.labels_out:
        save_assignments_csv(args.labels_out, labels)
    return 0


def cmd_patches(args) -> int:
    grid = extract_patch_features(args.input, args.patch_w, args.patch_h)
    save_csv(args.out, grid.features.points[:, args.columns])
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clusterkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kmeans", help="hard clustering with the k-means fixed-point iteration")
    p.add_argument("input", help="CSV of feature vectors")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--init", choices=("random", "pca"), default="random")
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-iter", type=_positive_int, default=300)
    p.add_argument("--tol", type=_positive_float, nargs="?", const=DEFAULT_REL_TOL, default=None,
                   help="also stop when an iteration lowers the error by at most this fraction "
                        f"(bare flag: {DEFAULT_REL_TOL:g})")
    p.add_argument("--out", required=True, help="assignments CSV")
    p.add_argument("--report", help="JSON run report")
    p.set_defaults(func=cmd_kmeans)

    p = sub.add_parser("gmm", help="soft clustering with a Gaussian mixture fitted by EM")
    p.add_argument("input")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--restarts", type=_positive_int, default=5)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-iter", type=_positive_int, default=300)
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--mode", type=_mode, default=CovarianceMode(), help="full or isotropic:<sigma2>")
    p.add_argument("--out", required=True, help="assignments CSV with responsibility columns")
    p.add_argument("--report")
    p.set_defaults(func=cmd_gmm)

    p = sub.add_parser("dbscan", help="density-based clustering")
    p.add_argument("input")
    p.add_argument("--eps", type=_positive_float, required=True)
    p.add_argument("--min-near", type=_positive_int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_dbscan)

    p = sub.add_parser("gen", help="synthetic datasets")
    p.add_argument("--kind", choices=("blobs", "rings"), required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out", help="CSV of generating labels")
    p.add_argument("--m", type=_positive_int, default=300, help="blobs: number of points")
    p.add_argument("--centers", type=_point_list, help='blobs: centres, e.g. "0,0;6,6"')
    p.add_argument("--sd", type=_positive_float, default=1.0, help="blobs: per-coordinate standard deviation")
    p.add_argument("--priors", type=_float_list, help="blobs: mixing weights")
    p.add_argument("--m-per-ring", type=_positive_int, default=100)
    p.add_argument("--radii", type=_float_list, default=[1.0, 5.0])
    p.add_argument("--noise-sd", type=_nonneg_float, default=0.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("patches", help="mean-colour features of image patches")
    p.add_argument("input", help="P3 or P6 PPM image")
    p.add_argument("--patch-w", type=_positive_int, required=True)
    p.add_argument("--patch-h", type=_positive_int, required=True)
    p.add_argument("--columns", type=_columns, default=[0, 1, 2], help="subset of red,green,blue")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_patches)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputError, DataFormatError, OSError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"clusterkit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``rsub``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence,
4 failed validation check.
"""

import argparse
import sys

import numpy as np

from . import datagen, dataio, validate
from .dataio import RunConfig
from .direction import DirectionProblem, fit_direction
from .median import MedianProblem, solve_median
from .subspace import (
    OffsetPolicy,
    classical_pca,
    distance_histogram,
    fit_subspace,
    pca_l1,
)
from .trace import MAX_ITERS

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED, EXIT_VALIDATION = 0, 1, 2, 3, 4

OFFSET_FLAGS = {"median": "geometric_median", "mean": "mean", "none": "none", "given": "given"}
DEFAULT_OFFSET = {"robust": "geometric_median", "pca": "mean", "pca-l1": "geometric_median"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p, fitting=True):
    p.add_argument("--input", metavar="PATH")
    p.add_argument("--output", metavar="PATH")
    p.add_argument("--seed", type=int, default=0)
    if not fitting:
        return
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--offset", choices=sorted(OFFSET_FLAGS))
    p.add_argument("--offset-value", metavar="CSVROW")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--anchor-eps", type=float, default=1e-9)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--threshold", type=float, help="flag points farther than this from the model")
    p.add_argument("--distances", metavar="PATH", help="also write point distances as TSV")


def build_parser():
    parser = _Parser(prog="rsub", description="Robust line and subspace fitting by summed distances.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("median", help="geometric median of the input points")
    _common(p, fitting=False)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=100_000)

    p = sub.add_parser("fit", help="robust subspace by summed distances")
    _common(p)
    p.add_argument("--method", choices=["robust", "pca", "pca-l1"], default="robust")

    p = sub.add_parser("baseline", help="classical or L1 PCA baseline")
    _common(p)
    p.add_argument("--method", choices=["robust", "pca", "pca-l1"], default="pca")

    p = sub.add_parser("validate", help="check the solvers against brute-force oracles")
    _common(p, fitting=False)
    p.add_argument("--anchor-eps", type=float, default=1e-9)

    p = sub.add_parser("gen", help="write a synthetic data set as CSV")
    _common(p, fitting=False)
    p.add_argument("--kind", choices=["line-outliers", "frames"], default="line-outliers")
    p.add_argument("--n-inliers", type=int, default=50)
    p.add_argument("--n-outliers", type=int, default=2)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--drift", action="store_true", help="apply the lighting-drift transform")
    return parser


def _emit(text, path):
    if path:
        dataio._write_text(path, text)
    else:
        sys.stdout.write(text)


def _load(args):
    if not args.input:
        raise UsageError(f"rsub {args.subcommand}: --input is required")
    return dataio.read_points(args.input)


def _config(args):
    method = getattr(args, "method", "robust")
    offset = OFFSET_FLAGS[args.offset] if args.offset else DEFAULT_OFFSET[method]
    value = None
    if args.offset_value is not None:
        try:
            value = [float(v) for v in args.offset_value.split(",")]
        except ValueError:
            raise UsageError(f"--offset-value must be a comma-separated row, got {args.offset_value!r}")
    if (offset == "given") != (value is not None):
        raise UsageError("--offset given requires --offset-value and vice versa")
    if args.k < 1 or args.restarts < 1 or args.max_iters < 1 or args.bins < 1:
        raise UsageError("--k, --restarts, --max-iters and --bins must be positive")
    return RunConfig(
        subcommand=args.subcommand,
        k=args.k,
        offset_kind=offset,
        offset_value=value,
        tol=args.tol,
        max_iters=args.max_iters,
        restarts=args.restarts,
        seed=args.seed,
        anchor_eps=args.anchor_eps,
        input_path=args.input,
        output_path=args.output,
        bins=args.bins,
        method=method,
        threshold=args.threshold,
    )


def run_model(X, cfg):
    """Fit the model described by ``cfg`` to ``X``."""
    value = tuple(cfg.offset_value) if cfg.offset_value is not None else None
    policy = OffsetPolicy(cfg.offset_kind, value)
    if cfg.method == "robust":
        rng = datagen.substream(cfg.seed, "fit/restarts")
        return fit_subspace(
            X, cfg.k, policy, cfg.tol, cfg.max_iters, cfg.anchor_eps, cfg.restarts, rng
        )
    if cfg.method == "pca":
        return classical_pca(X, cfg.k, policy)
    return pca_l1(X, cfg.k, policy)


def _histogram_block(X, model, cfg):
    hist = distance_histogram(X, model, cfg.bins)
    block = {
        "counts": [int(c) for c in hist.counts],
        "edges": [float(e) for e in hist.edges],
        "gap_threshold": hist.gap_threshold(),
    }
    if cfg.threshold is not None:
        block["threshold"] = cfg.threshold
        block["outliers"] = [int(i) + 1 for i in np.flatnonzero(hist.distances > cfg.threshold)]
    return hist, {"histogram": block}


def cmd_fit(args):
    cfg = _config(args)
    X = _load(args)
    model = run_model(X, cfg)
    hist, extra = _histogram_block(X, model, cfg)
    _emit(dataio.dumps_document(dataio.model_document(model, config=cfg, extra=extra)), cfg.output_path)
    if args.distances:
        dataio.write_distances(hist.distances, args.distances)
    return EXIT_NONCONVERGED if model.status == MAX_ITERS else EXIT_OK


def cmd_median(args):
    X = _load(args)
    res = solve_median(MedianProblem(X, tolerance=args.tol, max_iters=args.max_iters))
    doc = {
        "median": [float(v) for v in res.median],
        "energy": res.energy,
        "iterations": res.iterations,
        "status": res.trace.status,
        "stopped_at_anchor": res.stopped_at_anchor,
        "anchor_index": None if res.anchor_index is None else res.anchor_index + 1,
    }
    _emit(dataio.dumps_document(doc), args.output)
    return EXIT_NONCONVERGED if res.trace.status == MAX_ITERS else EXIT_OK


def _builtin_checks():
    checks = []
    T = np.array([[0.0, 0.0], [4.0, 0.0], [1.0, 2.0]])
    pair, e = validate.oracle_line_pairs_2d(T)
    checks.append(("triangle best line is the longest side", set(pair) == {0, 1} and abs(e - 2.0) <= 1e-10, e))
    rep = validate.steiner_check(T)
    checks.append(("Fermat point is off the best line", rep.distance > 0.1, rep.distance))
    X = datagen.gen_line_outliers(50, 2, 0.01, 7)
    checks.extend(_direction_checks(X - solve_median(MedianProblem(X)).median, 1e-9))
    return checks


def _direction_checks(Y, anchor_eps):
    problem = DirectionProblem(Y, anchor_eps=anchor_eps, warn=False)
    a, trace = fit_direction(problem)
    out = [("direction fit terminated", trace.status != MAX_ITERS, trace.status)]
    if problem.dim == 2:
        _, oracle = validate.oracle_direction_2d(problem.points, validate.GridSpec(10_000, 2, 10))
        out.append(("direction fit no worse than angle grid", trace.final_energy <= oracle + 1e-8,
                    trace.final_energy - oracle))
    return out


def cmd_validate(args):
    if args.input:
        X = _load(args)
        checks = _direction_checks(X - solve_median(MedianProblem(X)).median, args.anchor_eps)
    else:
        checks = _builtin_checks()
    doc = {"checks": [{"name": n, "passed": bool(ok), "value": float(v) if not isinstance(v, str) else v}
                      for n, ok, v in checks]}
    doc["passed"] = all(c["passed"] for c in doc["checks"])
    _emit(dataio.dumps_document(doc), args.output)
    return EXIT_OK if doc["passed"] else EXIT_VALIDATION


def cmd_gen(args):
    if args.n_inliers < 0 or args.n_outliers < 0 or args.sigma < 0:
        raise UsageError("counts and --sigma must be nonnegative")
    if args.kind == "line-outliers":
        X = datagen.gen_line_outliers(args.n_inliers, args.n_outliers, args.sigma, args.seed)
    else:
        X, _ = datagen.gen_frames(args.n_inliers + args.n_outliers, n_outliers=args.n_outliers,
                                  noise_sigma=args.sigma, seed=args.seed)
    if args.drift:
        X = datagen.apply_drift(X)
    text = "".join(",".join(repr(float(v)) for v in row) + "\n" for row in X)
    _emit(text, args.output)
    return EXIT_OK


COMMANDS = {"median": cmd_median, "fit": cmd_fit, "baseline": cmd_fit, "validate": cmd_validate, "gen": cmd_gen}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.subcommand](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # DataError, RankError and solver precondition errors are all ValueErrors
        print(f"rsub: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

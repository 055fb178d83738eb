"""Command-line front end.

Loads a Matrix Market file, runs the solver, and prints the leading
conjugate eigenvalues.  Construction of the skew-symmetric operator from
the file is always explicit (``--mode``); nothing is inferred from the
matrix shape.

Exit codes: 0 converged; 2 finished without convergence (best-effort
results are still printed); 1 unreadable or invalid input; 64 usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import mmio
from .errors import InvalidOptions, SkewEigError
from .solver import SolverOptions, solve
from .sparse import block_embed, skew_symmetrize

__all__ = ["run", "main"]

USAGE_EXIT = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports flag problems instead of exiting with 2."""

    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="skeweig",
        description="Largest conjugate eigenpairs of a sparse skew-symmetric matrix.",
    )
    p.add_argument("--input", required=True, help="Matrix Market coordinate file")
    p.add_argument(
        "--mode",
        choices=("as-is", "symmetrize", "block-embed"),
        default="as-is",
        help="as-is: file must already be skew-symmetric; "
        "symmetrize: use (M - M^T)/2 of a square file; "
        "block-embed: embed a (possibly rectangular) file R as [[0, R], [-R^T, 0]]",
    )
    p.add_argument("--k", type=int, default=1, help="number of conjugate pairs (default 1)")
    p.add_argument("--m", type=int, default=30, help="max subspace dimension (default 30)")
    p.add_argument("--tol", type=float, default=1e-8, help="relative tolerance (default 1e-8)")
    p.add_argument("--max-restarts", type=int, default=2000, help="restart budget (default 2000)")
    p.add_argument("--reorth", choices=("partial", "full", "none"), default="partial")
    p.add_argument(
        "--start",
        default="uniform",
        help="start vector: 'uniform', 'purge-null' (proportional to A@ones, "
        "kills the null-space component of singular operators), or 'file:PATH' "
        "(one value per line)",
    )
    p.add_argument("--output", choices=("text", "json"), default="text")
    p.add_argument("--trace", metavar="PATH", help="write per-cycle convergence history as CSV")
    p.add_argument("--seed", type=int, default=None, help="seed for reseeding after degenerate restarts")
    return p


def _load_operator(args):
    if args.mode == "as-is":
        return mmio.read_matrix_market(args.input)
    general = mmio.read_matrix_market_general(args.input)
    if args.mode == "symmetrize":
        return skew_symmetrize(general)
    return block_embed(general)


def _start_vector(spec: str, A):
    if spec == "uniform":
        return None
    if spec == "purge-null":
        q1 = A.tocsr() @ np.ones(A.n)
        return q1  # solver normalises; exactly zero fails loudly there
    if spec.startswith("file:"):
        path = spec[len("file:"):]
        q1 = np.loadtxt(path, dtype=np.float64, ndmin=1)
        if q1.ndim != 1 or q1.size != A.n:
            raise SkewEigError(
                f"start vector has {q1.size} entries, matrix has order {A.n}"
            )
        return q1
    raise _UsageError(f"unknown --start value {spec!r}")


def _write_trace(path: str, trace, k: int) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        head = ["cycle", "mv_count"]
        head += [f"theta_{j + 1}" for j in range(k)]
        head += [f"residual_{j + 1}" for j in range(k)]
        w.writerow(head)
        for rec in trace:
            row = [rec.cycle, rec.mv_count]
            row += [f"{t:.17g}" for t in rec.thetas] + [""] * (k - rec.thetas.size)
            row += [f"{r:.3e}" for r in rec.residuals] + [""] * (k - rec.residuals.size)
            w.writerow(row)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.k >= args.m:
            raise _UsageError(f"--k must be smaller than --m (got k={args.k}, m={args.m})")
        if args.k < 1:
            raise _UsageError(f"--k must be at least 1 (got {args.k})")
        if args.tol <= 0.0:
            raise _UsageError(f"--tol must be positive (got {args.tol})")
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE_EXIT

    try:
        A = _load_operator(args)
        q1 = _start_vector(args.start, A)
        opts = SolverOptions(
            k=args.k,
            m=args.m,
            tol=args.tol,
            max_restarts=args.max_restarts,
            q1=q1,
            reorth_mode=args.reorth,
            seed=args.seed,
        )
        t0 = time.perf_counter()
        result = solve(A, opts)
        wall = time.perf_counter() - t0
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE_EXIT
    except InvalidOptions as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE_EXIT
    except (OSError, SkewEigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    if args.trace:
        try:
            _write_trace(args.trace, result.trace, args.k)
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1

    sigmas = [p.sigma for p in result.pairs]
    residuals = list(
        result.trace[-1].residuals[: len(sigmas)] if result.trace else []
    )
    if args.output == "json":
        doc = {
            "n": A.n,
            "k": args.k,
            "m": args.m,
            "tol": args.tol,
            "mode": args.mode,
            "converged": result.converged,
            "sigmas": sigmas,
            "residuals": residuals,
            "mv_count": result.mv_count,
            "restarts": result.restarts,
            "wall_time_s": wall,
        }
        print(json.dumps(doc, indent=2))
    else:
        for sig, res in zip(sigmas, residuals):
            print(f"+/-{sig:.12e}i  {res:.3e}")
        print(
            f"{'converged' if result.converged else 'NOT converged'}: "
            f"{len(sigmas)} pair(s), #Mv={result.mv_count}, "
            f"restarts={result.restarts}, {wall:.3f}s",
            file=sys.stderr,
        )
    return 0 if result.converged else 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

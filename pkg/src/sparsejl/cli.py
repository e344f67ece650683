"""Command-line interface: ``sparsejl <subcommand> ...``.

Exit status is 0 on success, 1 on invalid parameters or input, 2 on I/O
errors. Records go to stdout (or ``--out``); diagnostics go to stderr.
All randomness derives from ``--seed``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import __version__
from .diagnostics import diagnose, distortion, pair_distortions
from .hardness import (
    LemmaViolation,
    count_heavy_subsets,
    empirical_lower_bound,
    generate,
    heavy_subset_bound,
    solve_ell,
    suggest_t,
)
from .kernels import derive_seed
from .params import CALIBRATED_C_M, CALIBRATED_C_S, CalibrationError, calibrate_constants, plan_jl, plan_subspace
from .sketch import FORMAT_VERSION, SparseJLMatrix
from .subspace import (
    RankDeficientError,
    exact_least_squares,
    orthonormalize,
    random_basis,
    sketch_solve,
    subspace_distortion,
)
from .vectors import Dataset, SparseVector, read_dataset, write_sparse_text


class UsageError(ValueError):
    pass


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _load_data(args):
    return read_dataset(args.data, fmt=args.format, one_based=args.one_based)


def _read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in r] for r in csv.reader(fh) if r]
    if not rows:
        raise UsageError(f"{path}: empty")
    return np.array(rows)


# ------------------------------------------------------------ subcommands


def cmd_plan(args):
    if args.k is not None:
        plan = plan_subspace(args.k, args.eps, args.cm, args.cs)
    else:
        if args.n is None or args.d is None:
            raise UsageError("plan needs --n and --d, or --k")
        plan = plan_jl(args.n, args.d, args.eps, args.cm, args.cs)
    print(plan.pretty() if args.pretty else plan.record())


def cmd_sample(args):
    A = SparseJLMatrix.sample(args.m, args.d, args.s, args.seed)
    with _output(args.out) as fh:
        fh.write(A.dumps(explicit=args.explicit))


def cmd_embed(args):
    A = SparseJLMatrix.load(args.matrix)
    X = _widen(_load_data(args), A.d)
    Y = A.apply_dataset(X, args.threads)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in Y:
            w.writerow([repr(float(v)) for v in row])


def _pairs_arg(text):
    if text == "all":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--pairs must be 'all' or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("--pairs must be 'all' or a positive integer")
    return value


def _widen(X, d):
    if X.dim > d:
        raise UsageError(f"--data has dimension {X.dim}, matrix has d={d}")
    if X.dim == d:
        return X
    return Dataset(d, [SparseVector(d, p.indices, p.values) for p in X.points], X.labels)


def cmd_distortion(args):
    A = SparseJLMatrix.load(args.matrix)
    X = _widen(_load_data(args), A.d)
    report = distortion(A, X, args.eps, pairs=args.pairs, seed=args.seed, threads=args.threads)
    print(report.record())
    if args.dump_pairs:
        I, J, rel = pair_distortions(A, X, pairs=args.pairs, seed=args.seed, threads=args.threads)
        with open(args.dump_pairs, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "rel_distortion"])
            for i, j, r in zip(I.tolist(), J.tolist(), rel.tolist()):
                w.writerow([i, j, repr(r)])


def cmd_calibrate(args):
    c_m, c_s = calibrate_constants(args.target, args.budget, (args.n, args.d, args.eps), args.seed, args.threads)
    print(f"c_m={c_m!r} c_s={c_s!r}")


def cmd_subspace_eval(args):
    if args.basis:
        B = orthonormalize(_read_matrix_csv(args.basis))
    elif args.random_k:
        if args.d is None:
            raise UsageError("--random-k needs --d")
        B = random_basis(args.random_k, args.d, derive_seed(args.seed, 0))
    else:
        raise UsageError("subspace-eval needs --basis or --random-k")
    plan = plan_subspace(max(B.k, 2), args.eps, args.cm, args.cs)
    A = SparseJLMatrix.sample(plan.m, B.d, plan.s, derive_seed(args.seed, 1))
    dist = subspace_distortion(A, B)
    print(plan.record())
    print(f"distortion={dist!r}")
    print(f"within_eps={int(dist <= args.eps)}")


def cmd_regress(args):
    X = _read_matrix_csv(args.design)
    y = _read_matrix_csv(args.target).ravel()
    beta, plan = sketch_solve(X, y, args.eps, args.seed, args.cm, args.cs, ridge=args.ridge)
    resid = float(np.sum((X @ beta - y) ** 2))
    print(plan.record())
    for i, b in enumerate(beta.tolist()):
        print(f"beta[{i}]={b!r}")
    print(f"residual_sq={resid!r}")
    if args.exact_compare:
        exact = exact_least_squares(X, y)
        best = float(np.sum((X @ exact - y) ** 2))
        print(f"exact_residual_sq={best!r}")
        ratio = resid / best if best > 0 else (1.0 if resid == 0 else math.inf)
        print(f"residual_ratio={ratio!r}")
        print(f"within_1_plus_2eps={int(resid <= (1 + 2 * args.eps) * best + 1e-12)}")


def cmd_hard_instance(args):
    inst = generate(args.n, args.d, args.cap, args.seed, ell=args.ell)
    X = inst.to_dataset()
    print(f"d={inst.d} ell={inst.ell} subsets={len(inst.subsets)} points={len(X)} sampled={int(inst.sampled)}", file=sys.stderr)
    with _output(args.out) as fh:
        write_sparse_text(X, fh)


def cmd_verify_lemma7(args):
    if 2 * args.s > args.m:
        raise UsageError(f"--s must be at most --m / 2 (s={args.s}, m={args.m})")
    vacuous = 8 * args.t > args.s
    if vacuous:
        print(f"note: t={args.t} > s/8, bound is {heavy_subset_bound(args.m, args.s, args.t)} (vacuous)", file=sys.stderr)
    failures = 0
    for trial in range(args.trials):
        rng = np.random.default_rng(derive_seed(args.seed, trial))
        v = np.zeros(args.m)
        support = rng.choice(args.m, size=args.s, replace=False)
        v[support] = rng.standard_normal(args.s)
        try:
            count, bound = count_heavy_subsets(v, args.s, args.t, strict_t=not vacuous)
            status = "ok"
        except LemmaViolation:
            count, bound, status = -1, heavy_subset_bound(args.m, args.s, args.t), "VIOLATION"
            failures += 1
        print(f"trial={trial} count={count} bound={bound} {status}")
    print(f"summary={'PASS' if failures == 0 else 'FAIL'} trials={args.trials} violations={failures}")
    if failures:
        return 1


def cmd_lb_sweep(args):
    plan = plan_jl(args.n, args.d, args.eps, args.cm, args.cs)
    s_values = []
    for tok in args.s.split(","):
        tok = tok.strip()
        if tok == "plan":
            s_values.append(plan.s)
        else:
            try:
                s_values.append(int(tok))
            except ValueError:
                raise UsageError(f"--s entry {tok!r} is neither an integer nor 'plan'") from None
    rows = empirical_lower_bound(
        args.d, args.n, args.eps, s_values, args.trials, args.seed, args.cap, args.cm, args.threads
    )
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "m", "successes", "trials", "frequency"])
        for r in rows:
            w.writerow([r.s, r.m, r.successes, r.trials, repr(r.frequency)])
    if args.t_hint:
        ell = solve_ell(args.n, args.d)
        for s in s_values:
            print(f"s={s} suggested_t={suggest_t(args.eps, args.d, ell, plan.m, s)!r}", file=sys.stderr)


def cmd_diagnose(args):
    X = _load_data(args)
    n = args.n if args.n is not None else len(X)
    if args.matrix:
        A = SparseJLMatrix.load(args.matrix)
        X = _widen(X, A.d)
        base = plan_jl(n, A.d, args.eps, args.cm, args.cs)
        plan = replace(base, m=A.m, s=A.s, clamped=False)
    else:
        plan = plan_jl(n, X.dim, args.eps, args.cm, args.cs)
        A = SparseJLMatrix.sample(plan.m, X.dim, plan.s, args.seed)
    summary = diagnose(A, X, plan, pairs=not args.points, ell=args.ell)
    print(f"m={A.m} s={A.s} d={A.d} n={n}")
    print(summary.record())


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparsejl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sparsejl {__version__} (matrix format_version {FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, threads=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if threads:
            sp.add_argument("--threads", type=int, default=None, help="worker threads (default: $SPARSEJL_THREADS or 1)")

    def data_args(sp):
        sp.add_argument("--data", required=True)
        sp.add_argument("--format", choices=["sparse", "csv"], default=None)
        sp.add_argument("--one-based", action="store_true")

    def consts(sp, default_m=CALIBRATED_C_M, default_s=CALIBRATED_C_S):
        sp.add_argument("--cm", type=float, default=default_m)
        sp.add_argument("--cs", type=float, default=default_s)

    sp = sub.add_parser("plan", help="resolve (m, s, ell)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--eps", type=float, required=True)
    consts(sp, 1.0, 1.0)
    sp.add_argument("--pretty", action="store_true")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("sample", help="write a matrix file")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--out")
    sp.add_argument("--explicit", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("embed", help="apply a matrix to a dataset")
    sp.add_argument("--matrix", required=True)
    data_args(sp)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("distortion", help="pairwise distortion report")
    sp.add_argument("--matrix", required=True)
    data_args(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--pairs", type=_pairs_arg, default=None)
    sp.add_argument("--dump-pairs")
    common(sp)
    sp.set_defaults(func=cmd_distortion)

    sp = sub.add_parser("calibrate", help="search the constant grid")
    sp.add_argument("--target", type=float, required=True)
    sp.add_argument("--budget", type=int, default=200)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("subspace-eval", help="subspace embedding distortion")
    sp.add_argument("--basis")
    sp.add_argument("--random-k", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--eps", type=float, required=True)
    consts(sp)
    common(sp)
    sp.set_defaults(func=cmd_subspace_eval)

    sp = sub.add_parser("regress", help="sketch-and-solve least squares")
    sp.add_argument("--design", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--ridge", type=float, default=0.0)
    sp.add_argument("--exact-compare", action="store_true")
    consts(sp)
    common(sp)
    sp.set_defaults(func=cmd_regress)

    sp = sub.add_parser("hard-instance", help="write the lower-bound instance")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--cap", type=int, default=10_000)
    sp.add_argument("--ell", type=int)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_hard_instance)

    sp = sub.add_parser("verify-lemma7", help="brute-force heavy-subset counts")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--trials", type=int, default=100)
    common(sp)
    sp.set_defaults(func=cmd_verify_lemma7)

    sp = sub.add_parser("lb-sweep", help="success frequency vs s on the hard instance")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--s", default="1,2,4,plan", help="comma list; 'plan' means the planned s")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--cap", type=int, default=600)
    sp.add_argument("--out")
    sp.add_argument("--t-hint", action="store_true", help="print the suggested signature size per s")
    consts(sp)
    common(sp)
    sp.set_defaults(func=cmd_lb_sweep)

    sp = sub.add_parser("diagnose", help="per-vector event checks")
    data_args(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--ell", type=int)
    sp.add_argument("--points", action="store_true", help="check normalized points instead of pair differences")
    consts(sp)
    common(sp)
    sp.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            rc = args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError, CalibrationError, RankDeficientError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())

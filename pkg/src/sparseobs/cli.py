"""Command line interface.

Subcommands: gen, solve, bench, recover, prune, probe.
Exit codes: 0 success, 2 usage error, 3 numeric failure.
"""

import argparse
import sys

import numpy as np

from . import fileio, harness, pruner, solvers
from .exceptions import (
    BatchOutOfRange,
    DimensionMismatch,
    EmptySignal,
    ImageLoadError,
    KOutOfRange,
    SparseObsError,
)
from .objectives import LeastSquaresObjective, probe_constants
from .rng import stream_rng

USAGE_ERRORS = (
    KOutOfRange,
    BatchOutOfRange,
    DimensionMismatch,
    ImageLoadError,
    EmptySignal,
    FileNotFoundError,
    ValueError,
)


def _eta_arg(text):
    return text if text == "auto" else float(text)


def _add_solver_flags(p):
    p.add_argument("--method", required=True, choices=solvers.METHOD_NAMES)
    p.add_argument("--k", type=int, default=None, help="sparsity budget (default: instance kstar*4 capped at d)")
    p.add_argument("--iters", type=int, default=750)
    p.add_argument("--eta", type=_eta_arg, default="auto", metavar="auto|REAL")
    p.add_argument("--damp", type=float, default=0.0)
    p.add_argument("--lambda", dest="stoch_lambda", type=float, default=1.0)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="sparseobs",
                                     description="Sparse recovery and second-order pruning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance bundle")
    gen.add_argument("--prior", choices=("gaussian", "image"), default="gaussian")
    gen.add_argument("--d", type=int, default=128)
    gen.add_argument("--n", type=int, default=256)
    gen.add_argument("--kstar", type=int, default=16)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--image", default="", help="PGM (P5) file for the image prior")
    gen.add_argument("--out", required=True, metavar="DIR")

    solve = sub.add_parser("solve", help="run one solver on a stored instance")
    _add_solver_flags(solve)
    solve.add_argument("--data", required=True, metavar="DIR")
    solve.add_argument("--trace", required=True, metavar="FILE")

    bench = sub.add_parser("bench", help="multi-trial benchmark with aggregation")
    bench.add_argument("--spec", default=None, metavar="FILE", help="key=value spec file")
    bench.add_argument("--prior", choices=("gaussian", "image"), default="gaussian")
    bench.add_argument("--d", type=int, default=128)
    bench.add_argument("--n", type=int, default=256)
    bench.add_argument("--kstar", type=int, default=16)
    bench.add_argument("--k", type=int, default=64)
    bench.add_argument("--iters", type=int, default=750)
    bench.add_argument("--methods", default="iht,topk-iobs", help="comma-separated method list")
    bench.add_argument("--eta", type=_eta_arg, default="auto")
    bench.add_argument("--damp", type=float, default=0.0)
    bench.add_argument("--lambda", dest="stoch_lambda", type=float, default=1.0)
    bench.add_argument("--batch", type=int, default=32)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--runs", type=int, default=None)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--outdir", required=True, metavar="DIR")

    recover = sub.add_parser("recover", help="image recovery pipeline with PSNR")
    _add_solver_flags(recover)
    recover.add_argument("--data", required=True, metavar="DIR")
    recover.add_argument("--out", required=True, metavar="FILE", help="recovered signal vector")

    prune = sub.add_parser("prune", help="iterative prune + finetune loop on a stored model")
    prune.add_argument("--model", required=True, metavar="FILE")
    prune.add_argument("--rounds", type=int, default=5)
    prune.add_argument("--lr", type=float, default=0.1)
    prune.add_argument("--krow", type=int, required=True, help="kept weights per row, every layer")
    prune.add_argument("--batch", type=int, default=256)
    prune.add_argument("--damp", type=float, default=None)
    prune.add_argument("--seed", type=int, default=0)
    prune.add_argument("--report", required=True, metavar="FILE")
    prune.add_argument("--out", default=None, metavar="FILE", help="write the pruned model")

    probe = sub.add_parser("probe", help="estimate curvature constants of an instance")
    probe.add_argument("--data", required=True, metavar="DIR")
    probe.add_argument("--k", type=int, default=None)
    probe.add_argument("--samples", type=int, default=4)
    probe.add_argument("--seed", type=int, default=0)

    return parser


def _default_k(meta, d):
    return min(d, 4 * int(meta.get("kstar", max(1, d // 8))))


def _cmd_gen(args):
    spec = harness.ExperimentSpec(
        prior=args.prior, d=args.d, n=args.n, k_star=args.kstar,
        k=min(args.d, max(args.kstar, 1)), seed=args.seed, noise=args.noise,
    ) if args.prior == "gaussian" else None
    rng = stream_rng(args.seed, 0)
    if args.prior == "gaussian":
        X, y, theta_star, meta = harness.gen_instance(spec, rng)
    else:
        if not args.image:
            raise ValueError("--image is required for the image prior")
        base = harness.ExperimentSpec(prior="gaussian", seed=args.seed, noise=args.noise)
        X, y, theta_star, meta, _derived = harness.gen_image_instance(args.image, base, rng)
    meta["seed"] = args.seed
    fileio.write_instance(args.out, X, y, theta_star, meta)
    print(f"wrote instance to {args.out} (d={meta['d']}, n={meta['n']}, kstar={meta['kstar']})")
    return 0


def _load_instance(data_dir):
    X, y, theta_star, meta = fileio.read_instance(data_dir)
    return X, y, theta_star, meta


def _cmd_solve(args):
    X, y, theta_star, meta = _load_instance(args.data)
    obj = LeastSquaresObjective(X, y)
    k = args.k if args.k is not None else _default_k(meta, obj.d)
    cfg = solvers.SolverConfig(
        k=k, max_iters=args.iters, eta=args.eta, damp=args.damp,
        stoch_lambda=args.stoch_lambda, batch_size=args.batch, seed=args.seed,
    )
    state = solvers.run(obj, args.method, np.zeros(obj.d), cfg, theta_star=theta_star)
    fileio.write_trace_csv(args.trace, state.trace)
    last = state.trace[-1]
    dist = "" if last.dist_to_opt is None else f"{last.dist_to_opt:.6e}"
    print(f"{args.method}: t={last.t} loss={last.loss:.6e} dist={dist}")
    return 0


def _cmd_bench(args):
    if args.spec:
        spec = harness.ExperimentSpec.from_file(args.spec)
        if args.runs is not None:
            spec.runs = args.runs
    else:
        spec = harness.ExperimentSpec(
            prior=args.prior, d=args.d, n=args.n, k_star=args.kstar, k=args.k,
            iters=args.iters, runs=args.runs if args.runs is not None else 20,
            seed=args.seed,
            methods=tuple(tok.strip() for tok in args.methods.split(",") if tok.strip()),
            eta=args.eta, damp=args.damp, stoch_lambda=args.stoch_lambda,
            batch_size=args.batch,
        )
    result = harness.run_bench(spec, outdir=args.outdir, jobs=args.jobs)
    print(f"bench: {result.n_success}/{spec.runs} runs ok, outputs in {args.outdir}")
    return 0


def _cmd_recover(args):
    X, y, theta_star, meta = _load_instance(args.data)
    k = args.k if args.k is not None else min(X.shape[1], 2 * int(meta.get("kstar", 1)))
    spec = harness.ExperimentSpec(
        prior="gaussian", d=X.shape[1], n=X.shape[0],
        k_star=int(meta.get("kstar", 1)), k=k, iters=args.iters,
        eta=args.eta, damp=args.damp, stoch_lambda=args.stoch_lambda,
        batch_size=args.batch,
    )
    recovered, value, state = harness.recover_image(
        X, y, theta_star, args.method, spec, seed=args.seed
    )
    fileio.write_vector(args.out, recovered)
    print(f"{args.method}: iterations={state.t} psnr={'inf' if value == float('inf') else f'{value:.3f}'}")
    return 0


def _cmd_prune(args):
    mlp = fileio.read_model(args.model)
    d_in = mlp.layers[0][0].shape[1]
    teacher = mlp.copy()

    def data_gen(rng):
        X = rng.standard_normal((d_in, args.batch))
        return X, teacher.forward(X)

    k_rows = []
    for weight, _act in mlp.layers:
        if args.krow > weight.shape[1]:
            raise KOutOfRange(f"--krow {args.krow} exceeds layer width {weight.shape[1]}")
        k_rows.append(args.krow)
    rng = stream_rng(args.seed, 0)
    pruned, records = pruner.iterative_prune_loop(
        mlp, data_gen, args.rounds, args.lr, k_rows, rng, damp=args.damp
    )
    with open(args.report, "w", encoding="ascii", newline="") as fh:
        fh.write("round,layer,recon_loss,train_loss,sparsity\n")
        for rec in records:
            fh.write(
                f"{rec.round},{rec.layer},{fileio.format_real(rec.recon_loss)},"
                f"{fileio.format_real(rec.train_loss)},{fileio.format_real(rec.sparsity)}\n"
            )
    if args.out:
        fileio.write_model(args.out, pruned)
    final = records[-1]
    print(f"pruned {len(mlp.layers)} layers, final train_loss={final.train_loss:.6e}")
    return 0


def _cmd_probe(args):
    X, y, theta_star, meta = _load_instance(args.data)
    obj = LeastSquaresObjective(X, y)
    k = args.k if args.k is not None else _default_k(meta, obj.d)
    rng = stream_rng(args.seed, 0)
    samples = [theta_star] + [rng.standard_normal(obj.d) for _ in range(max(0, args.samples - 1))]
    result = probe_constants(obj, samples, k, rng=rng)
    print(f"strong_convexity={fileio.format_real(result.strong_convexity)}")
    print(f"restricted_smoothness={fileio.format_real(result.restricted_smoothness)}")
    print(f"hessian_lipschitz={fileio.format_real(result.hessian_lipschitz)}")
    print(f"kstar={meta.get('kstar', '')}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "recover": _cmd_recover,
    "prune": _cmd_prune,
    "probe": _cmd_probe,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SparseObsError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

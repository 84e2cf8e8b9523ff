"""Command-line front end: approximate, compare, generate, validate."""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import iogen, symcore
from .cascade import (
    CascadeBreakdown,
    TreePolicy,
    compare_policies,
    relative_reduction,
    run_cascade,
)
from .errors import CascadeError
from .ordering import FactorizationKind, to_dot, to_factor_graph

log = logging.getLogger("cascadetrees")

LARGE_N = 2000


def _load_input(args):
    if args.synthetic:
        spec = iogen.SyntheticSpec.parse(args.synthetic)
        return iogen.generate_synthetic(spec), {
            "synthetic": {"n": spec.n, "density": spec.density, "seed": spec.seed},
            "rng": iogen.RNG_NAME,
        }
    m = iogen.read_matrix(args.input, normalize=args.normalize)
    return m, {"input": str(args.input), "normalize": bool(args.normalize)}


def _add_input(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="headerless CSV correlation matrix")
    src.add_argument("--synthetic", metavar="N,DENSITY,SEED", help="generate an instance")
    p.add_argument(
        "--normalize",
        action="store_true",
        help="rescale a covariance input to unit diagonal",
    )


def _check_size(n):
    if n > LARGE_N:
        log.warning("n = %d: every stage costs O(n^3); expect a long run", n)


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_approximate(args):
    sigma, meta = _load_input(args)
    n = sigma.shape[0]
    _check_size(n)
    out = iogen.ensure_dir(args.out)
    try:
        model = run_cascade(
            sigma,
            TreePolicy(args.policy),
            FactorizationKind(args.factorization),
            max_stages=args.stages,
            kl_threshold=args.kl_threshold,
        )
        failure = None
    except CascadeBreakdown as exc:
        model, failure = exc.partial, exc

    iogen.write_trace(model.kl_trace, out / "kl_trace.csv")
    iogen.write_matrix(model.model_cov, out / "model_cov.csv")
    if args.emit_stage_matrices:
        for st in model.stages:
            iogen.write_matrix(st.factor, out / f"L_{st.index}.csv")
            iogen.write_matrix(st.permutation.matrix(), out / f"P_{st.index}.csv")
            iogen.write_matrix(st.inverse, out / f"Q_{st.index}.csv")
            iogen.write_matrix(model.residuals[st.index], out / f"Delta_{st.index}.csv")
    if args.emit_dot:
        for st in model.stages:
            (out / f"stage_{st.index}.dot").write_text(to_dot(to_factor_graph(st)))
    if args.emit_sparsity:
        iogen.sparsity_dump(sigma, out / "sparsity_sigma.csv")
        for st in model.stages:
            i = st.index
            iogen.sparsity_dump(model.model_cov_at(i), out / f"sparsity_model_{i}.csv")
            iogen.sparsity_dump(st.tree.covariance, out / f"sparsity_tree_{i}.csv")

    meta.update(
        {
            "n": n,
            "policy": str(model.policy),
            "factorization": str(model.kind),
            "stages_requested": args.stages,
            "stages_run": len(model.stages),
            "kl_threshold": args.kl_threshold,
            "stop_reason": model.stop_reason,
            "kl_trace": [[i, kl] for i, kl in model.kl_trace],
        }
    )
    if len(model.kl_trace) > 1:
        red = relative_reduction(model.kl_trace)
        meta["reduction_vs_stage1"] = {str(i): r for i, r in red.items() if i >= 1}
    _write_json(meta, out / "metadata.json")

    if failure is not None:
        raise failure
    i, kl = model.kl_trace[-1]
    print(f"final KL: {kl:.17g} nats (stage {i})")
    return 0


def cmd_compare(args):
    sigma, meta = _load_input(args)
    _check_size(sigma.shape[0])
    table = compare_policies(
        sigma,
        args.stages,
        policies=args.policy or None,
        kinds=args.factorization or None,
        workers=args.workers,
    )
    out = iogen.ensure_dir(args.out)
    with open(out / "comparison.csv", "w", newline="") as fh:
        fh.write("policy,factorization,stage,kl_nats\n")
        for (policy, kind), res in table.items():
            for i, kl in res.kl_trace:
                fh.write(f"{policy},{kind},{i},{format(kl, '.17g')}\n")
    for (policy, kind), res in table.items():
        if res.error:
            print(f"warning: {policy}/{kind}: {res.error}", file=sys.stderr)
    meta["stages"] = args.stages
    _write_json(meta, out / "comparison_meta.json")
    for (policy, kind), res in table.items():
        i, kl = res.kl_trace[-1]
        print(f"{policy},{kind}: {kl:.6g} nats (stage {i})")
    return 0


def cmd_generate(args):
    spec = iogen.SyntheticSpec.parse(args.synthetic)
    m = iogen.generate_synthetic(spec)
    out = Path(args.out)
    if out.parent != Path("."):
        out.parent.mkdir(parents=True, exist_ok=True)
    iogen.write_matrix(m, out)
    dens = iogen.precision_density(m)
    print(f"wrote {out}: n={spec.n} precision density={dens:.4f} rng={iogen.RNG_NAME}")
    return 0


def validation_report(m, tol_sym=symcore.SYMMETRY_TOL, tol_diag=1e-8):
    """List of ``(check, passed, detail)`` for a raw square matrix."""
    n = m.shape[0]
    report = []
    asym = float(np.max(np.abs(m - m.T)))
    report.append(("symmetric", asym <= tol_sym, f"max |m - m^T| = {asym:.3e}"))
    diag = float(np.max(np.abs(np.diag(m) - 1.0)))
    report.append(("unit diagonal", diag <= tol_diag, f"max |m_kk - 1| = {diag:.3e}"))
    tr = float(np.trace(m))
    report.append(("trace equals n", abs(tr - n) <= tol_diag, f"tr = {tr:.12g}, n = {n}"))
    try:
        symcore.cholesky_lower(0.5 * (m + m.T))
        report.append(("positive definite", True, "Cholesky succeeded"))
    except symcore.NotPositiveDefinite as exc:
        report.append(("positive definite", False, f"pivot {exc.pivot + 1} failed"))
    return report


def cmd_validate(args):
    m = iogen.read_raw(args.input)
    if args.normalize:
        m = iogen.normalize_cov(m)
    ok = True
    for name, passed, detail in validation_report(m):
        ok &= passed
        print(f"{name}: {'pass' if passed else 'FAIL'} ({detail})")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cascadetrees",
        description="Cascade-of-trees approximation of Gaussian correlation matrices.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approximate", help="run the cascade and write artifacts")
    _add_input(p)
    p.add_argument("--policy", choices=[x.value for x in TreePolicy], default="chow-liu")
    p.add_argument(
        "--factorization",
        choices=[x.value for x in FactorizationKind],
        default="chol-ll",
    )
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--kl-threshold", type=float, default=None)
    p.add_argument("--emit-dot", action="store_true")
    p.add_argument("--emit-sparsity", action="store_true")
    p.add_argument("--emit-stage-matrices", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("compare", help="KL traces for every policy/factorization")
    _add_input(p)
    p.add_argument("--policy", action="append", choices=[x.value for x in TreePolicy])
    p.add_argument(
        "--factorization",
        action="append",
        choices=[x.value for x in FactorizationKind],
    )
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("generate", help="write a synthetic correlation matrix")
    p.add_argument("--synthetic", metavar="N,DENSITY,SEED", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a matrix file's invariants")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    if getattr(args, "stages", 1) < 1:
        parser.error("--stages must be >= 1")
    try:
        return args.func(args)
    except (CascadeError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface.

Single binary with subcommands; a JSON config file may supply any flag of
the active subcommand (keys are flag names with dashes replaced by
underscores) and explicit flags win.  Exit codes: 0 success, 2 usage
error, 3 data error (bad inputs, missing or foreign files), 4 numerical
failure (divergence, bound violation, incomplete generation).
"""

import argparse
import glob as globmod
import json
import os
import sys

import numpy as np

from . import dataset as ds
from .bounds import reuss_bound, two_phase_isotropic, voigt_bound
from .errors import (
    BoundViolation,
    CorruptFile,
    EmptySplit,
    GenerationIncomplete,
    InvalidInput,
    SolverDiverged,
    TrainingDiverged,
    UnsupportedSchema,
)
from .homsolve import contrast_sweep, run_oracle_suite
from .microgen import volume_fraction
from .surrogate import (
    NetConfig,
    TrainConfig,
    default_hidden,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)

__all__ = ["main", "build_parser"]

_DATA_ERRORS = (
    InvalidInput,
    UnsupportedSchema,
    CorruptFile,
    EmptySplit,
    FileNotFoundError,
    IsADirectoryError,
)
_NUMERICAL_ERRORS = (
    SolverDiverged,
    TrainingDiverged,
    BoundViolation,
    GenerationIncomplete,
)


def _parse_contrasts(text):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise InvalidInput(f"bad contrast list {text!r}") from exc
    if not vals:
        raise InvalidInput("empty contrast list")
    return vals


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sample-level parallelism")
    p.add_argument("--out", default=None, help="output path (meaning depends on the command)")
    p.add_argument("--config", default=None, help="JSON file supplying defaults for any flag")


def _cmd_gen(args):
    man = ds.generate_structures(
        args.out or args.data,
        dim=args.dim,
        resolution=args.res,
        n_train=args.n_train,
        n_val=args.n_val,
        contrasts_train=_parse_contrasts(args.contrasts_train),
        contrasts_val=_parse_contrasts(args.contrasts_val),
        seed=args.seed,
        tol=args.tol,
    )
    print(f"gen: {len(man.train_ids)} train + {len(man.val_ids)} val structures at {man.resolution}")
    if not man.complete:
        print(f"gen: INCOMPLETE, {len(man.failures)} failures flagged in the manifest", file=sys.stderr)
        return 4
    return 0


def _cmd_solve(args):
    if args.data:
        man = ds.solve_dataset(args.data, jobs=args.jobs)
        n_rows = sum(
            len(ds.read_targets_csv(os.path.join(args.data, f"targets_{s}.csv")))
            for s in ("train", "val")
        )
        print(f"solve: {n_rows} rows written, audit tolerance 1e-8")
        if not man.complete:
            print(f"solve: INCOMPLETE, failures: {man.failures}", file=sys.stderr)
            return 4
        return 0
    if not args.grid:
        raise InvalidInput("solve needs --data or at least one --grid")
    if not args.out:
        raise InvalidInput("solve --grid needs --out for the targets table")
    contrasts = _parse_contrasts(args.contrasts)
    records = []
    worst = 0.0
    for path in args.grid:
        grid = ds.load_grid(path)
        vf = volume_fraction(grid)
        sid = os.path.splitext(os.path.basename(path))[0]
        for r_val, res in contrast_sweep(grid, contrasts, tol=args.tol, max_iter=args.max_iter):
            ps = two_phase_isotropic(grid.dim, 1.0, 1.0 / r_val, vf)
            records.append(
                ds.SampleRecord(
                    sid, r_val, res.kappa_eff, voigt_bound(ps), reuss_bound(ps),
                    float(res.residuals.max()),
                )
            )
            worst = max(worst, float(res.residuals.max()), res.asymmetry)
    ds.write_targets_csv(args.out, records)
    ds.read_targets_csv(args.out)  # load-time audit doubles as the summary check
    print(f"solve: {len(records)} rows -> {args.out}; worst residual/asymmetry {worst:.3e}; audit clean")
    return 0


def _cmd_featurize(args):
    if args.data:
        path = ds.featurize_dataset(args.data)
        print(f"featurize: wrote {path}")
        return 0
    if not args.grid:
        raise InvalidInput("featurize needs --data or at least one --grid")
    if not args.out:
        raise InvalidInput("featurize --grid needs --out")
    from .features import extract_features

    ids, vectors = [], []
    for path in args.grid:
        ids.append(os.path.splitext(os.path.basename(path))[0])
        vectors.append(extract_features(ds.load_grid(path)))
    ds.write_features_csv(args.out, ids, vectors)
    print(f"featurize: {len(ids)} rows -> {args.out}")
    return 0


def _cmd_train(args):
    man = ds.load_manifest(os.path.join(args.data, "manifest.json"))
    m = man.dim
    arrays = ds.load_training_arrays(
        args.data, args.head, m, scenario=args.scenario, scenario_seed=args.seed
    )
    (X_tr, T_tr), (X_va, T_va) = arrays["train"], arrays["val"]
    hidden = tuple(int(h) for h in args.hidden.split(",")) if args.hidden else default_hidden(m)
    ncfg = NetConfig(input_dim=X_tr.shape[1], hidden=hidden, head=args.head, m=m, seed=args.seed)
    tcfg = TrainConfig(
        epochs=args.epochs, batch_size=args.batch, lr=args.lr, seed=args.seed,
        plateau_factor=args.plateau_factor, plateau_patience=args.plateau_patience,
        min_lr=args.min_lr,
    )
    params, history = train(ncfg, tcfg, X_tr, T_tr, X_va, T_va)
    ckpt = args.out or os.path.join(args.data, f"model_{args.head}.vrck")
    save_checkpoint(ckpt, params, ncfg)
    hist_path = args.history or os.path.join(args.data, f"history_{args.head}.csv")
    ds.write_history_csv(hist_path, history)
    print(
        f"train[{args.head}/{args.scenario}]: {len(history['epoch'])} epochs on "
        f"{X_tr.shape[0]} samples, final val loss {history['val_loss'][-1]:.6g}"
    )
    print(f"train: checkpoint -> {ckpt}; history -> {hist_path}")
    return 0


def _cmd_eval(args):
    samples = ds.load_eval_samples(args.data, split=args.split)
    if args.head == "hill":
        params, ncfg = None, None
    else:
        ckpt = args.checkpoint or os.path.join(args.data, f"model_{args.head}.vrck")
        params, ncfg = load_checkpoint(ckpt)
        if ncfg.head != args.head:
            raise InvalidInput(f"checkpoint head {ncfg.head!r} does not match --head {args.head!r}")
    report = evaluate(params, ncfg, samples, head=args.head, tol=args.tol)
    prefix = args.out or os.path.join(args.data, f"eval_{args.head}")
    ds.write_metrics_csv(prefix + "_metrics.csv", report, args.head)
    ds.write_r2_csv(prefix + "_r2.csv", report, args.head)
    ds.write_ecdf_csv(prefix + "_ecdf.csv", report, args.head)
    ds.write_eigen_csv(prefix + "_eigen.csv", report, args.head)
    o = report.overall
    print(
        f"eval[{args.head}/{args.split}]: n={o['n']} rel_median={o['rel_median']:.4g} "
        f"phi_median={o['phi_median']:.4g} bound violations={o['violations']}"
    )
    print(f"eval: tables -> {prefix}_{{metrics,r2,ecdf,eigen}}.csv")
    return 0


def _cmd_oracle(args):
    checks = run_oracle_suite(dim=args.dim, res=args.res, tol=args.tol)
    ok = True
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        ok = ok and c.passed
    return 0 if ok else 4


def _read_csv_rows(path):
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _cmd_report(args):
    inputs = args.inputs or sorted(globmod.glob(os.path.join(args.data, "eval_*_metrics.csv")))
    if not inputs:
        raise InvalidInput("report found no metrics tables; run eval first or pass --inputs")
    out_dir = args.out or (args.data or ".")
    os.makedirs(out_dir, exist_ok=True)
    header = None
    merged = []
    by_model = {}
    for path in inputs:
        h, rows = _read_csv_rows(path)
        if header is None:
            header = h
        elif h != header:
            raise UnsupportedSchema(f"{path}: header differs from {inputs[0]}")
        merged.extend(rows)
        for row in rows:
            if row[1] != "all":
                by_model.setdefault(row[0], []).append(
                    {"R": float(row[1]), "phi_median": float(row[4]), "rel_median": float(row[7])}
                )
    cmp_path = os.path.join(out_dir, "comparison.csv")
    import csv

    with open(cmp_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(merged)
    figures = []
    from .plots import plot_ecdf, plot_eigen_vs_bounds, plot_error_vs_contrast

    fig1 = os.path.join(out_dir, "error_vs_contrast.png")
    plot_error_vs_contrast(by_model, fig1)
    figures.append(fig1)
    ecdf_data = {}
    for path in inputs:
        sib = path.replace("_metrics.csv", "_ecdf.csv")
        if not os.path.exists(sib):
            continue
        _, rows = _read_csv_rows(sib)
        for row in rows:
            ecdf_data.setdefault(row[0], ([], []))
            ecdf_data[row[0]][0].append(float(row[1]))
            ecdf_data[row[0]][1].append(float(row[2]))
    if ecdf_data:
        fig2 = os.path.join(out_dir, "ecdf.png")
        plot_ecdf({k: (np.array(x), np.array(y)) for k, (x, y) in ecdf_data.items()}, fig2)
        figures.append(fig2)
    for path in inputs:
        sib = path.replace("_metrics.csv", "_eigen.csv")
        if not os.path.exists(sib):
            continue
        _, rows = _read_csv_rows(sib)
        if not rows:
            continue
        label = rows[0][0]
        eigen_rows = [
            {
                "reuss_min": float(r[7]),
                "voigt_max": float(r[8]),
                "pred_min": float(r[3]),
                "pred_max": float(r[4]),
            }
            for r in rows
        ]
        figp = os.path.join(out_dir, f"eigen_{label}.png")
        plot_eigen_vs_bounds(eigen_rows, figp, label=label)
        figures.append(figp)
    print(f"report: merged {len(inputs)} tables -> {cmp_path}")
    for f in figures:
        print(f"report: figure -> {f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vrnet",
        description="Microstructure generation, FFT homogenization and bound-respecting surrogates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    p = sub.add_parser("gen", help="generate microstructures and the dataset manifest")
    p.add_argument("--data", default=None, help="dataset directory (synonym for --out)")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--res", type=int, default=64, help="voxels per edge")
    p.add_argument("--n-train", type=int, default=500)
    p.add_argument("--n-val", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8, help="solver tolerance recorded in the manifest")
    p.add_argument("--contrasts-train", default=",".join(repr(c) for c in ds.TRAIN_CONTRASTS))
    p.add_argument("--contrasts-val", default=",".join(repr(c) for c in ds.VAL_CONTRASTS))
    _add_common(p)
    p.set_defaults(func=_cmd_gen)
    commands["gen"] = p

    p = sub.add_parser("solve", help="compute effective tensors (dataset dir or single grids)")
    p.add_argument("--data", default=None, help="dataset directory with manifest and grids")
    p.add_argument("--grid", action="append", default=None, help="grid file; repeatable")
    p.add_argument("--contrasts", default=",".join(repr(c) for c in ds.TRAIN_CONTRASTS))
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_solve)
    commands["solve"] = p

    p = sub.add_parser("featurize", help="extract microstructure descriptors")
    p.add_argument("--data", default=None)
    p.add_argument("--grid", action="append", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_featurize)
    commands["featurize"] = p

    p = sub.add_parser("train", help="train a surrogate head on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--head", choices=("vr", "vanilla"), default="vr")
    p.add_argument("--scenario", choices=("O", "A", "B"), default="O")
    p.add_argument("--epochs", type=int, default=750)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--plateau-factor", type=float, default=0.5)
    p.add_argument("--plateau-patience", type=int, default=20)
    p.add_argument("--min-lr", type=float, default=1e-6)
    p.add_argument("--hidden", default=None, help="comma list of trunk widths")
    p.add_argument("--history", default=None, help="history CSV path")
    _add_common(p)
    p.set_defaults(func=_cmd_train)
    commands["train"] = p

    p = sub.add_parser("eval", help="evaluate a checkpoint or the Hill baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--head", choices=("vr", "vanilla", "hill"), default="vr")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--split", choices=("train", "val"), default="val")
    p.add_argument("--tol", type=float, default=1e-8, help="bound audit tolerance")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)
    commands["eval"] = p

    p = sub.add_parser("oracle", help="run the analytic verification suite")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--res", type=int, default=128)
    p.add_argument("--tol", type=float, default=1e-8)
    _add_common(p)
    p.set_defaults(func=_cmd_oracle)
    commands["oracle"] = p

    p = sub.add_parser("report", help="merge eval tables into a comparison plus figures")
    p.add_argument("--data", default=".", help="directory holding eval_*_metrics.csv")
    p.add_argument("--inputs", nargs="*", default=None, help="explicit metrics tables")
    _add_common(p)
    p.set_defaults(func=_cmd_report)
    commands["report"] = p

    return parser, commands


def _apply_config(parser, commands, argv):
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    try:
        with open(path) as fh:
            conf = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if not isinstance(conf, dict):
        raise InvalidInput(f"{path}: config must be a JSON object")
    target = next((commands[t] for t in argv if t in commands), None)
    if target is None:
        return
    valid = {a.dest for a in target._actions}
    unknown = sorted(set(conf) - valid)
    if unknown:
        raise InvalidInput(f"{path}: unknown config keys {unknown}")
    target.set_defaults(**conf)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()
    try:
        _apply_config(parser, commands, argv)
        args = parser.parse_args(argv)
        if getattr(args, "data", None) is None and args.command == "gen":
            if args.out is None:
                parser.error("gen needs --out or --data")
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"vrnet {argv[0] if argv else ''}: error: {exc}", file=sys.stderr)
        return 3
    except _NUMERICAL_ERRORS as exc:
        print(f"vrnet {argv[0] if argv else ''}: numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

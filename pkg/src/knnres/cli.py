"""Command-line interface: `knnres register|synth|eval`.

register  fit a warp aligning a target CSV to a reference CSV; writes the
          aligned set, per-step history, a replayable run manifest, and
          optional plot-ready artifacts (warped grid polylines, per-point
          displacement field).
synth     generate (reference, target, spec) benchmark triples.
eval      compute metrics (RMSE, Hamming at chosen k) between saved sets.

Exit codes: 0 ok, 1 divergence during training, 2 usage or I/O error.
KNNRES_THREADS caps internal thread pools when set.
"""

import argparse
import json
import os
import sys
import time
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np

from . import __version__
from .core import build_knn_graph, hamming_loss, pca_project, rmse
from .dataio import (load_manifest, load_pointset, save_manifest,
                     save_pointset, save_report_csv, sha256_file)
from .errors import DivergenceError, InvalidArgumentError, InvalidDataError
from .jacreg import FdConfig, orth_penalty_fd
from .preprocess import apply_fitted, parse_steps, preprocess
from .net import save_net
from .synthgen import apply_deform, level_spec, make_shape
from .trainer import TrainConfig, train, transform

# documented defaults: low-d toy-shape runs vs high-d feature-table runs
DEFAULTS_LOW_D = {"fd_epsilon": 0.005, "lam": 1e-5, "sigma": 0.001, "hutchinson_k": 0}
DEFAULTS_HIGH_D = {"fd_epsilon": 0.05, "lam": 0.1, "sigma": 0.04, "hutchinson_k": 5}


def _cap_threads():
    cap = os.environ.get("KNNRES_THREADS")
    if not cap:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=int(cap))
    except (ImportError, ValueError):
        os.environ.setdefault("OMP_NUM_THREADS", cap)


def _parse_k_list(text):
    try:
        ks = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgumentError(f"bad k list: {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise InvalidArgumentError(f"bad k list: {text!r}")
    return ks


def _load_options(args):
    subset = None
    if args.columns:
        raw = [c.strip() for c in args.columns.split(",")]
        subset = [int(c) if c.isdigit() else c for c in raw]
    return dict(delimiter=args.delimiter, has_header=args.has_header,
                column_subset=subset)


def _resolve_config(args, d: int) -> TrainConfig:
    """flags > config file > dimension-dependent documented defaults."""
    resolved = dict(DEFAULTS_LOW_D if d <= 6 else DEFAULTS_HIGH_D)
    file_cfg = {}
    if args.config:
        file_cfg = load_manifest(args.config)
        if "config" in file_cfg:  # a manifest from an earlier run
            file_cfg = file_cfg["config"]
    known = {f.name for f in dc_fields(TrainConfig)}
    for key, val in file_cfg.items():
        if key in known:
            resolved[key] = val
    flag_map = {
        "loss": "loss_kind", "sigma": "sigma", "lam": "lam",
        "fd_eps": "fd_epsilon", "hutchinson_k": "hutchinson_k",
        "penalty_mode": "penalty_mode", "batch": "batch_size",
        "epochs": "max_epochs", "seed": "seed",
    }
    for flag, key in flag_map.items():
        val = getattr(args, flag)
        if val is not None:
            resolved[key] = val
    if "hidden_widths" in resolved:
        resolved["hidden_widths"] = tuple(resolved["hidden_widths"])
    return TrainConfig(**resolved)


def _grid_warp_csv(net, target, path, n_lines=11, samples=60):
    """Warped lattice polylines over the target bounding box (2-D only)."""
    lo = target.data.min(axis=0)
    hi = target.data.max(axis=0)
    pad = 0.05 * (hi - lo + 1e-12)
    lo, hi = lo - pad, hi + pad
    rows = []
    line_id = 0
    levels = [np.linspace(lo[i], hi[i], n_lines) for i in (0, 1)]
    ts = [np.linspace(lo[i], hi[i], samples) for i in (0, 1)]
    for x in levels[0]:
        pts = np.column_stack([np.full(samples, x), ts[1]])
        warped = transform(net, pts).data
        rows += [[line_id, v, *warped[v]] for v in range(samples)]
        line_id += 1
    for y in levels[1]:
        pts = np.column_stack([ts[0], np.full(samples, y)])
        warped = transform(net, pts).data
        rows += [[line_id, v, *warped[v]] for v in range(samples)]
        line_id += 1
    with open(path, "w") as fh:
        fh.write("line_id,vertex_id,x,y\n")
        for r in rows:
            fh.write(f"{r[0]},{r[1]},{r[2]:.17g},{r[3]:.17g}\n")


def _field_csv(target, aligned, path):
    """Per-point displacement vectors phi(y) - y."""
    disp = aligned.data - target.data
    d = target.d
    with open(path, "w") as fh:
        fh.write(",".join([f"y{i}" for i in range(d)] + [f"dx{i}" for i in range(d)]) + "\n")
        for row, vec in zip(target.data, disp):
            fh.write(",".join(f"{v:.17g}" for v in [*row, *vec]) + "\n")


def cmd_register(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    opts = _load_options(args)
    reference = load_pointset(args.reference, **opts)
    target = load_pointset(args.target, **opts)

    steps = parse_steps(args.preprocess) if args.preprocess else []
    if steps:
        reference, fits = preprocess(reference, steps)
        target = apply_fitted(target, fits) if args.share_stats else preprocess(target, steps)[0]

    cfg = _resolve_config(args, target.d)
    manifest = {
        "tool": "knnres register",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "preprocess": [list(s) for s in steps],
        "share_stats": bool(args.share_stats),
        "inputs": {
            "reference": {"path": str(args.reference), "sha256": sha256_file(args.reference),
                          "m": reference.m, "d": reference.d},
            "target": {"path": str(args.target), "sha256": sha256_file(args.target),
                       "m": target.m, "d": target.d},
        },
        "outputs": {},
        "metrics": {},
        "status": "running",
    }
    manifest_path = out_dir / "manifest.json"

    t0 = time.perf_counter()
    try:
        net, report = train(reference, target, cfg)
    except DivergenceError as exc:
        manifest["status"] = "diverged"
        manifest["error"] = str(exc)
        save_manifest(manifest, manifest_path)
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - t0
    aligned = transform(net, target)

    save_pointset(aligned, out_dir / "aligned.csv")
    save_report_csv(report, out_dir / "report.csv")
    save_net(net, out_dir / "net.npz")
    manifest["outputs"] = {
        "aligned": "aligned.csv", "report": "report.csv", "net": "net.npz",
    }

    epochs, means = report.epoch_means()
    metrics = {
        "epochs_run": int(epochs[-1]) + 1,
        "final_loss_total": float(means[-1]),
        "final_loss_align": float(np.mean(
            [report.loss_align[i] for i in range(len(report))
             if report.epoch[i] == epochs[-1]])),
        "final_loss_penalty": float(np.mean(
            [report.loss_penalty[i] for i in range(len(report))
             if report.epoch[i] == epochs[-1]])),
        "wall_time_s": wall,
    }
    if args.truth:
        truth = load_pointset(args.truth, **opts)
        if truth.data.shape == aligned.data.shape:
            metrics["rmse"] = rmse(aligned, truth)
        else:
            print("warning: truth shape differs from aligned output; RMSE skipped",
                  file=sys.stderr)
    for k in _parse_k_list(args.hamming_k):
        if k < target.m:
            before = build_knn_graph(target, k)
            after = build_knn_graph(aligned, k)
            metrics[f"hamming_k{k}"] = hamming_loss(before, after)
    if target.d == 2:
        metrics["fd_penalty_at_data"] = orth_penalty_fd(
            net, target, FdConfig(epsilon=cfg.fd_epsilon))[0]

    if args.grid_warp:
        if target.d != 2:
            print("error: --grid-warp needs 2-D data", file=sys.stderr)
            return 2
        _grid_warp_csv(net, target, out_dir / "grid_warp.csv")
        manifest["outputs"]["grid_warp"] = "grid_warp.csv"
    if args.field:
        _field_csv(target, aligned, out_dir / "field.csv")
        manifest["outputs"]["field"] = "field.csv"

    manifest["metrics"] = metrics
    manifest["status"] = "ok"
    save_manifest(manifest, manifest_path)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reference = make_shape(args.shape, args.m, d=args.d, seed=args.seed)
    spec = level_spec(args.level, seed=args.seed + 1)
    target = apply_deform(reference, spec)
    save_pointset(reference, out_dir / "reference.csv")
    save_pointset(target, out_dir / "target.csv")
    sidecar = {
        "shape": args.shape, "m": args.m, "d": args.d, "level": args.level,
        "seed": args.seed,
        "deform": {"kind": spec.kind, "seed": spec.seed,
                   "n_centers": spec.n_centers, "kernel_width": spec.kernel_width,
                   "coeff_std": spec.coeff_std},
    }
    save_manifest(sidecar, out_dir / "spec.json")
    print(f"wrote reference.csv, target.csv, spec.json to {out_dir}")
    return 0


def cmd_eval(args) -> int:
    metrics = {}
    named = {}
    if args.aligned and args.truth:
        aligned = load_pointset(args.aligned)
        truth = load_pointset(args.truth)
        metrics["rmse"] = rmse(aligned, truth)
        named["aligned"], named["truth"] = aligned, truth
    if args.pre and args.post:
        pre = load_pointset(args.pre)
        post = load_pointset(args.post)
        for k in _parse_k_list(args.k):
            metrics[f"hamming_k{k}"] = hamming_loss(
                build_knn_graph(pre, k), build_knn_graph(post, k))
        named["pre"], named["post"] = pre, post
    if not metrics:
        print("error: need --aligned/--truth and/or --pre/--post", file=sys.stderr)
        return 2
    if args.pca_out:
        stacked = np.vstack([ps.data for ps in named.values()])
        proj, _ = pca_project(stacked, min(2, stacked.shape[1]))
        with open(args.pca_out, "w") as fh:
            fh.write("set,pc1,pc2\n")
            row = 0
            for label, ps in named.items():
                for _ in range(ps.m):
                    coords = proj.data[row]
                    pc2 = coords[1] if len(coords) > 1 else 0.0
                    fh.write(f"{label},{coords[0]:.17g},{pc2:.17g}\n")
                    row += 1
    text = json.dumps(metrics, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="knnres", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"knnres {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    reg = sub.add_parser("register", help="align a target point set to a reference")
    reg.add_argument("--reference", required=True)
    reg.add_argument("--target", required=True)
    reg.add_argument("--truth", help="ground-truth positions for RMSE (row-wise)")
    reg.add_argument("--loss", choices=["sinkhorn", "mmd"], default=None)
    reg.add_argument("--sigma", type=float, default=None,
                     help="blur / kernel bandwidth (entropic eps = sigma^2)")
    reg.add_argument("--lambda", dest="lam", type=float, default=None)
    reg.add_argument("--fd-eps", dest="fd_eps", type=float, default=None)
    reg.add_argument("--hutchinson-k", dest="hutchinson_k", type=int, default=None)
    reg.add_argument("--penalty-mode", dest="penalty_mode", default=None,
                     choices=["fd", "hutch-qf", "hutch-alg3"])
    reg.add_argument("--batch", type=int, default=None)
    reg.add_argument("--epochs", type=int, default=None)
    reg.add_argument("--seed", type=int, default=None)
    reg.add_argument("--config", help="JSON config or a manifest from a previous run")
    reg.add_argument("--preprocess", help="e.g. log1p,drop_zero_rows:0.4,standardize")
    reg.add_argument("--share-stats", action="store_true",
                     help="fit preprocessing on the reference, replay on the target")
    reg.add_argument("--hamming-k", dest="hamming_k", default="5",
                     help="comma list of k for Hamming loss reporting")
    reg.add_argument("--grid-warp", action="store_true",
                     help="emit warped lattice polylines (2-D only)")
    reg.add_argument("--field", action="store_true",
                     help="emit per-point displacement vectors")
    reg.add_argument("--out", required=True)
    reg.add_argument("--delimiter", default=",")
    reg.add_argument("--has-header", action="store_true")
    reg.add_argument("--columns", help="comma list of column names or indices")
    reg.set_defaults(fn=cmd_register)

    syn = sub.add_parser("synth", help="generate a synthetic benchmark pair")
    syn.add_argument("--shape", choices=["ring", "grid", "two-moons", "gaussian-mixture"],
                     default="ring")
    syn.add_argument("--m", type=int, default=100)
    syn.add_argument("--d", type=int, default=2)
    syn.add_argument("--level", type=int, default=2, choices=range(6),
                     help="deformation severity: 0 (identity) .. 5")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out", required=True)
    syn.set_defaults(fn=cmd_synth)

    ev = sub.add_parser("eval", help="metrics between saved point sets")
    ev.add_argument("--aligned")
    ev.add_argument("--truth")
    ev.add_argument("--pre", help="point set before transformation")
    ev.add_argument("--post", help="point set after transformation")
    ev.add_argument("--k", default="5", help="comma list of k for Hamming loss")
    ev.add_argument("--pca-out", dest="pca_out",
                    help="write 2-component projections of the inputs to CSV")
    ev.add_argument("--out", help="write metrics JSON here as well as stdout")
    ev.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    _cap_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (InvalidArgumentError, InvalidDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``fbgpool <subcommand> [flags]``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.
Diagnostics go to standard error; machine output goes to files or
standard output.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import descriptors as D
from . import raster
from .errors import FbgError
from .model import load_model, save_model
from .partition import BORDER_SIDES, SP_CROWN, SP_NONE, SPConfig, compose_partition, save_partition_png
from .pipeline import dataset as ds
from .pipeline import experiment as ex
from .pipeline.features import GROUPS, FeatureConfig, ImageDescriptors, candidate_feature
from .pipeline.inference import DEFAULT_TAU
from .pipeline.metrics import aac
from .pipeline.synth import HALO, RADIAL, synth_border_benchmark
from .pooling import O2PConfig

log = logging.getLogger("fbgpool")

SP_CHOICES = ("none", "crown", "cartesian")


def _comma_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pooling configuration")
    g.add_argument("--border-width", type=float, default=5.0, help="Border crown width in pixels (default 5)")
    g.add_argument("--border-side", choices=BORDER_SIDES, default="exterior")
    g.add_argument("--sp", choices=SP_CHOICES, default="none", help="spatial pyramid over the Figure")
    g.add_argument("--layers", type=int, default=None, help="crown layers (needs --sp crown; default 4)")
    g.add_argument("--descriptors", default="eSIFT", help=f"comma list of {','.join(D.KINDS)}")
    g.add_argument("--regions", default="F", help=f"comma list of {','.join(GROUPS)}")
    g.add_argument("--blocks", default=None,
                   help="explicit kind:region list, e.g. eSIFT:F,eMSIFT:F,eSIFT:B (overrides --descriptors/--regions)")
    g.add_argument("--stride", type=int, default=4)
    g.add_argument("--scales", default="16,24,32", help="comma list of patch sizes")
    g.add_argument("--epsilon", type=float, default=1e-3)
    g.add_argument("--power", type=float, default=0.5)
    return p


def _runtime_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: logical cores)")
    p.add_argument("--seed", type=int, default=1)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbgpool", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    cfg, rt = _config_parent(), _runtime_parent()

    p = sub.add_parser("partition", parents=[cfg], help="write a candidate's region partition as an indexed PNG")
    p.add_argument("--mask", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("describe", parents=[cfg], help="dump dense descriptors of one image")
    p.add_argument("--image", required=True, type=Path)
    p.add_argument("--kind", choices=D.KINDS, default=D.ESIFT)
    p.add_argument("--mask", type=Path, help="mask for eMSIFT")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("pool", parents=[cfg], help="dump the concatenated pooled feature of one candidate")
    p.add_argument("--image", required=True, type=Path)
    p.add_argument("--mask", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("train", parents=[cfg, rt], help="train per-category ridge scorers")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--split", default="train")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="ridge coefficient (default 1e-4 * n)")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("predict", parents=[cfg, rt], help="label images with a trained model")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--split", default=None)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--out-dir", required=True, type=Path)

    p = sub.add_parser("evaluate", help="score predicted label maps against ground truth")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--pred-dir", required=True, type=Path)
    p.add_argument("--split", default=None)
    p.add_argument("--include-background", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("synth", parents=[rt], help="generate the synthetic Border benchmark")
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--variant", choices=(HALO, RADIAL), default=HALO)

    p = sub.add_parser("run", parents=[cfg, rt], help="train and evaluate end to end")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--eval-split", default=None)
    p.add_argument("--include-background", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", type=Path, default=None, help="report path; writes .json/.txt/.csv/.png")
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("visualize", parents=[cfg], help="render F-B-G and spatial pyramid partitions")
    p.add_argument("--image", required=True, type=Path)
    p.add_argument("--mask", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    return parser


def feature_config(args, parser: argparse.ArgumentParser) -> FeatureConfig:
    """Validate the shared pooling flags before any work is done."""
    if args.layers is not None and args.sp != SP_CROWN:
        parser.error("--layers requires --sp crown")
    layers = 4 if args.layers is None else args.layers
    if not 1 <= layers <= 16:
        parser.error(f"--layers must be in [1, 16], got {layers}")
    if args.blocks:
        blocks = []
        for item in _comma_list(args.blocks):
            kind, _, group = item.partition(":")
            blocks.append((kind, group))
    else:
        blocks = [(k, g) for k in _comma_list(args.descriptors) for g in _comma_list(args.regions)]
    for kind, group in blocks:
        if kind not in D.KINDS:
            parser.error(f"--descriptors/--blocks: unknown descriptor {kind!r} (choose from {', '.join(D.KINDS)})")
        if group not in GROUPS:
            parser.error(f"--regions/--blocks: unknown region {group!r} (choose from {', '.join(GROUPS)})")
        if group == "SPF" and args.sp == SP_NONE:
            parser.error("--regions SPF requires --sp crown or --sp cartesian")
    if not blocks:
        parser.error("--descriptors/--regions: at least one block is required")
    if args.border_width < 0:
        parser.error("--border-width must be >= 0")
    try:
        scales = tuple(int(s) for s in _comma_list(args.scales))
        grid = D.DenseGrid(args.stride, scales)
        o2p = O2PConfig(args.epsilon, args.power)
        return FeatureConfig(tuple(blocks), args.border_width, args.border_side, SPConfig(args.sp, layers), grid, o2p)
    except ValueError as exc:
        parser.error(str(exc))


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else ex.default_jobs()


def cmd_partition(args, cfg: FeatureConfig) -> int:
    part = compose_partition(raster.load_mask(args.mask), cfg.border_width, cfg.sp, cfg.border_side)
    save_partition_png(args.out, part)
    print(json.dumps(part.counts()))
    return 0


def cmd_describe(args, cfg: FeatureConfig) -> int:
    img = raster.load_gray(args.image)
    mask = raster.load_mask(args.mask) if args.mask else None
    if args.kind == D.EMSIFT and mask is None:
        raise FbgError("--kind eMSIFT needs --mask")
    descs = D.extract(args.kind, img, cfg.grid, mask=mask)
    D.write_dump(args.out, descs.vectors if len(descs) else np.zeros((0, D.descriptor_dim(args.kind))))
    print(json.dumps({"kind": args.kind, "count": len(descs), "dim": D.descriptor_dim(args.kind)}))
    return 0


def cmd_pool(args, cfg: FeatureConfig) -> int:
    img = raster.load_gray(args.image)
    feat = candidate_feature(ImageDescriptors(img, cfg.grid), raster.as_mask(raster.load_mask(args.mask), img.shape), cfg)
    D.write_dump(args.out, feat[None, :])
    print(json.dumps({"dim": int(feat.size), "blocks": cfg.n_blocks(), "digest": cfg.digest()}))
    return 0


def cmd_train(args, cfg: FeatureConfig) -> int:
    manifest = ds.load_dataset(args.manifest)
    entries = manifest.split(args.split)
    if not entries:
        raise FbgError(f"split {args.split!r} is empty")
    feats = ex.collect_features(entries, manifest, cfg, _jobs(args))
    model = ex.train_model(feats, manifest, cfg, args.lam)
    save_model(args.out, model)
    print(json.dumps({"model": str(args.out), "categories": model.categories, "feature_dim": model.feature_dim}))
    return 0


def cmd_predict(args, cfg: FeatureConfig) -> int:
    manifest = ds.load_dataset(args.manifest)
    model = load_model(args.model)
    split = ex.resolve_eval_split(manifest, args.split)
    feats = ex.collect_features(manifest.split(split), manifest, cfg, _jobs(args))
    preds = ex.predict_labelings(model, feats, cfg, args.tau)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for iid, lab in preds.items():
        ds.save_labelmap(args.out_dir / f"{iid}.png", lab)
    print(json.dumps({"split": split, "images": len(preds), "out_dir": str(args.out_dir)}))
    return 0


def cmd_evaluate(args) -> int:
    manifest = ds.load_dataset(args.manifest)
    split = ex.resolve_eval_split(manifest, args.split)
    gts, preds = {}, {}
    for e in manifest.split(split):
        p = args.pred_dir / f"{e.id}.png"
        if not p.is_file():
            raise FbgError(f"image {e.id}: missing prediction {p}")
        gts[e.id] = ds.load_labelmap(e.labels)
        preds[e.id] = ds.load_labelmap(p)
    result = aac(preds, gts, manifest.categories, args.include_background)
    report = {"config": {"eval_split": split, "include_background": args.include_background}, **result.as_dict()}
    _emit_report(report, args)
    return 0


def cmd_synth(args) -> int:
    m = synth_border_benchmark(args.out_dir, args.seed, args.n_train, args.n_test, args.variant)
    print(json.dumps({"manifest": str(m.path), "train": len(m.splits["train"]), "test": len(m.splits["test"])}))
    return 0


def cmd_run(args, cfg: FeatureConfig) -> int:
    manifest = ds.load_dataset(args.manifest)
    report = ex.run_experiment(manifest, cfg, args.lam, args.tau, _jobs(args), args.eval_split,
                               include_background=args.include_background)
    _emit_report(report, args)
    return 0


def _emit_report(report: dict, args) -> None:
    if args.out is None:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
        sys.stderr.write(ex.format_table(report))
        return
    paths = ex.write_report(report, args.out, figure=not args.no_figure)
    sys.stderr.write(ex.format_table(report))
    print(json.dumps({k: str(v) for k, v in paths.items()}))


def cmd_visualize(args, cfg: FeatureConfig) -> int:
    from .plotting import plot_partition

    img = raster.load_gray(args.image)
    mask = raster.as_mask(raster.load_mask(args.mask), img.shape)
    w, side = cfg.border_width, cfg.border_side
    panels = [
        ("F-B-G", compose_partition(mask, w, SPConfig(), side)),
        (f"crown SP ({cfg.sp.layers if cfg.sp.kind == SP_CROWN else 4})",
         compose_partition(mask, w, SPConfig(SP_CROWN, cfg.sp.layers if cfg.sp.kind == SP_CROWN else 4), side)),
        ("Cartesian SP", compose_partition(mask, w, SPConfig("cartesian"), side)),
    ]
    plot_partition(img, panels, args.out)
    print(json.dumps({"figure": str(args.out)}))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = feature_config(args, parser) if hasattr(args, "descriptors") else None
    except SystemExit as exc:  # argparse: 2 on usage errors, 0 for --help
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    handlers = {
        "partition": cmd_partition, "describe": cmd_describe, "pool": cmd_pool, "train": cmd_train,
        "predict": cmd_predict, "run": cmd_run, "visualize": cmd_visualize,
    }
    try:
        if args.command in handlers:
            return handlers[args.command](args, cfg)
        return {"evaluate": cmd_evaluate, "synth": cmd_synth}[args.command](args)
    except (FbgError, OSError, ValueError) as exc:
        print(f"fbgpool {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

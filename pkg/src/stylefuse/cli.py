"""Command-line interface: every pipeline stage is independently invocable.

Exit codes: 0 success, 1 stage failure (stage name on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import build_pipeline_config, parse_config_file
from .errors import StyleFuseError
from .fixtures import sample_style
from .fusion import FusionMask, export_score_csv, fixed_expression_mask, fuse, search, sweep
from .generator import Generator
from .geometry import LandmarkSet, rectify
from .imageio import load_image, save_image
from .inversion import invert
from .metrics import evaluate_pair
from .pipeline import TransferJob, load_style, run_transfer, save_style


def _load_config(args) -> "PipelineConfig":
    values = parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key in ("weight_seed", "iterations", "learning_rate", "optimizer",
                "distance", "weights_path", "fusion_mode"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = str(flag)
    return build_pipeline_config(values, keep_stages=getattr(args, "keep_stages", None))


def _add_common(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--weight-seed", dest="weight_seed", type=int)
    parser.add_argument("--weights-path", dest="weights_path")
    parser.add_argument("--distance", choices=["l1", "l2", "feature"])
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--optimizer", choices=["gd", "adam"])


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    gen = cfg.build_generator()
    if args.style:
        style = load_style(args.style)
    else:
        style = sample_style(cfg.generator, args.seed)
    save_image(gen.synthesize(style), args.out)
    if args.out_style:
        save_style(style, args.out_style)
    return 0


def cmd_invert(args) -> int:
    cfg = _load_config(args)
    gen = cfg.build_generator()
    image = load_image(args.image)
    if args.landmarks:
        lm = LandmarkSet.load_json(args.landmarks)
        image, _ = rectify(image, lm, cfg.crop)
    result = invert(image, gen, cfg.distance, cfg.inversion, cfg.build_extractor())
    save_style(result.style, args.out_style)
    if args.trace:
        result.export_trace_csv(args.trace)
    if args.out_image:
        save_image(gen.synthesize(result.style), args.out_image)
    return 0


def cmd_fuse(args) -> int:
    cfg = _load_config(args)
    s1 = load_style(args.style1)
    s2 = load_style(args.style2)
    if args.mask:
        indices = frozenset(int(i) for i in args.mask.split(","))
        mask = FusionMask(indices, s1.layers)
    elif args.search:
        gen = cfg.build_generator()
        i1 = load_image(args.image1)
        i2 = load_image(args.image2)
        mask, _, table = search(s1, s2, i1, i2, gen, cfg.search, cfg.build_extractor())
        if args.scores:
            export_score_csv(table, args.scores)
    else:
        mask = fixed_expression_mask(s1.layers)
    save_style(fuse(s1, s2, mask), args.out)
    return 0


def cmd_transfer(args) -> int:
    cfg = _load_config(args)
    job = TransferJob(
        identity_image=args.identity,
        expression_image=args.expression,
        identity_landmarks=args.identity_landmarks,
        expression_landmarks=args.expression_landmarks,
        output_path=args.out,
    )
    run_transfer(job, cfg)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    gen = cfg.build_generator()
    s1 = load_style(args.style1)
    s2 = load_style(args.style2)
    lengths = [int(v) for v in args.lengths.split(",")]
    starts = [int(v) for v in args.starts.split(",")]
    grid = sweep(s1, s2, gen, lengths, starts)
    os.makedirs(args.out_dir, exist_ok=True)
    for li, length in enumerate(lengths):
        for si, start in enumerate(starts):
            name = f"sweep_i{length}_j{start}.png"
            save_image(grid[li][si], os.path.join(args.out_dir, name))
    return 0


def cmd_metrics(args) -> int:
    report = evaluate_pair(load_image(args.a), load_image(args.b))
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json())
    print(report.to_table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylefuse",
        description="Facial expression transfer via style inversion and layer fusion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render an image from a style vector")
    _add_common(p)
    p.add_argument("--seed", type=int, default=0, help="style sampling seed")
    p.add_argument("--style", help="NTWS style file to render instead of sampling")
    p.add_argument("--out", required=True)
    p.add_argument("--out-style", dest="out_style")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("invert", help="infer the style vector of an image")
    _add_common(p)
    p.add_argument("--image", required=True)
    p.add_argument("--landmarks", help="rectify with these landmarks before inverting")
    p.add_argument("--out-style", dest="out_style", required=True)
    p.add_argument("--trace", help="write the loss trace CSV here")
    p.add_argument("--out-image", dest="out_image", help="save the final render")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("fuse", help="fuse two style vectors")
    _add_common(p)
    p.add_argument("--style1", required=True)
    p.add_argument("--style2", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--mask", help="comma-separated expression layer indices")
    group.add_argument("--search", action="store_true",
                       help="run the contiguous-block search")
    p.add_argument("--image1", help="identity image (search mode)")
    p.add_argument("--image2", help="expression image (search mode)")
    p.add_argument("--scores", help="write the search score table CSV here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("transfer", help="full expression-transfer pipeline")
    _add_common(p)
    p.add_argument("--identity", required=True)
    p.add_argument("--expression", required=True)
    p.add_argument("--identity-landmarks", dest="identity_landmarks", required=True)
    p.add_argument("--expression-landmarks", dest="expression_landmarks", required=True)
    p.add_argument("--fusion-mode", dest="fusion_mode", choices=["fixed", "search"])
    p.add_argument("--keep-stages", dest="keep_stages",
                   help="directory for intermediate artifacts")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("sweep", help="grid of fused renders over (length, start)")
    _add_common(p)
    p.add_argument("--style1", required=True)
    p.add_argument("--style2", required=True)
    p.add_argument("--lengths", required=True, help="comma-separated block lengths")
    p.add_argument("--starts", required=True,
                   help="comma-separated starts; -1 means the final block")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="compare two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "fuse" and args.search and not (args.image1 and args.image2):
        parser.error("--search requires --image1 and --image2")
    try:
        return args.func(args)
    except StyleFuseError as exc:
        stage = getattr(exc, "stage", args.command)
        print(f"error in stage '{stage}': {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error in stage '{args.command}': {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands: ``datagen`` (synthetic benchmark), ``train``, ``translate``,
``eval-translation`` (IS/FID/KID), and ``eval-cd`` (PCAKM with and without
translation).  Shared flags: ``--config`` (flat key = value file),
``--seed``, ``--out``.  Exit codes: 0 success, 1 usage error, 2 runtime
failure.  Every command writes its resolved configuration and renders its
report figures next to the delimited output.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from . import changedetect, config, data, metrics, reporting, trainer
from .generator import count_parameters, estimate_generator_gflops


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _file_values(args):
    return config.parse_config_file(args.config) if args.config else {}


def _resolve(args, file_values, spec):
    """spec: (argparse dest, config key, default) triples -> resolved dict."""
    return {key: config.resolve(key, getattr(args, dest), file_values, default)
            for dest, key, default in spec}


# ---------------------------------------------------------------- datagen

DATAGEN_SPEC = [
    ("seed", "data.seed", 0),
    ("canvas", "data.canvas", 64),
    ("pairs", "data.pairs", 20),
    ("train_per_domain", "data.train_per_domain", 24),
    ("test_per_domain", "data.test_per_domain", 8),
    ("vegetation", "data.vegetation_fraction", 0.35),
    ("change_count", "data.change_count", 2),
]


def cmd_datagen(args):
    values = _resolve(args, _file_values(args), DATAGEN_SPEC)
    spec = data.SyntheticSceneSpec(
        canvas=values["data.canvas"],
        vegetation_fraction=values["data.vegetation_fraction"],
        change_count=values["data.change_count"],
        seed=values["data.seed"],
    )
    out = Path(args.out)
    manifest = data.write_benchmark(
        out, spec,
        n_train=values["data.train_per_domain"],
        n_test=values["data.test_per_domain"],
        n_pairs=values["data.pairs"],
    )
    config.echo_resolved(out, values)
    print(manifest)
    return 0


# ------------------------------------------------------------------ train

TRAIN_SPEC = [
    ("seed", "train.seed", 0),
    ("epochs", "train.epochs_total", 200),
    ("epochs_constant", "train.epochs_constant", 100),
    ("lr0", "train.lr0", 2e-4),
    ("lambda_cyc", "train.lambda_cyc", 10.0),
    ("lambda_id", "train.lambda_id", 5.0),
    ("batch_size", "train.batch_size", 1),
    ("scale", "train.scale", 1.0),
    ("image_size", "train.image_size", 256),
    ("n_blocks", "train.n_blocks", 9),
    ("buffer_capacity", "train.buffer_capacity", 50),
    ("checkpoint_every", "train.checkpoint_every", 0),
    ("style_to_generator", "train.style_to_generator", False),
]


def _train_config(values):
    ec = min(values["train.epochs_constant"], values["train.epochs_total"])
    return trainer.TrainConfig(
        epochs_total=values["train.epochs_total"],
        epochs_constant=ec,
        lr0=values["train.lr0"],
        lambda_cyc=values["train.lambda_cyc"],
        lambda_id=values["train.lambda_id"],
        batch_size=values["train.batch_size"],
        seed=values["train.seed"],
        scale=values["train.scale"],
        style_to_generator=values["train.style_to_generator"],
        image_size=values["train.image_size"],
        n_blocks=values["train.n_blocks"],
        buffer_capacity=values["train.buffer_capacity"],
        checkpoint_every=values["train.checkpoint_every"],
    )


def cmd_train(args):
    values = _resolve(args, _file_values(args), TRAIN_SPEC)
    cfg = _train_config(values)

    if args.dry_run:
        model = trainer.build_model(cfg)
        nets = model.networks()
        for name, net in nets.items():
            print(f"{name} parameters: {count_parameters(net)}")
        print(f"total parameters: {sum(count_parameters(n) for n in nets.values())}")
        gflops = estimate_generator_gflops(model.g_xy.config, cfg.image_size)
        print(f"generator forward GFLOPs at {cfg.image_size}x{cfg.image_size}: {gflops:.3f}")
        return 0

    if not args.data:
        raise UsageError("--data is required unless --dry-run")
    root = Path(args.data)
    dataset_x = data.load_folder(root / "trainX", crop=cfg.image_size, seed=cfg.seed, tag="X")
    dataset_y = data.load_folder(root / "trainY", crop=cfg.image_size, seed=cfg.seed, tag="Y")

    out = Path(args.out)
    config.echo_resolved(out, values)

    state = None
    if args.resume:
        # resume keeps the checkpoint's architecture/config; only the epoch
        # budget may be extended
        state = trainer.load_checkpoint(args.resume)
        cfg = replace(state.cfg, epochs_total=cfg.epochs_total,
                      epochs_constant=min(cfg.epochs_constant, cfg.epochs_total))
        state.cfg = cfg
        print(f"resumed from {args.resume} at epoch {state.epoch}")

    state, rows = trainer.fit(dataset_x, dataset_y, cfg, out_dir=out, state=state)
    if rows:
        reporting.save_loss_curves(rows, out / "loss_curves.png")
    print(f"trained {state.epoch} epochs ({len(rows)} iterations); checkpoint at {out / 'checkpoint.pt'}")
    return 0


# -------------------------------------------------------------- translate

def _translate_folder(state, input_dir, out_dir, direction):
    files = data.list_images(input_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = []
    tensors = []
    outputs = []
    for path in files:
        img = data.load_image(path)
        start = time.perf_counter()
        translated = state.model.translate(img, direction)
        elapsed = time.perf_counter() - start
        Image.fromarray(data.tensor_to_image(translated)).save(out_dir / path.name)
        timings.append({"file": path.name, "seconds": round(elapsed, 6)})
        if len(tensors) < 4:
            tensors.append(img)
            outputs.append(translated)
    return files, timings, tensors, outputs


def cmd_translate(args):
    values = _resolve(args, _file_values(args), [("seed", "seed", 0)])
    state = trainer.load_checkpoint(args.checkpoint)
    out = Path(args.out)
    files, timings, tensors, outputs = _translate_folder(
        state, args.input, out / "images", args.direction)
    config.echo_resolved(out, {**values, "direction": args.direction,
                               "checkpoint": args.checkpoint, "input": args.input})
    if not files:
        print("0 images translated")
        return 0
    for row in timings:
        print(f"{row['file']}  {row['seconds']:.4f} s")
    mean_s = sum(r["seconds"] for r in timings) / len(timings)
    print(f"translation time per image (s): {mean_s:.4f}  (n={len(timings)})")
    reporting.write_csv(out / "timing.csv", ["file", "seconds"], timings)
    reporting.save_translation_grid(tensors, outputs, out / "translations.png")
    return 0


# -------------------------------------------------------- eval-translation

EVAL_TRANSLATION_SPEC = [
    ("seed", "seed", 0),
    ("extractor", "metrics.extractor", "tiny-cnn"),
    ("splits", "metrics.splits", 1),
]


def cmd_eval_translation(args):
    values = _resolve(args, _file_values(args), EVAL_TRANSLATION_SPEC)
    out = Path(args.out)

    fake_dir = args.fake
    if args.checkpoint:
        if not args.input or not args.direction:
            raise UsageError("--checkpoint needs --input and --direction")
        state = trainer.load_checkpoint(args.checkpoint)
        _translate_folder(state, args.input, out / "translated", args.direction)
        fake_dir = out / "translated"
    if fake_dir is None:
        raise UsageError("provide --fake or --checkpoint/--input/--direction")

    real_images = [data.load_image(p) for p in data.list_images(args.real)]
    fake_images = [data.load_image(p) for p in data.list_images(fake_dir)]
    if len(real_images) < 2 or len(fake_images) < 2:
        raise ValueError("need at least 2 images per folder to evaluate")

    extractor = metrics.get_extractor(values["metrics.extractor"], seed=values["seed"])
    feats_real, _ = extractor.extract(real_images)
    feats_fake, probs_fake = extractor.extract(fake_images)

    record = {
        "extractor": values["metrics.extractor"],
        "n_real": len(real_images),
        "n_fake": len(fake_images),
        "is": metrics.inception_score_from_probs(probs_fake, splits=values["metrics.splits"]),
        "fid": metrics.fid(feats_real, feats_fake),
        "kid": metrics.kid(feats_real, feats_fake),
    }
    config.echo_resolved(out, values)
    table_row = {"IS": f"{record['is']:.4f}", "FID": f"{record['fid']:.4f}",
                 "KID(x100)": f"{record['kid'] * 100.0:.4f}"}
    reporting.write_csv(out / "metrics.csv", list(table_row), [table_row])
    reporting.write_jsonl(out / "metrics.jsonl", [record])
    reporting.save_metric_bars(record, out / "metrics.png")
    print("IS,FID,KID(x100)")
    print(f"{table_row['IS']},{table_row['FID']},{table_row['KID(x100)']}")
    return 0


# ---------------------------------------------------------------- eval-cd

EVAL_CD_SPEC = [
    ("seed", "pcakm.seed", 0),
    ("block", "pcakm.block", 4),
    ("components", "pcakm.components", 3),
]

CD_HEADER = ["pair", "method", "FA", "MA", "OE", "PCC"]


def _pairs_root(path):
    path = Path(path)
    if (path / "pairs").is_dir():
        return path / "pairs"
    return path


def cmd_eval_cd(args):
    values = _resolve(args, _file_values(args), EVAL_CD_SPEC)
    pcfg = changedetect.PcakmConfig(block=values["pcakm.block"],
                                    components=values["pcakm.components"],
                                    seed=values["pcakm.seed"])
    pairs = _pairs_root(args.pairs)
    t1_files = data.list_images(pairs / "t1")
    if not t1_files:
        raise ValueError(f"no pairs found under {pairs}")

    state = trainer.load_checkpoint(args.checkpoint) if args.checkpoint else None
    if state is None and not args.pred:
        raise UsageError("provide --checkpoint (for translate+pcakm) or --pred")

    out = Path(args.out)
    config.echo_resolved(out, {**values, "direction": args.direction,
                               "checkpoint": args.checkpoint or "", "pairs": str(pairs)})
    rows = []
    records = []
    for i, t1_path in enumerate(t1_files):
        name = t1_path.name
        t1 = data.load_image(t1_path)
        t2 = data.load_image(pairs / "t2" / name)
        truth = data.load_mask(pairs / "mask" / name)

        results = {"pcakm": changedetect.pcakm(changedetect.difference_image(t1, t2), pcfg)}
        if state is not None:
            results["translate+pcakm"] = changedetect.detect_with_translation(
                t1, t2, state.model, args.direction, pcfg)
        if args.pred:
            results["provided"] = data.load_mask(Path(args.pred) / name)

        for method, change_map in results.items():
            summary = metrics.score_change_map(change_map, truth)
            row = {"pair": name, "method": method, "FA": summary.FA, "MA": summary.MA,
                   "OE": summary.OE, "PCC": f"{summary.PCC:.4f}"}
            rows.append(row)
            records.append({"pair": name, "method": method, "FA": summary.FA,
                            "MA": summary.MA, "OE": summary.OE, "PCC": summary.PCC,
                            "N": summary.N})
            map_dir = out / "maps" / method.replace("+", "_")
            map_dir.mkdir(parents=True, exist_ok=True)
            Image.fromarray((change_map * 255).astype(np.uint8)).save(map_dir / name)
        if i < 8:
            preferred = results.get("translate+pcakm", next(iter(results.values())))
            reporting.save_change_panel(t1, t2, preferred, truth,
                                        out / "figures" / f"{Path(name).stem}.png")

    reporting.write_csv(out / "results.csv", CD_HEADER, rows)
    reporting.write_jsonl(out / "results.jsonl", records)

    print(",".join(CD_HEADER))
    for row in rows:
        print(",".join(str(row[k]) for k in CD_HEADER))
    methods = sorted({r["method"] for r in records})
    summary_rows = []
    for method in methods:
        sub = [r for r in records if r["method"] == method]
        summary_rows.append({
            "method": method,
            "mean_FA": round(float(np.mean([r["FA"] for r in sub])), 2),
            "mean_MA": round(float(np.mean([r["MA"] for r in sub])), 2),
            "mean_OE": round(float(np.mean([r["OE"] for r in sub])), 2),
            "mean_PCC": round(float(np.mean([r["PCC"] for r in sub])), 4),
        })
        print(f"summary {method}: mean FA {summary_rows[-1]['mean_FA']}, "
              f"mean PCC {summary_rows[-1]['mean_PCC']}")
    reporting.write_csv(out / "summary.csv",
                        ["method", "mean_FA", "mean_MA", "mean_OE", "mean_PCC"], summary_rows)
    return 0


# ------------------------------------------------------------------- main

def build_parser():
    parser = _Parser(prog="seasontrans",
                     description="Season-varying image translation and change detection")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("datagen", help="write the synthetic season benchmark")
    common(p)
    p.add_argument("--canvas", type=int, default=None)
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--train-per-domain", type=int, default=None)
    p.add_argument("--test-per-domain", type=int, default=None)
    p.add_argument("--vegetation", type=float, default=None)
    p.add_argument("--change-count", type=int, default=None)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="train the translation networks")
    common(p)
    p.add_argument("--data", help="dataset root containing trainX/ and trainY/")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--epochs-constant", type=int, default=None)
    p.add_argument("--lr0", type=float, default=None)
    p.add_argument("--lambda-cyc", type=float, default=None)
    p.add_argument("--lambda-id", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--image-size", type=int, default=None)
    p.add_argument("--n-blocks", type=int, default=None)
    p.add_argument("--buffer-capacity", type=int, default=None)
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--style-to-generator", action="store_true", default=None)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--dry-run", action="store_true",
                   help="print parameter counts and analytic GFLOPs, then exit")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="translate a folder of images")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--direction", choices=["xy", "yx"], required=True)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("eval-translation", help="IS/FID/KID of translated images")
    common(p)
    p.add_argument("--real", required=True, help="real target-domain folder")
    p.add_argument("--fake", help="translated-image folder")
    p.add_argument("--checkpoint", help="translate --input on the fly instead of --fake")
    p.add_argument("--input")
    p.add_argument("--direction", choices=["xy", "yx"])
    p.add_argument("--extractor", choices=["tiny-cnn", "pretrained-inception"], default=None)
    p.add_argument("--splits", type=int, default=None)
    p.set_defaults(func=cmd_eval_translation)

    p = sub.add_parser("eval-cd", help="change detection with and without translation")
    common(p)
    p.add_argument("--pairs", required=True, help="benchmark root or pairs directory")
    p.add_argument("--checkpoint")
    p.add_argument("--direction", choices=["xy", "yx"], default="xy")
    p.add_argument("--block", type=int, default=None)
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--pred", help="score precomputed change maps from this directory")
    p.set_defaults(func=cmd_eval_cd)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

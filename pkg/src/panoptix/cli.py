"""Command line: gen-toyset, train-tra, train-sra, translate, eval.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from .compositor import plan_compose
from .core import TrainConfig, style_seed
from .evaluate import run_eval
from .imageio import load_image, load_mask, save_image, save_strip
from .registry import ENV_VAR, Registry
from .scene import MaskSet, SceneError, TranslationPlan, denormalize
from .sra import Lambdas, train_sra
from .toyset import THING_LABELS, generate_dataset, load_manifest
from .tra import train_tra

log = logging.getLogger("panoptix")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="panoptix", description="Panoptic-level image-to-image translation on toy data.")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen-toyset", help="generate a procedural toy domain")
    g.add_argument("--out", required=True, help="dataset root directory")
    g.add_argument("--domain", required=True, choices=["A", "B"], help="toy domain")
    g.add_argument("--count", type=int, required=True, help="number of scenes")
    g.add_argument("--size", type=int, default=64, choices=[32, 64, 128], help="image side in pixels")
    g.add_argument("--seed", type=int, required=True, help="base seed; scene k uses seed+k")
    g.add_argument("--max-instances", type=int, default=3, help="instances per scene drawn from 1..N")

    t = sub.add_parser("train-tra", help="train an instance transfiguration bundle")
    t.add_argument("--source", required=True, help="source-domain dataset root")
    t.add_argument("--target", required=True, help="target-domain dataset root")
    t.add_argument("--source-label", required=True, help="instance label translated from")
    t.add_argument("--target-label", required=True, help="instance label translated to")
    t.add_argument("--epochs", type=int, default=45, help="passes over the source set")
    t.add_argument("--seed", type=int, required=True, help="init/shuffle seed")
    t.add_argument("--out", required=True, help="checkpoint directory")
    t.add_argument("--lr", type=float, default=1e-4, help="Adam learning rate")
    t.add_argument("--chunk-size", type=int, default=2, help="instances per sequential mini-batch")

    s = sub.add_parser("train-sra", help="train a multimodal style translation bundle")
    s.add_argument("--source", required=True, help="domain i dataset root")
    s.add_argument("--target", required=True, help="domain r dataset root")
    s.add_argument("--iters", type=int, default=2000, help="training iterations")
    s.add_argument("--lambda-x", type=float, default=10.0, help="image reconstruction weight")
    s.add_argument("--lambda-c", type=float, default=1.0, help="content reconstruction weight")
    s.add_argument("--lambda-s", type=float, default=1.0, help="style reconstruction weight")
    s.add_argument("--seed", type=int, required=True, help="init/shuffle/style seed")
    s.add_argument("--out", required=True, help="checkpoint directory")
    s.add_argument("--lr", type=float, default=1e-4, help="Adam learning rate")
    s.add_argument("--lr-decay", choices=("constant", "linear"), default="constant",
                   help="learning-rate schedule over --iters")

    tr = sub.add_parser("translate", help="apply a translation plan to one image")
    tr.add_argument("--input", required=True, help="input RGB PNG")
    tr.add_argument("--masks-dir", required=True,
                    help="directory with [<stem>_]inst_K.png and [<stem>_]stuff_<label>.png")
    tr.add_argument("--plan", required=True, help="plan.json")
    tr.add_argument("--registry", default=None, help=f"bundle registry root (default ${ENV_VAR})")
    tr.add_argument("--style-seed", type=int, default=None,
                    help="overrides random style seeds (step l uses a seed derived from S, l)")
    tr.add_argument("--out", required=True, help="output PNG")
    tr.add_argument("--panel", default=None, help="optional comparison strip PNG")
    tr.add_argument("--thing-label", default=None,
                    help="label for instance masks (default: from a sibling manifest.json, else 'thing')")

    e = sub.add_parser("eval", help="evaluate a plan over a test manifest")
    e.add_argument("--manifest", required=True, help="test dataset root or manifest.json")
    e.add_argument("--plan", required=True, help="plan.json")
    e.add_argument("--registry", default=None, help=f"bundle registry root (default ${ENV_VAR})")
    e.add_argument("--n-styles", type=int, default=10, help="random styles per scene")
    e.add_argument("--seed", type=int, required=True, help="style seed")
    e.add_argument("--out", required=True, help="report.json path")
    return p


def _domain_of(records) -> str:
    return records[0].domain_id


def _registry(arg) -> Registry:
    if arg is None and ENV_VAR not in os.environ:
        raise UsageError(f"--registry not given and ${ENV_VAR} unset")
    return Registry(arg)


def _load_plan(path) -> TranslationPlan:
    return TranslationPlan.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


_INST = re.compile(r"^(?:(?P<stem>.+)_)?inst_(?P<k>\d+)\.png$")
_STUFF = re.compile(r"^(?:(?P<stem>.+)_)?stuff_(?P<label>[^_]+)\.png$")


def load_scene_masks(masks_dir, stem: str, thing_label: str | None) -> MaskSet:
    masks_dir = Path(masks_dir)
    if not masks_dir.is_dir():
        raise FileNotFoundError(f"masks directory not found: {masks_dir}")
    if thing_label is None:
        thing_label = "thing"
        manifest = masks_dir.parent / "manifest.json"
        if manifest.is_file():
            for rec in json.loads(manifest.read_text(encoding="utf-8"))["records"]:
                if Path(rec["image_path"]).stem == stem:
                    thing_label = THING_LABELS.get(rec["domain_id"], "thing")
    inst, stuff = {}, {}
    for f in sorted(masks_dir.iterdir()):
        for rx, bucket in ((_INST, inst), (_STUFF, stuff)):
            m = rx.match(f.name)
            if m and (m.group("stem") or stem) == stem:
                key = int(m.group("k")) if rx is _INST else m.group("label")
                bucket[key] = f
    return MaskSet([load_mask(inst[k], thing_label) for k in sorted(inst)],
                   {lab: load_mask(p, lab) for lab, p in stuff.items()})


def cmd_gen_toyset(a):
    generate_dataset(a.out, a.domain, a.count, a.size, a.seed, a.max_instances)
    print(f"wrote {a.count} scenes to {a.out}")


def _progress(it, losses):
    log.info("step %d %s", it, " ".join(f"{k}={v:.4f}" for k, v in losses.items()))


def cmd_train_tra(a):
    src, tgt = load_manifest(a.source), load_manifest(a.target)
    cfg = TrainConfig(learning_rate=a.lr, epochs=a.epochs, seed=a.seed)
    bundle = train_tra(src, tgt, cfg, a.source_label, a.target_label, a.chunk_size,
                       progress=_progress)
    bundle.save(a.out)
    print(f"saved TRA bundle {a.source_label}->{a.target_label} to {a.out}")


def cmd_train_sra(a):
    src, tgt = load_manifest(a.source), load_manifest(a.target)
    if not src or not tgt:
        raise SceneError("empty dataset")
    cfg = TrainConfig(learning_rate=a.lr, iterations=a.iters, seed=a.seed, lr_decay=a.lr_decay)
    bundle = train_sra(src, tgt, cfg, Lambdas(a.lambda_x, a.lambda_c, a.lambda_s),
                       _domain_of(src), _domain_of(tgt), progress=_progress)
    bundle.save(a.out)
    print(f"saved SRA bundle {bundle.domain_i}<->{bundle.domain_r} to {a.out}")


def cmd_translate(a):
    registry = _registry(a.registry)
    plan = _load_plan(a.plan)
    x = load_image(a.input)
    masks = load_scene_masks(a.masks_dir, Path(a.input).stem, a.thing_label)

    def seeds(k):
        if a.style_seed is None and k == 0:
            return None
        base = 0 if a.style_seed is None else a.style_seed
        return [style_seed(base, k, l) for l in range(plan.L)]

    out, x_thing, _, trans = plan_compose(x, masks, plan, registry, seeds(0), return_stages=True)
    save_image(out, a.out)
    if a.panel:
        stuff = np.zeros(x.shape, dtype=np.uint8)
        for t in trans:
            stuff |= t.mask.bits
        tiles = [np.repeat((stuff * 255)[..., None], 3, axis=2), denormalize(x),
                 denormalize(x_thing), denormalize(out)]
        for k in (1, 2):
            tiles.append(denormalize(plan_compose(x, masks, plan, registry, seeds(k))))
        save_strip(tiles, a.panel)
    print(f"wrote {a.out}")


def cmd_eval(a):
    registry = _registry(a.registry)
    report = run_eval(a.manifest, _load_plan(a.plan), registry, a.n_styles, a.seed, a.out)
    print(json.dumps(report["aggregate"], sort_keys=True))


COMMANDS = {"gen-toyset": cmd_gen_toyset, "train-tra": cmd_train_tra,
            "train-sra": cmd_train_sra, "translate": cmd_translate, "eval": cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"panoptix: error: {exc}", file=sys.stderr)
        return 1
    except (SceneError, OSError, ValueError, KeyError, FloatingPointError, RuntimeError) as exc:
        print(f"panoptix {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

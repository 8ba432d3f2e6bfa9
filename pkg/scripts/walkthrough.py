"""The five-command walkthrough, run through the installed ``panoptix`` CLI.

    python3 scripts/walkthrough.py --work runs/walkthrough

Generates two toy domains, trains one TRA and one SRA bundle (briefly, by
default), translates one scene with a 1-thing + 1-stuff plan and evaluates the
plan on domain A. Finally checks that pixels outside every stuff mask equal the
TRA output.
"""
import argparse
import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from panoptix.cli import load_scene_masks
from panoptix.imageio import load_image
from panoptix.registry import Registry
from panoptix.scene import TranslationPlan, denormalize
from panoptix.tra import apply_tra_chain


def run(*args):
    cmd = [sys.executable, "-m", "panoptix", *map(str, args)]
    print("$ panoptix", " ".join(map(str, args)), flush=True)
    subprocess.run(cmd, check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--work", default="runs/walkthrough")
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--epochs", type=int, default=1)
    ap.add_argument("--iters", type=int, default=200)
    args = ap.parse_args()

    w = Path(args.work)
    a, b, reg = w / "A", w / "B", w / "registry"
    w.mkdir(parents=True, exist_ok=True)
    plan = w / "plan.json"
    plan.write_text(json.dumps({
        "thing_steps": [{"source_label": "boxthing", "target_label": "blobthing",
                         "tra_bundle_id": "tra_box2blob"}],
        "stuff_steps": [{"source_label": "sky", "target_domain_id": "B",
                         "sra_bundle_id": "sra_a2b", "style_source": "random(0)"}],
    }, indent=1))

    run("gen-toyset", "--out", a, "--domain", "A", "--count", args.count, "--size", args.size,
        "--seed", 0)
    run("gen-toyset", "--out", b, "--domain", "B", "--count", args.count, "--size", args.size,
        "--seed", 1)
    run("train-tra", "--source", a, "--target", b, "--source-label", "boxthing",
        "--target-label", "blobthing", "--epochs", args.epochs, "--seed", 0,
        "--out", reg / "tra_box2blob")
    run("train-sra", "--source", a, "--target", b, "--iters", args.iters, "--seed", 0,
        "--out", reg / "sra_a2b")
    image = a / "images" / "000000.png"
    run("translate", "--input", image, "--masks-dir", a / "masks", "--plan", plan,
        "--registry", reg, "--out", w / "translated.png", "--panel", w / "panel.png")
    run("eval", "--manifest", a, "--plan", plan, "--registry", reg, "--seed", 0,
        "--out", w / "report.json")

    x = load_image(image)
    masks = load_scene_masks(a / "masks", image.stem, None)
    steps = TranslationPlan.from_dict(json.loads(plan.read_text())).thing_steps
    x_thing, _ = apply_tra_chain(x, masks, steps, Registry(reg))
    outside = np.ones(x.shape, dtype=bool)
    for m in masks.stuff_masks.values():
        outside &= m.bits == 0
    same = np.array_equal(denormalize(load_image(w / "translated.png"))[outside],
                          denormalize(x_thing)[outside])
    print(f"pixels outside stuff masks equal the TRA output: {same}")
    sys.exit(0 if same else 1)


if __name__ == "__main__":
    main()

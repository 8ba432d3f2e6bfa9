"""Toy-scale SRA training run: reports the numbers the acceptance checks use.

    python3 scripts/calibrate_sra.py --out runs/sra_calib
"""
import argparse
import json
import time
from pathlib import Path

from panoptix.calibration import sra_summary, toy_splits
from panoptix.core import TrainConfig
from panoptix.sra import Lambdas, train_sra


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/sra_calib")
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--lr-decay", default="linear")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = toy_splits(args.size, args.count)
    cfg = TrainConfig(learning_rate=args.lr, iterations=args.iters, seed=args.seed,
                      lr_decay=args.lr_decay)
    t0 = time.time()
    bundle = train_sra(data.train_a, data.train_b, cfg, Lambdas(), "A", "B",
                       progress=lambda it, l: print(it, {k: round(v, 4) for k, v in l.items()},
                                                    flush=True))
    elapsed = time.time() - t0
    out = Path(args.out)
    bundle.save(out)
    result = sra_summary(bundle, data.test_a, data.test_b)
    result.update(train_seconds=elapsed, config=cfg.to_dict())
    (out / "calibration.json").write_text(json.dumps(result, indent=1))
    print(json.dumps(result, indent=1))


if __name__ == "__main__":
    main()

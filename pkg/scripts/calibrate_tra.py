"""Toy-scale TRA training run (boxthing <-> blobthing): cycle-loss fall and context metric.

    python3 scripts/calibrate_tra.py --out runs/tra_calib
"""
import argparse
import json
import time
from pathlib import Path

from panoptix.calibration import toy_splits, tra_summary
from panoptix.core import TrainConfig
from panoptix.tra import train_tra


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/tra_calib")
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--lr", type=float, default=1e-4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = toy_splits(args.size, args.count)
    cfg = TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    t0 = time.time()
    bundle = train_tra(data.train_a, data.train_b, cfg, "boxthing", "blobthing",
                       progress=lambda st, l: print(st, {k: round(v, 4) for k, v in l.items()},
                                                    flush=True))
    elapsed = time.time() - t0
    out = Path(args.out)
    bundle.save(out)
    result = tra_summary(bundle, data.test_a)
    result.update(train_seconds=elapsed, config=cfg.to_dict())
    (out / "calibration.json").write_text(json.dumps(result, indent=1))
    print(json.dumps({k: v for k, v in result.items() if not isinstance(v, list)}, indent=1))


if __name__ == "__main__":
    main()

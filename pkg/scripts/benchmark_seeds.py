"""Multi-seed benchmark on the default synthetic set.

Trains one model per seed (and per learning rate, if several are given) and
prints test accuracy / AUC per run plus the number of runs reaching the
accuracy and AUC targets.

    python scripts/benchmark_seeds.py --seeds 10 --lr 0.001 0.003 0.01
"""
import argparse
import time

import numpy as np

from qeeg import hybrid
from qeeg.dsp import extract_band_features
from qeeg.synth import SynthSpec, generate_synthetic_eeg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--lr", type=float, nargs="+", default=[0.001])
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--data-seed", type=int, default=7)
    ap.add_argument("--trials", type=int, default=100, help="trials per class")
    ap.add_argument("--min-acc", type=float, default=0.90)
    ap.add_argument("--min-auc", type=float, default=0.95)
    args = ap.parse_args()

    records, labels = generate_synthetic_eeg(SynthSpec(n_trials_per_class=args.trials, seed=args.data_seed))
    data = hybrid.LabeledDataset(np.array([extract_band_features(r).as_array() for r in records]), labels)

    for lr in args.lr:
        t0 = time.perf_counter()
        hits = 0
        print(f"lr={lr:g}")
        print("  seed   acc     auc    loss[0]  loss[-1]")
        for seed in range(args.seeds):
            cfg = hybrid.TrainingConfig(learning_rate=lr, epochs=args.epochs, seed=seed)
            _, rep = hybrid.fit(data, cfg)
            r = rep.test_report
            ok = r.accuracy >= args.min_acc and r.auc >= args.min_auc
            hits += ok
            print(f"  {seed:4d}  {r.accuracy:.3f}  {r.auc:.3f}  {rep.train_loss[0]:.4f}   {rep.train_loss[-1]:.4f}"
                  f"{'' if ok else '  *'}")
        print(f"  {hits}/{args.seeds} runs reach acc>={args.min_acc} and AUC>={args.min_auc} "
              f"({time.perf_counter() - t0:.1f} s)\n")


if __name__ == "__main__":
    main()

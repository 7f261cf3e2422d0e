"""Write plot-ready CSVs: filter response, class-mean PSDs, training curve, ROC.

    python scripts/export_figures.py --out figures/
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from qeeg import hybrid
from qeeg.dsp import FilterSpec, apply_zero_phase_filter, design_butterworth_bandpass, extract_band_features, welch_psd
from qeeg.evaluation import write_roc_csv
from qeeg.synth import SynthSpec, generate_synthetic_eeg


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    spec = FilterSpec()
    coeffs = design_butterworth_bandpass(spec)
    freqs = np.linspace(0.05, spec.sample_rate_hz / 2, 2000)
    h = np.abs(coeffs.frequency_response(freqs, spec.sample_rate_hz))
    write(out / "filter_response.csv", ["frequency_hz", "gain", "gain_zero_phase"],
          zip(freqs, h, h**2))

    records, labels = generate_synthetic_eeg(SynthSpec())
    labels = np.array(labels)
    mean_psd = {}
    for cls in np.unique(labels):
        stack = [welch_psd(apply_zero_phase_filter(coeffs, x), r.sample_rate_hz)
                 for r in np.array(records, dtype=object)[labels == cls] for x in r.channels.values()]
        mean_psd[int(cls)] = (stack[0].frequencies_hz, np.mean([p.power_density for p in stack], axis=0))
    f0 = mean_psd[0][0]
    write(out / "class_psd.csv", ["frequency_hz", *(f"class_{c}" for c in mean_psd)],
          zip(f0, *(p for _, p in mean_psd.values())))

    x = np.array([extract_band_features(r).as_array() for r in records])
    model, rep = hybrid.fit(hybrid.LabeledDataset(x, labels), hybrid.TrainingConfig(seed=args.seed))
    write(out / "training_curve.csv", ["epoch", "loss", "train_accuracy"],
          zip(range(1, len(rep.train_loss) + 1), rep.train_loss, rep.train_accuracy))
    write_roc_csv(rep.test_report.roc, out / "roc.csv")
    print(rep.to_text(), end="")
    print(f"wrote filter_response.csv, class_psd.csv, training_curve.csv, roc.csv to {out}/")


if __name__ == "__main__":
    main()

"""Command-line pipeline: synth -> preprocess -> train -> eval / roc.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import hybrid
from .config import PipelineConfig, load_config
from .dsp import (
    ConfigError,
    InputError,
    apply_zero_phase_filter,
    design_butterworth_bandpass,
    extract_band_features,
    fft_power_spectrum,
    welch_psd,
)
from .evaluation import MetricError, evaluate, write_roc_csv
from .io import (
    CsvFormatError,
    ensure_parent,
    load_eeg_csv,
    read_feature_csv,
    write_eeg_csv,
    write_feature_csv,
    write_psd_csv,
)
from .qcircuit import build_ansatz, circuit_to_text
from .synth import SynthSpec, generate_synthetic_eeg

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _config(args, **flag_map) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {key: getattr(args, attr) for attr, key in flag_map.items() if getattr(args, attr) is not None}
    cfg = cfg.updated(**overrides)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_trials_per_class=args.trials, n_classes=args.classes, duration_s=args.duration,
        sample_rate_hz=args.fs, n_channels=args.channels, noise_sigma=args.noise, seed=args.seed,
    )
    try:
        records, _ = generate_synthetic_eeg(spec)
    except InputError as exc:
        raise UsageError(str(exc)) from exc
    write_eeg_csv(records, ensure_parent(args.out))
    print(f"wrote {len(records)} trials to {args.out}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _config(args, fs="sample_rate_hz", method="method", low="low_cut_hz", high="high_cut_hz",
                  order="filter_order", segment="segment_length", overlap="overlap_fraction")
    records = load_eeg_csv(args.input, args.fs)
    feats, psd_rows, filtered = [], [], []
    for rec in records:
        fspec = cfg.filter_spec(rec.sample_rate_hz)
        fspec.validate()
        feats.append(extract_band_features(rec, fspec, cfg.welch_config(), cfg.method).as_array())
        if args.psd_out or args.filtered_out:
            coeffs = design_butterworth_bandpass(fspec)
            chans = {}
            for name, x in rec.channels.items():
                y = apply_zero_phase_filter(coeffs, x)
                chans[name] = y
                psd = welch_psd(y, rec.sample_rate_hz, cfg.welch_config()) if cfg.method == "welch" \
                    else fft_power_spectrum(y, rec.sample_rate_hz)
                psd_rows.append((rec.trial_id, name, psd))
            filtered.append(type(rec)(rec.sample_rate_hz, chans, rec.trial_id, rec.label))
    labels = [r.label for r in records]
    labels = labels if all(l is not None for l in labels) else None
    write_feature_csv(np.array(feats), ensure_parent(args.out), labels)
    if args.psd_out:
        write_psd_csv(psd_rows, ensure_parent(args.psd_out))
    if args.filtered_out:
        write_eeg_csv(filtered, ensure_parent(args.filtered_out))
    print(f"wrote {len(feats)} feature rows ({cfg.method}) to {args.out}")
    return EXIT_OK


def _labeled(path) -> tuple[np.ndarray, np.ndarray]:
    x, y = read_feature_csv(path)
    if y is None:
        raise DataError(f"{path}: a 'label' column is required")
    return x, y


def cmd_train(args) -> int:
    cfg = _config(args, epochs="epochs", batch="batch_size", lr="learning_rate", seed="seed",
                  depth="depth", entanglement="entanglement", classes="n_classes", threads="threads")
    x, y = _labeled(args.input)
    if y.max() >= cfg.n_classes:
        raise DataError(f"labels go up to {y.max()} but --classes is {cfg.n_classes}")
    try:
        model, report = hybrid.fit(hybrid.LabeledDataset(x, y), cfg.training_config(),
                                   cfg.ansatz_spec(), cfg.n_classes, cfg.hidden)
    except hybrid.TrainingConfigError as exc:
        raise DataError(str(exc)) from exc
    hybrid.save_model(model, ensure_parent(args.model))
    text = report.to_text()
    if args.report:
        ensure_parent(args.report).write_text(text)
    if args.dump_circuit:
        ensure_parent(args.dump_circuit).write_text(circuit_to_text(build_ansatz(model.quantum_params, model.ansatz)))
    sys.stdout.write(text)
    return EXIT_OK


def _eval_inputs(args):
    model = hybrid.load_model(args.model)
    x, y = _labeled(args.features)
    if y.max() >= model.n_classes:
        raise hybrid.ModelShapeError(
            f"feature file has labels up to {y.max()} but the model has {model.n_classes} classes"
        )
    if args.subset != "all":
        t = model.training
        train_idx, test_idx = hybrid.stratified_split(y, t.train_fraction, t.seed)
        idx = test_idx if args.subset == "test" else train_idx
        x, y = x[idx], y[idx]
    return model, hybrid.predict_proba(model, x), y


def cmd_eval(args) -> int:
    _, probs, y = _eval_inputs(args)
    report = evaluate(probs, y, args.averaging)
    text = report.to_json()
    if args.out:
        ensure_parent(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_roc(args) -> int:
    model, probs, y = _eval_inputs(args)
    if model.n_classes != 2:
        raise DataError("ROC export is defined for binary models only")
    report = evaluate(probs, y)
    if not report.roc:
        raise DataError("ROC curve needs both classes present")
    write_roc_csv(report.roc, ensure_parent(args.out))
    print(f"wrote {len(report.roc)} ROC points to {args.out} (AUC {report.auc:.4f})")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qeeg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("synth", help="generate synthetic labelled EEG")
    s.add_argument("--trials", type=int, default=100, help="trials per class")
    s.add_argument("--classes", type=int, default=2)
    s.add_argument("--duration", type=float, default=4.0, help="seconds per trial")
    s.add_argument("--fs", type=float, default=250.0)
    s.add_argument("--channels", type=int, default=2)
    s.add_argument("--noise", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--out", default="raw.csv")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("preprocess", help="raw EEG CSV -> band-power feature CSV")
    s.add_argument("input")
    s.add_argument("--out", default="features.csv")
    s.add_argument("--fs", type=float, help="sample rate; overrides the time column")
    s.add_argument("--method", choices=["welch", "fft"])
    s.add_argument("--low", type=float)
    s.add_argument("--high", type=float)
    s.add_argument("--order", type=int)
    s.add_argument("--segment", type=int)
    s.add_argument("--overlap", type=float)
    s.add_argument("--psd-out", help="also write per-trial, per-channel PSD CSV")
    s.add_argument("--filtered-out", help="also write the filtered signals as raw-format CSV")
    s.add_argument("--config")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("train", help="feature CSV -> model file + training report")
    s.add_argument("input")
    s.add_argument("--model", default="model.json")
    s.add_argument("--report")
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--depth", type=int)
    s.add_argument("--entanglement", choices=["all_pairs", "ring"])
    s.add_argument("--classes", type=int)
    s.add_argument("--threads", type=int)
    s.add_argument("--dump-circuit", help="write the trained ansatz as a text gate list")
    s.add_argument("--config")
    s.set_defaults(func=cmd_train)

    for name, func, help_ in (("eval", cmd_eval, "model + feature CSV -> evaluation report"),
                              ("roc", cmd_roc, "model + feature CSV -> ROC CSV")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("model")
        s.add_argument("features")
        s.add_argument("--subset", choices=["all", "train", "test"], default="all",
                       help="train/test reproduce the model's own stratified split of this file")
        if name == "eval":
            s.add_argument("--out")
            s.add_argument("--averaging", choices=["binary_positive", "macro"])
        else:
            s.add_argument("--out", default="roc.csv")
        s.set_defaults(func=func)
    return p


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError(build_parser().format_usage())
        return args.func(args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, InputError, CsvFormatError, MetricError,
            hybrid.ModelFormatError, hybrid.ModelShapeError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

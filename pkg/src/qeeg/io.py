"""CSV formats for raw EEG, band-power features and PSD dumps.

Raw EEG: header row; optional ``time`` column (seconds); optional ``trial``
and ``label`` columns; every other column is one channel.
Features: ``delta,theta,alpha,beta[,label]``, one row per trial.
"""
from __future__ import annotations

import csv
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from .dsp import BAND_NAMES, InputError, PsdEstimate, SignalRecord

RESERVED = ("time", "trial", "label")
JITTER_TOLERANCE = 0.01


class CsvFormatError(InputError):
    """Structural or parse problem in a CSV file; message names row/column."""


class MissingHeaderError(CsvFormatError):
    pass


class CellParseError(CsvFormatError):
    pass


class RowLengthError(CsvFormatError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise MissingHeaderError(f"{path}: empty file, header row expected")
    header = [h.strip() for h in rows[0]]
    if all(_is_number(h) for h in header):
        raise MissingHeaderError(f"{path}: first row is numeric, header row expected")
    if len(set(header)) != len(header):
        raise CsvFormatError(f"{path}: duplicate column names in header")
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise RowLengthError(
                f"{path}: row {i} has {len(row)} cells, header has {len(header)}"
            )
        for j, cell in enumerate(row):
            try:
                data[i - 1, j] = float(cell)
            except ValueError:
                raise CellParseError(
                    f"{path}: row {i}, column {j} ({header[j]!r}): non-numeric value {cell!r}"
                ) from None
    return header, data


def _infer_rate(path, time_cols: list[np.ndarray]) -> float:
    diffs = np.concatenate([np.diff(t) for t in time_cols if len(t) > 1])
    if diffs.size == 0:
        raise CsvFormatError(f"{path}: cannot infer sample rate from fewer than 2 time stamps")
    step = float(np.median(diffs))
    if not step > 0:
        raise CsvFormatError(f"{path}: time column is not increasing")
    jitter = float(np.max(np.abs(diffs - step)) / step)
    if jitter > JITTER_TOLERANCE:
        warnings.warn(f"{path}: time stamps jitter by {jitter:.1%} of the median step", stacklevel=3)
    return 1.0 / step


def load_eeg_csv(path, sample_rate_override: float | None = None) -> list[SignalRecord]:
    header, data = _read_table(path)
    channels = [h for h in header if h not in RESERVED]
    if not channels:
        raise CsvFormatError(f"{path}: no channel columns")
    col = {h: j for j, h in enumerate(header)}
    if "label" in col and "trial" not in col:
        raise CsvFormatError(f"{path}: a 'label' column requires a 'trial' column")

    if "trial" in col:
        trial_ids = data[:, col["trial"]]
        order = list(dict.fromkeys(trial_ids.tolist()))
        groups = [np.flatnonzero(trial_ids == t) for t in order]
    else:
        order, groups = [0.0], [np.arange(len(data))]

    if sample_rate_override is not None:
        fs = float(sample_rate_override)
    elif "time" in col:
        fs = _infer_rate(path, [data[g, col["time"]] for g in groups])
    else:
        raise CsvFormatError(f"{path}: no time column; pass the sample rate explicitly")

    records = []
    for tid, rows in zip(order, groups):
        label = None
        if "label" in col:
            labels = np.unique(data[rows, col["label"]])
            if len(labels) != 1 or labels[0] != int(labels[0]) or labels[0] < 0:
                raise CsvFormatError(f"{path}: trial {tid:g} needs a single non-negative integer label")
            label = int(labels[0])
        chans = {h: data[rows, col[h]] for h in channels}
        records.append(SignalRecord(fs, chans, trial_id=f"{tid:g}", label=label))
    return records


def write_eeg_csv(records: Sequence[SignalRecord], path) -> None:
    """Multi-trial raw CSV: time, trial, label (when known), channels."""
    names = list(records[0].channels)
    with_label = all(r.label is not None for r in records)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "trial", *(["label"] if with_label else []), *names])
        for r in records:
            if list(r.channels) != names:
                raise InputError("all records must share the same channel names")
            cols = [r.channels[n] for n in names]
            for i in range(r.n_samples):
                row = [_fmt(i / r.sample_rate_hz), r.trial_id]
                if with_label:
                    row.append(str(r.label))
                row += [_fmt(c[i]) for c in cols]
                w.writerow(row)


def write_feature_csv(features: np.ndarray, path, labels: Sequence[int] | None = None) -> None:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*BAND_NAMES, *(["label"] if labels is not None else [])])
        for i, row in enumerate(features):
            cells = [_fmt(v) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            w.writerow(cells)


def read_feature_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    header, data = _read_table(path)
    missing = [b for b in BAND_NAMES if b not in header]
    if missing:
        raise CsvFormatError(f"{path}: feature columns missing: {', '.join(missing)}")
    col = {h: j for j, h in enumerate(header)}
    x = data[:, [col[b] for b in BAND_NAMES]]
    labels = None
    if "label" in col:
        raw = data[:, col["label"]]
        bad = np.flatnonzero((raw != np.round(raw)) | (raw < 0))
        if bad.size:
            raise CellParseError(f"{path}: row {bad[0] + 1}: label must be a non-negative integer")
        labels = raw.astype(int)
    return x, labels


def write_psd_csv(rows: Sequence[tuple[str, str, PsdEstimate]], path) -> None:
    """Long format: trial, channel, frequency_hz, power_density."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "channel", "frequency_hz", "power_density"])
        for trial, channel, psd in rows:
            for f, p in zip(psd.frequencies_hz, psd.power_density):
                w.writerow([trial, channel, _fmt(f), _fmt(p)])


def ensure_parent(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p

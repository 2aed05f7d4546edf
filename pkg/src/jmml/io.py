"""File formats: feature CSVs and EEG trial containers.

Feature CSV
-----------
Header ``id,label,f0,...,f{d-1}``; one row per sample.  Labels are
``V+``, ``V-``, ``A+``, ``A-`` (valence/arousal axis plus polarity).

Binary trial container (``.eegt``)
----------------------------------
Little-endian:

* magic ``JMMLEEG1`` (8 bytes), then uint32 trial count;
* per trial: uint16 id length + UTF-8 id, uint16 label length + UTF-8
  label, float64 sample rate, uint32 channel count, uint32 samples per
  channel, then channel-major float64 samples.

CSV trial container
-------------------
Header ``trial_id,label,sample_rate,channel,s0,...``; one row per
channel, rows of a trial grouped by id in file order.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .biomarkers import EegTrial
from .errors import LabelError
from .pipeline import Dataset

MAGIC = b"JMMLEEG1"

_DIM_CODE = {"valence": "V", "arousal": "A"}
_CODE_DIM = {"V": "valence", "A": "arousal"}


def format_label(dimension, polarity):
    return f"{_DIM_CODE[dimension]}{polarity}"


def parse_label(label):
    """Split 'V+' style labels into (dimension, polarity)."""
    if len(label) != 2 or label[0] not in _CODE_DIM or label[1] not in "+-":
        raise LabelError(f"bad label {label!r}; expected V+/V-/A+/A-")
    return _CODE_DIM[label[0]], label[1]


def write_feature_csv(path, dataset):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"] + [f"f{i}" for i in range(dataset.dim)])
        for sid, label, row in zip(dataset.ids, dataset.y, dataset.x):
            writer.writerow(
                [sid, format_label(dataset.dimension, label)] + [repr(float(v)) for v in row]
            )


def read_feature_csv(path, modality="eeg", dimension=None):
    """Load a feature CSV as a :class:`Dataset`.

    ``dimension`` filters rows to one axis; None keeps all rows but
    requires the file to be single-axis.
    """
    ids, labels, rows, dims = [], [], [], set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["id", "label"]:
            raise ValueError(f"{path}: header must start with id,label")
        for rec in reader:
            dim, pol = parse_label(rec[1])
            if dimension is not None and dim != dimension:
                continue
            ids.append(rec[0])
            labels.append(pol)
            dims.add(dim)
            rows.append([float(v) for v in rec[2:]])
    if not rows:
        raise ValueError(f"{path}: no rows" + (f" for dimension {dimension}" if dimension else ""))
    if dimension is None:
        if len(dims) > 1:
            raise ValueError(f"{path}: mixes axes {sorted(dims)}; pass dimension=")
        dimension = dims.pop()
    return Dataset(np.array(rows), np.array(labels), np.array(ids), modality, dimension)


def write_trials(path, trials, labels):
    """Write the binary trial container."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(trials)))
        for trial, label in zip(trials, labels):
            tid = trial.trial_id.encode()
            lab = label.encode()
            fh.write(struct.pack("<H", len(tid)) + tid)
            fh.write(struct.pack("<H", len(lab)) + lab)
            n_ch, n_s = trial.channels.shape
            fh.write(struct.pack("<dII", trial.sample_rate, n_ch, n_s))
            fh.write(np.ascontiguousarray(trial.channels, dtype="<f8").tobytes())


def read_trials(path):
    """Read the binary trial container; returns (trials, labels)."""
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path} is not a trial container")
        (count,) = struct.unpack("<I", fh.read(4))
        trials, labels = [], []
        for _ in range(count):
            (id_len,) = struct.unpack("<H", fh.read(2))
            tid = fh.read(id_len).decode()
            (lab_len,) = struct.unpack("<H", fh.read(2))
            label = fh.read(lab_len).decode()
            rate, n_ch, n_s = struct.unpack("<dII", fh.read(16))
            data = np.frombuffer(fh.read(8 * n_ch * n_s), dtype="<f8").reshape(n_ch, n_s)
            trials.append(EegTrial(data.copy(), rate, tid))
            labels.append(label)
    return trials, labels


def read_trials_csv(path):
    """Read the CSV trial container; returns (trials, labels)."""
    groups = {}
    order = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["trial_id", "label", "sample_rate", "channel"]:
            raise ValueError(f"{path}: header must start with trial_id,label,sample_rate,channel")
        for rec in reader:
            tid = rec[0]
            if tid not in groups:
                groups[tid] = {"label": rec[1], "rate": float(rec[2]), "channels": []}
                order.append(tid)
            groups[tid]["channels"].append([float(v) for v in rec[4:]])
    trials = [
        EegTrial(np.array(groups[tid]["channels"]), groups[tid]["rate"], tid) for tid in order
    ]
    return trials, [groups[tid]["label"] for tid in order]


def trim_pretrial(trial, pre_seconds=3.0, total_seconds=63.0):
    """Keep samples in [pre_seconds, total_seconds) — drops the pre-trial
    baseline window from a recording."""
    start = int(pre_seconds * trial.sample_rate)
    stop = int(total_seconds * trial.sample_rate)
    return EegTrial(trial.channels[:, start:stop], trial.sample_rate, trial.trial_id)

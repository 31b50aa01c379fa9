"""Accuracy, generalization gap, calibration and run-trace bookkeeping."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .nn import forward

# Fixed CSV column order.
RECORD_COLUMNS = (
    "epoch",
    "train_acc_noisy",
    "train_acc_clean",
    "test_acc",
    "mean_weight",
    "min_weight",
    "soft_label_uniformity",
    "per_class_test_acc",
    "labels_changed_count",
    "train_loss",
    "gate_fire_fraction",
)


@dataclass
class EpochEntry:
    epoch: int
    train_acc_noisy: float
    train_acc_clean: float
    test_acc: float
    mean_weight: float
    min_weight: float
    soft_label_uniformity: float
    per_class_test_acc: list[float]
    labels_changed_count: int
    train_loss: float = math.nan
    gate_fire_fraction: float = math.nan


@dataclass
class RunRecord:
    entries: list[EpochEntry] = field(default_factory=list)

    def append(self, entry: EpochEntry) -> None:
        if self.entries and entry.epoch <= self.entries[-1].epoch:
            raise ValueError(f"epoch {entry.epoch} does not follow epoch {self.entries[-1].epoch}")
        self.entries.append(entry)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def final(self) -> EpochEntry:
        return self.entries[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.entries])

    def worst_class_curve(self) -> np.ndarray:
        return np.array([worst_class_accuracy(e.per_class_test_acc) for e in self.entries])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for e in self.entries:
            row = []
            for name in RECORD_COLUMNS:
                v = getattr(e, name)
                if name == "per_class_test_acc":
                    row.append(";".join(repr(float(a)) for a in v))
                elif isinstance(v, float):
                    row.append(repr(float(v)))
                else:
                    row.append(str(v))
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RunRecord":
        reader = csv.DictReader(io.StringIO(text))
        record = cls()
        types = {f.name: f.type for f in fields(EpochEntry)}
        for row in reader:
            kw = {}
            for name in RECORD_COLUMNS:
                raw = row[name]
                if name == "per_class_test_acc":
                    kw[name] = [float(a) for a in raw.split(";")] if raw else []
                elif types[name] == "int":
                    kw[name] = int(raw)
                else:
                    kw[name] = float(raw)
            record.append(EpochEntry(**kw))
        return record

    def to_json(self) -> str:
        # NaN is written as null so the output is strict JSON
        def clean(d):
            return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}

        entries = []
        for e in self.entries:
            d = clean(asdict(e))
            d["per_class_test_acc"] = [None if math.isnan(a) else a for a in e.per_class_test_acc]
            entries.append(d)
        return json.dumps({"epochs": entries}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        record = cls()
        for d in json.loads(text)["epochs"]:
            d = {k: (math.nan if v is None else v) for k, v in d.items()}
            d["per_class_test_acc"] = [math.nan if a is None else float(a) for a in d["per_class_test_acc"]]
            record.append(EpochEntry(**d))
        return record


def _labels(ds, against: str) -> np.ndarray:
    if against == "noisy":
        return ds.labels
    if against == "clean":
        if ds.clean_labels is None:
            raise ValueError("clean accuracy requested but the dataset has no clean labels")
        return ds.clean_labels
    raise ValueError(f"against must be 'noisy' or 'clean', got {against!r}")


def accuracy(net, ds, against: str = "noisy") -> float:
    """Fraction of argmax predictions (ties to the lowest class) that match."""
    labels = _labels(ds, against)
    pred = np.argmax(forward(net, ds.features), axis=1)
    return float(np.mean(pred == labels))


def per_class_accuracy(predictions: np.ndarray, labels: np.ndarray, class_count: int) -> list[float]:
    """Accuracy within each true class; NaN for classes with no examples."""
    out = []
    for k in range(class_count):
        mask = labels == k
        out.append(float(np.mean(predictions[mask] == k)) if mask.any() else math.nan)
    return out


def generalization_gap(train_metric: float, test_metric: float) -> float:
    """``|train error - test error|`` for two accuracies on the same label distribution."""
    for v in (train_metric, test_metric):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"accuracy {v} outside [0, 1]")
    return abs((1.0 - train_metric) - (1.0 - test_metric))


def worst_class_accuracy(per_class) -> float:
    vals = np.asarray(per_class, dtype=np.float64)
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        raise ValueError("no class has test examples")
    return float(vals.min())


def soft_label_uniformity(store) -> float:
    """Largest L-infinity distance of any soft label from the uniform vector.

    Accepts a store with a ``labels`` matrix or the matrix itself.
    """
    t = np.asarray(getattr(store, "labels", store), dtype=np.float64)
    if t.ndim != 2 or t.shape[0] == 0:
        raise ValueError("soft-label store is empty")
    return float(np.abs(t - 1.0 / t.shape[1]).max())


def expected_calibration_error(probs, labels, bin_count: int = 15) -> float:
    """Equal-width confidence-bin ECE over max-probability predictions.

    Bin ``m`` covers ``((m-1)/M, m/M]``; confidence 0 falls in the first bin.
    """
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    conf = probs.max(axis=1)
    correct = (np.argmax(probs, axis=1) == labels).astype(np.float64)
    bins = np.clip(np.ceil(conf * bin_count).astype(np.int64) - 1, 0, bin_count - 1)
    n = conf.size
    ece = 0.0
    for m in range(bin_count):
        mask = bins == m
        cnt = mask.sum()
        if cnt:
            ece += cnt / n * abs(correct[mask].mean() - conf[mask].mean())
    return float(ece)


def noise_ceiling(noise_rate: float, class_count: int) -> float:
    """Expected fraction of correct labels under all-class uniform flips."""
    return 1.0 - noise_rate * (class_count - 1) / class_count


def detect_overfit_shape(
    record: RunRecord,
    noise_rate: float,
    class_count: int,
    margin: float = 0.02,
    decline: float = 0.02,
) -> dict:
    """Flags for the memorization curve: clean-train accuracy climbing above
    the fraction of correct labels, and test accuracy falling from its peak."""
    if not len(record):
        raise ValueError("empty run record")
    clean = record.column("train_acc_clean")
    test = record.column("test_acc")
    peak = float(np.nanmax(clean))
    return {
        "peak_clean_train": peak,
        "exceeded_noise_ceiling": bool(peak > noise_ceiling(noise_rate, class_count) + margin),
        "test_acc_declined": bool(test[-1] < test.max() - decline),
    }

"""Self-adaptive training: soft labels corrected toward the model's own
predictions after a warm-up, with each example weighted by its soft label's
largest entry."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

METHODS = ("ce", "ce_early_stop", "sat", "mixup", "sam")


@dataclass
class TrainConfig:
    total_epochs: int = 100
    start_epoch: int = 60
    momentum: float = 0.9
    learning_rate: float = 0.05
    batch_size: int = 64
    seed: int = 0
    method: str = "sat"
    mix_alpha: float = 1.0
    gamma: float = 0.1
    early_stop_epoch: int | None = None
    hidden: tuple[int, ...] = (64, 64)
    sgd_momentum: float = 0.0
    weight_decay: float = 0.0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        problems = self.problems()
        if problems:
            raise ValueError("invalid training config: " + "; ".join(problems))

    def problems(self) -> list[str]:
        """One message per offending field."""
        out = []
        if not (isinstance(self.total_epochs, int) and self.total_epochs > 0):
            out.append(f"total_epochs must be a positive integer (got {self.total_epochs!r})")
        if not (isinstance(self.start_epoch, int) and self.start_epoch > 0):
            out.append(f"start_epoch must be a positive integer (got {self.start_epoch!r})")
        elif isinstance(self.total_epochs, int) and self.start_epoch > self.total_epochs:
            out.append(f"start_epoch {self.start_epoch} exceeds total_epochs {self.total_epochs}")
        if not 0.0 <= self.momentum <= 1.0:
            out.append(f"momentum must be in [0, 1] (got {self.momentum!r})")
        if not self.learning_rate > 0:
            out.append(f"learning_rate must be positive (got {self.learning_rate!r})")
        if not (isinstance(self.batch_size, int) and self.batch_size > 0):
            out.append(f"batch_size must be a positive integer (got {self.batch_size!r})")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            out.append(f"seed must be a non-negative integer (got {self.seed!r})")
        if self.method not in METHODS:
            out.append(f"method must be one of {', '.join(METHODS)} (got {self.method!r})")
        if not self.mix_alpha > 0:
            out.append(f"mix_alpha must be positive (got {self.mix_alpha!r})")
        if not 0.0 < self.gamma < 0.5:
            out.append(f"gamma must be in (0, 0.5) (got {self.gamma!r})")
        if self.early_stop_epoch is not None and not (
            isinstance(self.early_stop_epoch, int) and 0 < self.early_stop_epoch
        ):
            out.append(f"early_stop_epoch must be a positive integer (got {self.early_stop_epoch!r})")
        if any(h <= 0 for h in self.hidden):
            out.append(f"hidden layer sizes must be positive (got {self.hidden!r})")
        if not 0.0 <= self.sgd_momentum < 1.0:
            out.append(f"sgd_momentum must be in [0, 1) (got {self.sgd_momentum!r})")
        if self.weight_decay < 0:
            out.append(f"weight_decay must be non-negative (got {self.weight_decay!r})")
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown training config field(s): {', '.join(unknown)}")
        return cls(**d)

    def with_(self, **changes) -> "TrainConfig":
        d = self.to_dict()
        d.update(changes)
        return TrainConfig(**d)


@dataclass
class SoftLabelStore:
    """Per-example target distributions, initialised to one-hot labels."""

    labels: np.ndarray
    start_epoch: int = 60
    momentum: float = 0.9
    initial: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.initial is None:
            self.initial = np.argmax(self.labels, axis=1)

    @classmethod
    def from_labels(cls, labels, class_count: int, start_epoch: int = 60, momentum: float = 0.9):
        labels = np.asarray(labels, dtype=np.int64)
        t = np.zeros((labels.size, class_count))
        t[np.arange(labels.size), labels] = 1.0
        return cls(t, start_epoch, momentum, labels.copy())

    def __len__(self):
        return self.labels.shape[0]

    def weights(self) -> np.ndarray:
        return self.labels.max(axis=1)

    def changed_count(self) -> int:
        """Examples whose soft-label argmax no longer equals the given label."""
        return int(np.sum(np.argmax(self.labels, axis=1) != self.initial))


def update_soft_label(t, p, momentum: float):
    """Momentum step ``momentum * t + (1 - momentum) * p``; works row-wise too."""
    if not 0.0 <= momentum <= 1.0:
        raise ValueError(f"momentum must be in [0, 1], got {momentum}")
    return momentum * np.asarray(t, dtype=np.float64) + (1.0 - momentum) * np.asarray(p, dtype=np.float64)


def confidence_weight(t):
    """Largest entry of a soft label (or of each row)."""
    t = np.asarray(t, dtype=np.float64)
    return t.max(axis=-1) if t.ndim > 1 else float(t.max())


def run_sat(config: TrainConfig, train, test):
    """Self-adaptive training. Returns ``(net, store, record)``."""
    from .training import fit

    if config.method != "sat":
        raise ValueError(f"run_sat needs method 'sat', got {config.method!r}")
    result = fit(config, train, test)
    return result.net, result.store, result.record


def run_ce(config: TrainConfig, train, test):
    """One-hot cross-entropy, optionally halted at ``early_stop_epoch``.

    Returns ``(net, record)``.
    """
    from .training import fit

    if config.method not in ("ce", "ce_early_stop"):
        raise ValueError(f"run_ce needs method 'ce' or 'ce_early_stop', got {config.method!r}")
    result = fit(config, train, test)
    return result.net, result.record

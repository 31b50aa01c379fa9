"""The epoch loop shared by every training method.

One loop covers cross-entropy, self-adaptive training, mixup and
self-adaptive mixup so that degenerate settings of one method reproduce
another bit for bit. Random streams are split by purpose (initialisation,
shuffling, mixing); a method that does not mix never touches the mixing
stream, so its shuffles match a mixing run with the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import EpochEntry, RunRecord, per_class_accuracy, soft_label_uniformity
from .nn import Batch, Gradients, Network, backward, forward, init_network, sgd_step, weighted_soft_ce
from .sam import sample_lambda
from .sat import SoftLabelStore, TrainConfig, update_soft_label


@dataclass
class FitResult:
    net: Network
    store: SoftLabelStore
    record: RunRecord
    trajectory: list | None = None


def rng_streams(seed: int):
    init_ss, shuffle_ss, mix_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        np.random.default_rng(init_ss),
        np.random.default_rng(shuffle_ss),
        np.random.default_rng(mix_ss),
    )


def _check_data(train, test):
    if train.class_count != test.class_count:
        raise ValueError(f"train has {train.class_count} classes, test has {test.class_count}")
    if train.dim != test.dim:
        raise ValueError(f"train dim {train.dim} != test dim {test.dim}")


def fit(
    config: TrainConfig,
    train,
    test,
    *,
    gate_open: bool = True,
    unit_weights: bool = False,
    lambda_override: float | None = None,
    keep_trajectory: bool = False,
) -> FitResult:
    """Train per ``config.method`` and return the network, soft labels and trace.

    Per mini-batch:

    * ``ce`` / ``ce_early_stop``: one-hot targets, unit weights.
    * ``sat``: after ``start_epoch`` the batch's soft labels move toward the
      current predictions; weights are the soft labels' top entries.
    * ``mixup``: each example is mixed with a random partner from the batch.
    * ``sam``: mixup, weights are the top predicted probability on the mixed
      input, and after ``start_epoch`` gated parents move toward that
      prediction.

    Weights are treated as constants when differentiating.
    """
    _check_data(train, test)
    method = config.method
    mixing = method in ("mixup", "sam")
    c = train.class_count
    init_rng, shuffle_rng, mix_rng = rng_streams(config.seed)
    net = init_network([train.dim, *config.hidden, c], init_rng)
    store = SoftLabelStore.from_labels(train.labels, c, config.start_epoch, config.momentum)
    velocity = [np.zeros_like(p) for p in net.params()] if config.sgd_momentum else None

    last_epoch = config.total_epochs
    if method == "ce_early_stop":
        last_epoch = min(config.early_stop_epoch or config.start_epoch, config.total_epochs)
    elif method == "ce" and config.early_stop_epoch is not None:
        last_epoch = min(config.early_stop_epoch, config.total_epochs)

    record = RunRecord()
    trajectory = [net.copy()] if keep_trajectory else None
    n = len(train)
    X = train.features
    for epoch in range(1, last_epoch + 1):
        correcting = epoch > config.start_epoch
        order = shuffle_rng.permutation(n)
        weight_sum, weight_min = 0.0, math.inf
        loss_sum = 0.0
        mixed_count = fired_count = 0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            x = X[idx]
            t = store.labels[idx]
            if mixing:
                b = idx.size
                partner = mix_rng.permutation(b)
                if lambda_override is None:
                    lam = sample_lambda(config.mix_alpha, mix_rng, size=b)
                else:
                    lam = np.full(b, float(lambda_override))
                x = lam[:, None] * x + (1.0 - lam[:, None]) * x[partner]
                t = lam[:, None] * t + (1.0 - lam[:, None]) * t[partner]
            probs, acts = forward(net, x, return_cache=True)

            if method == "sat":
                if correcting:
                    t = update_soft_label(t, probs, config.momentum)
                    store.labels[idx] = t
                w = t.max(axis=1)
            elif method == "sam" and not unit_weights:
                w = probs.max(axis=1)
            else:
                w = np.ones(idx.size)

            if method == "sam":
                mixed_count += idx.size
                if correcting and gate_open:
                    fired_count += _gated_updates(store, idx, partner, lam, probs, config)

            batch = Batch(x, t, w, idx)
            loss_sum += weighted_soft_ce(probs, t, w) * idx.size
            grads = backward(net, batch, cache=(probs, acts))
            net = _step(net, grads, config, velocity)
            weight_sum += w.sum()
            weight_min = min(weight_min, float(w.min()))

        if not net.is_finite():
            raise FloatingPointError(f"parameters became non-finite in epoch {epoch}")
        if keep_trajectory:
            trajectory.append(net.copy())
        record.append(
            _epoch_entry(
                epoch, net, store, train, test,
                mean_weight=weight_sum / n,
                min_weight=weight_min,
                train_loss=loss_sum / n,
                gate_fire_fraction=fired_count / mixed_count if mixed_count and correcting else math.nan,
            )
        )
    return FitResult(net, store, record, trajectory)


def _gated_updates(store, idx, partner, lam, probs, config) -> int:
    """Apply the mixup gate to every mixed example of a batch, in order.

    A parent may be updated several times per batch; each update sees the
    result of the previous one.
    """
    fired = 0
    first = np.flatnonzero(lam > 1.0 - config.gamma)
    second = np.flatnonzero(lam < config.gamma)
    for k in np.sort(np.concatenate([first, second])):
        parent = idx[k] if lam[k] > 1.0 - config.gamma else idx[partner[k]]
        store.labels[parent] = update_soft_label(store.labels[parent], probs[k], config.momentum)
        fired += 1
    return fired


def _step(net, grads, config, velocity):
    if not config.weight_decay and velocity is None:
        return sgd_step(net, grads, config.learning_rate)
    gW, gb = grads.weights, grads.biases
    if config.weight_decay:
        gW = [g + config.weight_decay * W for g, W in zip(gW, net.weights)]
    if velocity is None:
        return sgd_step(net, Gradients(gW, gb), config.learning_rate)
    flat = []
    for g1, g2 in zip(gW, gb):
        flat += [g1, g2]
    for v, g in zip(velocity, flat):
        v *= config.sgd_momentum
        v += g
    params = [p - config.learning_rate * v for p, v in zip(net.params(), velocity)]
    return Network(params[0::2], params[1::2])


def _epoch_entry(epoch, net, store, train, test, **extra) -> EpochEntry:
    train_pred = np.argmax(forward(net, train.features), axis=1)
    test_pred = np.argmax(forward(net, test.features), axis=1)
    clean = train.clean_labels if train.clean_labels is not None else train.labels
    return EpochEntry(
        epoch=epoch,
        train_acc_noisy=float(np.mean(train_pred == train.labels)),
        train_acc_clean=float(np.mean(train_pred == clean)),
        test_acc=float(np.mean(test_pred == test.labels)),
        soft_label_uniformity=soft_label_uniformity(store),
        per_class_test_acc=per_class_accuracy(test_pred, test.labels, test.class_count),
        labels_changed_count=store.changed_count(),
        **extra,
    )

"""Self-adaptive mixup.

Training examples are Beta-weighted convex combinations of pairs drawn from
the same mini-batch. A parent's soft label is corrected only when the mixed
example is mostly that parent (``lam > 1 - gamma`` for the first,
``lam < gamma`` for the second), and each mixed example is weighted by the
model's top predicted probability on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FIRST_PARENT = "first_parent"
SECOND_PARENT = "second_parent"


@dataclass
class MixedExample:
    input: np.ndarray
    soft_label: np.ndarray
    lam: float
    parent_ids: tuple[int, int] = (0, 1)


def sample_lambda(mix_alpha: float, rng, size=None):
    """Draw from ``Beta(mix_alpha, mix_alpha)`` as ``g1 / (g1 + g2)`` with
    ``g1, g2 ~ Gamma(mix_alpha, 1)``."""
    if not mix_alpha > 0:
        raise ValueError(f"mix_alpha must be positive, got {mix_alpha}")
    log_g1 = _log_gamma_draw(mix_alpha, rng, size)
    log_g2 = _log_gamma_draw(mix_alpha, rng, size)
    d = log_g1 - log_g2
    # logistic of the log-ratio, written to avoid overflow in either tail
    e = np.exp(-np.abs(d))
    lam = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(lam) if size is None else lam


def _log_gamma_draw(shape, rng, size):
    # log Gamma(a) = log Gamma(a + 1) + log(U) / a; plain Gamma(a) draws
    # underflow to 0 for small a
    g = rng.standard_gamma(shape + 1.0, size=size)
    u = rng.random(size=size)
    return np.log(g) + np.log1p(-u) / shape


def mix(x_i, t_i, x_j, t_j, lam: float, parent_ids=(0, 1)) -> MixedExample:
    x_i, x_j = np.asarray(x_i, dtype=np.float64), np.asarray(x_j, dtype=np.float64)
    t_i, t_j = np.asarray(t_i, dtype=np.float64), np.asarray(t_j, dtype=np.float64)
    if x_i.shape != x_j.shape or t_i.shape != t_j.shape:
        raise ValueError("mixed examples must share input and label shapes")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return MixedExample(
        lam * x_i + (1.0 - lam) * x_j,
        lam * t_i + (1.0 - lam) * t_j,
        float(lam),
        tuple(parent_ids),
    )


def label_update_gate(lam: float, gamma: float) -> set[str]:
    """Parents whose soft label may be corrected from this mixed example."""
    if not 0.0 < gamma < 0.5:
        raise ValueError(f"gamma must be in (0, 0.5), got {gamma}")
    fired = set()
    if lam > 1.0 - gamma:
        fired.add(FIRST_PARENT)
    if lam < gamma:
        fired.add(SECOND_PARENT)
    return fired


def run_sam(config, train, test, *, gate_open: bool = True, unit_weights: bool = False):
    """Self-adaptive mixup. Returns ``(net, store, record)``.

    ``gate_open=False`` and ``unit_weights=True`` switch off label correction
    and reweighting; with both set the run matches :func:`run_mixup`.
    """
    from .training import fit

    if config.method != "sam":
        raise ValueError(f"run_sam needs method 'sam', got {config.method!r}")
    result = fit(config, train, test, gate_open=gate_open, unit_weights=unit_weights)
    return result.net, result.store, result.record


def run_mixup(config, train, test, *, lambda_override: float | None = None):
    """Plain mixup on fixed one-hot labels. Returns ``(net, record)``.

    ``lambda_override`` pins every mixing coefficient (1.0 reproduces
    plain cross-entropy training).
    """
    from .training import fit

    if config.method != "mixup":
        raise ValueError(f"run_mixup needs method 'mixup', got {config.method!r}")
    result = fit(config, train, test, lambda_override=lambda_override)
    return result.net, result.record

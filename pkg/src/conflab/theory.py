"""Variance of the reweighted loss estimator, and how often the mixup gate fires.

A training point is clean with probability ``p_i``; noisy points have zero
expected loss. The estimator ``sum(q * loss) / sum(p * q)`` is then unbiased
for the clean-data loss, and with equal per-point loss variance ``v`` its
variance is ``v * |q|^2 / (p . q)^2``, smallest when ``q`` is parallel to ``p``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

CF_EPS = 1e-15
CF_TINY = 1e-300
CF_MAX_ITER = 10_000


@dataclass
class WeightingScenario:
    in_dist_probs: np.ndarray
    weights: np.ndarray
    loss_variance: float = 1.0
    in_dist_loss_mean: float = 1.0
    out_dist_loss_mean: float = 0.0

    def __post_init__(self):
        self.in_dist_probs = np.asarray(self.in_dist_probs, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        p, q = self.in_dist_probs, self.weights
        if p.ndim != 1 or p.size == 0 or p.shape != q.shape:
            raise ValueError("in_dist_probs and weights must be equal-length non-empty vectors")
        if (p <= 0).any() or (p > 1).any():
            raise ValueError("in-distribution probabilities must lie in (0, 1]")
        if (q <= 0).any():
            raise ValueError("weights must be positive")
        if self.loss_variance <= 0:
            raise ValueError("loss variance must be positive")
        if self.out_dist_loss_mean != 0.0:
            raise ValueError("the out-of-distribution loss mean is fixed at 0")
        if (self.mixture_variance() > self.loss_variance).any():
            raise ValueError(
                "loss_variance too small: the clean/noisy mean shift alone exceeds it "
                f"(need >= {self.mixture_variance().max():.6g})"
            )

    def mixture_variance(self) -> np.ndarray:
        """Part of each point's loss variance due to not knowing if it is clean."""
        p = self.in_dist_probs
        return p * (1.0 - p) * self.in_dist_loss_mean**2


def _check_pq(q, p):
    q = np.asarray(q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if q.shape != p.shape:
        raise ValueError(f"q has shape {q.shape} but p has shape {p.shape}")
    denom = float(p @ q)
    if not denom > 0:
        raise ValueError("sum of p_i * q_i must be positive")
    return q, p, denom


def mc_estimate(losses, q, p) -> float:
    """``sum(q * losses) / sum(p * q)``."""
    q, p, denom = _check_pq(q, p)
    losses = np.asarray(losses, dtype=np.float64)
    if losses.shape != q.shape:
        raise ValueError("losses and weights differ in length")
    return float(q @ losses / denom)


def closed_form_variance(q, p, v: float) -> float:
    q, p, denom = _check_pq(q, p)
    return float(v * (q @ q) / denom**2)


def optimal_weights(p) -> np.ndarray:
    """``p`` scaled to unit Euclidean norm."""
    p = np.asarray(p, dtype=np.float64)
    if (p <= 0).any() or (p > 1).any():
        raise ValueError("in-distribution probabilities must lie in (0, 1]")
    return p / np.linalg.norm(p)


@dataclass
class SweepRow:
    weights: np.ndarray
    empirical_variance: float
    closed_form_variance: float
    empirical_mean: float
    trials: int

    @property
    def relative_gap(self) -> float:
        return abs(self.empirical_variance / self.closed_form_variance - 1.0)


def simulate_losses(scenario: WeightingScenario, trials: int, rng) -> np.ndarray:
    """``(trials, n)`` loss draws with per-point variance exactly ``loss_variance``.

    Each point is clean with probability ``p_i`` (mean ``in_dist_loss_mean``)
    and otherwise noisy (mean 0); Gaussian noise supplies whatever variance
    the clean/noisy coin does not.
    """
    p = scenario.in_dist_probs
    clean = rng.random((trials, p.size)) < p
    sd = np.sqrt(scenario.loss_variance - scenario.mixture_variance())
    return np.where(clean, scenario.in_dist_loss_mean, 0.0) + sd * rng.standard_normal((trials, p.size))


def variance_sweep(
    scenario: WeightingScenario,
    candidate_qs,
    trials: int = 100_000,
    seed: int = 0,
    shard_size: int = 25_000,
    workers: int = 1,
) -> list[SweepRow]:
    """Empirical vs closed-form estimator variance for each candidate weighting.

    All candidates are scored on the same simulated losses. Trials are
    generated in shards with independent seeded streams and merged in shard
    order, so the result does not depend on ``workers``.
    """
    if trials < 10_000:
        raise ValueError("variance_sweep needs at least 10^4 trials")
    qs = [np.asarray(q, dtype=np.float64) for q in candidate_qs]
    if not qs:
        raise ValueError("no candidate weightings given")
    p = scenario.in_dist_probs
    for q in qs:
        _check_pq(q, p)
    sizes = [shard_size] * (trials // shard_size)
    if trials % shard_size:
        sizes.append(trials % shard_size)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    Q = np.stack(qs, axis=1)
    denoms = p @ Q

    def shard(args):
        size, ss = args
        losses = simulate_losses(scenario, size, np.random.default_rng(ss))
        return losses @ Q / denoms

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(shard, zip(sizes, streams)))
    else:
        parts = [shard(a) for a in zip(sizes, streams)]
    estimates = np.concatenate(parts, axis=0)
    rows = []
    for k, q in enumerate(qs):
        rows.append(
            SweepRow(
                weights=q,
                empirical_variance=float(np.var(estimates[:, k], ddof=1)),
                closed_form_variance=closed_form_variance(q, p, scenario.loss_variance),
                empirical_mean=float(estimates[:, k].mean()),
                trials=trials,
            )
        )
    return rows


def random_unit_weights(n: int, count: int, rng) -> list[np.ndarray]:
    """Random positive weight vectors of unit norm."""
    out = []
    for _ in range(count):
        q = np.abs(rng.standard_normal(n)) + 1e-12
        out.append(q / np.linalg.norm(q))
    return out


def _beta_cf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > CF_TINY else CF_TINY)
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > CF_TINY else CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > CF_TINY else CF_TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > CF_TINY else CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > CF_TINY else CF_TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x) / b


def label_update_probability(mix_alpha: float, gamma: float) -> float:
    """Chance that a ``Beta(mix_alpha, mix_alpha)`` coefficient falls outside
    ``[gamma, 1 - gamma]``, i.e. that the mixup gate updates some parent."""
    if not mix_alpha > 0:
        raise ValueError(f"mix_alpha must be positive, got {mix_alpha}")
    if not 0.0 < gamma < 0.5:
        raise ValueError(f"gamma must be in (0, 0.5), got {gamma}")
    inside = betainc(mix_alpha, mix_alpha, 1.0 - gamma) - betainc(mix_alpha, mix_alpha, gamma)
    return min(max(1.0 - inside, 0.0), 1.0)

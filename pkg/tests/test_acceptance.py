"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``python -m pytest tests/test_acceptance.py -s`` (or
``python tests/test_acceptance.py``).
"""

import os
import sys
import time

import numpy as np
import pytest

from conflab.data import NoiseSpec, inject_noise, make_gaussian_mixture
from conflab.experiments import ExperimentConfig, run_cell, build_grid, run_experiment
from conflab.metrics import RunRecord
from conflab.nn import Batch, backward, forward, init_network, weighted_soft_ce
from conflab.sat import TrainConfig
from conflab.theory import (
    WeightingScenario,
    label_update_probability,
    optimal_weights,
    random_unit_weights,
    variance_sweep,
)
from conflab.training import fit

JOBS = max(1, min(3, os.cpu_count() or 1))


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail, seconds, limit):
        ok = bool(ok) and seconds < limit
        with capsys.disabled():
            print(f"\nCRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.1f}s / limit {limit}s]")
        assert ok, detail

    return report


def same_trajectory(a, b):
    return len(a) == len(b) and all(
        x.tobytes() == y.tobytes() for na, nb in zip(a, b) for x, y in zip(na.params(), nb.params())
    )


def mixture500(seed=0):
    train = make_gaussian_mixture(4, 10, [125] * 4, 3.0, 1.0, seed)
    test = make_gaussian_mixture(4, 10, [125] * 4, 3.0, 1.0, seed, split="test")
    return inject_noise(train, NoiseSpec("uniform", 0.4, seed + 1)), test


def fd_relative_error(net, batch, h=1e-5):
    analytic = np.concatenate([g.ravel() for g in backward(net, batch).params()])
    numeric = []
    for p in net.params():
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = weighted_soft_ce(forward(net, batch.inputs), batch.soft_labels, batch.weights)
            flat[i] = old - h
            down = weighted_soft_ce(forward(net, batch.inputs), batch.soft_labels, batch.weights)
            flat[i] = old
            numeric.append((up - down) / (2 * h))
    numeric = np.array(numeric)
    return np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)


def test_1_gradient_correctness(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    errors, kink = [], np.inf
    for _ in range(100):
        depth = int(rng.integers(0, 3))
        sizes = [int(rng.integers(1, 6))] + [int(rng.integers(2, 8)) for _ in range(depth)] + [int(rng.integers(2, 5))]
        net = init_network(sizes, rng)
        # random biases keep instances off the ReLU kinks (zero-bias init can
        # put a whole layer's pre-activations at exactly 0, where the loss has
        # no derivative for finite differences to approximate)
        for b in net.biases:
            b[:] = rng.normal(scale=0.5, size=b.shape)
        n = int(rng.integers(1, 8))
        t = rng.dirichlet(np.ones(sizes[-1]), size=n)
        batch = Batch(rng.normal(size=(n, sizes[0])), t, rng.uniform(0.1, 1.0, n))
        h = batch.inputs
        for W, b in zip(net.weights[:-1], net.biases[:-1]):
            z = h @ W.T + b
            kink = min(kink, float(np.abs(z).min()))
            h = np.maximum(z, 0.0)
        errors.append(fd_relative_error(net, batch))
    worst = max(errors)
    verdict(1, worst <= 1e-5 and kink > 1e-4,
            f"max relative error {worst:.2e} over 100 instances (<= 1e-5); nearest kink {kink:.1e}",
            time.perf_counter() - start, 10)


def test_2_momentum_one_is_ce(verdict):
    start = time.perf_counter()
    train, test = mixture500()
    cfg = TrainConfig(total_epochs=20, start_epoch=5, seed=11)
    ce = fit(cfg.with_(method="ce"), train, test, keep_trajectory=True)
    sat = fit(cfg.with_(method="sat", momentum=1.0), train, test, keep_trajectory=True)
    ok = same_trajectory(ce.trajectory, sat.trajectory) and ce.record.to_csv() == sat.record.to_csv()
    verdict(2, ok, f"21 parameter snapshots bitwise identical: {ok}", time.perf_counter() - start, 30)


def test_3_random_label_collapse(verdict):
    start = time.perf_counter()
    cfg = ExperimentConfig.from_dict({"experiment": "random_labels", "methods": ["sat"]})
    assert cfg.train.start_epoch == 20 and cfg.train.total_epochs == 100
    assert cfg.data.class_count == 4 and cfg.data.dim == 10
    (cell,) = build_grid(cfg)
    s = run_cell(cfg, cell)["summary"]
    ok = s["soft_label_uniformity"] <= 0.05 and s["all_test_predictions_majority"] and s["gen_gap"] <= 0.02
    detail = (f"uniformity {s['soft_label_uniformity']:.4f} (<= 0.05), all predictions majority "
              f"{s['all_test_predictions_majority']}, gen gap {s['gen_gap']:.4f} (<= 0.02)")
    verdict(3, ok, detail, time.perf_counter() - start, 120)


def test_4_noise_robustness_ordering(verdict, tmp_path):
    start = time.perf_counter()
    cfg = ExperimentConfig.from_dict(
        {"experiment": "noise_sweep", "methods": ["ce", "sat", "sam"], "noise_rates": [0.4], "replications": 3}
    )
    out = run_experiment(cfg, tmp_path, jobs=JOBS, figures=False)
    acc = {m: out.medians[(m, 0)]["final_test_acc"] for m in cfg.methods}
    ok = out.ok and acc["sam"] >= acc["sat"] + 0.02 and acc["sat"] >= acc["ce"] + 0.02
    detail = f"median clean test acc SAM {acc['sam']:.3f} >= SAT {acc['sat']:.3f} >= CE {acc['ce']:.3f}, margins 0.02"
    verdict(4, ok, detail, time.perf_counter() - start, 600)


def test_5_figure1_shape(verdict, tmp_path):
    start = time.perf_counter()
    cfg = ExperimentConfig.from_dict(
        {"experiment": "single_run", "methods": ["ce", "sat"], "train": {"weight_decay": 5e-3}}
    )
    assert cfg.data.noise_rate == 0.4 and cfg.train.total_epochs == 200
    out = run_experiment(cfg, tmp_path, jobs=min(2, JOBS), figures=False)
    ce, sat = out.medians[("ce", 0)], out.medians[("sat", 0)]
    ok = ce["exceeded_noise_ceiling"] and ce["test_acc_declined"] and not sat["test_acc_declined"]
    detail = (f"CE peak clean-train {ce['peak_clean_train']:.3f} above ceiling {ce['exceeded_noise_ceiling']}, "
              f"CE declined {ce['test_acc_declined']}, SAT declined {sat['test_acc_declined']}")
    verdict(5, ok, detail, time.perf_counter() - start, 300)


def test_6_variance_optimality(verdict):
    start = time.perf_counter()
    p = np.array([0.9, 0.9, 0.3, 0.3])
    qs = [optimal_weights(p)] + random_unit_weights(4, 20, np.random.default_rng(6))
    rows = variance_sweep(WeightingScenario(p, np.ones(4)), qs, trials=100_000, seed=6)
    emp = [r.empirical_variance for r in rows]
    worst_gap = max(r.relative_gap for r in rows)
    ok = int(np.argmin(emp)) == 0 and worst_gap <= 0.05
    detail = f"q proportional to p has min empirical variance {emp[0]:.4f}: {int(np.argmin(emp)) == 0}; worst gap {worst_gap:.4f} (<= 0.05)"
    verdict(6, ok, detail, time.perf_counter() - start, 30)


def test_7_update_probability(verdict):
    start = time.perf_counter()
    exact = label_update_probability(1.0, 0.1)
    grid = [label_update_probability(a, 0.1) for a in (0.1, 0.2, 0.5, 1.0, 2.0, 5.0)]
    monotone = all(x > y for x, y in zip(grid, grid[1:]))
    train = make_gaussian_mixture(4, 10, [500] * 4, 3.0, 1.0, seed=7)
    test = make_gaussian_mixture(4, 10, [50] * 4, 3.0, 1.0, seed=7, split="test")
    train = inject_noise(train, NoiseSpec("uniform", 0.4, 8))
    gaps = {}
    for alpha in (0.2, 1.0):
        cfg = TrainConfig(total_epochs=51, start_epoch=1, method="sam", mix_alpha=alpha, hidden=(16,), seed=7)
        rec = fit(cfg, train, test).record
        draws = len(train) * (len(rec) - 1)
        fraction = float(np.mean(rec.column("gate_fire_fraction")[1:]))
        gaps[alpha] = abs(fraction - label_update_probability(alpha, 0.1))
    ok = abs(exact - 0.2) <= 1e-9 and monotone and max(gaps.values()) <= 0.02
    detail = (f"P(1, 0.1) = {exact:.12f}; strictly decreasing {monotone}; gate-fire |diff| over {draws} draws: "
              f"alpha 0.2 {gaps[0.2]:.4f}, alpha 1.0 {gaps[1.0]:.4f} (<= 0.02)")
    verdict(7, ok, detail, time.perf_counter() - start, 60)


def test_8_imbalance_tradeoff(verdict, tmp_path):
    start = time.perf_counter()
    cfg = ExperimentConfig.from_dict({"experiment": "imbalance", "methods": ["ce", "sat"], "imbalance_ratios": [9, 99]})
    assert cfg.data.per_class("train_per_class")[0] == 900
    out = run_experiment(cfg, tmp_path, jobs=JOBS, figures=False)
    curves = {}
    for res in out.results:
        c = res["cell"]
        curves[(c.method, c.condition)] = RunRecord.from_csv(res["epochs_csv"]).worst_class_curve()
    es = cfg.train.start_epoch
    margin = curves[("ce", 99)][-1] - curves[("sat", 99)][-1]
    declines = {r: bool(curves[("sat", r)][-1] < curves[("sat", r)][es - 1]) for r in (9, 99)}
    pre_match = max(abs(curves[("sat", r)][es - 1] - curves[("ce", r)][es - 1]) for r in (9, 99))
    ok = out.ok and margin >= 0.10 and all(declines.values()) and pre_match <= 0.05
    detail = (f"ratio 99 final worst-class CE {curves[('ce', 99)][-1]:.3f} - SAT {curves[('sat', 99)][-1]:.3f} = "
              f"{margin:.3f} (>= 0.10); SAT declines after epoch {es}: {declines}; "
              f"pre-E_s |SAT - CE| {pre_match:.3f} (<= 0.05)")
    verdict(8, ok, detail, time.perf_counter() - start, 600)


def test_9_property_suites(verdict):
    start = time.perf_counter()
    sys.path.insert(0, os.path.dirname(__file__))
    import test_properties

    suites = [getattr(test_properties, n) for n in dir(test_properties) if n.startswith("test_")]
    randomized = [s for s in suites if hasattr(s, "hypothesis")]
    for suite in suites:
        suite()
    counts = {s.hypothesis.inner_test.__name__: s._hypothesis_internal_use_settings.max_examples for s in randomized}
    ok = all(v >= 1000 for v in counts.values()) and len(randomized) >= 10
    verdict(9, ok, f"{len(randomized)} randomized suites x >= 1000 cases passed", time.perf_counter() - start, 60)


def test_10_mixup_reductions(verdict):
    start = time.perf_counter()
    train, test = mixture500(3)
    cfg = TrainConfig(total_epochs=15, start_epoch=5, seed=3)
    sam = fit(cfg.with_(method="sam"), train, test, gate_open=False, unit_weights=True, keep_trajectory=True)
    mixup = fit(cfg.with_(method="mixup"), train, test, keep_trajectory=True)
    forced = fit(cfg.with_(method="mixup"), train, test, lambda_override=1.0, keep_trajectory=True)
    ce = fit(cfg.with_(method="ce"), train, test, keep_trajectory=True)
    a = same_trajectory(sam.trajectory, mixup.trajectory)
    b = same_trajectory(forced.trajectory, ce.trajectory)
    verdict(10, a and b, f"closed-gate unit-weight SAM == mixup: {a}; mixup with lambda 1 == CE: {b}",
            time.perf_counter() - start, 60)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))

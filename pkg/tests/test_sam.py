import math

import numpy as np
import pytest
from scipy import integrate, stats

from conflab.sam import FIRST_PARENT, SECOND_PARENT, label_update_gate, mix, run_mixup, run_sam, sample_lambda
from conflab.sat import TrainConfig, run_ce
from conflab.theory import label_update_probability
from conflab.training import fit

from conftest import mixture

N = 100_000


def beta_mass_outside(a, gamma):
    log_norm = math.lgamma(2 * a) - 2 * math.lgamma(a)
    inside, _ = integrate.quad(lambda x: math.exp(log_norm + (a - 1) * math.log(x * (1 - x))), gamma, 1 - gamma, epsabs=1e-13, epsrel=1e-13)
    return 1.0 - inside


def same_params(a, b):
    return all(x.tobytes() == y.tobytes() for x, y in zip(a.params(), b.params()))


class TestSampleLambda:
    def test_alpha_one_uniform(self):
        lam = sample_lambda(1.0, np.random.default_rng(0), size=N)
        assert lam.mean() == pytest.approx(0.5, abs=0.01)
        assert stats.kstest(lam, "uniform").statistic <= 0.01

    @pytest.mark.parametrize("alpha", [0.05, 0.2, 1.0, 4.0])
    def test_symmetry(self, alpha):
        # near 1, lambda and 1 - lambda lose resolution in float64; clipping
        # both to [1e-9, 1 - 1e-9] is monotone so KS is otherwise unchanged
        lam = np.clip(sample_lambda(alpha, np.random.default_rng(1), size=N), 1e-9, 1 - 1e-9)
        assert stats.ks_2samp(lam, np.clip(1 - lam, 1e-9, 1 - 1e-9)).statistic <= 0.01

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 2.0])
    def test_matches_beta_cdf(self, alpha):
        lam = sample_lambda(alpha, np.random.default_rng(2), size=N)
        assert stats.kstest(lam, stats.beta(alpha, alpha).cdf).statistic <= 0.01

    def test_gate_mass_alpha_02(self):
        lam = sample_lambda(0.2, np.random.default_rng(3), size=N)
        outside = np.mean((lam < 0.1) | (lam > 0.9))
        assert outside == pytest.approx(label_update_probability(0.2, 0.1), abs=0.01)

    def test_tiny_alpha_stays_in_unit_interval(self):
        lam = sample_lambda(0.01, np.random.default_rng(4), size=N)
        assert ((lam >= 0) & (lam <= 1)).all() and np.isfinite(lam).all()

    def test_scalar_and_rejects(self):
        assert isinstance(sample_lambda(1.0, np.random.default_rng(0)), float)
        with pytest.raises(ValueError):
            sample_lambda(0.0, np.random.default_rng(0))


class TestMix:
    def test_endpoints(self):
        xi, xj = np.array([1.0, 2.0]), np.array([-3.0, 5.0])
        ti, tj = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        one = mix(xi, ti, xj, tj, 1.0)
        np.testing.assert_array_equal(one.input, xi)
        np.testing.assert_array_equal(one.soft_label, ti)
        zero = mix(xi, ti, xj, tj, 0.0)
        np.testing.assert_array_equal(zero.input, xj)
        np.testing.assert_array_equal(zero.soft_label, tj)

    def test_midpoint(self):
        m = mix(np.zeros(1), np.array([1.0, 0.0]), np.ones(1), np.array([0.0, 1.0]), 0.5)
        np.testing.assert_array_equal(m.soft_label, [0.5, 0.5])

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            mix(np.zeros(1), np.ones(2) / 2, np.zeros(1), np.ones(2) / 2, 1.5)


class TestGate:
    @pytest.mark.parametrize("lam,expected", [(0.95, {FIRST_PARENT}), (0.5, set()), (0.05, {SECOND_PARENT})])
    def test_examples(self, lam, expected):
        assert label_update_gate(lam, 0.1) == expected

    def test_boundaries_are_open(self):
        assert label_update_gate(0.9, 0.1) == set()
        assert label_update_gate(0.1, 0.1) == set()

    @pytest.mark.parametrize("gamma", [0.0, 0.5, 0.7])
    def test_bad_gamma(self, gamma):
        with pytest.raises(ValueError):
            label_update_gate(0.5, gamma)


class TestReductions:
    base = TrainConfig(total_epochs=5, start_epoch=2, hidden=(8,), batch_size=16, seed=3)

    def test_closed_gate_unit_weights_is_mixup(self):
        train, test = mixture(noise=0.3)
        sam = fit(self.base.with_(method="sam"), train, test, gate_open=False, unit_weights=True, keep_trajectory=True)
        mixup = fit(self.base.with_(method="mixup"), train, test, keep_trajectory=True)
        assert all(same_params(a, b) for a, b in zip(sam.trajectory, mixup.trajectory))
        np.testing.assert_array_equal(sam.store.labels, np.eye(3)[train.labels])

    def test_mixup_lambda_one_is_ce(self):
        train, test = mixture(noise=0.3)
        mixup = fit(self.base.with_(method="mixup"), train, test, lambda_override=1.0, keep_trajectory=True)
        ce = fit(self.base.with_(method="ce"), train, test, keep_trajectory=True)
        assert all(same_params(a, b) for a, b in zip(mixup.trajectory, ce.trajectory))

    def test_start_at_total_keeps_one_hot(self):
        train, test = mixture(noise=0.3)
        _, store, _ = run_sam(self.base.with_(method="sam", start_epoch=5), train, test)
        np.testing.assert_array_equal(store.labels, np.eye(3)[train.labels])

    def test_deterministic(self):
        train, test = mixture(noise=0.3)
        a = run_sam(self.base.with_(method="sam"), train, test)
        b = run_sam(self.base.with_(method="sam"), train, test)
        assert same_params(a[0], b[0]) and a[1].labels.tobytes() == b[1].labels.tobytes()

    def test_wrong_method(self):
        train, test = mixture()
        with pytest.raises(ValueError):
            run_sam(self.base.with_(method="sat"), train, test)
        with pytest.raises(ValueError):
            run_mixup(self.base.with_(method="sam"), train, test)


class TestRunSam:
    @pytest.mark.parametrize("alpha", [0.2, 1.0])
    def test_gate_fire_fraction(self, alpha):
        train, test = mixture(class_count=4, per_class=250, noise=0.4)
        cfg = TrainConfig(total_epochs=21, start_epoch=1, hidden=(8,), method="sam", mix_alpha=alpha)
        _, _, rec = run_sam(cfg, train, test)
        fractions = rec.column("gate_fire_fraction")
        assert np.isnan(fractions[0])
        assert fractions[1:].mean() == pytest.approx(label_update_probability(alpha, 0.1), abs=0.02)

    def test_simplex_and_weights(self):
        train, test = mixture(noise=0.4)
        cfg = TrainConfig(total_epochs=6, start_epoch=2, hidden=(8,), method="sam", mix_alpha=0.3, momentum=0.5)
        _, store, rec = run_sam(cfg, train, test)
        np.testing.assert_allclose(store.labels.sum(axis=1), 1.0, atol=1e-9)
        assert (store.labels >= 0).all()
        assert (rec.column("min_weight") >= 1 / 3 - 1e-12).all()

    def test_beats_ce_on_noisy_mixture(self):
        train, test = mixture(class_count=4, per_class=250, dim=10, noise=0.4, test_per_class=500)
        cfg = TrainConfig(total_epochs=120, start_epoch=40)
        _, rec_ce = run_ce(cfg.with_(method="ce"), train, test)
        _, _, rec_sam = run_sam(cfg.with_(method="sam"), train, test)
        assert rec_sam.final.test_acc >= rec_ce.final.test_acc


def test_quadrature_oracle_alpha_02():
    assert label_update_probability(0.2, 0.1) == pytest.approx(beta_mass_outside(0.2, 0.1), abs=1e-6)


def test_mixup_random_labels_stays_near_chance():
    from conflab.data import NoiseSpec, inject_noise

    train, test = mixture(class_count=4, per_class=500, dim=10)
    train = inject_noise(train, NoiseSpec("random_all", 1.0, 7))
    cfg = TrainConfig(total_epochs=100, start_epoch=20, method="mixup", weight_decay=2e-2)
    _, rec = run_mixup(cfg, train, test)
    assert rec.final.train_acc_noisy <= 0.25 + 0.05

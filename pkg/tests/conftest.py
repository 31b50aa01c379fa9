import pytest

from conflab.data import NoiseSpec, inject_noise, make_gaussian_mixture


def mixture(class_count=3, per_class=60, dim=4, separation=3.0, seed=0, noise=0.0, test_per_class=50):
    train = make_gaussian_mixture(class_count, dim, [per_class] * class_count, separation, 1.0, seed)
    test = make_gaussian_mixture(class_count, dim, [test_per_class] * class_count, separation, 1.0, seed, split="test")
    if noise:
        train = inject_noise(train, NoiseSpec("uniform", noise, seed + 1))
    return train, test


@pytest.fixture
def small_noisy():
    return mixture(noise=0.4)

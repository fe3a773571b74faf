import numpy as np
import pytest

from conftest import matrix_with_spectrum
from spectralaug import (GrassmanAugmenter, MaxExpAugmenter, PowerNormAugmenter,
                         PreconditionAugmenter, RngStream, SfaAugmenter, ValidationError,
                         sfa_forward, svd_jacobi)

ALL_AUGMENTERS = [SfaAugmenter, MaxExpAugmenter, PowerNormAugmenter, GrassmanAugmenter,
                  PreconditionAugmenter]


@pytest.mark.parametrize("cls", ALL_AUGMENTERS)
def test_get_set_params_round_trip(cls):
    est = cls()
    params = est.get_params()
    est.set_params(**params)
    assert est.get_params() == params


def test_set_params_rejects_unknown():
    with pytest.raises(ValidationError):
        SfaAugmenter().set_params(gamma=3)


def test_unfitted_transform_raises(gen):
    with pytest.raises(ValidationError):
        SfaAugmenter().transform(gen.standard_normal((4, 3)))


def test_fit_records_width_and_validates(gen):
    x = gen.standard_normal((10, 4))
    est = SfaAugmenter(k=1, random_state=3).fit(x)
    assert est.n_features_in_ == 4
    with pytest.raises(ValidationError):
        est.transform(gen.standard_normal((10, 5)))


def test_transform_matches_functional_core(gen):
    x = gen.standard_normal((12, 5))
    est = SfaAugmenter(k=2, random_state=17).fit(x)
    expected = sfa_forward(x, 2, RngStream(17)).augmented
    assert np.array_equal(est.transform(x), expected)


def test_transform_is_idempotent_by_default(gen):
    x = gen.standard_normal((8, 3))
    est = SfaAugmenter(k=1, random_state=5).fit(x)
    assert np.array_equal(est.transform(x), est.transform(x))


def test_explicit_stream_draws_fresh(gen):
    x = gen.standard_normal((8, 3))
    est = SfaAugmenter(k=1, random_state=5).fit(x)
    a = est.transform(x, stream=RngStream(5, 1))
    b = est.transform(x, stream=RngStream(5, 2))
    assert not np.allclose(a, b)


def test_grassman_augmenter_whitens(gen):
    x, _, _ = matrix_with_spectrum(gen, 10, [2.0, 1.0, 0.4])
    out = GrassmanAugmenter(kappa=3, ns_iters=30).fit_transform(x)
    assert np.allclose(svd_jacobi(out).sigma, 1.0, atol=1e-8)


def test_sklearn_clone_compatible():
    # sklearn.clone reconstructs from get_params; emulate its contract
    est = PowerNormAugmenter(beta=0.25, variant="star", random_state=9)
    clone = PowerNormAugmenter(**est.get_params())
    assert clone.get_params() == est.get_params()


def test_pipeline_composition(gen):
    x, _, _ = matrix_with_spectrum(gen, 10, [2.0, 1.0, 0.4])
    stage1 = PreconditionAugmenter().fit(x)
    y = stage1.transform(x)
    stage2 = SfaAugmenter(k=1, random_state=0).fit(y)
    z = stage2.transform(y)
    assert z.shape == x.shape

"""Property tests for the package-wide invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralaug import (NumericalError, RngStream, analytic_params, gauss_2f1, lambda_analytic,
                         sfa_forward, spectral_norm, frobenius_norm)

spectra = st.lists(st.floats(0.05, 5.0), min_size=2, max_size=8).map(
    lambda vals: np.sort(np.asarray(vals))[::-1])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(2, 12), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_sfa_conservation_property(n, d, k, seed):
    h = RngStream(seed).generator().standard_normal((n, d))
    out = sfa_forward(h, k, RngStream(seed, 1))
    r_hat = out.r_final / np.linalg.norm(out.r_final)
    h_sq = float(np.sum(h * h))
    assert abs(float(np.sum(out.augmented**2)) + float(np.sum((h @ r_hat) ** 2)) - h_sq) <= 1e-10 * h_sq
    assert float(np.linalg.norm(out.augmented @ r_hat)) <= 1e-12 * math.sqrt(h_sq)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(0.3, 5.0), st.floats(-8.0, 0.95))
def test_2f1_symmetric_in_upper_parameters(a, b, c_off, z):
    c = max(a, b) + c_off
    assert gauss_2f1(a, b, c, z) == pytest.approx(gauss_2f1(b, a, c, z), rel=1e-11)


@settings(max_examples=40, deadline=None)
@given(spectra, st.integers(1, 2))
def test_lambda_in_unit_interval_and_monotone(spectrum, k):
    lams = [lambda_analytic(analytic_params(spectrum, i, k)) for i in range(spectrum.size)]
    assert all(0.0 <= lam <= 1.0 for lam in lams)
    assert all(lams[i] >= lams[i + 1] - 1e-10 for i in range(len(lams) - 1))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_spectral_norm_dominated_by_frobenius(n, d, seed):
    m = RngStream(seed, 2).generator().standard_normal((n, d))
    assert spectral_norm(m) <= frobenius_norm(m) * (1 + 1e-10)


def test_degenerate_start_vector_exhausts_retries():
    # entries so small that one Gram application underflows every draw
    h = np.full((2, 2), 1e-200)
    h[0, 1] = -1e-200
    with pytest.raises(NumericalError):
        sfa_forward(h, 2, RngStream(0))

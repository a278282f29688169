import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcache.zipf import ZipfModel, harmonic_asymptotic_class, harmonic_constant, pmf

# Frozen from a 50-digit mpmath summation of the binary double 0.55.
H_055_200 = 22.461380583121959152855546128560370903359294148796


def test_harmonic_tiny_alpha_is_count():
    assert harmonic_constant(ZipfModel(1e-9, 3)) == pytest.approx(3.0, rel=1e-8)


def test_harmonic_alpha_one_exact():
    assert harmonic_constant(ZipfModel(1.0, 3)) == pytest.approx(11 / 6, abs=1e-15)


def test_harmonic_matches_high_precision_oracle():
    assert harmonic_constant(ZipfModel(0.55, 200)) == pytest.approx(H_055_200, rel=1e-15)


def test_harmonic_against_live_mpmath():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for alpha, M in [(0.3, 50), (1.2, 200), (2.5, 1000)]:
        ref = mpmath.fsum(mpmath.power(i, -mpmath.mpf(alpha)) for i in range(1, M + 1))
        assert harmonic_constant(ZipfModel(alpha, M)) == pytest.approx(float(ref), rel=2e-16)


def test_pmf_alpha_one_m4():
    z = ZipfModel(1.0, 4)
    assert pmf(z, 1) == pytest.approx(Fraction(12, 25), abs=1e-15)
    assert pmf(z, 4) == pytest.approx(Fraction(3, 25), abs=1e-15)


def test_pmf_ratio_is_power():
    z = ZipfModel(1.2, 200)
    assert pmf(z, 1) / pmf(z, 2) == pytest.approx(2 ** 1.2, rel=4 * np.finfo(float).eps)


def test_pmf_out_of_range():
    z = ZipfModel(1.0, 4)
    with pytest.raises(IndexError):
        pmf(z, 0)
    with pytest.raises(IndexError):
        z.pmf(5)


@pytest.mark.parametrize("alpha", [0.0, -1.0, math.nan, math.inf])
def test_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        ZipfModel(alpha, 10)


@pytest.mark.parametrize("M", [0, -3, 2.5])
def test_rejects_bad_library(M):
    with pytest.raises(ValueError):
        ZipfModel(1.0, M)


@pytest.mark.parametrize("alpha,expected", [
    (1.5, ("constant", None)), (1.0, ("log", None)), (0.55, ("polynomial", pytest.approx(0.45))),
])
def test_asymptotic_class(alpha, expected):
    assert harmonic_asymptotic_class(alpha) == expected


def test_probabilities_read_only():
    p = ZipfModel(0.8, 10).probabilities
    with pytest.raises(ValueError):
        p[0] = 1.0


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(1e-6, 4.0), M=st.integers(1, 3000))
def test_pmf_normalised_and_monotone(alpha, M):
    p = ZipfModel(alpha, M).probabilities
    assert math.fsum(p) == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(p) < 0) or M == 1


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.05, 3.0), M=st.integers(2, 500), data=st.data())
def test_pmf_ratio_property(alpha, M, data):
    z = ZipfModel(alpha, M)
    m = data.draw(st.integers(1, M))
    k = data.draw(st.integers(1, M))
    assert pmf(z, m) / pmf(z, k) == pytest.approx((k / m) ** alpha, rel=8 * np.finfo(float).eps)


def test_sampling_frequencies():
    z = ZipfModel(1.0, 5)
    draws = z.sample(np.random.default_rng(3), 200_000)
    assert draws.min() >= 1 and draws.max() <= 5
    freq = np.bincount(draws, minlength=6)[1:] / len(draws)
    np.testing.assert_allclose(freq, z.probabilities, atol=4e-3)

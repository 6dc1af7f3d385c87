import math

import numpy as np
import pytest
from scipy.linalg import subspace_angles
from scipy.special import iv

from fixtures import expcos, step
from offwhite import (CircleDensity, canonical_correlations, hs_sweep, index_estimate, moments,
                      section_gram, shift_law_check, time_reversal_check)
from offwhite.errors import PoleMismatch, Undecided
from offwhite.paf import MomentTable, whitened_correlations


def _oracle_sigma1(c: dict, K: int, N: int) -> float:
    """Largest cosine of principal angles from a Cholesky factor of the joint Gram."""
    idx = list(range(-K, 1)) + list(range(N + 1, N + 2 + K))
    G = np.array([[c.get(b - a, 0.0) for b in idx] for a in idx])
    L = np.linalg.cholesky(G)
    return float(np.cos(subspace_angles(L[:K + 1].T, L[K + 1:].T)).max())


def test_expcos_moments_are_bessel():
    mt = moments(expcos(), 12)
    np.testing.assert_allclose(mt.c.real, 2 * math.pi * iv(np.arange(13), 0.5), rtol=1e-12, atol=1e-14)
    assert np.max(np.abs(mt.c.imag)) < 1e-12


def test_step_moments():
    mt = moments(step(), 6)
    n = np.arange(1, 7)
    assert mt.c0 == pytest.approx(3 * math.pi, rel=1e-12)
    np.testing.assert_allclose(mt.c[1:].real, 2 * np.sin(n * math.pi / 2) / n, atol=1e-12)


def test_zero_factor_moments():
    mt = moments(CircleDensity.lebesgue().times_zero(0.0), 3)
    np.testing.assert_allclose(mt.c, [4 * math.pi, -2 * math.pi, 0, 0], atol=1e-12)


def test_moments_refuse_poles():
    d = CircleDensity.lebesgue().times_zero(0.0)
    with pytest.raises(PoleMismatch):
        moments(CircleDensity(d.log_w, poles=((0.0, 1),)), 4)


def test_moment_table_access():
    mt = MomentTable(np.array([2.0, 1j, 0.5]))
    assert mt.get(-1) == -1j
    with pytest.raises(ValueError):
        mt.get(3)
    assert mt.mirrored().get(1) == -1j


@pytest.mark.parametrize("K", [4, 8, 32])
def test_zero_at_one_sigma_closed_form(K):
    mt = moments(CircleDensity.lebesgue().times_zero(0.0), 2 * K + 4)
    s = canonical_correlations(section_gram(mt, K, 0)).sigma1
    assert s == pytest.approx((K + 1) / (K + 2), rel=1e-10)
    c = {0: 4 * math.pi, 1: -2 * math.pi, -1: -2 * math.pi}
    assert s == pytest.approx(_oracle_sigma1(c, K, 0), rel=1e-10)


def test_expcos_against_cholesky_oracle():
    mt = moments(expcos(), 40)
    c = {n: float(mt.get(n).real) for n in range(-40, 41)}
    for K, N in [(6, 0), (10, 2)]:
        s = canonical_correlations(section_gram(mt, K, N)).sigma1
        assert s == pytest.approx(_oracle_sigma1(c, K, N), rel=1e-8)


def test_whitened_correlations_of_identical_blocks():
    G = np.array([[2.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(whitened_correlations(G, G, G), [1.0, 1.0], atol=1e-10)


def test_index_values():
    leb = CircleDensity.lebesgue()
    assert index_estimate(leb).index == 0
    assert index_estimate(leb.times_zero(0.0)).index == 1
    assert index_estimate(leb.times_zero(0.0, 2)).index == 2
    assert index_estimate(expcos()).index == 0


def test_index_undecided_between_thresholds():
    with pytest.raises(Undecided) as info:
        index_estimate(expcos(), delta_angle=0.9)
    assert info.value.k == 0


def test_shift_law():
    r = shift_law_check(expcos(), [0.0, 1.2])
    assert r.ok and r.after.index == r.before.index + 2


def test_time_reversal():
    assert time_reversal_check(step()).ok


def test_hs_trends():
    assert hs_sweep(expcos(), N=0).trend == "converging"
    s = hs_sweep(step(), N=0)
    assert s.trend == "log-growing" and s.monotone
    assert s.log_rate == pytest.approx(0.023114, rel=1e-3)

import math

import numpy as np
import pytest
from scipy import integrate

from offwhite import CircleDensity, DensitySpec, cayley_forward, cayley_inverse, moderation_order, pushforward_density
from offwhite.cayley import chord_sq_at_one, line_jacobian, line_moments
from offwhite.errors import PoleMismatch


def test_special_points():
    assert cayley_forward(0.0) == pytest.approx(math.pi)
    assert cayley_forward(1.0) == pytest.approx(-math.pi / 2)
    assert cayley_forward(-1.0) == pytest.approx(math.pi / 2)
    assert cayley_inverse(math.pi / 2) == pytest.approx(-1.0)


def test_jacobian_is_derivative():
    lam = np.array([-3.0, -0.2, 0.5, 4.0])
    h = 1e-6
    fd = (cayley_forward(lam + h) - cayley_forward(lam - h)) / (2 * h)
    np.testing.assert_allclose(np.abs(fd), line_jacobian(lam), rtol=1e-8)


@pytest.mark.parametrize("spec, m", [
    (DensitySpec.white(), 1),
    (DensitySpec.rational([1.0], [1.0, 0.0, 1.0]), 0),
    (DensitySpec.rational([1.0, 0.0, 1.0]), 2),
    (DensitySpec.power(1.0), 2),
    (DensitySpec.power(0.5), 1),
    (DensitySpec.logpow(2.0), 1),
    (DensitySpec.rational([0.0, 0.0, 1.0]), 2),
])
def test_moderation_order(spec, m):
    rep = moderation_order(spec)
    assert rep.order == m and rep.monotone


def test_white_order_one_integral_is_pi():
    rep = moderation_order(DensitySpec.white())
    assert rep.probes[1].value == pytest.approx(math.pi, rel=1e-6)


def test_pushforward_smooth_part():
    spec = DensitySpec.logpow(1.0)
    d = pushforward_density(spec, 1)
    th = 1e-3
    lam = abs(cayley_inverse(th))
    assert d.log_w(np.array([th]))[0] == pytest.approx(math.log(2 * math.log(lam)), rel=1e-10)
    assert d.poles == ((0.0, 1),) or list(d.poles) == [(0.0, 1)]
    with pytest.raises(PoleMismatch):
        d.log_density(np.array([0.0]))


def test_pushforward_rejects_pole_factor_for_finite_measure():
    with pytest.raises(PoleMismatch):
        pushforward_density(DensitySpec.rational([1.0], [1.0, 0.0, 1.0]), 0, pole_factor=True)


def test_line_moments_match_circle_quadrature():
    spec = DensitySpec.explog(0.3)
    d, _ = pushforward_density(spec, 1).pole_free()
    c = line_moments(spec, 1, 3)
    for n in range(4):
        oracle, _ = integrate.quad(lambda th: math.cos(n * th) * float(d.smooth(np.array(th))),
                                   -math.pi, math.pi, points=[0.0], limit=500)
        assert c[n].real == pytest.approx(oracle, rel=1e-7, abs=1e-9)


def test_line_moments_closed_forms():
    np.testing.assert_allclose(line_moments(DensitySpec.white(), 1, 3), [4 * math.pi, 0, 0, 0], atol=1e-9)
    np.testing.assert_allclose(line_moments(DensitySpec.rational([1.0], [1.0, 0.0, 1.0]), 0, 3),
                               [math.pi, 0, 0, 0], atol=1e-9)


def test_times_zero_cancels_pole():
    d = pushforward_density(DensitySpec.white(), 1)
    z = d.times_zero(0.0)
    assert not z.poles and not z.zeros
    leb = CircleDensity.lebesgue().times_zero(0.5, 2)
    th = np.array([1.7])
    assert leb.density(th)[0] == pytest.approx((4 * math.sin((1.7 - 0.5) / 2) ** 2) ** 2)


def test_conjugate_and_symmetry():
    d = CircleDensity.from_log(lambda th: 0.3 * np.sin(th))
    assert not d.is_symmetric()
    assert CircleDensity.cosine([0.0, 0.5]).is_symmetric()
    np.testing.assert_allclose(d.conjugate().log_w(np.array([0.4])), -0.3 * np.sin(0.4))


def test_chord_identity_point():
    lam = 2.0
    z = np.exp(1j * cayley_forward(lam))
    assert abs(1 - z) ** 2 == pytest.approx(chord_sq_at_one(lam), rel=1e-14)

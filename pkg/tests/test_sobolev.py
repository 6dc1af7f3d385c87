import math

import numpy as np
import pytest

from offwhite import (DensitySpec, check_implications, circle_double_seminorm, circle_fourier_seminorm,
                      derivative_functional, doubling_functional, line_sobolev_functional,
                      pushforward_density)
from offwhite.density import spec_from_dict
from offwhite.errors import NotDifferentiable
from offwhite.sobolev import (circle_double_arc, circle_double_arc_probe, circle_double_probe,
                              circle_fourier_probe, fejer_sum, fourier_sum, line_kernel,
                              line_sobolev_u_form)

# frozen after agreement with the dilation (u) form and the circle arc form
LOGPOW_ONE = 8.7601894
EXPLOG_03 = 4.0903935


def test_kernel_small_argument():
    s = 1e-3
    assert line_kernel(s) == pytest.approx(4.0 / s ** 2 + 1.0 - 1.0 / 3.0, rel=1e-6)


def test_white_has_zero_energy():
    r = line_sobolev_functional(DensitySpec.white())
    assert r.verdict == "Finite" and r.value == 0.0


@pytest.mark.parametrize("alpha", [1.0, -1.0])
def test_logpow_value(alpha):
    r = line_sobolev_functional(DensitySpec.logpow(alpha))
    assert r.verdict == "Finite"
    assert r.value == pytest.approx(LOGPOW_ONE, rel=1e-6)


def test_line_value_agrees_with_independent_forms():
    spec = DensitySpec.logpow(1.0)
    assert line_sobolev_u_form(spec) == pytest.approx(LOGPOW_ONE, rel=1e-5)
    spec = DensitySpec.explog(0.3)
    r = line_sobolev_functional(spec)
    assert r.value == pytest.approx(EXPLOG_03, rel=1e-6)
    assert line_sobolev_u_form(spec) == pytest.approx(EXPLOG_03, rel=1e-4)
    stage = r.probe.stages[0]
    d = pushforward_density(spec, 1)
    arcs = circle_double_arc(d.log_w, stage.cutoffs[:5], d.breaks)
    np.testing.assert_allclose(arcs, stage.values[:5], rtol=1e-5)


@pytest.mark.parametrize("spec, verdict", [
    (DensitySpec.power(0.5), "Divergent"),
    (DensitySpec.power(-0.5), "Divergent"),
    (DensitySpec.explog(0.49), "Finite"),
    (DensitySpec.explog(0.51), "Divergent"),
])
def test_line_verdicts(spec, verdict):
    assert line_sobolev_functional(spec).verdict == verdict


def test_power_line_growth_is_logarithmic():
    r = line_sobolev_functional(DensitySpec.power(0.5))
    assert r.probe.model == "log"


@pytest.mark.parametrize("alpha", [0.5, -0.5, 1.0])
def test_doubling_rate(alpha):
    r = doubling_functional(DensitySpec.power(alpha))
    assert r.verdict == "Divergent" and r.probe.model == "log"
    assert r.probe.rate == pytest.approx((alpha * math.log(2.0)) ** 2, rel=1e-4)


def test_derivative_beyond_splice():
    r = derivative_functional(DensitySpec.explog(0.3, splice_radius=math.e))
    assert r.extra["beyond_splice"] == pytest.approx(0.09 / 0.4, rel=1e-4)
    assert r.value == pytest.approx(r.extra["beyond_splice"] + r.extra["splice_contribution"], rel=1e-9)


def test_derivative_needs_derivative():
    spec = spec_from_dict({"family": "circle_direct", "steps": [[-1.5, 1.5, 0.7]]})
    with pytest.raises(NotDifferentiable):
        derivative_functional(spec)


def test_tabulated_without_tail_is_inconclusive():
    lam = np.linspace(0.0, 4.0, 41)
    r = line_sobolev_functional(DensitySpec.tabulated(lam, 1 + lam ** 2 / (1 + lam ** 2)))
    assert r.verdict == "Inconclusive" and "tail" in r.probe.note


@pytest.mark.parametrize("n", [1, 2, 5])
def test_circle_forms_on_cosines(n):
    phi = lambda th: np.cos(n * th)
    assert circle_fourier_seminorm(phi) == pytest.approx(n / 2.0, rel=1e-12)
    assert circle_double_seminorm(phi) == pytest.approx(2.0 * math.pi ** 2 * n, rel=1e-9)


def test_coefficient_list_accepted():
    a = [0.0, 0.5, 0.0, 0.2]
    assert fourier_sum(a, 256) == pytest.approx(0.5 * (1 * 0.25 + 3 * 0.04), rel=1e-12)
    assert fejer_sum(a, 256) == pytest.approx(4 * math.pi ** 2 * fourier_sum(a, 256), rel=1e-9)


def test_grid_probes():
    assert circle_fourier_probe([0.0, 0.5]).verdict == "Finite"
    step = lambda th: np.where(np.abs(th) < math.pi / 2, 1.0, 0.0)
    r = circle_double_probe(step)
    assert r.verdict == "Divergent" and r.probe.model == "log"


def test_arc_probe_on_power_density():
    d = pushforward_density(DensitySpec.power(0.5), 1)
    assert circle_double_arc_probe(d.log_w, breaks=d.breaks).verdict == "Divergent"


@pytest.mark.parametrize("spec", [DensitySpec.power(0.5), DensitySpec.explog(0.3), DensitySpec.explog(0.7)])
def test_implications_hold(spec):
    assert check_implications(spec).ok

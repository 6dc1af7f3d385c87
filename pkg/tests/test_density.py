import math

import numpy as np
import pytest

from offwhite import DensitySpec, TailModel, eval_density, eval_log_derivative, log_density, validate
from offwhite.density import read_table, spec_from_dict, spec_to_dict
from offwhite.errors import NonPositive, SpecError, TabulatedOutOfRange


@pytest.mark.parametrize("spec, lam, expected", [
    (DensitySpec.white(), 5.0, 1.0),
    (DensitySpec.power(0.5), 9.0, 3.0),
    (DensitySpec.power(-0.5), 4.0, 0.5),
    (DensitySpec.logpow(2.0), math.e ** 3, 9.0),
    (DensitySpec.explog(0.5), math.e ** 4, math.exp(-2.0)),
    (DensitySpec.rational([1.0, 0.0, 1.0], [2.0]), 3.0, 5.0),
])
def test_closed_forms_beyond_splice(spec, lam, expected):
    assert eval_density(spec, lam) == pytest.approx(expected, rel=1e-12)
    assert eval_density(spec, -lam) == pytest.approx(expected, rel=1e-12)


def test_scale_and_dilation():
    s = DensitySpec.power(0.5)
    assert eval_density(s.scaled(7.0), 9.0) == pytest.approx(21.0)
    assert eval_density(s.dilated(4.0), 4.0) == pytest.approx(eval_density(s, 16.0))


@pytest.mark.parametrize("spec", [DensitySpec.power(0.5), DensitySpec.logpow(-1.0), DensitySpec.explog(0.3),
                                  DensitySpec.rational([1.0, 0.0, 2.0], [1.0, 0.0, 1.0])])
def test_log_derivative_matches_finite_difference(spec):
    lam = np.array([0.3, 1.3, 2.5, 6.0, 40.0])  # away from the blend joints
    h = 1e-6 * lam
    fd = (np.log(eval_density(spec, lam + h)) - np.log(eval_density(spec, lam - h))) / (2 * h)
    np.testing.assert_allclose(eval_log_derivative(spec, lam), fd, rtol=1e-6, atol=1e-8)


def test_splice_is_c1():
    for spec in (DensitySpec.power(1.0), DensitySpec.logpow(2.0), DensitySpec.explog(0.7)):
        r = validate(spec)
        assert r.ok and r.c1
        assert r.max_value_mismatch < 1e-9 and r.max_derivative_mismatch < 1e-9


def test_log_splice_needs_radius_above_two():
    with pytest.raises(SpecError):
        DensitySpec.logpow(1.0, splice_radius=1.5).impl


def test_log_density_object():
    ld = log_density(DensitySpec.power(0.5))
    assert ld.differentiable
    assert ld.value(9.0) == pytest.approx(math.log(3.0))


def test_rational_zero_reported():
    r = validate(DensitySpec.rational([0.0, 0.0, 1.0]))
    assert not r.positive
    assert any("vanishes" in f for f in r.failures)


def test_tabulated_without_tail():
    lam = np.linspace(0.0, 4.0, 41)
    spec = DensitySpec.tabulated(lam, 1.0 + lam ** 2 / (1 + lam ** 2))
    assert eval_density(spec, 2.0) == pytest.approx(1.8, rel=1e-4)
    with pytest.raises(TabulatedOutOfRange):
        eval_density(spec, 10.0)
    assert any("tail" in f for f in validate(spec).failures)


def test_tabulated_with_tail_and_derivative_column():
    lam = np.linspace(0.0, 4.0, 41)
    W = 1.0 + lam ** 2
    spec = DensitySpec.tabulated(lam, W, 2 * lam, tail=TailModel("power", 2.0))
    assert validate(spec).ok
    assert eval_density(spec, 8.0) == pytest.approx(17.0 * 4.0, rel=1e-12)
    assert eval_density(spec, 1.55) == pytest.approx(1 + 1.55 ** 2, rel=1e-4)


def test_tabulated_nonpositive_rejected():
    with pytest.raises((NonPositive, SpecError)):
        eval_density(DensitySpec.tabulated([0.0, 1.0, 2.0], [1.0, 0.0, 1.0]), 1.0)


def test_read_table_and_dict_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("lambda,W\n0,1\n1,2\n2,3\n")
    cols = read_table(p)
    assert len(cols) == 2 and list(cols[1]) == [1.0, 2.0, 3.0]
    d = {"family": "tabulated", "table": "t.csv", "tail": {"kind": "log", "alpha": 1.0}}
    spec = spec_from_dict(d, base=tmp_path)
    assert eval_density(spec, 1.0) == pytest.approx(2.0)
    back = spec_from_dict(spec_to_dict(spec))
    assert eval_density(back, 1.5) == pytest.approx(eval_density(spec, 1.5))


def test_unknown_keys_rejected():
    with pytest.raises(SpecError):
        spec_from_dict({"family": "white", "colour": "off"})


def test_steps_round_trip():
    d = {"family": "circle_direct", "steps": [[-1.0, 1.0, 0.5]]}
    spec = spec_from_dict(d)
    assert spec_to_dict(spec)["steps"] == [[-1.0, 1.0, 0.5]]
    assert spec.impl.phi(np.array([0.0, 2.0])).tolist() == [0.5, 0.0]

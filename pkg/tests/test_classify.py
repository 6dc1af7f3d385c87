import math

import numpy as np
import pytest

from offwhite import DensitySpec, TailModel, classify, verdict_cross_check
from offwhite.density import spec_from_dict
from offwhite.errors import ZeroDeclarationInvalid

LAMBDA_SQ = DensitySpec.rational([0.0, 0.0, 1.0])


def test_zero_declared_at_lambda_zero():
    v = classify(LAMBDA_SQ, [math.pi])
    assert v.outcome == "OffWhite" and v.m == 2
    assert v.evidence["remainder"]["numerator"] == [1.0]


def test_undeclared_zero_is_unsupported():
    assert classify(LAMBDA_SQ).outcome == "Unsupported"


@pytest.mark.parametrize("zeros", [[math.pi, 1.0], [0.0], [1.0]])
def test_invalid_declarations(zeros):
    with pytest.raises(ZeroDeclarationInvalid):
        classify(LAMBDA_SQ, zeros)


def test_declared_zero_where_density_is_positive():
    v = classify(DensitySpec.rational([1.0, 0.0, 1.0]), [math.pi])
    assert v.outcome == "NotOffWhite"


def test_positive_density_with_order_two_is_not_offwhite():
    v = classify(DensitySpec.power(1.0))
    assert v.m == 2 and v.outcome == "NotOffWhite"


def test_finite_measure_is_not_offwhite():
    v = classify(DensitySpec.rational([1.0], [1.0, 0.0, 1.0]))
    assert v.m == 0 and v.outcome == "NotOffWhite"


def test_tabulated_without_tail_is_inconclusive():
    lam = np.linspace(0.0, 4.0, 41)
    v = classify(DensitySpec.tabulated(lam, 1 + lam ** 2 / (1 + lam ** 2)))
    assert v.outcome == "Inconclusive"


def test_tabulated_with_log_tail():
    lam = np.linspace(0.0, 20.0, 201)
    W = np.log(np.e + lam ** 2)
    v = classify(DensitySpec.tabulated(lam, W, tail=TailModel("log", 1.0)))
    assert v.outcome == "OffWhite"


def test_order_one_rejects_zero_declarations():
    with pytest.raises(ZeroDeclarationInvalid):
        classify(DensitySpec.white(), [math.pi])


@pytest.mark.parametrize("d, outcome", [
    ({"family": "circle_direct", "phi": [0.0, 0.5]}, "OffWhite"),
    ({"family": "circle_direct", "steps": [[-1.5707963267948966, 1.5707963267948966, 0.6931471805599453]]},
     "NotOffWhite"),
    ({"family": "explog", "alpha": 0.3}, "OffWhite"),
    ({"family": "power", "alpha": 0.5}, "NotOffWhite"),
])
def test_cross_check_consistent(d, outcome):
    spec = spec_from_dict(d)
    v = classify(spec)
    assert v.outcome == outcome
    cc = verdict_cross_check(spec, v)
    assert cc.consistent, cc.note


def test_cross_check_skips_undecided():
    v = classify(LAMBDA_SQ)
    assert verdict_cross_check(LAMBDA_SQ, v).consistent is None

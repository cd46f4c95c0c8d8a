import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lipembed.errors import PreconditionError
from lipembed.lipschitz import SampledLipschitzFunction, lipschitz_constant, mcshane_extend


def test_constant_examples():
    assert lipschitz_constant(np.array([[0.0], [1.0], [3.0]]), [2.0, 2.0, 2.0]) == 0.0
    assert lipschitz_constant(np.array([[0.0], [2.0]]), [0.0, 2.0]) == 1.0
    # pair ratios 3, 4 and 1/sqrt(2): the maximum is 4
    oracle = max(3.0, 4.0, abs(3.0 - 4.0) / math.sqrt(2))
    assert lipschitz_constant(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), [0.0, 3.0, 4.0]) == oracle == 4.0


def test_constant_below_sampled_ratio_rejected():
    with pytest.raises(PreconditionError):
        SampledLipschitzFunction(np.array([[0.0], [1.0]]), [0.0, 2.0], constant=1.0)


def test_extend_examples():
    f = SampledLipschitzFunction(np.array([[0.0], [2.0]]), [0.0, 2.0], 1.0)
    assert mcshane_extend(f, [1.0]) == 1.0
    assert mcshane_extend(f, [2.0]) == 2.0
    g = SampledLipschitzFunction(np.array([[0.0, 0.0], [1.0, 0.0]]), [0.0, 3.0], 3.0)
    # upper = min(0 + 1.5, 3 + 1.5), lower = max(0 - 1.5, 3 - 1.5)
    assert mcshane_extend(g, [0.5, 0.0]) == pytest.approx(1.5, abs=1e-15)
    with pytest.raises(PreconditionError):
        mcshane_extend(g, [0.5])


def test_envelope_order_and_monotone_in_L():
    rng = np.random.default_rng(1)
    dom = rng.normal(size=(40, 3))
    vals = np.sin(dom).sum(axis=1)
    f = SampledLipschitzFunction(dom, vals)
    q = rng.normal(size=(500, 3)) * 3
    lo, hi = f.envelopes(q)
    assert np.all(lo <= hi + 1e-12)
    lo2, hi2 = SampledLipschitzFunction(dom, vals, 2 * f.constant).envelopes(q)
    assert np.all(hi2 >= hi) and np.all(lo2 <= lo)


def test_zero_dimensional_domain():
    f = SampledLipschitzFunction(np.zeros((1, 0)), [2.5])
    assert f(np.zeros((3, 0))).tolist() == [2.5, 2.5, 2.5]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4), st.integers(2, 30))
def test_extension_interpolates_and_is_lipschitz(seed, d, m):
    rng = np.random.default_rng(seed)
    dom = rng.uniform(-5, 5, size=(m, d))
    vals = rng.normal(size=m) * 3
    f = SampledLipschitzFunction(dom, vals)
    assert np.max(np.abs(f(dom) - vals)) <= 1e-12
    a, b = rng.uniform(-8, 8, size=(2, 200, d))
    diff = np.abs(f(a) - f(b))
    assert np.all(diff <= f.constant * np.linalg.norm(a - b, axis=1) * (1 + 1e-9) + 1e-12)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bingham_hgm import GVector, InputError, Layout, MultiplicityTheta, canonicalize, uniform_mass
from bingham_hgm.model import gauge_shift, log_uniform_mass

finite = st.floats(-50, 50, allow_nan=False)


def test_canonicalize_sorts_and_gauges():
    t = canonicalize([1.0, 3.0, 2.0])
    assert t.phi.tolist() == [0.0, -1.0, -2.0]
    assert t.d.tolist() == [1, 1, 1]
    assert t.shift == 3.0
    assert t.expand().tolist() == [1.0, 3.0, 2.0]


def test_canonicalize_detects_ties():
    t = canonicalize([0.0, -1.0, 0.0, -1.0, -3.0])
    assert t.d.tolist() == [2, 2, 1]
    assert t.phi.tolist() == [0.0, -1.0, -3.0]
    assert t.blocks.tolist() == [0, 1, 0, 1, 2]


def test_tie_tolerance_merges_to_mean():
    t = canonicalize([1.0, 1.0 + 1e-9, -2.0], tie_tol=1e-6)
    assert t.d.tolist() == [2, 1]
    assert t.levels[0] == pytest.approx(1.0 + 5e-10, abs=1e-15)
    assert canonicalize([1.0, 1.0 + 1e-9, -2.0]).d.tolist() == [1, 1, 1]


def test_values_equal_after_gauge_share_a_block():
    t = canonicalize([0.0, 1.0, 2.2250738585e-313])
    assert t.d.tolist() == [1, 2]
    assert np.all(np.diff(t.phi) < 0)


def test_all_equal_is_single_block():
    t = canonicalize([2.5, 2.5, 2.5])
    assert t.q == 1 and t.p == 3 and t.phi.tolist() == [0.0] and t.shift == 2.5


@pytest.mark.parametrize("bad", [[1.0], [], [0.0, np.nan], [0.0, np.inf]])
def test_canonicalize_rejects(bad):
    with pytest.raises(InputError):
        canonicalize(bad)


def test_negative_tie_tol_rejected():
    with pytest.raises(InputError):
        canonicalize([0.0, 1.0], tie_tol=-1.0)


@given(st.lists(finite, min_size=2, max_size=8))
def test_expand_roundtrip_bit_exact(theta):
    t = canonicalize(theta)
    if t.q == np.unique(theta).size:
        assert np.array_equal(t.expand(), np.asarray(theta, dtype=float))
    else:  # distinct inputs that coincide after the gauge shift
        assert np.allclose(t.expand(), theta, rtol=0, atol=4e-16 * max(1.0, np.abs(theta).max()))
    assert t.phi[0] == 0.0
    assert np.all(np.diff(t.phi) < 0)
    assert t.d.sum() == len(theta)


@given(st.lists(finite, min_size=2, max_size=8), st.floats(-20, 20))
def test_shift_invariance_of_pattern(theta, c):
    a = canonicalize(theta)
    b = canonicalize(np.asarray(theta) + c)
    if a.q == b.q:  # rounding can split or merge near-ties
        assert np.array_equal(a.d, b.d)


def test_from_blocks_and_with_phi():
    t = MultiplicityTheta.from_blocks([2.0, 1.0, -1.0], [1, 3, 2])
    assert t.p == 6 and t.q == 3 and t.shift == 2.0
    assert t.phi.tolist() == [0.0, -1.0, -3.0]
    assert t.l1 == 4.0
    u = t.with_phi([0.0, -2.0, -5.0])
    assert u.same_pattern(t) and u.shift == 0.0


def test_multiplicity_theta_validation():
    with pytest.raises(InputError):
        MultiplicityTheta.from_blocks([0.0, 1.0])
    with pytest.raises(InputError):
        MultiplicityTheta.from_blocks([0.0, -1.0], [1, 0])


def test_uniform_mass():
    assert uniform_mass(2).value == pytest.approx(2 * math.pi, rel=1e-15)
    assert uniform_mass(3).value == pytest.approx(4 * math.pi, rel=1e-15)
    assert uniform_mass(4).value == pytest.approx(2 * math.pi ** 2, rel=1e-15)
    assert log_uniform_mass(100) == pytest.approx(
        math.log(2) + 50 * math.log(math.pi) - math.lgamma(50), rel=1e-15)


def test_gauge_shift():
    assert gauge_shift(1.5, 2.0) == 3.5


def test_gvector_layout_conversions():
    full = GVector.full([0.5, 0.3, 0.2])
    assert full.layout is Layout.FULL
    assert full.log_c == pytest.approx(0.0, abs=1e-16)
    red = full.to_reduced()
    assert red.values.tolist() == pytest.approx([1.0, 0.5, 0.3])
    back = red.to_full()
    assert back.values.tolist() == pytest.approx([0.5, 0.3, 0.2])
    lg = GVector.full([2.0, 6.0]).to_log()
    assert lg.values.tolist() == pytest.approx([0.25, 0.75])
    assert lg.log_c == pytest.approx(math.log(8.0))
    assert lg.to_full().values.tolist() == pytest.approx([2.0, 6.0])


def test_gvector_values_are_read_only():
    g = GVector.full([1.0, 2.0])
    with pytest.raises(ValueError):
        g.values[0] = 3.0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horocount.partitions import (
    Cone,
    block_split,
    cone_contains,
    lambda_I,
    make_partition,
    p_norm,
    p_norm_squared,
    rho_density,
    v0,
)


def test_make_partition_examples():
    p = make_partition(3, [1, 1, 1])
    assert p.blocks == ((0,), (1,), (2,))
    p = make_partition(3, [2, 1])
    assert p.blocks == ((0, 1), (2,))
    with pytest.raises(ValueError):
        make_partition(3, [3])
    with pytest.raises(ValueError):
        make_partition(3, [2, 2])
    with pytest.raises(ValueError):
        make_partition(3, [])


def test_partition_json_roundtrip():
    p = make_partition(3, [2, 1])
    assert p.to_json() == "[2, 1]"
    from horocount.partitions import Partition

    assert Partition.from_json("[2, 1]") == p


def test_lambda_examples():
    assert lambda_I([2.0, 3.0, 1.0 / 6.0], [0, 1]) == pytest.approx(6.0)
    assert lambda_I([2.0, 3.0, 1.0 / 6.0], []) == 1.0
    diag = [math.e, math.e, math.e ** -2]
    assert lambda_I(diag, [0, 1, 2]) == pytest.approx(1.0)
    with pytest.raises(IndexError):
        lambda_I([1.0, 2.0], [5])


def test_lambda_log_variant():
    y = np.array([0.3, -0.1, -0.2])
    assert lambda_I(y, [0, 1], log=True) == pytest.approx(math.exp(0.2))


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4),
       st.sets(st.integers(0, 3)), st.sets(st.integers(0, 3)))
def test_lambda_multiplicative_on_disjoint(entries, i_set, j_set):
    i_set, j_set = set(i_set), set(j_set) - set(i_set)
    diag = np.exp(np.array(entries))
    combined = lambda_I(diag, sorted(i_set | j_set))
    assert combined == pytest.approx(lambda_I(diag, sorted(i_set)) * lambda_I(diag, sorted(j_set)), rel=1e-12)


def test_rho_density_examples(p2, p21):
    s = 0.7
    assert rho_density(p2, np.zeros(2), np.array([s, -s])) == pytest.approx(math.exp(2 * s))
    t = 0.4
    val = rho_density(p21, np.array([t, -t, 0.0]), np.zeros(3))
    assert val == pytest.approx((math.exp(2 * t) - math.exp(-2 * t)) / 2)
    # chamber wall: sinh factor vanishes
    assert rho_density(p21, np.zeros(3), np.array([0.1, 0.1, -0.2])) == 0.0
    with pytest.raises(ValueError):
        rho_density(p21, np.array([-0.5, 0.5, 0.0]), np.zeros(3))


def test_v0_and_norm():
    assert np.array_equal(v0(3), [2.0, 0.0, -2.0])
    assert p_norm_squared(3) == 8
    assert np.array_equal(v0(2), [1.0, -1.0])
    assert p_norm_squared(2) == 2
    assert p_norm_squared(4) == 20
    assert p_norm(3) == pytest.approx(math.sqrt(8.0))
    with pytest.raises(ValueError):
        v0(1)


def test_p_norm_identity_exact_to_50():
    # oracle: direct evaluation of the defining sum
    for n in range(1, 51):
        direct = sum((n - 2 * i + 1) ** 2 for i in range(1, n + 1))
        assert p_norm_squared(n) == direct


def test_cone_examples(p2, p3, p21):
    assert cone_contains(Cone(p3, 0.0), np.array([2.0, 0.0, -2.0]))
    assert not cone_contains(Cone(p21, 0.0), np.array([0.0, 1.0, -1.0]))
    assert cone_contains(Cone(p2, -5.0), np.array([-2.0, 2.0]))
    with pytest.raises(ValueError):
        cone_contains(Cone(p2, 0.0), np.array([1.0, 0.0, -1.0]))


@settings(max_examples=200)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.floats(-2, 0), st.floats(0, 2))
def test_cone_nesting(entries, c_low, c_gap):
    # C >= C' implies C_C inside C_C'
    part = make_partition(3, [2, 1])
    y = np.array(entries)
    y -= y.mean()
    c_high = c_low + c_gap
    if cone_contains(Cone(part, c_high), y):
        assert cone_contains(Cone(part, c_low), y)


def test_v0_in_positive_cone():
    for n in range(2, 8):
        part = make_partition(n, [1] * n)
        assert cone_contains(Cone(part, 0.0), v0(n))
    part = make_partition(4, [2, 2])
    assert cone_contains(Cone(part, 0.0), v0(4))


def test_block_split_roundtrip(p21, rng):
    for _ in range(50):
        y = rng.normal(size=3)
        y -= y.mean()
        split = block_split(p21, y)
        assert np.allclose(split.join(), y, atol=1e-12)
        assert abs(split.aM @ split.aZ) < 1e-12
        assert abs(split.aM.sum()) < 1e-12
        # aM has zero block sums, aZ constant per block
        assert abs(split.aM[0] + split.aM[1]) < 1e-12
        assert split.aZ[0] == pytest.approx(split.aZ[1])


def test_traceless_preserved_by_split(p3, rng):
    y = rng.normal(size=3)
    y -= y.mean()
    split = block_split(p3, y)
    assert abs(split.join().sum()) < 1e-12

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmmd.errors import InputError
from gmmd.estimators import GroupedSample, allocate_sizes, naive_gmmd, proportions, weighted_gmmd
from gmmd.kernels import KernelSpec, gram_block
from gmmd.weights import WeightScheme, weight

from conftest import UnitWeights, naive_loop, random_groups, weighted_loop

GAUSS = KernelSpec("gaussian", 1.0)


def _sample(sizes):
    return GroupedSample([np.zeros((k, 1)) for k in sizes])


@pytest.mark.parametrize(
    "sizes,expected",
    [((3, 3, 4), (0.3, 0.3, 0.4)), ((1, 1), (0.5, 0.5)), ((999, 1), (0.999, 0.001))],
)
def test_proportions(sizes, expected):
    pi = proportions(_sample(sizes))
    np.testing.assert_allclose(pi, expected, rtol=0, atol=1e-15)
    assert abs(math.fsum(pi) - 1.0) <= 1e-12


def test_allocate_sizes():
    assert allocate_sizes(10, (0.3, 0.3, 0.4)) == (3, 3, 4)
    assert allocate_sizes(7, (0.5, 0.5)) == (3, 4)
    assert allocate_sizes(2, (0.9, 0.1)) == (1, 1)
    assert sum(allocate_sizes(1501, (0.2, 0.3, 0.5))) == 1501


def test_allocate_sizes_errors():
    with pytest.raises(InputError, match="group 1"):
        allocate_sizes(2, (0.1, 0.1, 0.8))
    with pytest.raises(InputError):
        allocate_sizes(10, (0.5, 0.6))
    with pytest.raises(InputError):
        allocate_sizes(10, (1.0, 0.0))


def test_grouped_sample_validation():
    with pytest.raises(InputError):
        GroupedSample([[[0.0]]])
    with pytest.raises(InputError):
        GroupedSample([[[0.0]], np.zeros((0, 1))])
    with pytest.raises(InputError):
        GroupedSample([[[0.0]], [[0.0, 1.0]]])
    with pytest.raises(InputError):
        GroupedSample([[[0.0]], [[np.inf]]])
    s = GroupedSample([[[0.0], [1.0]], [[2.0]]])
    assert (s.s, s.d, s.n, s.sizes) == (2, 1, 3, (2, 1))


def test_singleton_groups_hand_values():
    s = GroupedSample([[[0.0]], [[2.0]]])
    assert naive_gmmd(s, GAUSS).statistic == pytest.approx(2 * (1 - math.exp(-2)), abs=1e-15)
    assert naive_gmmd(s, GAUSS).statistic == pytest.approx(1.7293295, abs=1e-7)
    w = weighted_gmmd(s, GAUSS, WeightScheme(0.5))
    assert w.statistic == pytest.approx(2 - math.exp(-2), abs=1e-15)
    assert w.statistic == pytest.approx(1.8646647, abs=1e-7)
    assert w.gamma == 0.5 and w.n == 2


def test_identical_points_give_zero():
    s = GroupedSample([np.ones((3, 2)), np.ones((2, 2)), np.ones((4, 2))])
    assert naive_gmmd(s, GAUSS).statistic == 0.0


@pytest.mark.parametrize("family", ["gaussian", "laplacian"])
def test_naive_matches_loop(family, rng):
    for _ in range(10):
        groups = random_groups(rng, 3, 6, 2)
        h = float(rng.uniform(0.5, 2.0))
        got = naive_gmmd(GroupedSample(groups), KernelSpec(family, h)).statistic
        assert got == pytest.approx(naive_loop(groups, family, h), abs=1e-12)


@pytest.mark.parametrize("family", ["gaussian", "laplacian"])
def test_weighted_matches_loop(family, rng):
    scheme = WeightScheme(0.7)
    for _ in range(10):
        groups = random_groups(rng, 3, 6, 2)
        got = weighted_gmmd(GroupedSample(groups), KernelSpec(family, 1.3), scheme).statistic
        want = weighted_loop(groups, family, 1.3, lambda i, r: weight(scheme, i, r))
        assert got == pytest.approx(want, abs=1e-12)


def test_unit_weights_collapse(rng):
    for _ in range(20):
        sample = GroupedSample(random_groups(rng, int(rng.integers(2, 5)), 7, 2))
        assert weighted_gmmd(sample, GAUSS, UnitWeights()).statistic == pytest.approx(
            naive_gmmd(sample, GAUSS).statistic, abs=1e-12
        )


def _biased_mmd_sq(x, y, spec):
    return gram_block(spec, x, x).mean() + gram_block(spec, y, y).mean() - 2.0 * gram_block(spec, x, y).mean()


def test_two_sample_reduction(rng):
    for _ in range(10):
        x = rng.normal(size=(6, 2))
        y = rng.normal(loc=0.5, size=(6, 2))
        got = naive_gmmd(GroupedSample([x, y]), GAUSS).statistic
        assert got == pytest.approx(_biased_mmd_sq(x, y, GAUSS), abs=1e-12)


def test_group_permutation_equal_sizes(rng):
    groups = [rng.normal(size=(5, 2)) for _ in range(4)]
    base = naive_gmmd(GroupedSample(groups), GAUSS).statistic
    for perm in ([1, 0, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]):
        assert naive_gmmd(GroupedSample([groups[p] for p in perm]), GAUSS).statistic == pytest.approx(base, abs=1e-12)


def test_within_group_order(rng):
    groups = random_groups(rng, 3, 6, 2, min_size=3)
    scheme = WeightScheme(1.0)
    naive = naive_gmmd(GroupedSample(groups), GAUSS).statistic
    weighted = weighted_gmmd(GroupedSample(groups), GAUSS, scheme).statistic
    changed = False
    for _ in range(10):
        permuted = [g[rng.permutation(len(g))] for g in groups]
        assert naive_gmmd(GroupedSample(permuted), GAUSS).statistic == pytest.approx(naive, abs=1e-12)
        changed |= abs(weighted_gmmd(GroupedSample(permuted), GAUSS, scheme).statistic - weighted) > 1e-9
    assert changed


@pytest.mark.parametrize("c", [0.01, 0.5, 3.0, 100.0])
def test_gaussian_scale_invariance(c, rng):
    groups = random_groups(rng, 3, 6, 2)
    scheme = WeightScheme(0.6)
    spec = KernelSpec("gaussian", 0.8)
    scaled = KernelSpec("gaussian", 0.8 * c)
    a = GroupedSample(groups)
    b = GroupedSample([g * c for g in groups])
    assert naive_gmmd(b, scaled).statistic == pytest.approx(naive_gmmd(a, spec).statistic, abs=1e-12)
    assert weighted_gmmd(b, scaled, scheme).statistic == pytest.approx(
        weighted_gmmd(a, spec, scheme).statistic, abs=1e-12
    )


def test_weighted_can_be_negative():
    # identical groups, with the doubly weighted (even) positions clustered:
    # self terms 2 * 6/16, cross 2 * 8/16, so each ordered pair gives -1/4
    x = np.array([[10.0], [0.0], [20.0], [0.0]])
    w = weighted_gmmd(GroupedSample([x, x]), KernelSpec("gaussian", 0.1), WeightScheme(1.0)).statistic
    assert w == pytest.approx(-0.25, abs=1e-12)


def test_thread_count_is_bit_identical(rng):
    sample = GroupedSample(random_groups(rng, 4, 30, 3))
    scheme = WeightScheme(0.5)
    assert naive_gmmd(sample, GAUSS, threads=1) == naive_gmmd(sample, GAUSS, threads=8)
    assert weighted_gmmd(sample, GAUSS, scheme, threads=1) == weighted_gmmd(sample, GAUSS, scheme, threads=8)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.integers(2, 4), family=st.sampled_from(["gaussian", "laplacian"]))
def test_naive_nonnegative(seed, s, family):
    r = np.random.default_rng(seed)
    groups = random_groups(r, s, 5, 2)
    assert naive_gmmd(GroupedSample(groups), KernelSpec(family, 1.0)).statistic >= 0.0

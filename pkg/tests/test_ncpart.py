import numpy as np
import pytest
from hypothesis import given, strategies as st

from amalgam import _kernels_py, ncpart
from amalgam.errors import ValidationError
from amalgam.ncpart import (NCPartition, catalan, enumerate_nc, enumerate_nc_recursive, kreweras,
                            moebius, moebius_nc, moebius_to_top, nc_labels)

import oracles


@pytest.mark.parametrize("n", range(1, 9))
def test_enumeration_matches_brute_force(n):
    got = {p.blocks for p in enumerate_nc(n)}
    assert got == {oracles.canon(p) for p in oracles.brute_nc(n)}
    assert len(got) == len(enumerate_nc(n)) == catalan(n)


@pytest.mark.parametrize("n", range(1, 8))
def test_recursive_enumeration_agrees(n):
    assert {p.blocks for p in enumerate_nc_recursive(n)} == {p.blocks for p in enumerate_nc(n)}


@pytest.mark.parametrize("n", range(1, 6))
def test_crossing_predicate_exhaustive(n):
    for part in oracles.set_partitions(n):
        assert ncpart.is_noncrossing(part) == (not oracles.crosses(part))


def test_crossing_partition_rejected():
    with pytest.raises(ValidationError):
        NCPartition(4, [(0, 2), (1, 3)])
    with pytest.raises(ValidationError):
        NCPartition(3, [(0, 1)])


@pytest.mark.parametrize("n", range(1, 7))
def test_moebius_against_poset_recursion(n):
    mu = oracles.poset_moebius(n)
    parts = {p.blocks: p for p in enumerate_nc(n)}
    top = oracles.canon([list(range(n))])
    bottom = oracles.canon([[i] for i in range(n)])
    assert moebius_nc(n) == mu[bottom, top] == (-1) ** (n - 1) * catalan(n - 1)
    for (p, q), val in mu.items():
        assert moebius(parts[p], parts[q]) == val


@pytest.mark.parametrize("n", range(1, 8))
def test_moebius_to_top_sums_to_zero(n):
    total = sum(moebius_to_top(p) for p in enumerate_nc(n))
    assert total == (1 if n == 1 else 0)


def test_moebius_zero_off_the_order():
    a = NCPartition(3, [(0, 1), (2,)])
    b = NCPartition(3, [(0,), (1, 2)])
    assert moebius(a, b) == 0


@given(st.integers(1, 9), st.data())
def test_kreweras_is_order_reversing_and_sizes_add(n, data):
    parts = enumerate_nc(n)
    p = parts[data.draw(st.integers(0, len(parts) - 1))]
    k = kreweras(p)
    assert len(p.blocks) + len(k.blocks) == n + 1
    # K^2 is rotation by one step
    kk = kreweras(k)
    rot = NCPartition(n, [tuple((i + 1) % n for i in b) for b in p.blocks])
    assert kk.blocks == rot.blocks or kk.blocks == NCPartition(n, [tuple((i - 1) % n for i in b) for b in p.blocks]).blocks


@given(st.integers(2, 8), st.data())
def test_nesting_forest_is_consistent(n, data):
    parts = enumerate_nc(n)
    p = parts[data.draw(st.integers(0, len(parts) - 1))]
    f = p.forest
    for k, par in enumerate(f.parent):
        if par is None:
            assert k in f.roots
            continue
        b, c = p.blocks[k], p.blocks[par]
        g = [gap for gap, ch in enumerate(f.children[par]) if k in ch][0]
        assert c[g] < b[0] and b[-1] < c[g + 1]


def test_labels_are_canonical_and_sorted():
    lab = nc_labels(6)
    assert lab.shape == (catalan(6), 6)
    assert all(row[0] == 0 for row in lab)
    assert [tuple(r) for r in lab] == sorted(tuple(r) for r in lab)


@pytest.mark.parametrize("n", range(1, 10))
def test_compiled_and_python_kernels_agree(n):
    a = {tuple(r) for r in np.asarray(ncpart.kernels.nc_labels(n))}
    b = {tuple(r) for r in np.asarray(_kernels_py.nc_labels(n))}
    assert a == b
    lab = np.asarray(_kernels_py.nc_labels(n), dtype=np.int64)
    assert np.array_equal(np.asarray(ncpart.kernels.noncrossing_mask(lab)), _kernels_py.noncrossing_mask(lab))
    colors = np.arange(n) % 2
    assert np.array_equal(np.asarray(ncpart.kernels.monochrome_mask(lab, colors)),
                          _kernels_py.monochrome_mask(lab, colors))


def test_monochrome_indices_match_definition():
    colors = [0, 1, 0, 0, 1]
    idx = set(ncpart.monochrome_indices(colors))
    for i, p in enumerate(enumerate_nc(5)):
        mono = all(len({colors[j] for j in b}) == 1 for b in p.blocks)
        assert (i in idx) == mono


def test_size_cap():
    with pytest.raises(ValidationError):
        nc_labels(ncpart.MAX_N + 1)
    with pytest.raises(ValidationError):
        nc_labels(0)


def test_string_form_is_one_based():
    assert str(NCPartition(3, [(0, 2), (1,)])) == "{{1,3}, {2}}"

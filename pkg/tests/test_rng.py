import collections

import numpy as np
import pytest
from scipy import stats

from upsu.rng import Csprng


def test_seeded_streams_are_reproducible():
    assert Csprng(7).bytes(100) == Csprng(7).bytes(100)
    assert Csprng(7).bytes(100) != Csprng(8).bytes(100)
    assert Csprng(b"k").spawn("a").bytes(16) == Csprng(b"k").spawn("a").bytes(16)
    assert Csprng(b"k").spawn("a").bytes(16) != Csprng(b"k").spawn("b").bytes(16)


def test_unseeded_streams_differ():
    assert Csprng().bytes(32) != Csprng().bytes(32)


def test_randbelow_range_and_errors():
    r = Csprng(1)
    vals = [r.randbelow(10) for _ in range(2000)]
    assert set(vals) == set(range(10))
    with pytest.raises(ValueError):
        r.randbelow(0)
    assert all(3 <= r.randrange(3, 5) < 5 for _ in range(100))


def test_field_elements_uniform_small_prime():
    v = Csprng(2).field_elements(97, 97 * 200)
    assert int(v.max()) < 97
    counts = np.bincount(v.astype(np.int64), minlength=97)
    assert stats.chisquare(counts).pvalue > 1e-4


def test_permutation_position_chi_square():
    # each of the 8 elements should land in each of the 8 positions equally often
    m, draws = 8, 10_000
    r = Csprng("perm")
    table = np.zeros((m, m), dtype=np.int64)
    whole = collections.Counter()
    for _ in range(draws):
        perm = r.permutation(m)
        assert sorted(perm) == list(range(m))
        for i, j in enumerate(perm):
            table[i, j] += 1
        whole[perm[0]] += 1
    for row in table:
        assert stats.chisquare(row).pvalue > 1e-4
    assert stats.chisquare([whole[j] for j in range(m)]).pvalue > 1e-4


def test_permutation_of_one_is_identity():
    assert Csprng(0).permutation(1) == [0]

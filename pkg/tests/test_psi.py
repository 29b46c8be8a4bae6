import pytest
from hypothesis import given
from hypothesis import strategies as st

from upsu.errors import Inconsistent, OutOfRange
from upsu.field import DEFAULT_PRIME
from upsu.he import NotPresent, psi_map, psi_unmap, recover_y

Q = 97
N = 10007 * 10009  # any N with q^2 < N


def test_psi_zero_and_lift():
    assert psi_map(0, Q) == 0
    assert psi_map(96, Q) == 96
    with pytest.raises(OutOfRange):
        psi_unmap(Q, Q)
    with pytest.raises(OutOfRange):
        psi_map(-1, Q)


@given(st.integers(0, DEFAULT_PRIME - 1))
def test_psi_roundtrip(x):
    assert psi_unmap(psi_map(x, DEFAULT_PRIME), DEFAULT_PRIME) == x


def _transcript(a, b, y, n=N):
    e = (a - b) % n
    return e, y * e % n, y * (n - e) % n


def test_recover_examples():
    assert recover_y(*_transcript(7, 7, 5), N, Q) is NotPresent
    e, eta, nu = _transcript(7, 3, 5)
    assert (e, eta) == (4, 20)
    assert recover_y(e, eta, nu, N, Q) == 5
    e, eta, nu = _transcript(3, 7, 5)
    assert e == N - 4 and nu == 20
    assert recover_y(e, eta, nu, N, Q) == 5


def test_recover_rejects_malformed():
    with pytest.raises(Inconsistent):
        recover_y(4, 21, 0, N, Q)
    with pytest.raises(Inconsistent):
        recover_y(Q + 5, 0, 0, N, Q)
    with pytest.raises(Inconsistent):
        recover_y(1, Q, 0, N, Q)


def test_exhaustive_small_field():
    branches = set()
    for a in range(Q):
        for b in range(Q):
            e0 = (a - b) % N
            for y in range(Q):
                got = recover_y(*_transcript(a, b, y), N, Q)
                if a == b:
                    assert got is NotPresent
                else:
                    assert got == y
                    branches.add(e0 < Q)
    assert branches == {True, False}

import itertools

from hypothesis import given, settings, strategies as st

from modelforge.seqcodes import (
    FactoredSeq,
    decode_seq,
    el,
    encode_seq,
    nth_prime,
    subst,
)


def test_nth_prime_goldens():
    assert nth_prime(0) == 2
    assert nth_prime(1) == 3
    assert nth_prime(2) == 5
    assert nth_prime(10) == 31


def test_nth_prime_against_sieve():
    limit = 10_000
    sieve = [True] * limit
    sieve[0] = sieve[1] = False
    for i in range(2, limit):
        if sieve[i]:
            for j in range(i * i, limit, i):
                sieve[j] = False
    primes = [i for i in range(limit) if sieve[i]]
    for k, p in enumerate(primes[:500]):
        assert nth_prime(k) == p


def test_el_goldens():
    for k in range(11):
        assert el(0, k) == 0
    assert 2**7 * 3**5 - 1 == 31103
    assert el(31103, 0) == 7
    assert el(31103, 1) == 5
    assert el(5, 0) == 1 and el(5, 1) == 1


def test_subst_goldens():
    assert subst(0, 3, 1) == 26
    # Brute-force minimality: no smaller t has the required profile.
    for t in range(26):
        assert not (el(t, 1) == 3 and el(t, 0) == 0 and el(t, 2) == 0)
    for s in range(0, 500, 7):
        for k in range(5):
            assert subst(s, el(s, k), k) == s


@settings(max_examples=200, derandomize=True)
@given(st.integers(0, 10_000), st.integers(0, 6), st.integers(0, 4))
def test_subst_defining_clause(s, a, k):
    t = subst(s, a, k)
    assert el(t, k) == a
    for i in range(6):
        if i != k:
            assert el(t, i) == el(s, i)


@settings(max_examples=150, derandomize=True)
@given(
    st.integers(0, 2_000),
    st.integers(0, 5),
    st.integers(0, 3),
    st.integers(0, 5),
    st.integers(0, 3),
)
def test_subst_commutes(s, a, k, b, j):
    if k != j:
        assert subst(subst(s, a, k), b, j) == subst(subst(s, b, j), a, k)


def test_encode_decode():
    assert encode_seq([]) == 0
    assert encode_seq([7, 5]) == 31103
    assert decode_seq(26, 3) == [0, 3, 0]


def test_round_trip_all_short_lists():
    for length in range(0, 4):
        for values in itertools.product(range(6), repeat=length):
            s = encode_seq(values)
            assert decode_seq(s, length) == list(values)


def test_injectivity_on_short_lists():
    seen = {}
    for length in range(0, 4):
        for values in itertools.product(range(4), repeat=length):
            # Normalize: trailing zeros do not change the coded sequence.
            trimmed = list(values)
            while trimmed and trimmed[-1] == 0:
                trimmed.pop()
            s = encode_seq(values)
            if tuple(trimmed) in seen:
                assert seen[tuple(trimmed)] == s
            else:
                seen[tuple(trimmed)] = s
    codes = list(seen.values())
    assert len(set(codes)) == len(codes)


def test_extensionality_small_window():
    # Enough indices to cover every prime that can divide s + 1 below the cap.
    bound = 0
    while nth_prime(bound) <= 300:
        bound += 1
    for s1 in range(300):
        for s2 in range(s1 + 1, 300):
            assert any(el(s1, k) != el(s2, k) for k in range(bound))


def test_reconstruction():
    for s in range(2_000):
        n = 1
        k = 0
        while n < s + 1:
            e = el(s, k)
            n *= nth_prime(k) ** e
            k += 1
            if nth_prime(k) > s + 1:
                break
        prod = 1
        for i in range(k + 1):
            prod *= nth_prime(i) ** el(s, i)
        assert prod == s + 1


def test_factored_seq_matches_flat():
    for s in [0, 1, 5, 26, 31103, 12345]:
        f = FactoredSeq.of(s)
        assert f.value() == s
        for k in range(8):
            assert f.el(k) == el(s, k)
        assert f.subst(9, 3).value() == subst(s, 9, 3)
    assert FactoredSeq.of(31103) == 31103

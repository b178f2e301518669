import itertools

import pytest
from hypothesis import given, settings, strategies as st

import modelforge.codes as codes
from modelforge.codes import (
    NumCode,
    PairCode,
    code_eq,
    code_value,
    decode_formula,
    decode_term,
    diag,
    fS,
    fand,
    feq,
    fexists,
    fnot,
    fplus,
    ftimes,
    fvar,
    gn_formula,
    gn_term,
    is_formula_code,
    is_term_code,
    num,
    pair,
    unpair,
)
from modelforge.syntax import (
    Add,
    And,
    BOT,
    Eq,
    Exists,
    Mul,
    Not,
    Succ,
    Var,
    ZERO,
    numeral_term,
    parse_formula,
)


def test_pair_golden():
    assert pair(0, 0) == 0
    assert pair(2, 3) == 18
    assert unpair(18) == (2, 3)


@settings(max_examples=300, derandomize=True)
@given(st.integers(0, 2**64), st.integers(0, 2**64))
def test_pair_unpair_inverse(a, b):
    assert unpair(pair(a, b)) == (a, b)


@settings(max_examples=300, derandomize=True)
@given(st.integers(0, 2**64), st.integers(0, 2**64))
def test_pair_strictly_increasing(a, b):
    assert pair(a + 1, b) > pair(a, b)
    assert pair(a, b + 1) > pair(a, b)


def test_constructor_monotonicity_near_ties():
    ctors1 = [fS, fnot, fvar]
    for f in ctors1:
        for a in [0, 1, 2, 3, 2**32 - 1, 2**32, 2**32 + 1]:
            assert f(a + 1) > f(a)
    ctors2 = [fplus, ftimes, fand, feq, fexists]
    for f in ctors2:
        for a, b in [(0, 0), (1, 0), (0, 1), (5, 5), (2**20, 2**20 - 1)]:
            assert f(a + 1, b) > f(a, b)
            assert f(a, b + 1) > f(a, b)


def test_gn_term_goldens():
    assert gn_term(Var(0)) == 0
    assert gn_term(ZERO) == 1
    assert gn_term(Succ(ZERO)) == 7


def test_num_goldens_and_recursion():
    assert num(0) == 1
    assert num(1) == 7
    prev = num(0)
    for n in range(20):
        nxt = num(n + 1)
        assert code_eq(nxt, fS(prev))
        prev = nxt


def test_constructor_functions_track_syntax():
    t1, t2 = Succ(ZERO), Add(Var(1), ZERO)
    assert code_eq(gn_term(Succ(t1)), fS(gn_term(t1)))
    assert code_eq(gn_term(Add(t1, t2)), fplus(gn_term(t1), gn_term(t2)))
    assert code_eq(gn_term(Mul(t1, t2)), ftimes(gn_term(t1), gn_term(t2)))
    f1 = Eq(t1, t2)
    assert code_eq(gn_formula(f1), feq(gn_term(t1), gn_term(t2)))
    assert code_eq(gn_formula(Not(f1)), fnot(gn_formula(f1)))
    assert code_eq(gn_formula(And(f1, f1)), fand(gn_formula(f1), gn_formula(f1)))
    assert code_eq(gn_formula(Exists(3, f1)), fexists(3, gn_formula(f1)))


def _terms_upto(depth, indices=(0, 1)):
    if depth == 0:
        return []
    leaves = [ZERO] + [Var(i) for i in indices]
    if depth == 1:
        return leaves
    smaller = _terms_upto(depth - 1, indices)
    out = list(smaller)
    for t in smaller:
        out.append(Succ(t))
    for a in smaller:
        for b in smaller:
            out.append(Add(a, b))
            out.append(Mul(a, b))
    return out


def _formulas_upto(depth, indices=(0, 1)):
    terms = _terms_upto(depth - 1, indices) if depth > 1 else []
    if depth == 0:
        return []
    out = [BOT]
    for a in terms:
        for b in terms:
            out.append(Eq(a, b))
    if depth > 1:
        smaller = _formulas_upto(depth - 1, indices)
        out.extend(smaller)
        for f in smaller:
            out.append(Not(f))
            for i in indices:
                out.append(Exists(i, f))
        for a in smaller:
            for b in smaller:
                out.append(And(a, b))
    return out


def test_injectivity_depth3():
    terms = set(_terms_upto(3))
    codes_seen = {}
    for t in terms:
        c = gn_term(t)
        assert c not in codes_seen, f"collision {t} vs {codes_seen[c]}"
        codes_seen[c] = t
    formulas = set(_formulas_upto(3))
    fcodes = {}
    for f in formulas:
        c = gn_formula(f)
        assert c not in fcodes
        fcodes[c] = f
    # Tag disjointness between the two kinds.
    assert not set(codes_seen) & set(fcodes)


def test_recognizer_soundness_small_range():
    for n in range(3000):
        t = decode_term(n)
        f = decode_formula(n)
        assert is_term_code(n) == (t is not None)
        assert is_formula_code(n) == (f is not None)
        if t is not None:
            assert code_eq(gn_term(t), n)
            assert f is None
        if f is not None:
            assert code_eq(gn_formula(f), n)


def test_recognizers_on_tree_images():
    for t in _terms_upto(3):
        assert is_term_code(gn_term(t))
        assert not is_formula_code(gn_term(t))
    for f in _formulas_upto(2):
        assert is_formula_code(gn_formula(f))
        assert not is_term_code(gn_formula(f))


def test_formula_code_recognizer_example():
    assert is_term_code(1)
    assert not is_term_code(gn_formula(parse_formula("0 = 0")))


def test_round_trip_decode():
    for f in _formulas_upto(3):
        assert decode_formula(gn_formula(f)) == f


def test_diag_no_free_variable_is_identity():
    c = gn_formula(parse_formula("0 = 0"))
    assert c == 49
    assert diag(c) == c


def test_diag_substitutes_numeral():
    c = gn_formula(parse_formula("x0 = 0"))
    assert c == 30
    d = diag(c)
    back = decode_formula(d)
    assert back == Eq(numeral_term(30), ZERO)
    assert code_eq(d, gn_formula(Eq(numeral_term(30), ZERO)))


def test_diag_rejects_bad_inputs():
    with pytest.raises(codes.NonCodeError):
        diag(2)  # a term code, not a formula code
    with pytest.raises(ValueError):
        diag(gn_formula(parse_formula("x1 = 0")))


def test_lazy_num_equality_rules():
    limit = codes.NUM_CHAIN_LIMIT
    n1 = num(limit + 10)
    n2 = num(limit + 10)
    assert n1 == n2
    assert n1 != num(limit + 11)
    # Chains of fS over a lazy numeral line up with taller numerals.
    assert code_eq(fS(fS(num(limit + 8))), num(limit + 10))
    assert not code_eq(fS(num(limit + 8)), num(limit + 10))


def test_lazy_pair_vs_int():
    p = PairCode(2, 1)  # value pair(2,1) = 7, lazy only because built directly
    assert p == 7
    assert p != 8
    assert code_eq(p, fS(1))
    assert fS(1) == 7


def test_lowered_thresholds_cross_check(monkeypatch):
    # Force laziness at tiny sizes and compare structural equality with the
    # exact integer semantics.
    monkeypatch.setattr(codes, "PAIR_MATERIALIZE_BITS", 6)
    monkeypatch.setattr(codes, "NUM_CHAIN_LIMIT", 2)
    terms = _terms_upto(3)
    vals = {}
    for t in terms:
        c = gn_term(t)
        v = code_value(c)
        vals.setdefault(v, []).append((t, c))
    # Structural equality must agree exactly with value equality.
    items = [(v, c) for v, pairs in vals.items() for (_, c) in pairs]
    for (v1, c1), (v2, c2) in itertools.product(items[:60], items[:60]):
        assert code_eq(c1, c2) == (v1 == v2)
        assert code_eq(c1, v2) == (v1 == v2)
    # Numerals: lazy NumCode vs chains vs ints.
    for n in range(8):
        assert code_eq(num(n), code_value(num(n)))
        assert code_eq(fS(num(n)), num(n + 1))
    # Decode survives the lazy forms.
    for t in terms[:50]:
        assert decode_term(gn_term(t)) == t


def test_decode_num_chain_and_numcode():
    c = num(50)
    assert decode_term(c) == numeral_term(50)
    big = num(codes.NUM_CHAIN_LIMIT + 5)
    t = decode_term(big)
    from modelforge.syntax import Numeral

    assert t == Numeral(codes.NUM_CHAIN_LIMIT + 5)
    assert code_eq(gn_term(t), big)

from hypothesis import given, settings, strategies as st

from modelforge.seqcodes import el, encode_seq, subst
from modelforge.semantics import (
    Budget,
    EnvView,
    FALSE_TV,
    TRUE_TV,
    STANDARD,
    env_element,
    env_element_direct,
    eval_closed,
    eval_formula,
    inside_el,
    inside_subst,
    permuted_standard,
    val,
)
from modelforge.syntax import (
    Add,
    And,
    BOT,
    Eq,
    Exists,
    Not,
    Succ,
    Var,
    ZERO,
    parse_formula,
)

B = Budget(exists_ceiling=64, node_ceiling=100_000)


def test_val_examples():
    assert val(Var(2), STANDARD, encode_seq([0, 0, 9])) == 9
    assert val(Succ(ZERO), STANDARD, 0) == 1
    M = permuted_standard(3)
    s = encode_seq([4])
    h, hinv = M.embed, M.extract
    assert val(Add(Var(0), Var(0)), M, s) == h(hinv(4) + hinv(4))


def test_eval_bot_false_everywhere():
    for M in (STANDARD, permuted_standard(0), permuted_standard(7)):
        for s in (0, 5, 31103):
            assert eval_formula(BOT, M, s, B) == FALSE_TV


def test_eval_simple_truths():
    assert eval_formula(parse_formula("Ex0 (x0 = S(0))"), STANDARD, 0, B) == TRUE_TV
    r = eval_formula(parse_formula("Ex0 (S(x0) = 0)"), STANDARD, 0, B)
    assert r.is_unknown() and r.reason == "budget-exhausted"
    assert eval_closed(parse_formula("~ 0 = S(0)"), STANDARD, B) == TRUE_TV
    assert eval_closed(parse_formula("0 = 0"), permuted_standard(11), B) == TRUE_TV


def test_eval_closed_rejects_open():
    import pytest

    with pytest.raises(ValueError):
        eval_closed(parse_formula("x0 = 0"), STANDARD, B)


def test_permuted_structure_is_bijective():
    for seed in range(5):
        M = permuted_standard(seed)
        seen = set()
        for n in range(2000):
            h = M.embed(n)
            assert M.extract(h) == n
            seen.add(h)
        assert len(seen) == 2000
        assert M.embed(0) == 0
        assert M.succ(0) == M.embed(1)


def test_permuted_truth_invariance():
    sentences = [
        "S(0) = S(0)",
        "Ex0 (x0 = S(S(0)))",
        "Ax1 <= S(S(S(0))) Ex0 (x0 = S(x1))",
        "~ S(0) = 0",
        "(0 = 0 & ~ 0 = S(0))",
    ]
    for seed in range(10):
        M = permuted_standard(seed)
        for text in sentences:
            f = parse_formula(text)
            assert eval_closed(f, M, B) == eval_closed(f, STANDARD, B), (seed, text)


def test_budget_soundness():
    small = Budget(exists_ceiling=8, node_ceiling=2_000)
    big = Budget(exists_ceiling=200, node_ceiling=1_000_000)
    formulas = [
        "Ex0 (x0 = S(0))",
        "Ex0 (S(x0) = 0)",
        "Ax0 <= S(S(0)) (x0 <= S(S(0)))",
        "Ex1 ((x1 + S(0)) = S(S(S(0))))",
        "~ Ex0 (x0 = x0)",
    ]
    for text in formulas:
        f = parse_formula(text)
        r1 = eval_formula(f, STANDARD, 0, small)
        r2 = eval_formula(f, STANDARD, 0, big)
        if not r1.is_unknown():
            assert r1 == r2


_envs = st.integers(0, 400)


@settings(max_examples=100, derandomize=True)
@given(_envs, st.integers(0, 30))
def test_negation_clause(s, salt):
    f = parse_formula("Ex0 (x0 = x1)")
    g = Not(f)
    a = eval_formula(f, STANDARD, s, B)
    b = eval_formula(g, STANDARD, s, B)
    assert b == a.flip()


def test_environment_irrelevance_for_closed():
    closed = [parse_formula(t) for t in ["0 = 0", "Ex0 (x0 = S(0))", "~ S(0) = 0"]]
    for f in closed:
        base = eval_formula(f, STANDARD, 0, B)
        for s in range(100):
            assert eval_formula(f, STANDARD, s, B) == base


def test_env_view_matches_subst():
    env = EnvView(encode_seq([3, 1]))
    env2 = env.set(1, 9).set(4, 2)
    s2 = subst(subst(encode_seq([3, 1]), 9, 1), 2, 4)
    for k in range(7):
        assert env2.get(k) == el(s2, k)
    assert env2.code() == s2


def test_env_element_standard_identity():
    for s in range(0, 200, 7):
        assert env_element(s, STANDARD) == s
    assert env_element(0, permuted_standard(5)) == 0


def test_env_element_matches_conjugation_oracle():
    for seed in (0, 1, 2):
        M = permuted_standard(seed)
        for s in range(0, 160):
            assert env_element(s, M) == env_element_direct(s, M)


def test_env_element_defining_clauses():
    for seed in (0, 3):
        M = permuted_standard(seed)
        for s in (0, 1, 5, 26, 31103 % 500):
            t = env_element(s, M)
            for k in range(6):
                assert inside_el(M, t, M.embed(k)) == el(s, k)


def test_substitution_commutation():
    structures = [STANDARD] + [permuted_standard(seed) for seed in range(5)]
    for M in structures:
        for s in range(0, 200, 3):
            for z in range(6):
                for k in range(4):
                    e1 = env_element(s, M)
                    e2 = env_element(subst(s, z, k), M)
                    assert inside_subst(M, e1, z, M.embed(k)) == e2

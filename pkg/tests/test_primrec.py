import random

import pytest

import modelforge.codes as gc
import modelforge.primrec as pr
from modelforge.primrec import (
    Compose,
    CourseOfValues,
    PrimRec,
    Proj,
    SuccFn,
    ZeroFn,
    beta,
    beta_encode,
    beta_encode_fast,
    builtin,
    builtin_names,
    compile_presentation,
    compose,
    const,
    native_eval,
)
from modelforge.semantics import Budget
from modelforge.seqcodes import el, subst
from modelforge.syntax import Sigma, classify, free_vars, DELTA0

B = Budget(exists_ceiling=1_000_000, node_ceiling=50_000_000)


def test_beta_goldens():
    assert beta(0, 5, 3) == 0
    assert beta(3, 3, 0) == 3
    a, b = beta_encode([3])
    assert (a, b) == (3, 3)
    # Lexicographic minimality of (b, a): brute-force confirmation.
    hits = [
        (bb, aa)
        for bb in range(4)
        for aa in range(50)
        if beta(aa, bb, 0) == 3
    ]
    assert min(hits) == (3, 3)
    assert beta_encode([]) == (0, 0)


def test_beta_round_trip():
    rng = random.Random(7)
    for _ in range(40):
        vals = [rng.randrange(7) for _ in range(rng.randrange(5))]
        for enc in (beta_encode, beta_encode_fast):
            a, b = enc(vals)
            for i, v in enumerate(vals):
                assert beta(a, b, i) == v


def test_native_goldens():
    from modelforge.syntax import ZERO

    assert native_eval(builtin("exp2"), [3]) == 8
    assert native_eval(Proj(3, 1), [4, 7, 9]) == 7
    assert native_eval(builtin("el"), [31103, 0]) == 7
    assert native_eval(builtin("el"), [31103, 1]) == 5
    assert native_eval(builtin("subst"), [0, 3, 1]) == 26
    assert native_eval(builtin("num"), [1]) == 7
    assert native_eval(builtin("tm-char"), [gc.gn_term(ZERO)]) == 1


def test_recognizer_builtins_agree_with_codecs():
    for n in list(range(0, 140)) + [270, 855]:
        assert native_eval(builtin("tm-char"), [n]) == (1 if gc.is_term_code(n) else 0)
        assert native_eval(builtin("fm-char"), [n]) == (1 if gc.is_formula_code(n) else 0)


def test_constructor_builtins_agree_with_codecs():
    pairs = [(0, 0), (1, 7), (3, 2), (10, 5)]
    for a, b in pairs:
        assert native_eval(builtin("pair"), [a, b]) == gc.pair(a, b)
        n = gc.pair(a, b)
        assert native_eval(builtin("unpair-left"), [n]) == a
        assert native_eval(builtin("unpair-right"), [n]) == b
        assert native_eval(builtin("fS"), [a]) == gc.pair(2, a)
        assert native_eval(builtin("f+"), [a, b]) == gc.pair(3, gc.pair(a, b))
        assert native_eval(builtin("fx"), [a, b]) == gc.pair(4, gc.pair(a, b))
        assert native_eval(builtin("feq"), [a, b]) == gc.pair(5, gc.pair(a, b))
        assert native_eval(builtin("fand"), [a, b]) == gc.pair(7, gc.pair(a, b))
        assert native_eval(builtin("fexists"), [a, b]) == gc.pair(8, gc.pair(a, b))
        assert native_eval(builtin("fnot"), [a]) == gc.pair(6, a)
        assert native_eval(builtin("fvar"), [a]) == gc.pair(0, a)


def test_nth_prime_builtin():
    from modelforge.seqcodes import nth_prime

    for k in range(12):
        assert native_eval(builtin("nth_prime"), [k]) == nth_prime(k)


def test_diag_builtin_agrees_with_codec():
    # Junk inputs take the default branch.
    for n in range(9):
        assert native_eval(builtin("diag"), [n]) == 0
    # Closed formulas come back unchanged.
    for n in (45, 49):
        assert native_eval(builtin("diag"), [n]) == n
    # The smallest code with x0 free: full substitution path.
    d15 = native_eval(builtin("diag"), [15])
    assert gc.code_eq(gc.diag(15), d15)


def test_subnum_matches_syntax_route():
    # Substituting the code of S(0) (=7, a closed term) into small formula
    # codes must match decode -> substitute -> encode.
    from modelforge.syntax import substitute_closed

    seven = gc.decode_term(7)
    for c in range(15, 1200):
        f = gc.decode_formula(c)
        if f is None:
            continue
        got = pr._fast_subnum(7, c)
        expected = gc.gn_formula(substitute_closed(f, 0, seven))
        assert gc.code_eq(expected, got), c


def test_structural_matches_fast_on_tiny_inputs():
    cases = [
        ("plus", [(2, 3), (0, 0), (5, 1)]),
        ("times", [(2, 3), (4, 0), (3, 3)]),
        ("exp2", [(0,), (3,)]),
        ("pair", [(0, 0), (2, 3), (1, 2)]),
        ("unpair-left", [(18,), (7,), (0,)]),
        ("unpair-right", [(18,), (7,), (0,)]),
        ("nth_prime", [(0,), (1,), (3,)]),
        ("el", [(5, 0), (5, 1), (7, 0)]),
        ("subst", [(0, 2, 1), (5, 1, 0)]),
        ("num", [(0,), (1,)]),
        ("fS", [(1,), (3,)]),
        ("feq", [(1, 1), (0, 2)]),
    ]
    for name, argss in cases:
        p = builtin(name)
        for args in argss:
            fast = native_eval(p, args, use_fast=True)
            slow = native_eval(p, args, use_fast=False)
            assert fast == slow, (name, args)


def test_cov_interpreter_against_direct_recursion():
    # Fibonacci through a seq-coded history: body(y, H) = el(H,y-1) + el(H,y-2)
    # with base cases; checks the course-of-values plumbing itself.
    n = 2
    p_ = pr._p
    elH = lambda idx: compose(pr._EL, p_(n, 1), idx)  # noqa: E731
    y = p_(n, 0)
    prev1 = compose(pr._SUB, y, const(n, 1))
    prev2 = compose(pr._SUB, y, const(n, 2))
    small = compose(pr._LE01, compose(SuccFn(), y), const(n, 2))  # y+1 <= 2, i.e. y <= 1
    body = compose(
        pr._IF01,
        small,
        const(n, 1),
        compose(pr._ADD, elH(prev1), elH(prev2)),
    )
    fib = CourseOfValues(1, body, history="seq")
    direct = [1, 1]
    for i in range(2, 12):
        direct.append(direct[-1] + direct[-2])
    for i in range(12):
        assert native_eval(fib, [i]) == direct[i]
    # The beta-packed flavor computes the same function.
    hlH = lambda idx: compose(pr._HLOOK, p_(n, 1), idx)  # noqa: E731
    body_b = compose(
        pr._IF01, small, const(n, 1), compose(pr._ADD, hlH(prev1), hlH(prev2))
    )
    fib_b = CourseOfValues(1, body_b, history="beta")
    for i in range(12):
        assert native_eval(fib_b, [i]) == direct[i]


# ---------------------------------------------------------------------------
# Compiled graph formulas


def test_compile_base_schemes():
    z = compile_presentation(ZeroFn())
    from modelforge.syntax import render

    assert render(z.formula) == "x0 = 0"
    s = compile_presentation(SuccFn())
    assert free_vars(s.formula) == {0, 1}
    p = compile_presentation(Proj(3, 1))
    assert free_vars(p.formula) == {0, 1, 2, 3}


def _check_graph(name, argss, budget=B):
    comp = pr.compiled_builtin(name)
    p = builtin(name)
    for args in argss:
        want = native_eval(p, args)
        r = comp.check(args, want, budget)
        assert r.is_true(), (name, args, want, r)
        r2 = comp.check(args, want + 1, budget)
        assert r2.is_false(), (name, args, want + 1, r2)


def test_compiled_plus_times_small():
    _check_graph("plus", [(a, b) for a in range(4) for b in range(4)])
    _check_graph("times", [(a, b) for a in range(4) for b in range(4)])


def test_compiled_exp2_small():
    _check_graph("exp2", [(n,) for n in range(5)])


def test_compiled_el_subst_small():
    _check_graph("el", [(s, k) for s in (0, 5, 26) for k in (0, 1)])
    _check_graph("subst", [(0, 3, 1), (5, 2, 0), (3, 1, 1)])


def test_compiled_num_small():
    _check_graph("num", [(n,) for n in range(4)])


def test_compiled_diag_small():
    _check_graph("diag", [(n,) for n in range(4)])


def test_compiled_formulas_classify_sigma1():
    for name in ["plus", "times", "exp2", "el", "subst", "num", "diag"]:
        comp = pr.compiled_builtin(name)
        assert classify(comp.formula) == Sigma(1), name


def test_functionality_window():
    for name, argss in [
        ("plus", [(2, 3)]),
        ("times", [(2, 2)]),
        ("exp2", [(3,)]),
    ]:
        comp = pr.compiled_builtin(name)
        p = builtin(name)
        for args in argss:
            want = native_eval(p, args)
            holders = [
                y for y in range(13) if comp.check(args, y, B).is_true()
            ]
            assert holders == [want], (name, args, holders)


def _random_presentation(rng, arity, depth):
    if depth == 0:
        choices = [ZeroFn(arity)]
        if arity >= 1:
            choices += [Proj(arity, i) for i in range(arity)]
        if arity == 1:
            choices.append(SuccFn())
        return rng.choice(choices)
    kind = rng.choice(["compose", "primrec"] + (["compose"] if arity else []))
    if kind == "compose":
        k = rng.randrange(1, 3)
        outer = _random_presentation(rng, k, depth - 1)
        inners = tuple(_random_presentation(rng, arity, depth - 1) for _ in range(k))
        return Compose(outer, inners)
    if arity == 0:
        return ZeroFn(0)
    base = _random_presentation(rng, arity - 1, depth - 1)
    step = _random_presentation(rng, arity + 1, depth - 1)
    return PrimRec(base, step)


def test_random_presentations_oracle_equivalence():
    rng = random.Random(20260810)
    made = 0
    while made < 12:
        arity = rng.randrange(1, 3)
        p = _random_presentation(rng, arity, rng.randrange(1, 4))
        if p.arity != arity:
            continue
        made += 1
        comp = compile_presentation(p)
        assert classify(comp.formula) <= Sigma(1)
        for args in [(0,) * arity, (1,) * arity, (2, 1)[:arity], (3,) * arity]:
            want = native_eval(p, args)
            assert comp.check(args, want, B).is_true(), (p, args, want)
            assert comp.check(args, want + 1, B).is_false(), (p, args, want)


def test_arity_validation():
    with pytest.raises(pr.ArityMismatch):
        Compose(SuccFn(), (SuccFn(), SuccFn()))
    with pytest.raises(pr.ArityMismatch):
        PrimRec(ZeroFn(0), SuccFn())
    with pytest.raises(pr.ArityMismatch):
        Proj(2, 5)
    with pytest.raises(pr.ArityMismatch):
        native_eval(SuccFn(), [1, 2])
    with pytest.raises(KeyError):
        builtin("no-such-builtin")

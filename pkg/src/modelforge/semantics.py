"""Budgeted Tarski evaluation over computable structures with domain N.

Evaluation is exact three-valued: True and False answers are definitive,
Unknown records why the evaluator gave up (search ceiling or an
unanswerable oracle query).  Existential search runs 0, 1, 2, ... up to
the per-quantifier ceiling, except where an exact shortcut decides the
quantifier outright:

  * Ex i (x_i = t)                                   witness is val(t)
  * Ex j (x_j + u = t)                               the <= / < guards
  * Ex q (a = q*d + r)                               division shape
  * Ex i ((x_i <= t) & body)  /  its universal dual  search to val(t)
  * Ex i (G(..., x_i) & rest) for functional G       witness from G
  * compiler-provided witness hints (see primrec)

Each shortcut returns the same answer an unbounded faithful search would,
so increasing budgets never flips a decided answer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .codes import Code, code_eq
from .seqcodes import FactoredSeq, el, encode_seq, subst
from .syntax import (
    Add,
    And,
    Bot,
    Defined,
    DefinedRegistry,
    EMPTY_REGISTRY,
    Eq,
    Exists,
    Formula,
    Mul,
    Not,
    Numeral,
    Succ,
    Term,
    Var,
    Zero,
    free_vars,
)

# ---------------------------------------------------------------------------
# Three-valued answers


class TV:
    __slots__ = ("value", "reason")

    def __init__(self, value: str, reason: Optional[str] = None):
        self.value = value
        self.reason = reason

    def is_true(self):
        return self.value == "true"

    def is_false(self):
        return self.value == "false"

    def is_unknown(self):
        return self.value == "unknown"

    def flip(self) -> "TV":
        if self.is_true():
            return FALSE_TV
        if self.is_false():
            return TRUE_TV
        return self

    def __eq__(self, other):
        return isinstance(other, TV) and self.value == other.value

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        if self.is_unknown():
            return f"TV(unknown: {self.reason})"
        return f"TV({self.value})"


TRUE_TV = TV("true")
FALSE_TV = TV("false")
BUDGET_UNKNOWN = TV("unknown", "budget-exhausted")
ORACLE_UNKNOWN = TV("unknown", "oracle-unknown")


def tv_from_bool(b: bool) -> TV:
    return TRUE_TV if b else FALSE_TV


@dataclass(frozen=True)
class Budget:
    exists_ceiling: int = 64
    node_ceiling: int = 200_000

    def __post_init__(self):
        if self.exists_ceiling <= 0 or self.node_ceiling <= 0:
            raise ValueError("budgets must be positive")


DEFAULT_BUDGET = Budget()


# ---------------------------------------------------------------------------
# Structures


@dataclass(frozen=True)
class ArithStructure:
    """A computable interpretation of 0, S, +, * on domain N.

    `embed`/`extract` witness an isomorphism with the standard model when
    the structure is a permuted copy (embed = h, extract = h inverse,
    h(0) = 0); the identity otherwise.
    """

    name: str
    succ: Callable
    add: Callable
    mul: Callable
    zero: int = 0
    embed: Callable = staticmethod(lambda n: n)
    extract: Callable = staticmethod(lambda n: n)
    is_standard: bool = True


def standard_structure() -> ArithStructure:
    return ArithStructure(
        name="standard",
        succ=lambda a: a + 1,
        add=lambda a, b: a + b,
        mul=lambda a, b: a * b,
    )


STANDARD = standard_structure()


from functools import lru_cache


@lru_cache(maxsize=4096)
def _block_params(seed: int, k: int):
    rng = random.Random(seed * 1_000_003 + k)
    size = 1 << k
    mult = rng.randrange(1, size, 2)  # odd, invertible mod 2^k
    off = rng.randrange(size)
    inv = pow(mult, -1, size)
    return mult, off, inv, size


def permuted_standard(seed: int) -> ArithStructure:
    """A computable isomorphic copy of the standard model.

    The witness bijection h fixes 0 and permutes each binary block
    [2^k, 2^(k+1)) by a seeded affine map, so both h and its inverse are
    cheap on arbitrarily large arguments.
    """

    def h(n: int) -> int:
        if not isinstance(n, int):
            raise TypeError("permuted structures need materialized values")
        if n <= 1:
            return n
        k = n.bit_length() - 1
        base = 1 << k
        mult, off, _inv, size = _block_params(seed, k)
        return base + (mult * (n - base) + off) % size

    def h_inv(n: int) -> int:
        if not isinstance(n, int):
            raise TypeError("permuted structures need materialized values")
        if n <= 1:
            return n
        k = n.bit_length() - 1
        base = 1 << k
        _mult, off, inv, size = _block_params(seed, k)
        return base + (inv * (n - base - off)) % size

    return ArithStructure(
        name=f"permuted-standard({seed})",
        succ=lambda a: h(h_inv(a) + 1),
        add=lambda a, b: h(h_inv(a) + h_inv(b)),
        mul=lambda a, b: h(h_inv(a) * h_inv(b)),
        embed=h,
        extract=h_inv,
        is_standard=False,
    )


# ---------------------------------------------------------------------------
# Environments

class EnvView:
    """A sequence-coded environment plus sparse overrides.

    Semantically identical to substituting into the base code, but keeps
    huge (even lazy) values out of the prime-power product.
    """

    __slots__ = ("base", "overrides")

    def __init__(self, base=0, overrides=None):
        self.base = base
        self.overrides = overrides or {}

    def get(self, i: int):
        if i in self.overrides:
            return self.overrides[i]
        if isinstance(self.base, FactoredSeq):
            return self.base.el(i)
        return el(self.base, i)

    def set(self, i: int, value) -> "EnvView":
        return EnvView(self.base, {**self.overrides, i: value})

    def code(self):
        """Materialize back to a plain sequence code (may raise OverflowError)."""
        s = self.base
        for i, v in sorted(self.overrides.items()):
            if isinstance(s, FactoredSeq) or isinstance(v, Code):
                s = FactoredSeq.of(s).subst(v, i)
            else:
                s = subst(s, v, i)
        return s


# ---------------------------------------------------------------------------
# Evaluation


class _Fuel:
    __slots__ = ("left",)

    def __init__(self, n):
        self.left = n

    def spend(self) -> bool:
        if self.left <= 0:
            return False
        self.left -= 1
        return True


@dataclass
class EvalContext:
    structure: ArithStructure
    registry: DefinedRegistry
    budget: Budget
    bindings: dict = field(default_factory=dict)
    hints: dict = field(default_factory=dict)
    fuel: _Fuel = None  # type: ignore[assignment]
    # Per-run memo keyed by (node id, values of the node's free variables);
    # sound because evaluation depends on the environment only through them.
    memo: dict = field(default_factory=dict)


_FREE_VARS_CACHE: dict = {}


def _node_free_vars(f: Formula):
    key = id(f)
    hit = _FREE_VARS_CACHE.get(key)
    if hit is not None:
        return hit[1]
    fv = tuple(sorted(free_vars(f)))
    _FREE_VARS_CACHE[key] = (f, fv)
    return fv


def val(t: Term, structure: ArithStructure, s) -> Optional[int]:
    """Value of a term; s is a sequence code or an EnvView."""
    env = s if isinstance(s, EnvView) else EnvView(s)
    return _val(t, structure, env)


def _val(t: Term, M: ArithStructure, env: EnvView):
    if isinstance(t, Var):
        return env.get(t.index)
    if isinstance(t, Zero):
        return M.zero
    if isinstance(t, Numeral):
        v = t.value
        if isinstance(v, int):
            # Value of S^v(0): the embedding image of v.
            return M.embed(v)
        return v if M.is_standard else None
    if isinstance(t, Succ):
        a = _val(t.arg, M, env)
        if a is None:
            return None
        if isinstance(a, Code):
            return None if not M.is_standard else _lazy_unsupported()
        return M.succ(a)
    if isinstance(t, (Add, Mul)):
        a = _val(t.left, M, env)
        b = _val(t.right, M, env)
        if a is None or b is None:
            return None
        if isinstance(a, Code) or isinstance(b, Code):
            return None
        return (M.add if isinstance(t, Add) else M.mul)(a, b)
    raise TypeError(f"not a term: {t!r}")


def _lazy_unsupported():
    return None


def eval_formula(
    f: Formula,
    structure: ArithStructure,
    s,
    budget: Budget = DEFAULT_BUDGET,
    registry: DefinedRegistry = EMPTY_REGISTRY,
    bindings: Optional[dict] = None,
    hints: Optional[dict] = None,
) -> TV:
    """Three-valued truth of f in the structure under environment code s."""
    ctx = EvalContext(
        structure=structure,
        registry=registry,
        budget=budget,
        bindings=bindings or {},
        hints=hints or {},
        fuel=_Fuel(budget.node_ceiling),
    )
    env = s if isinstance(s, EnvView) else EnvView(s)
    return _eval(f, env, ctx)


def eval_closed(
    f: Formula,
    structure: ArithStructure,
    budget: Budget = DEFAULT_BUDGET,
    registry: DefinedRegistry = EMPTY_REGISTRY,
    bindings: Optional[dict] = None,
    hints: Optional[dict] = None,
) -> TV:
    fv = free_vars(f)
    if fv:
        raise ValueError(f"formula has free variables {sorted(fv)}")
    return eval_formula(f, structure, 0, budget, registry, bindings, hints)


def _eval(f: Formula, env: EnvView, ctx: EvalContext) -> TV:
    if not ctx.fuel.spend():
        return BUDGET_UNKNOWN
    if isinstance(f, Bot):
        return FALSE_TV
    if isinstance(f, Eq):
        a = _val(f.left, ctx.structure, env)
        b = _val(f.right, ctx.structure, env)
        if a is None or b is None:
            return ORACLE_UNKNOWN
        return tv_from_bool(code_eq(a, b))
    if isinstance(f, Not):
        return _eval(f.body, env, ctx).flip()
    if isinstance(f, And):
        left = _eval(f.left, env, ctx)
        if left.is_false():
            return FALSE_TV
        right = _eval(f.right, env, ctx)
        if right.is_false():
            return FALSE_TV
        if left.is_unknown():
            return left
        if right.is_unknown():
            return right
        return TRUE_TV
    if isinstance(f, Defined):
        return _eval_defined(f, env, ctx)
    if isinstance(f, Exists):
        fv = _node_free_vars(f)
        key = None
        if len(fv) <= 10:
            vals = tuple(env.get(i) for i in fv)
            key = (id(f), vals)
        if key is not None:
            hit = ctx.memo.get(key)
            if hit is not None:
                return hit
        r = _eval_exists(f, env, ctx)
        if key is not None:
            ctx.memo[key] = r
        return r
    raise TypeError(f"not a formula: {f!r}")


def _eval_defined(f: Defined, env: EnvView, ctx: EvalContext) -> TV:
    values = []
    for t in f.args:
        v = _val(t, ctx.structure, env)
        if v is None:
            return ORACLE_UNKNOWN
        values.append(v)
    answer_fn = ctx.bindings.get(f.name)
    if answer_fn is None:
        entry = ctx.registry.get(f.name)
        answer_fn = entry.native
    if answer_fn is None:
        return ORACLE_UNKNOWN
    r = answer_fn(values, ctx)
    if r is None:
        return ORACLE_UNKNOWN
    if isinstance(r, TV):
        return r
    return tv_from_bool(bool(r))


def _term_free_of(t: Term, i: int) -> bool:
    from .syntax import term_vars

    return i not in term_vars(t)


def _conjuncts(f: Formula):
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.append(g.left)
            stack.append(g.right)
        else:
            out.append(g)
    return out


# Shape analyses keyed by node identity; values hold the node itself so ids
# cannot be recycled underneath the cache.
_WITNESS_SHAPES: dict = {}
_BOUND_SHAPES: dict = {}


def _witness_recipe(f: Exists):
    """Env-independent recipe for a variable pinned by an equation conjunct.

    Shapes: x_i = t;  x_i + u = t;  a = q*d + r with q = x_i.  Any of these
    determines x_i from the environment, so a failing body at the computed
    witness refutes the whole existential."""
    key = id(f)
    hit = _WITNESS_SHAPES.get(key)
    if hit is not None:
        return hit[1]
    i = f.var
    recipe = None
    for part in _conjuncts(f.body):
        if not isinstance(part, Eq):
            continue
        l, r = part.left, part.right
        for a, b in ((l, r), (r, l)):
            if isinstance(a, Var) and a.index == i and _term_free_of(b, i):
                recipe = ("var", b)
                break
            if (
                isinstance(a, Add)
                and isinstance(a.left, Var)
                and a.left.index == i
                and _term_free_of(a.right, i)
                and _term_free_of(b, i)
            ):
                recipe = ("le", a.right, b)
                break
            if (
                isinstance(b, Add)
                and isinstance(b.left, Mul)
                and isinstance(b.left.left, Var)
                and b.left.left.index == i
                and _term_free_of(b.left.right, i)
                and _term_free_of(b.right, i)
                and _term_free_of(a, i)
            ):
                recipe = ("div", a, b.left.right, b.right)
                break
        if recipe:
            break
    _WITNESS_SHAPES[key] = (f, recipe)
    return recipe


def _direct_witness(f: Exists, env: EnvView, ctx: EvalContext):
    """Apply the witness recipe; returns (decided, witness-or-None)."""
    recipe = _witness_recipe(f)
    if recipe is None:
        return False, None
    M = ctx.structure
    if recipe[0] == "var":
        w = _val(recipe[1], M, env)
        return (False, None) if w is None else (True, w)
    if recipe[0] == "le":
        u = _val(recipe[1], M, env)
        t = _val(recipe[2], M, env)
        if u is None or t is None or isinstance(u, Code) or isinstance(t, Code):
            return False, None
        if not M.is_standard:
            u, t = M.extract(u), M.extract(t)
            return (True, M.embed(t - u)) if t >= u else (True, None)
        return (True, t - u) if t >= u else (True, None)
    # division: a = q*d + r
    if not M.is_standard:
        return False, None
    av = _val(recipe[1], M, env)
    dv = _val(recipe[2], M, env)
    rv = _val(recipe[3], M, env)
    if av is None or dv is None or rv is None:
        return False, None
    if isinstance(av, Code) or isinstance(dv, Code) or isinstance(rv, Code):
        return False, None
    if dv == 0:
        return (True, 0) if av == rv else (True, None)
    if av >= rv and (av - rv) % dv == 0:
        return True, (av - rv) // dv
    return True, None


def _bound_recipe(f: Exists):
    """Env-independent view of Ex i ((x_i <= t) & body), strict or not."""
    key = id(f)
    hit = _BOUND_SHAPES.get(key)
    if hit is not None:
        return hit[1]
    recipe = None
    body = f.body
    if isinstance(body, And):
        guard = body.left
        if isinstance(guard, Exists) and isinstance(guard.body, Eq):
            eq = guard.body
            if (
                isinstance(eq.left, Add)
                and isinstance(eq.left.left, Var)
                and eq.left.left.index == guard.var
            ):
                subject = eq.left.right
                strict = False
                if isinstance(subject, Succ) and isinstance(subject.arg, Var):
                    subject = subject.arg
                    strict = True
                if isinstance(subject, Var) and subject.index == f.var:
                    bound_term = eq.right
                    if _term_free_of(bound_term, f.var) and _term_free_of(
                        bound_term, guard.var
                    ):
                        recipe = (bound_term, strict)
    _BOUND_SHAPES[key] = (f, recipe)
    return recipe


def _bounded_shape(f: Exists, ctx: EvalContext, env: EnvView):
    """Search bound val(t) for the guarded shapes, or None."""
    recipe = _bound_recipe(f)
    if recipe is None:
        return None
    bound_term, strict = recipe
    t = _val(bound_term, ctx.structure, env)
    if t is None or isinstance(t, Code):
        return None
    if not ctx.structure.is_standard:
        t = ctx.structure.extract(t)
    return t - 1 if strict else t


def _functional_shortcut(f: Exists, env: EnvView, ctx: EvalContext):
    """Ex i (G(args, x_i) & rest) with G registered functional: the unique
    candidate witness, or None when the shape does not apply.
    Returns (applies, witness or None-means-provably-empty)."""
    body = f.body
    atom = body
    if isinstance(body, And):
        atom = body.left
    if not isinstance(atom, Defined) or atom.name not in ctx.registry:
        return False, None
    entry = ctx.registry.get(atom.name)
    if not entry.functional or entry.witness is None or not atom.args:
        return False, None
    last = atom.args[-1]
    if not (isinstance(last, Var) and last.index == f.var):
        return False, None
    head_args = atom.args[:-1]
    if any(not _term_free_of(t, f.var) for t in head_args):
        return False, None
    values = []
    for t in head_args:
        v = _val(t, ctx.structure, env)
        if v is None:
            return False, None
        values.append(v)
    try:
        w = entry.witness(values, ctx)
    except Exception:
        return False, None
    return True, w


def _eval_exists(f: Exists, env: EnvView, ctx: EvalContext) -> TV:
    hint = ctx.hints.get(id(f))
    if hint is not None:
        fn, exclusive = hint
        try:
            w = fn(env.get)
        except Exception:
            w = None
        if w is not None:
            r = _eval(f.body, env.set(f.var, w), ctx)
            if r.is_true():
                return TRUE_TV
            if r.is_false() and exclusive:
                return FALSE_TV
            if r.is_unknown():
                return r
        elif exclusive:
            return FALSE_TV

    decided, w = _direct_witness(f, env, ctx)
    if decided:
        if w is None:
            return FALSE_TV
        return _eval(f.body, env.set(f.var, w), ctx)

    applies, w = _functional_shortcut(f, env, ctx)
    if applies:
        if w is None:
            return FALSE_TV
        return _eval(f.body, env.set(f.var, w), ctx)

    bound = _bounded_shape(f, ctx, env)
    if bound is not None:
        # Candidates satisfying the guard are the embedding images of the
        # standard initial segment; enumerating those is exhaustive.
        if bound < 0:
            return FALSE_TV
        if bound <= ctx.budget.exists_ceiling:
            return _search(f, env, ctx, bound, exhaustive=True, via_embed=True)
        return _search(f, env, ctx, ctx.budget.exists_ceiling, False, True)

    return _search(f, env, ctx, ctx.budget.exists_ceiling, False, False)


def _search(
    f: Exists, env: EnvView, ctx: EvalContext, bound: int, exhaustive: bool, via_embed: bool
) -> TV:
    saw_unknown = False
    embed = ctx.structure.embed if via_embed and not ctx.structure.is_standard else None
    for x in range(bound + 1):
        witness = embed(x) if embed else x
        r = _eval(f.body, env.set(f.var, witness), ctx)
        if r.is_true():
            return TRUE_TV
        if r.is_unknown():
            if r.reason == "budget-exhausted" and ctx.fuel.left <= 0:
                return BUDGET_UNKNOWN
            saw_unknown = True
    if exhaustive and not saw_unknown:
        return FALSE_TV
    if exhaustive and saw_unknown:
        return ORACLE_UNKNOWN
    return BUDGET_UNKNOWN


# ---------------------------------------------------------------------------
# Environment elements Env(s, M)


def inside_subst(M: ArithStructure, t: int, a: int, j: int) -> int:
    """The substitution function s[a/k] computed inside M by conjugation."""
    return M.embed(subst(M.extract(t), M.extract(a), M.extract(j)))


def inside_el(M: ArithStructure, t: int, j: int) -> int:
    """el computed inside M by conjugation."""
    return M.embed(el(M.extract(t), M.extract(j)))


def env_element(s: int, M: ArithStructure) -> int:
    """The unique element of M coding the same assignment as s.

    Built by the inductive construction: start from the zero element and
    substitute the value el(s, k) at the inside-M numeral of k.  Steps with
    el(s, k) = 0 substitute a zero exponent into a position that already
    has one, an exact identity, so only the support is visited.
    """
    t = M.zero
    for k, v in sorted(FactoredSeq.of(s).exponents.items()):
        t = inside_subst(M, t, v, M.embed(k))
    return t


def env_element_direct(s: int, M: ArithStructure) -> int:
    """Conjugation oracle: embed the re-encoded pulled-back sequence.

    An independent route to the same element: pull each entry back through
    the isomorphism, encode, and push the code forward.
    """
    support = FactoredSeq.of(s).exponents
    bound = max(support, default=-1) + 1
    pulled = [M.extract(el(s, k)) for k in range(bound)]
    return M.embed(encode_seq(pulled))

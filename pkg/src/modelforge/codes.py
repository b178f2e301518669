"""Exact Goedel numbering of terms and formulas.

Codes are naturals built by Cantor pairing: code = pair(tag, payload) with
pair(a, b) = (a+b)(a+b+1)/2 + b, which is strictly increasing in each
argument.  Tag table (fixed forever, golden tests pin exact values):

    Var=0  Zero=1  Succ=2  Add=3  Mul=4      (terms)
    Eq=5   Not=6   And=7   Exists=8  Bot=9   (formulas)

Payloads: nullary nodes use 0, unary nodes the child code, binary nodes the
pair of child codes; Exists pairs (index, body code).

Materializing a code squares its magnitude at every tree level, so codes of
formulas beyond depth ~30 do not fit in memory.  Values whose pairing result
would exceed a size cutoff are therefore kept as exact lazy objects:

    PairCode(a, b)  -- the value pair(a, b), children materialized or lazy
    NumCode(n)      -- the code of the numeral S^n(0), n itself large

Equality on these is structural and exact (Cantor pairing is injective and
num is injective with num(n) = pair(2, num(n-1))), deciding mixed
lazy/materialized comparisons by unpairing the materialized side.  The one
genuinely undecidable comparison, two lazy numeral codes at different
unknown offsets, raises IncomparableCodeError; it cannot arise from codes
this library constructs.
"""

from __future__ import annotations

import hashlib
from math import isqrt

from .syntax import (
    Add,
    And,
    Bot,
    Defined,
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
    numeral_term,
)

# Pair results estimated above this many bits stay lazy.
PAIR_MATERIALIZE_BITS = 1 << 16
# Numeral codes up to this height become explicit pair chains; taller ones
# (or heights given by lazy codes) become NumCode nodes.
NUM_CHAIN_LIMIT = 4096

TAG_VAR, TAG_ZERO, TAG_SUCC, TAG_ADD, TAG_MUL = 0, 1, 2, 3, 4
TAG_EQ, TAG_NOT, TAG_AND, TAG_EXISTS, TAG_BOT = 5, 6, 7, 8, 9
MAX_TAG = 9


class IncomparableCodeError(ValueError):
    """Equality of two lazy codes could not be decided structurally."""


class NonCodeError(ValueError):
    pass


def pair(a: int, b: int) -> int:
    s = a + b
    return s * (s + 1) // 2 + b


def unpair(n: int):
    w = (isqrt(8 * n + 1) - 1) // 2
    t = w * (w + 1) // 2
    b = n - t
    return w - b, b


class Code:
    """Base class of lazy exact naturals."""

    __slots__ = ("_hash", "_digest")

    def __ne__(self, other):
        r = self.__eq__(other)
        return NotImplemented if r is NotImplemented else not r

    def __hash__(self):
        return self._hash

    def digest(self) -> str:
        if self._digest is None:
            object.__setattr__(self, "_digest", _digest_of(self))
        return self._digest


class PairCode(Code):
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "_hash", hash(("pair", _h(left), _h(right))))
        object.__setattr__(self, "_digest", None)

    def __setattr__(self, *a):
        raise AttributeError("Code objects are immutable")

    def __repr__(self):
        return f"PairCode({self.left!r}, {self.right!r})"

    def __eq__(self, other):
        if isinstance(other, int):
            return _eq_pair_int(self, other)
        if isinstance(other, PairCode):
            return code_eq(self.left, other.left) and code_eq(self.right, other.right)
        if isinstance(other, NumCode):
            return _eq_num_pairish(other, self)
        return NotImplemented


class NumCode(Code):
    """Code of the numeral S^n(0) for a height n too large to chain out."""

    __slots__ = ("height",)

    def __init__(self, height):
        if isinstance(height, int) and height <= NUM_CHAIN_LIMIT:
            raise ValueError("small numeral heights must use explicit chains")
        object.__setattr__(self, "height", height)
        object.__setattr__(self, "_hash", hash(("num", _h(height))))
        object.__setattr__(self, "_digest", None)

    def __setattr__(self, *a):
        raise AttributeError("Code objects are immutable")

    def __repr__(self):
        return f"NumCode({self.height!r})"

    def __eq__(self, other):
        if isinstance(other, NumCode):
            return code_eq(self.height, other.height)
        if isinstance(other, int):
            return _eq_num_pairish(self, other)
        if isinstance(other, PairCode):
            return _eq_num_pairish(self, other)
        return NotImplemented


def _h(x):
    return x if isinstance(x, int) else x._hash


def code_eq(a, b) -> bool:
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, int):
        return b == a
    return a == b


def _eq_pair_int(p: PairCode, v: int) -> bool:
    # A lazy pair's value exceeds the materialization cutoff by construction,
    # but arbitrary ints may be compared; unpair the int side.
    va, vb = unpair(v)
    return code_eq(p.left, va) and code_eq(p.right, vb)


def _num_shape_height(v: int):
    """If v = num(k) for some k, return k, else None."""
    k = 0
    while v != 1:
        a, b = unpair(v)
        if a != TAG_SUCC:
            return None
        v = b
        k += 1
    return k


def _eq_num_pairish(n: NumCode, other) -> bool:
    """Compare num(height) against an int or a pair chain."""
    height = n.height
    peeled = 0
    node = other
    while True:
        if isinstance(node, int):
            k = _num_shape_height(node)
            if k is None:
                return False
            total = k + peeled
            return _eq_height(height, total)
        if isinstance(node, NumCode):
            if peeled == 0:
                return code_eq(height, node.height)
            if isinstance(node.height, int):
                return _eq_height(height, node.height + peeled)
            if isinstance(height, int):
                return False  # lazy height exceeds any int
            raise IncomparableCodeError(
                "cannot compare two lazy numeral codes at different offsets"
            )
        if isinstance(node, PairCode):
            if not code_eq(node.left, TAG_SUCC):
                return False
            node = node.right
            peeled += 1
            continue
        return False


def _eq_height(height, total_int: int) -> bool:
    if isinstance(height, int):
        return height == total_int
    # A lazy height names a value far beyond any chain we could have peeled.
    return False


def pair_code(a, b):
    """pair(a, b) for materialized or lazy arguments, materializing when small."""
    if isinstance(a, int) and isinstance(b, int):
        if a.bit_length() + b.bit_length() + 2 <= PAIR_MATERIALIZE_BITS:
            return pair(a, b)
    return PairCode(a, b)


def unpair_code(n):
    if isinstance(n, int):
        return unpair(n)
    if isinstance(n, PairCode):
        return n.left, n.right
    if isinstance(n, NumCode):
        h = n.height
        rest = NumCode(h - 1) if isinstance(h, int) else _num_pred_lazy(h)
        return TAG_SUCC, rest
    raise TypeError(f"not a code: {n!r}")


def _num_pred_lazy(height_code):
    raise IncomparableCodeError(
        "cannot take the predecessor of a lazy numeral height"
    )


def code_value(n) -> int:
    """Materialize a code to an int; may be astronomically expensive."""
    if isinstance(n, int):
        return n
    if isinstance(n, PairCode):
        return pair(code_value(n.left), code_value(n.right))
    if isinstance(n, NumCode):
        h = n.height
        if not isinstance(h, int):
            raise OverflowError("numeral height is itself lazy")
        v = 1
        for _ in range(h):
            v = pair(TAG_SUCC, v)
        return v
    raise TypeError(f"not a code: {n!r}")


def _digest_of(root) -> str:
    memo = {}
    stack = [(root, False)]
    while stack:
        node, ready = stack.pop()
        key = id(node) if isinstance(node, Code) else node
        if key in memo:
            continue
        if isinstance(node, int):
            memo[key] = hashlib.sha256(b"i" + hex(node).encode()).hexdigest()
            continue
        if not ready:
            stack.append((node, True))
            if isinstance(node, PairCode):
                stack.append((node.left, False))
                stack.append((node.right, False))
            else:
                stack.append((node.height, False))
            continue
        if isinstance(node, PairCode):
            la = memo[id(node.left) if isinstance(node.left, Code) else node.left]
            rb = memo[id(node.right) if isinstance(node.right, Code) else node.right]
            memo[key] = hashlib.sha256(f"p({la},{rb})".encode()).hexdigest()
        else:
            hh = memo[id(node.height) if isinstance(node.height, Code) else node.height]
            memo[key] = hashlib.sha256(f"n({hh})".encode()).hexdigest()
    return memo[id(root) if isinstance(root, Code) else root]


def code_digest(n) -> str:
    if isinstance(n, int):
        return _digest_of(n)
    return n.digest()


# ---------------------------------------------------------------------------
# Constructor functions (each strictly increasing in every argument)


def fvar(i):
    return pair_code(TAG_VAR, i)


def fS(a):
    return pair_code(TAG_SUCC, a)


def fplus(a, b):
    return pair_code(TAG_ADD, pair_code(a, b))


def ftimes(a, b):
    return pair_code(TAG_MUL, pair_code(a, b))


def feq(a, b):
    return pair_code(TAG_EQ, pair_code(a, b))


def fnot(a):
    return pair_code(TAG_NOT, a)


def fand(a, b):
    return pair_code(TAG_AND, pair_code(a, b))


def fexists(i, a):
    return pair_code(TAG_EXISTS, pair_code(i, a))


ZERO_CODE = pair(TAG_ZERO, 0)  # = 1
BOT_CODE = pair(TAG_BOT, 0)  # = 45


# ---------------------------------------------------------------------------
# Encoding


def num(n):
    """Code of the numeral S^n(0); exact, lazy beyond the chain limit."""
    if not isinstance(n, int):
        return NumCode(n)
    if n < 0:
        raise ValueError("numeral heights are naturals")
    if n > NUM_CHAIN_LIMIT:
        return NumCode(n)
    v = ZERO_CODE
    for _ in range(n):
        v = pair_code(TAG_SUCC, v)
    return v


def gn_term(t: Term):
    """Goedel number of a term; iterative to survive deep trees."""
    return _encode(t, None)


def gn_formula(f: Formula):
    """Goedel number of a pure formula (no Defined nodes)."""
    return _encode(None, f)


def _encode(term, formula):
    out = {}
    stack = [(term, formula, False)]
    while stack:
        t, f, ready = stack.pop()
        node = t if f is None else f
        if id(node) in out:
            continue
        if not ready:
            stack.append((t, f, True))
            for child in _children(node):
                if isinstance(child, Term):
                    stack.append((child, None, False))
                elif isinstance(child, Formula):
                    stack.append((None, child, False))
            continue
        out[id(node)] = _encode_node(node, out)
    return out[id(term if formula is None else formula)]


def _children(node):
    if isinstance(node, (Succ,)):
        return (node.arg,)
    if isinstance(node, (Add, Mul, Eq, And)):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.body,)
    if isinstance(node, Exists):
        return (node.body,)
    return ()


def _encode_node(node, out):
    if isinstance(node, Var):
        return fvar(node.index)
    if isinstance(node, Zero):
        return ZERO_CODE
    if isinstance(node, Succ):
        return fS(out[id(node.arg)])
    if isinstance(node, Add):
        return fplus(out[id(node.left)], out[id(node.right)])
    if isinstance(node, Mul):
        return ftimes(out[id(node.left)], out[id(node.right)])
    if isinstance(node, Numeral):
        return num(node.value)
    if isinstance(node, Eq):
        return feq(out[id(node.left)], out[id(node.right)])
    if isinstance(node, Not):
        return fnot(out[id(node.body)])
    if isinstance(node, And):
        return fand(out[id(node.left)], out[id(node.right)])
    if isinstance(node, Exists):
        return fexists(node.var, out[id(node.body)])
    if isinstance(node, Bot):
        return BOT_CODE
    if isinstance(node, Defined):
        raise NonCodeError(
            f"defined predicate {node.name!r} has no code; expand it first"
        )
    raise TypeError(f"cannot encode {node!r}")


# ---------------------------------------------------------------------------
# Decoding


def _tag_as_small_int(x):
    """The tag position of a code, or None if it cannot be a valid tag."""
    if isinstance(x, int):
        return x if x <= MAX_TAG else None
    return None  # lazy values are far above any tag


def decode_term(n):
    """Term coded by n, or None if n is not a term code."""
    return _decode(n, want_term=True)


def decode_formula(n):
    """Formula coded by n, or None if n is not a formula code."""
    return _decode(n, want_term=False)


def is_term_code(n) -> bool:
    return decode_term(n) is not None


def is_formula_code(n) -> bool:
    return decode_formula(n) is not None


def _key(c):
    return c if isinstance(c, int) else ("#", id(c))


def _split(c):
    """The (tag, payload) of a code, or None when the tag is not small."""
    if isinstance(c, int):
        a, b = unpair(c)
    elif isinstance(c, PairCode):
        a, b = c.left, c.right
    else:
        return None
    tag = _tag_as_small_int(a)
    if tag is None:
        return None
    return tag, b


def _try_unpair(payload):
    try:
        return unpair_code(payload)
    except (IncomparableCodeError, TypeError):
        return None


def _decode(root, want_term: bool):
    memo_t = {}
    memo_f = {}

    def term_of(c):
        k = _key(c)
        if k in memo_t:
            return memo_t[k]
        memo_t[k] = r = compute_term(c)
        return r

    def compute_term(c):
        if isinstance(c, NumCode):
            return numeral_term(c.height)
        # Peel successor chains in a loop so their length costs no stack.
        count = 0
        node = c
        while True:
            if isinstance(node, NumCode):
                h = node.height
                if isinstance(h, int):
                    return numeral_term(h + count)
                t: Term = Numeral(h)
                for _ in range(count):
                    t = Succ(t)
                return t
            sp = _split(node)
            if sp is not None and sp[0] == TAG_SUCC:
                node = sp[1]
                count += 1
                continue
            break
        sp = _split(node)
        if sp is None:
            return None
        tag, b = sp
        if tag == TAG_VAR:
            base = Var(b) if isinstance(b, int) else None
        elif tag == TAG_ZERO:
            base = Zero() if code_eq(b, 0) else None
        elif tag in (TAG_ADD, TAG_MUL):
            ab = _try_unpair(b)
            if ab is None:
                return None
            l, r = term_of(ab[0]), term_of(ab[1])
            base = (Add if tag == TAG_ADD else Mul)(l, r) if l is not None and r is not None else None
        else:
            base = None
        if base is None:
            return None
        if isinstance(base, Zero):
            return numeral_term(count)
        for _ in range(count):
            base = Succ(base)
        return base

    def formula_of(c):
        k = _key(c)
        if k in memo_f:
            return memo_f[k]
        memo_f[k] = r = compute_formula(c)
        return r

    def compute_formula(c):
        sp = _split(c)
        if sp is None:
            return None
        tag, b = sp
        if tag == TAG_EQ:
            ab = _try_unpair(b)
            if ab is None:
                return None
            l, r = term_of(ab[0]), term_of(ab[1])
            return Eq(l, r) if l is not None and r is not None else None
        if tag == TAG_NOT:
            body = formula_of(b)
            return Not(body) if body is not None else None
        if tag == TAG_AND:
            ab = _try_unpair(b)
            if ab is None:
                return None
            l, r = formula_of(ab[0]), formula_of(ab[1])
            return And(l, r) if l is not None and r is not None else None
        if tag == TAG_EXISTS:
            ab = _try_unpair(b)
            if ab is None or not isinstance(ab[0], int):
                return None
            body = formula_of(ab[1])
            return Exists(ab[0], body) if body is not None else None
        if tag == TAG_BOT:
            return Bot() if code_eq(b, 0) else None
        return None

    return term_of(root) if want_term else formula_of(root)


# ---------------------------------------------------------------------------
# The numeric diagonal


def diag(n):
    """Code of psi[numeral(n)/x0] where n codes psi with free vars in {x0}.

    The substitution runs on decoded syntax and the result is re-encoded;
    numerals of large codes stay lazy.
    """
    from .syntax import free_vars, substitute_closed

    f = decode_formula(n)
    if f is None:
        raise NonCodeError(f"not a formula code: {n!r}")
    fv = free_vars(f)
    if not fv <= {0}:
        raise ValueError(f"free variables {sorted(fv)} exceed {{x0}}")
    if 0 not in fv:
        return n
    return gn_formula(substitute_closed(f, 0, numeral_term(n)))

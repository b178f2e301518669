"""Abstract and concrete syntax for first-order arithmetic.

Terms are built from 0, S, +, * and indexed variables x0, x1, ...
Formulas use the connective basis ~, &, Ex plus equality, the constant
False, and applications of registered defined predicates.  Everything
else (Ax, |, ->, <->, <=, bounded quantifiers) is parser sugar that is
normalized away at parse time.

A `Numeral` term node stands for an iterated-successor tower S^n(0).
Small towers are always kept as explicit Succ chains; the node form is
used only for towers too large to materialize (their heights may even be
lazy codes, see the codes module).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

# Succ towers up to this height are real trees; taller ones become Numeral nodes.
NUMERAL_TREE_LIMIT = 4096


class SyntaxError_(ValueError):
    """Parse failure, carries a character position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownPredicateError(ValueError):
    pass


class ArityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    index: int


@dataclass(frozen=True)
class Zero(Term):
    pass


@dataclass(frozen=True)
class Succ(Term):
    arg: Term


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Numeral(Term):
    # value may be an int or a lazy code object; compared structurally.
    value: object


ZERO = Zero()


def numeral_term(n) -> Term:
    """The term S^n(0), as a real tree when small enough."""
    if isinstance(n, int) and 0 <= n <= NUMERAL_TREE_LIMIT:
        t: Term = ZERO
        for _ in range(n):
            t = Succ(t)
        return t
    return Numeral(n)


def numeral_height(t: Term):
    """Height of a pure successor tower, or None if t is not one."""
    count = 0
    while isinstance(t, Succ):
        count += 1
        t = t.arg
    if isinstance(t, Zero):
        return count
    if isinstance(t, Numeral):
        v = t.value
        if isinstance(v, int):
            return v + count
        return v if count == 0 else None
    return None


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: int
    body: Formula


@dataclass(frozen=True)
class Defined(Formula):
    name: str
    args: tuple


@dataclass(frozen=True)
class Bot(Formula):
    pass


BOT = Bot()


# Sugar builders (expand immediately into the basis).


def Or(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def Implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def Iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def Forall(i: int, body: Formula) -> Formula:
    return Not(Exists(i, Not(body)))


def Leq(a: Term, b: Term, witness: Optional[int] = None) -> Formula:
    """a <= b rendered as Ex k (k + a = b) with k fresh for a, b."""
    if witness is None:
        used = term_vars(a) | term_vars(b)
        witness = 0
        while witness in used:
            witness += 1
    return Exists(witness, Eq(Add(Var(witness), a), b))


def BoundedExists(i: int, bound: Term, body: Formula) -> Formula:
    return Exists(i, And(Leq(Var(i), bound), body))


def BoundedForall(i: int, bound: Term, body: Formula) -> Formula:
    return Not(Exists(i, And(Leq(Var(i), bound), Not(body))))


# ---------------------------------------------------------------------------
# Complexity classes


@dataclass(frozen=True, order=False)
class ComplexityClass:
    """A level of the arithmetical hierarchy: Delta0, Sigma(n) or Pi(n)."""

    kind: str  # "delta0" | "sigma" | "pi"
    level: int = 0

    def __post_init__(self):
        if self.kind == "delta0":
            assert self.level == 0
        else:
            assert self.kind in ("sigma", "pi") and self.level >= 1

    def __le__(self, other: "ComplexityClass") -> bool:
        if self == other:
            return True
        if self.kind == "delta0":
            return True
        if other.kind == "delta0":
            return False
        if self.level < other.level:
            return True
        if self.level > other.level:
            return False
        return False  # Sigma(n) and Pi(n) are incomparable

    def __str__(self):
        if self.kind == "delta0":
            return "Delta0"
        return f"{'Sigma' if self.kind == 'sigma' else 'Pi'}({self.level})"


DELTA0 = ComplexityClass("delta0", 0)


def Sigma(n: int) -> ComplexityClass:
    return ComplexityClass("sigma", n)


def Pi(n: int) -> ComplexityClass:
    return ComplexityClass("pi", n)


def parse_class(text: str) -> ComplexityClass:
    t = text.strip()
    if t == "Delta0":
        return DELTA0
    for kind in ("Sigma", "Pi"):
        if t.startswith(kind + "(") and t.endswith(")"):
            return ComplexityClass(kind.lower(), int(t[len(kind) + 1:-1]))
    raise ValueError(f"not a complexity class: {text!r}")


# ---------------------------------------------------------------------------
# Defined-predicate registry


@dataclass(frozen=True)
class DefinedPredicate:
    name: str
    arity: int
    complexity: ComplexityClass
    # native(args, ctx) -> True | False | None (None = cannot answer).
    native: Optional[Callable] = None
    # Pure-arithmetic formula with free variables exactly x0..x_{arity-1}.
    expansion: Optional[Formula] = None
    # The last argument is a function of the preceding ones; witness(args, ctx)
    # returns that value (or None outside the domain).
    functional: bool = False
    witness: Optional[Callable] = None


class DefinedRegistry:
    def __init__(self, predicates: Iterable[DefinedPredicate] = ()):
        self._by_name = {}
        for p in predicates:
            self.register(p)

    def register(self, pred: DefinedPredicate):
        if pred.expansion is not None:
            fv = free_vars(pred.expansion)
            if fv != set(range(pred.arity)):
                raise ArityError(
                    f"expansion of {pred.name} has free variables {sorted(fv)}, "
                    f"expected x0..x{pred.arity - 1}"
                )
            got = classify(pred.expansion, self)
            if not got <= pred.complexity:
                raise ValueError(
                    f"expansion of {pred.name} classifies as {got}, "
                    f"above declared {pred.complexity}"
                )
        self._by_name[pred.name] = pred

    def get(self, name: str) -> DefinedPredicate:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownPredicateError(f"unknown defined predicate: {name}")

    def __contains__(self, name):
        return name in self._by_name

    def names(self):
        return sorted(self._by_name)


EMPTY_REGISTRY = DefinedRegistry()


# ---------------------------------------------------------------------------
# Structural operations


def term_vars(t: Term) -> set:
    out = set()
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add(n.index)
        elif isinstance(n, Succ):
            stack.append(n.arg)
        elif isinstance(n, (Add, Mul)):
            stack.append(n.left)
            stack.append(n.right)
    return out


def free_vars(f: Formula) -> set:
    """Indices with at least one free occurrence in f."""
    if isinstance(f, Eq):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, And):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Exists):
        return free_vars(f.body) - {f.var}
    if isinstance(f, Defined):
        out = set()
        for t in f.args:
            out |= term_vars(t)
        return out
    if isinstance(f, Bot):
        return set()
    raise TypeError(f"not a formula: {f!r}")


def all_var_indices(f: Formula) -> set:
    """Every variable index occurring in f, free or bound."""
    if isinstance(f, Eq):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Not):
        return all_var_indices(f.body)
    if isinstance(f, And):
        return all_var_indices(f.left) | all_var_indices(f.right)
    if isinstance(f, Exists):
        return all_var_indices(f.body) | {f.var}
    if isinstance(f, Defined):
        out = set()
        for t in f.args:
            out |= term_vars(t)
        return out
    return set()


def term_is_closed(t: Term) -> bool:
    return not term_vars(t)


def _subst_term(t: Term, i: int, repl: Term) -> Term:
    if isinstance(t, Var):
        return repl if t.index == i else t
    if isinstance(t, Succ):
        return Succ(_subst_term(t.arg, i, repl))
    if isinstance(t, Add):
        return Add(_subst_term(t.left, i, repl), _subst_term(t.right, i, repl))
    if isinstance(t, Mul):
        return Mul(_subst_term(t.left, i, repl), _subst_term(t.right, i, repl))
    return t


def substitute_closed(f: Formula, i: int, t: Term) -> Formula:
    """Replace free occurrences of x_i by the closed term t.

    Only closed replacements are accepted, so no capture can occur.
    """
    if not term_is_closed(t):
        raise ValueError("substitute_closed requires a closed term")
    return _substitute(f, i, t)


def _substitute(f: Formula, i: int, t: Term) -> Formula:
    if isinstance(f, Eq):
        return Eq(_subst_term(f.left, i, t), _subst_term(f.right, i, t))
    if isinstance(f, Not):
        return Not(_substitute(f.body, i, t))
    if isinstance(f, And):
        return And(_substitute(f.left, i, t), _substitute(f.right, i, t))
    if isinstance(f, Exists):
        if f.var == i:
            return f
        return Exists(f.var, _substitute(f.body, i, t))
    if isinstance(f, Defined):
        return Defined(f.name, tuple(_subst_term(a, i, t) for a in f.args))
    return f


def rename_free(f: Formula, mapping: dict) -> Formula:
    """Rename free variables by an index map; targets must not be captured.

    Internal helper used when instantiating expansion templates.  Raises if
    a renamed occurrence would land under a binder of its target index.
    """

    def go(g, active):
        if isinstance(g, Eq):
            return Eq(go_t(g.left, active), go_t(g.right, active))
        if isinstance(g, Not):
            return Not(go(g.body, active))
        if isinstance(g, And):
            return And(go(g.left, active), go(g.right, active))
        if isinstance(g, Exists):
            return Exists(g.var, go(g.body, active | {g.var}))
        if isinstance(g, Defined):
            return Defined(g.name, tuple(go_t(a, active) for a in g.args))
        return g

    def go_t(t, active):
        if isinstance(t, Var):
            if t.index in mapping and t.index not in active:
                j = mapping[t.index]
                if j in active:
                    raise ValueError(f"renaming x{t.index} -> x{j} would be captured")
                return Var(j)
            return t
        if isinstance(t, Succ):
            return Succ(go_t(t.arg, active))
        if isinstance(t, Add):
            return Add(go_t(t.left, active), go_t(t.right, active))
        if isinstance(t, Mul):
            return Mul(go_t(t.left, active), go_t(t.right, active))
        return t

    return go(f, frozenset())


def instantiate(template: Formula, args: list) -> Formula:
    """Plug terms (possibly open) into free x0..x_{k-1} of a template.

    Bound variables of the template are first shifted above every index
    occurring in the argument terms, so no capture is possible.
    """
    arg_vars = set()
    for a in args:
        arg_vars |= term_vars(a)
    bound = all_var_indices(template) | set(range(len(args)))
    base = max(bound | arg_vars, default=-1) + 1

    def shift(g, depth_map):
        if isinstance(g, Eq):
            return Eq(shift_t(g.left, depth_map), shift_t(g.right, depth_map))
        if isinstance(g, Not):
            return Not(shift(g.body, depth_map))
        if isinstance(g, And):
            return And(shift(g.left, depth_map), shift(g.right, depth_map))
        if isinstance(g, Exists):
            new = base + len(depth_map)
            return Exists(new, shift(g.body, {**depth_map, g.var: new}))
        if isinstance(g, Defined):
            return Defined(g.name, tuple(shift_t(a, depth_map) for a in g.args))
        return g

    def shift_t(t, depth_map):
        if isinstance(t, Var):
            if t.index in depth_map:
                return Var(depth_map[t.index])
            if t.index < len(args):
                return args[t.index]
            return t
        if isinstance(t, Succ):
            return Succ(shift_t(t.arg, depth_map))
        if isinstance(t, Add):
            return Add(shift_t(t.left, depth_map), shift_t(t.right, depth_map))
        if isinstance(t, Mul):
            return Mul(shift_t(t.left, depth_map), shift_t(t.right, depth_map))
        return t

    return shift(template, {})


# ---------------------------------------------------------------------------
# Concrete syntax


_KEYWORDS = {"S", "False"}


class _Parser:
    def __init__(self, text: str, registry: DefinedRegistry):
        self.text = text
        self.pos = 0
        self.registry = registry

    def error(self, msg):
        raise SyntaxError_(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, s: str):
        self.skip_ws()
        if self.text.startswith(s, self.pos):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str):
        if not self.eat(s):
            self.error(f"expected {s!r}")

    def number(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            self.error("expected a decimal index")
        return int(self.text[start:self.pos])

    def ident(self):
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.text) and (self.text[self.pos].isalpha() or self.text[self.pos] == "_"):
            self.pos += 1
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "_"
            ):
                self.pos += 1
            return self.text[start:self.pos]
        return None

    # Terms

    def term(self) -> Term:
        self.skip_ws()
        c = self.peek()
        if c == "(":
            self.expect("(")
            left = self.term()
            self.skip_ws()
            if self.eat("+"):
                op = Add
            elif self.eat("*"):
                op = Mul
            else:
                self.error("expected '+' or '*'")
            right = self.term()
            self.expect(")")
            return op(left, right)
        if c == "0":
            self.pos += 1
            return ZERO
        if c == "x":
            self.pos += 1
            return Var(self.number())
        if c == "S":
            # Parse S(...(S(t))...) towers iteratively to survive deep nesting.
            depth = 0
            while True:
                self.skip_ws()
                save = self.pos
                if self.text.startswith("S", self.pos):
                    self.pos += 1
                    if self.peek() == "(":
                        self.pos += 1
                        depth += 1
                        continue
                    self.pos = save
                break
            if depth == 0:
                self.error("expected term")
            inner = self.term()
            for _ in range(depth):
                self.expect(")")
            if isinstance(inner, Zero) and depth > NUMERAL_TREE_LIMIT:
                return Numeral(depth)
            for _ in range(depth):
                inner = Succ(inner)
            return inner
        self.error("expected term")

    # Formulas, precedence: -> (lowest, right assoc), |, &, unary/atoms.

    def formula(self) -> Formula:
        left = self.or_level()
        self.skip_ws()
        if self.eat("<->"):
            right = self.formula()
            return Iff(left, right)
        if self.eat("->"):
            right = self.formula()
            return Implies(left, right)
        return left

    def or_level(self) -> Formula:
        left = self.and_level()
        while True:
            self.skip_ws()
            save = self.pos
            if self.eat("|"):
                # not part of '->'; '|' is a single char so no conflict
                right = self.and_level()
                left = Or(left, right)
            else:
                self.pos = save
                return left

    def and_level(self) -> Formula:
        left = self.unary()
        while self.eat("&"):
            right = self.unary()
            left = And(left, right)
        return left

    def unary(self) -> Formula:
        self.skip_ws()
        if self.eat("~"):
            return Not(self.unary())
        if self.text.startswith("Ex", self.pos) or self.text.startswith("Ax", self.pos):
            univ = self.text[self.pos] == "A"
            self.pos += 2
            idx = self.number()
            bound = None
            self.skip_ws()
            if self.eat("<="):
                bound = self.term()
            body = self.unary()
            if bound is not None:
                return (BoundedForall if univ else BoundedExists)(idx, bound, body)
            return Forall(idx, body) if univ else Exists(idx, body)
        if self.peek() == "(":
            # Could be a bracketed formula or a bracketed term: try the
            # formula reading first and fall back to an equation atom.
            save = self.pos
            try:
                self.expect("(")
                f = self.formula()
                self.expect(")")
                return f
            except SyntaxError_:
                self.pos = save
        if self.text.startswith("False", self.pos):
            nxt = self.pos + 5
            if nxt >= len(self.text) or not (self.text[nxt].isalnum() or self.text[nxt] == "_"):
                self.pos = nxt
                return BOT
        # Defined predicate application?
        save = self.pos
        name = self.ident()
        if name and name not in _KEYWORDS and name[0] != "x" and self.peek() == "(":
            pred = self.registry.get(name)
            self.expect("(")
            args = [self.term()]
            while self.eat(","):
                args.append(self.term())
            self.expect(")")
            if len(args) != pred.arity:
                raise ArityError(
                    f"{name} expects {pred.arity} arguments, got {len(args)}"
                )
            return Defined(name, tuple(args))
        self.pos = save
        # Fall back to an equation or comparison.
        left = self.term()
        self.skip_ws()
        if self.eat("<="):
            right = self.term()
            return Leq(left, right)
        self.expect("=")
        right = self.term()
        return Eq(left, right)


def parse_formula(text: str, registry: DefinedRegistry = EMPTY_REGISTRY) -> Formula:
    p = _Parser(text, registry)
    f = p.formula()
    p.skip_ws()
    if p.pos != len(text):
        p.error("trailing input")
    return f


def parse_term(text: str) -> Term:
    p = _Parser(text, EMPTY_REGISTRY)
    t = p.term()
    p.skip_ws()
    if p.pos != len(text):
        p.error("trailing input")
    return t


class UnrenderableError(ValueError):
    """Raised when a formula contains a numeral too large to print."""


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return f"x{t.index}"
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, Succ):
        # Iterative to survive deep towers.
        depth = 0
        while isinstance(t, Succ):
            depth += 1
            t = t.arg
        return "S(" * depth + render_term(t) + ")" * depth
    if isinstance(t, Add):
        return f"({render_term(t.left)} + {render_term(t.right)})"
    if isinstance(t, Mul):
        return f"({render_term(t.left)} * {render_term(t.right)})"
    if isinstance(t, Numeral):
        if isinstance(t.value, int) and t.value <= NUMERAL_TREE_LIMIT:
            return render_term(numeral_term(t.value))
        raise UnrenderableError(
            "numeral too large for the concrete grammar; keep it symbolic"
        )
    raise TypeError(f"not a term: {t!r}")


def render(f: Formula) -> str:
    if isinstance(f, Eq):
        return f"{render_term(f.left)} = {render_term(f.right)}"
    if isinstance(f, Not):
        body = render(f.body)
        return f"~{body}" if body.startswith("(") else f"~ {body}"
    if isinstance(f, And):
        return f"({render(f.left)} & {render(f.right)})"
    if isinstance(f, Exists):
        return f"Ex{f.var} ({render(f.body)})"
    if isinstance(f, Defined):
        return f"{f.name}({', '.join(render_term(a) for a in f.args)})"
    if isinstance(f, Bot):
        return "False"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Classification


def _le_guard_shape(f: Formula):
    """Match Ex j (x_j + a = b), the desugared form of a <= b.

    Returns (a, b) when f has that shape with the witness not recurring.
    """
    if isinstance(f, Exists) and isinstance(f.body, Eq):
        lhs, rhs = f.body.left, f.body.right
        if isinstance(lhs, Add) and isinstance(lhs.left, Var) and lhs.left.index == f.var:
            if f.var not in term_vars(lhs.right) and f.var not in term_vars(rhs):
                return lhs.right, rhs
    return None


def _bounded_exists_shape(f: Formula):
    """Match Ex i ((x_i <= t) & body), also with the strict guard S(x_i) <= t,
    with t not mentioning x_i."""
    if isinstance(f, Exists) and isinstance(f.body, And):
        guard = _le_guard_shape(f.body.left)
        if guard is not None:
            a, b = guard
            if isinstance(a, Succ):
                a = a.arg
            if isinstance(a, Var) and a.index == f.var and f.var not in term_vars(b):
                return f.var, b, f.body.right
    return None


# Internal lattice points: ("D",0) Delta0, ("S",n), ("P",n), ("B",n) for a
# Boolean combination of level-n formulas (contained in Delta_{n+1}).


def _lat_le(a, b):
    ka, na = a
    kb, nb = b
    if a == b:
        return True
    if ka == "D":
        return True
    if kb == "D":
        return False
    if na < nb:
        return True
    if na > nb:
        return False
    # same level: S,P <= B
    return kb == "B" and ka in ("S", "P")


def _lat_lub(a, b):
    if _lat_le(a, b):
        return b
    if _lat_le(b, a):
        return a
    # Incomparable: same level, {S,P} pair (or with B, handled above).
    n = max(a[1], b[1])
    return ("B", n)


def _lat_not(a):
    k, n = a
    if k == "S":
        return ("P", n)
    if k == "P":
        return ("S", n)
    return a


def _lat_exists(a):
    k, n = a
    if k == "D":
        return ("S", 1)
    if k == "S":
        return a
    return ("S", n + 1)


def _class_to_lat(c: ComplexityClass):
    if c.kind == "delta0":
        return ("D", 0)
    return ("S" if c.kind == "sigma" else "P", c.level)


def _lat_to_class(a) -> ComplexityClass:
    k, n = a
    if k == "D":
        return DELTA0
    if k == "S":
        return Sigma(n)
    if k == "P":
        return Pi(n)
    # A proper Boolean combination of level-n formulas sits inside
    # Delta_{n+1}; report the Sigma side deterministically.
    return Sigma(n + 1)


def _classify_lat(f: Formula, registry: DefinedRegistry):
    if isinstance(f, (Eq, Bot)):
        return ("D", 0)
    if isinstance(f, Defined):
        return _class_to_lat(registry.get(f.name).complexity)
    if isinstance(f, Not):
        # Bounded-universal pattern ~Ex i ((x_i <= t) & ~body): a term-bounded
        # universal quantifier preserves the class of its body (the standard
        # closure of every level under bounded quantification).
        shape = _bounded_exists_shape(f.body)
        if shape is not None:
            _, _, inner = shape
            if isinstance(inner, Not):
                return _classify_lat(inner.body, registry)
        return _lat_not(_classify_lat(f.body, registry))
    if isinstance(f, And):
        return _lat_lub(
            _classify_lat(f.left, registry), _classify_lat(f.right, registry)
        )
    if isinstance(f, Exists):
        if _le_guard_shape(f) is not None:
            return ("D", 0)
        shape = _bounded_exists_shape(f)
        if shape is not None:
            _, _, body = shape
            # Bounded existential: class preserved.
            return _classify_lat(body, registry)
        return _lat_exists(_classify_lat(f.body, registry))
    raise TypeError(f"not a formula: {f!r}")


def classify(f: Formula, registry: DefinedRegistry = EMPTY_REGISTRY) -> ComplexityClass:
    """Least arithmetical-hierarchy class assignable by the standard rules."""
    return _lat_to_class(_classify_lat(f, registry))

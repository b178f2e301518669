"""Prime-factorization coding of finitely supported sequences.

A natural s codes the sequence k -> el(s, k) through the factorization
s + 1 = prod_k p_k^el(s,k), where p_0 = 2, p_1 = 3, p_2 = 5, ...  Every
natural is a valid sequence code and 0 codes the all-zero sequence.

el works by repeated exact division, never by factorization tables, so it
stays correct on codes thousands of bits wide.

`FactoredSeq` holds a sequence code in factored form for the cases where
the product itself cannot be materialized (exponents may be lazy codes).
"""

from __future__ import annotations

from .codes import Code, code_eq

_PRIMES = [2, 3, 5, 7, 11, 13]


def nth_prime(k: int) -> int:
    """The (k+1)-th prime: nth_prime(0) = 2."""
    if k < 0:
        raise ValueError("prime index must be a natural")
    while len(_PRIMES) <= k:
        c = _PRIMES[-1] + 2
        while True:
            for p in _PRIMES:
                if p * p > c:
                    _PRIMES.append(c)
                    break
                if c % p == 0:
                    break
            else:
                _PRIMES.append(c)
                break
            if _PRIMES[-1] == c:
                break
            c += 2
    return _PRIMES[k]


def el(s: int, k: int) -> int:
    """Exponent of p_k in s + 1."""
    if s < 0:
        raise ValueError("sequence codes are naturals")
    p = nth_prime(k)
    n = s + 1
    a = 0
    while n % p == 0:
        n //= p
        a += 1
    return a


def subst(s: int, a: int, k: int) -> int:
    """The unique t with el(t, k) = a and el(t, i) = el(s, i) elsewhere."""
    p = nth_prime(k)
    n = s + 1
    while n % p == 0:
        n //= p
    return n * p**a - 1


def encode_seq(values) -> int:
    """Minimal code whose sequence starts with `values` and is 0 beyond."""
    n = 1
    for k, v in enumerate(values):
        if v < 0:
            raise ValueError("sequence entries are naturals")
        n *= nth_prime(k) ** v
    return n - 1


def decode_seq(s: int, upto: int):
    """The first `upto` entries el(s, 0), ..., el(s, upto-1)."""
    return [el(s, k) for k in range(upto)]


class FactoredSeq:
    """A sequence code kept as its exponent map {k: el(s, k)}.

    Used when the product would be astronomically large, e.g. when an
    exponent is a lazy code.  Exponents may be ints or Code objects.
    """

    __slots__ = ("exponents",)

    def __init__(self, exponents: dict):
        self.exponents = {
            k: v for k, v in exponents.items() if not (isinstance(v, int) and v == 0)
        }

    def el(self, k: int):
        return self.exponents.get(k, 0)

    def subst(self, a, k: int) -> "FactoredSeq":
        out = dict(self.exponents)
        out[k] = a
        return FactoredSeq(out)

    def decode(self, upto: int):
        return [self.el(k) for k in range(upto)]

    def value(self) -> int:
        """Materialize; raises OverflowError on lazy exponents."""
        n = 1
        for k, v in self.exponents.items():
            if not isinstance(v, int):
                raise OverflowError("lazy exponent cannot be materialized")
            n *= nth_prime(k) ** v
        return n - 1

    @staticmethod
    def of(s) -> "FactoredSeq":
        if isinstance(s, FactoredSeq):
            return s
        out = {}
        n = s + 1
        k = 0
        while n > 1:
            p = nth_prime(k)
            a = 0
            while n % p == 0:
                n //= p
                a += 1
            if a:
                out[k] = a
            k += 1
            if p * p > s + 1 and n > 1:
                # Remaining cofactor is a single prime; find its index.
                while nth_prime(k) != n:
                    k += 1
                out[k] = 1
                break
        return FactoredSeq(out)

    def __eq__(self, other):
        if isinstance(other, int):
            try:
                return self.value() == other
            except OverflowError:
                return False
        if isinstance(other, FactoredSeq):
            keys = set(self.exponents) | set(other.exponents)
            return all(code_eq(self.el(k), other.el(k)) for k in keys)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(
            (k, v if isinstance(v, int) else v._hash) for k, v in self.exponents.items()
        ))

    def __repr__(self):
        return f"FactoredSeq({self.exponents!r})"


def seq_el(s, k: int):
    """el on either representation."""
    if isinstance(s, FactoredSeq):
        return s.el(k)
    return el(s, k)


def seq_subst(s, a, k: int):
    """subst on either representation; goes factored when a is lazy."""
    if isinstance(s, FactoredSeq):
        return s.subst(a, k)
    if isinstance(a, Code):
        return FactoredSeq.of(s).subst(a, k)
    return subst(s, a, k)

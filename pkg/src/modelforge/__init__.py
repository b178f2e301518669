"""Exact arithmetization toolkit: codecs, evaluation, model codes, forests."""

import sys as _sys

# Compiled graph formulas and their codes form deep linear chains; plain
# recursion over them needs headroom well beyond the CPython default.
if _sys.getrecursionlimit() < 100_000:
    _sys.setrecursionlimit(100_000)

from .syntax import (  # noqa: F401
    Add,
    And,
    Bot,
    BOT,
    ComplexityClass,
    Defined,
    DefinedPredicate,
    DefinedRegistry,
    DELTA0,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Mul,
    Not,
    Numeral,
    Or,
    Pi,
    Sigma,
    Succ,
    Term,
    Var,
    Zero,
    ZERO,
    classify,
    free_vars,
    numeral_term,
    parse_formula,
    parse_term,
    render,
    render_term,
    substitute_closed,
)
from .codes import (  # noqa: F401
    Code,
    NumCode,
    PairCode,
    code_digest,
    code_eq,
    code_value,
    decode_formula,
    decode_term,
    diag,
    gn_formula,
    gn_term,
    is_formula_code,
    is_term_code,
    num,
    pair,
    unpair,
)

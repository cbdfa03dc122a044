"""Formal rational expressions over a multipartite alphabet.

An alphabet has G parts; letters in the same part do not commute with each
other, letters from different parts do.  A part may additionally carry a
primed copy of its letters (written ``X1_2'``), used as the target alphabet
of the difference-differential operators: for evaluation purposes a primed
copy behaves like an extra part sitting immediately before its unprimed
sibling.

Expression grammar (whitespace insignificant, columns reported 0-based):

    expr     := term (("+" | "-") term)*
    term     := factor ("*" factor)*
    factor   := rational | variable | "inv" "(" expr ")" | "(" expr ")" | "-" factor
    variable := "X" <part> "_" <index> ["'"]
    rational := <int> ("/" <posint>)?

Sums and products are flattened n-ary nodes keeping source order.  The only
rewriting ever applied is constant folding of literal arithmetic (adjacent
constant runs, unit coefficients, inverses of nonzero constants); no
cancellation, no reordering of noncommuting factors, and a written
``0 * inv(X1_1)`` keeps its inverse node so the written domain survives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

_F0 = Fraction(0)
_F1 = Fraction(1)


# -- alphabet -----------------------------------------------------------------


@dataclass(frozen=True)
class Alphabet:
    """Part sizes plus the set of parts that carry a primed letter copy."""

    sizes: tuple[int, ...]
    primed_parts: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "primed_parts", frozenset(self.primed_parts))
        if not self.sizes:
            raise ValueError("alphabet needs at least one part")
        if any(s < 1 for s in self.sizes):
            raise ValueError("every part needs at least one letter")
        if not all(1 <= p <= len(self.sizes) for p in self.primed_parts):
            raise ValueError("primed part out of range")

    @property
    def parts(self) -> int:
        return len(self.sizes)

    def size_of(self, part: int) -> int:
        return self.sizes[part - 1]

    def slots(self) -> tuple[tuple[int, bool], ...]:
        """Evaluation slot order: parts ascending, primed copy before plain."""
        out = []
        for part in range(1, self.parts + 1):
            if part in self.primed_parts:
                out.append((part, True))
            out.append((part, False))
        return tuple(out)

    def slot_index(self, part: int, primed: bool) -> int:
        return self.slots().index((part, primed))

    def letters(self) -> tuple["Var", ...]:
        """All variables in slot-major, index-minor order (the flat order)."""
        out = []
        for part, primed in self.slots():
            out.extend(Var(part, j, primed) for j in range(1, self.size_of(part) + 1))
        return tuple(out)

    def with_primed(self, part: int) -> "Alphabet":
        if not 1 <= part <= self.parts:
            raise ValueError(f"part {part} out of range")
        return Alphabet(self.sizes, self.primed_parts | {part})


# -- AST ----------------------------------------------------------------------


class Expr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True, slots=True)
class Var(Expr):
    part: int
    index: int
    primed: bool = False


@dataclass(frozen=True, slots=True)
class Sum(Expr):
    terms: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValueError("Sum needs at least two terms")


@dataclass(frozen=True, slots=True)
class Product(Expr):
    factors: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("Product needs at least two factors")


@dataclass(frozen=True, slots=True)
class Inverse(Expr):
    arg: Expr


def _merge_const_runs(children: list[Expr], combine) -> list[Expr]:
    out: list[Expr] = []
    for c in children:
        if isinstance(c, Const) and out and isinstance(out[-1], Const):
            out[-1] = Const(combine(out[-1].value, c.value))
        else:
            out.append(c)
    return out


def expr_sum(terms: Iterable[Expr]) -> Expr:
    """n-ary sum builder: flattens, folds adjacent literals, drops zeros."""
    flat: list[Expr] = []
    for t in terms:
        flat.extend(t.terms) if isinstance(t, Sum) else flat.append(t)
    flat = _merge_const_runs(flat, lambda a, b: a + b)
    flat = [t for t in flat if not (isinstance(t, Const) and t.value == 0)]
    if not flat:
        return Const(_F0)
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def expr_product(factors: Iterable[Expr], *, absorb_zero: bool = False) -> Expr:
    """n-ary product builder: flattens and folds adjacent literals.

    Unit coefficients are dropped.  A literal zero factor only collapses the
    whole product when ``absorb_zero`` is set; the default keeps it so that a
    written expression keeps its written domain.
    """
    flat: list[Expr] = []
    for f in factors:
        flat.extend(f.factors) if isinstance(f, Product) else flat.append(f)
    flat = _merge_const_runs(flat, lambda a, b: a * b)
    if absorb_zero and any(isinstance(f, Const) and f.value == 0 for f in flat):
        return Const(_F0)
    kept = [f for f in flat if not (isinstance(f, Const) and f.value == 1)]
    if not kept:
        return Const(_F1)
    if len(kept) == 1:
        return kept[0]
    return Product(tuple(kept))


def expr_neg(e: Expr) -> Expr:
    return expr_product([Const(-_F1), e])


def inverse_of(e: Expr) -> Expr:
    """Inverse node; literal nonzero constants fold, everything else stays."""
    if isinstance(e, Const) and e.value != 0:
        return Const(1 / e.value)
    return Inverse(e)


def subexpr_at(e: Expr, path: Sequence[int]) -> Expr:
    """Child lookup along a path of 0-based child positions."""
    node = e
    for k in path:
        if isinstance(node, Sum):
            node = node.terms[k]
        elif isinstance(node, Product):
            node = node.factors[k]
        elif isinstance(node, Inverse):
            node = node.arg
        else:
            raise ValueError("path leads through a leaf")
    return node


def walk(e: Expr) -> Iterator[Expr]:
    """Every node once, children before parents, shared subtrees deduplicated."""
    seen: set[int] = set()
    stack = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            yield node
            continue
        stack.append((node, True))
        if isinstance(node, Sum):
            stack.extend((t, False) for t in node.terms)
        elif isinstance(node, Product):
            stack.extend((f, False) for f in node.factors)
        elif isinstance(node, Inverse):
            stack.append((node.arg, False))


def inversion_height(e: Expr) -> int:
    """Nesting depth of inverses (0 for polynomial expressions)."""
    heights: dict[int, int] = {}
    for node in walk(e):
        if isinstance(node, (Const, Var)):
            heights[id(node)] = 0
        elif isinstance(node, Sum):
            heights[id(node)] = max(heights[id(t)] for t in node.terms)
        elif isinstance(node, Product):
            heights[id(node)] = max(heights[id(f)] for f in node.factors)
        elif isinstance(node, Inverse):
            heights[id(node)] = 1 + heights[id(node.arg)]
    return heights[id(e)]


def validate_vars(e: Expr, alphabet: Alphabet) -> None:
    """Raise if any variable does not fit the alphabet."""
    for node in walk(e):
        if isinstance(node, Var):
            if not 1 <= node.part <= alphabet.parts:
                raise ValueError(f"variable X{node.part}_{node.index}: alphabet has "
                                 f"{alphabet.parts} parts")
            if not 1 <= node.index <= alphabet.size_of(node.part):
                raise ValueError(f"variable index out of range: part {node.part} has "
                                 f"{alphabet.size_of(node.part)} letters")
            if node.primed and node.part not in alphabet.primed_parts:
                raise ValueError(f"part {node.part} has no primed letters here")


# -- parsing --------------------------------------------------------------------


class ExprSyntaxError(ValueError):
    """Parse failure with a 0-based column position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"syntax error at column {position}: {message}")
        self.position = position


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<var>X(?P<part>\d+)_(?P<index>\d+)(?P<prime>')?)
  | (?P<int>\d+)
  | (?P<inv>inv\b)
  | (?P<op>[+\-*/()])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            bad = text[pos]
            if bad == "X":
                # a variable that fizzled out: point at where it went wrong
                tail = re.match(r"X\d*_?", text[pos:])
                raise ExprSyntaxError("malformed variable, expected X<part>_<index>",
                                      pos + (tail.end() if tail else 0))
            raise ExprSyntaxError(f"unexpected character {bad!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), m.start()))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], alphabet: Alphabet):
        self.tokens = tokens
        self.alphabet = alphabet
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, text: str):
        kind, val, pos = self.peek()
        if val != text:
            got = repr(val) if kind != "eof" else "end of input"
            raise ExprSyntaxError(f"expected {text!r}, got {got}", pos)
        return self.advance()

    def parse_expr(self) -> Expr:
        terms = [self.parse_term()]
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            rhs = self.parse_term()
            terms.append(expr_neg(rhs) if op == "-" else rhs)
        return expr_sum(terms)

    def parse_term(self) -> Expr:
        factors = [self.parse_factor()]
        while self.peek()[1] == "*":
            self.advance()
            factors.append(self.parse_factor())
        return expr_product(factors)

    def parse_factor(self) -> Expr:
        kind, val, pos = self.peek()
        if val == "-":
            self.advance()
            return expr_neg(self.parse_factor())
        if kind == "int":
            return Const(self._rational())
        if kind == "var":
            return self._variable()
        if kind == "inv":
            self.advance()
            self.expect("(")
            inner = self.parse_expr()
            self.expect(")")
            return inverse_of(inner)
        if val == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        got = repr(val) if kind != "eof" else "end of input"
        raise ExprSyntaxError(f"expected a factor, got {got}", pos)

    def _rational(self) -> Fraction:
        _, digits, _ = self.advance()
        num = int(digits)
        if self.peek()[1] == "/":
            self.advance()
            kind, dval, dpos = self.peek()
            if kind != "int" or int(dval) == 0:
                raise ExprSyntaxError("expected a positive integer denominator", dpos)
            self.advance()
            return Fraction(num, int(dval))
        return Fraction(num)

    def _variable(self) -> Expr:
        _, text, pos = self.advance()
        m = _TOKEN_RE.match(text)
        part = int(m.group("part"))
        index = int(m.group("index"))
        primed = m.group("prime") is not None
        a = self.alphabet
        if not 1 <= part <= a.parts:
            raise ExprSyntaxError(f"unknown variable {text}: alphabet has {a.parts} parts", pos)
        if not 1 <= index <= a.size_of(part):
            raise ExprSyntaxError(f"index out of range: part {part} has "
                                  f"{a.size_of(part)} letters", pos)
        if primed and part not in a.primed_parts:
            raise ExprSyntaxError(f"part {part} has no primed letters in this alphabet", pos)
        return Var(part, index, primed)


def parse(text: str, alphabet: Alphabet) -> Expr:
    """Parse the grammar above; raises ExprSyntaxError with a column."""
    parser = _Parser(_tokenize(text), alphabet)
    e = parser.parse_expr()
    kind, val, pos = parser.peek()
    if kind != "eof":
        raise ExprSyntaxError(f"unexpected trailing {val!r}", pos)
    return e


# -- formatting -------------------------------------------------------------------


def _split_negative(e: Expr) -> tuple[bool, Expr] | None:
    # recognize terms that print better after a binary minus
    if isinstance(e, Const) and e.value < 0:
        return True, Const(-e.value)
    if isinstance(e, Product) and isinstance(e.factors[0], Const) and e.factors[0].value < 0:
        flipped = Const(-e.factors[0].value)
        rest = e.factors[1:]
        if flipped.value == 1:
            return True, rest[0] if len(rest) == 1 else Product(rest)
        return True, Product((flipped,) + rest)
    return None


def format_expr(e: Expr) -> str:
    """Render to the surface grammar; parse(format_expr(e)) == e on builder output."""
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return f"X{e.part}_{e.index}" + ("'" if e.primed else "")
    if isinstance(e, Inverse):
        return f"inv({format_expr(e.arg)})"
    if isinstance(e, Product):
        neg = _split_negative(e)
        if neg is not None:
            return "-" + _format_factor(neg[1])
        return " * ".join(_format_factor(f) for f in e.factors)
    if isinstance(e, Sum):
        pieces = [_format_term(e.terms[0])]
        for t in e.terms[1:]:
            neg = _split_negative(t)
            if neg is not None:
                pieces.append(" - " + _format_term(neg[1]))
            else:
                pieces.append(" + " + _format_term(t))
        return "".join(pieces)
    raise TypeError(f"not an expression node: {type(e).__name__}")


def _format_term(e: Expr) -> str:
    return f"({format_expr(e)})" if isinstance(e, Sum) else format_expr(e)


def _format_factor(e: Expr) -> str:
    if isinstance(e, Sum):
        return f"({format_expr(e)})"
    return format_expr(e)


# -- polynomial normal form ---------------------------------------------------------


class ExprHasInverse(ValueError):
    """Raised when a polynomial-only operation meets an inverse node."""


#: A monomial assigns each slot a word: a tuple of 1-based letter indices.
Monomial = tuple[tuple[int, ...], ...]


class PolyNormalForm:
    """Coefficient map of an inverse-free expression.

    Keys are monomials (one word per alphabet slot); letters from different
    slots are kept in separate words, which is exactly the cross-part
    commutation: products concatenate slot-wise.
    """

    __slots__ = ("slot_count", "terms")

    def __init__(self, slot_count: int, terms: dict[Monomial, Fraction]):
        self.slot_count = slot_count
        self.terms = {m: c for m, c in terms.items() if c != 0}

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (isinstance(other, PolyNormalForm)
                and self.slot_count == other.slot_count
                and self.terms == other.terms)

    def __hash__(self):
        raise TypeError("PolyNormalForm is not hashable")

    def max_slot_degree(self) -> int:
        """Longest word appearing in any single slot."""
        if not self.terms:
            return 0
        return max(max(len(w) for w in mono) for mono in self.terms)

    def sorted_items(self) -> list[tuple[Monomial, Fraction]]:
        """Deterministic order: slot by slot, shorter words first, then lex."""
        return sorted(self.terms.items(),
                      key=lambda kv: tuple((len(w), w) for w in kv[0]))

    def __repr__(self) -> str:
        return f"PolyNormalForm({self.terms!r})"


def _nf_mul(a: dict, b: dict, slots: int) -> dict:
    out: dict[Monomial, Fraction] = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            key = tuple(ma[s] + mb[s] for s in range(slots))
            c = out.get(key, _F0) + ca * cb
            if c:
                out[key] = c
            elif key in out:
                del out[key]
    return out


def poly_normal_form(e: Expr, alphabet: Alphabet) -> PolyNormalForm:
    """Expand an inverse-free expression into its monomial coefficient map.

    Raises ExprHasInverse on any inverse node.  Addition and multiplication
    of expressions match addition and slot-wise concatenation product of the
    returned forms, so equality of forms decides equality of polynomial
    functions exactly.
    """
    validate_vars(e, alphabet)
    slots = alphabet.slots()
    ns = len(slots)
    one: Monomial = tuple(() for _ in range(ns))
    memo: dict[int, dict] = {}

    def rec(node: Expr) -> dict:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = {one: node.value} if node.value else {}
        elif isinstance(node, Var):
            s = slots.index((node.part, node.primed))
            mono = tuple((node.index,) if k == s else () for k in range(ns))
            out = {mono: _F1}
        elif isinstance(node, Sum):
            out = {}
            for t in node.terms:
                for m, c in rec(t).items():
                    acc = out.get(m, _F0) + c
                    if acc:
                        out[m] = acc
                    elif m in out:
                        del out[m]
        elif isinstance(node, Product):
            out = rec(node.factors[0])
            for f in node.factors[1:]:
                out = _nf_mul(out, rec(f), ns)
        elif isinstance(node, Inverse):
            raise ExprHasInverse("expression contains an inverse; no polynomial normal form")
        else:
            raise TypeError(f"not an expression node: {type(node).__name__}")
        memo[id(node)] = out
        return out

    return PolyNormalForm(ns, rec(e))

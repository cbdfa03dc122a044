"""Difference-differential operators on one part, and their block oracle.

``delta(i, j, e)`` differentiates an expression with respect to letter j of
part i.  The result lives over the alphabet extended with a primed copy of
part i (slot ordered just before the original part), because the product
rule is "skew": factors to the left of the differentiated one get renamed
to their primed copies,

    delta(f1 * ... * fk)  =  sum over m of  f1' ... f(m-1)' * delta(fm) * f(m+1) ... fk,

with the m = k term first.  On an inverse the rule is
delta(inv(r)) = -inv(r') * delta(r) * inv(r).

``fund_block_point`` packages two part-1 tuples and a direction vector into
a single block-matrix point.  Evaluating an expression there produces an
upper-triangular 2x2 block value whose corner is the directional delta;
``verify_fund`` checks that identity exactly, block by block.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .evaluation import MpPoint, Undefined, UndefinedError, mp_evaluate
from .expression import (
    Alphabet,
    Const,
    Expr,
    Inverse,
    Product,
    Sum,
    Var,
    expr_neg,
    expr_product,
    expr_sum,
    inverse_of,
    validate_vars,
)
from .matrix_kernel import Matrix, kron, scalar_matrix


def prime_part(e: Expr, part: int) -> Expr:
    """Rename every unprimed letter of the given part to its primed copy."""
    memo: dict[int, Expr] = {}

    def rec(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out: Expr = node
        elif isinstance(node, Var):
            if node.part == part and node.primed:
                raise ValueError(f"letter X{node.part}_{node.index}' is already primed")
            if node.part == part:
                out = Var(node.part, node.index, primed=True)
            else:
                out = node
        elif isinstance(node, Sum):
            out = Sum(tuple(rec(t) for t in node.terms))
        elif isinstance(node, Product):
            out = Product(tuple(rec(f) for f in node.factors))
        else:
            assert isinstance(node, Inverse)
            out = Inverse(rec(node.arg))
        memo[key] = out
        return out

    return rec(e)


def delta(part: int, index: int, e: Expr, alphabet: Alphabet) -> Expr:
    """Difference-differential of e in letter (part, index).

    e must be over the plain alphabet; the result is over
    alphabet.with_primed(part).
    """
    if alphabet.primed_parts:
        raise ValueError("delta expects an alphabet without primed parts")
    if not 1 <= part <= alphabet.parts:
        raise ValueError(f"part {part} out of range")
    if not 1 <= index <= alphabet.size_of(part):
        raise ValueError(f"index {index} out of range for part {part}")
    validate_vars(e, alphabet)

    memo: dict[int, Expr] = {}

    def rec(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out: Expr = Const(Fraction(0))
        elif isinstance(node, Var):
            hit = node.part == part and node.index == index
            out = Const(Fraction(1 if hit else 0))
        elif isinstance(node, Sum):
            out = expr_sum(rec(t) for t in node.terms)
        elif isinstance(node, Product):
            fs = node.factors
            terms = []
            for m in range(len(fs), 0, -1):
                primed = [prime_part(f, part) for f in fs[: m - 1]]
                terms.append(
                    expr_product([*primed, rec(fs[m - 1]), *fs[m:]], absorb_zero=True)
                )
            out = expr_sum(terms)
        else:
            assert isinstance(node, Inverse)
            out = expr_neg(
                expr_product(
                    [inverse_of(prime_part(node.arg, part)), rec(node.arg), inverse_of(node.arg)],
                    absorb_zero=True,
                )
            )
        memo[key] = out
        return out

    return rec(e)


def directional_delta(part: int, v: Sequence, e: Expr, alphabet: Alphabet) -> Expr:
    """Sum of v[j-1] * delta(part, j, e) over the letters of the part."""
    g = alphabet.size_of(part)
    if len(v) != g:
        raise ValueError(f"direction vector needs {g} entries, got {len(v)}")
    terms = [
        expr_product([Const(Fraction(v[j - 1])), delta(part, j, e, alphabet)], absorb_zero=True)
        for j in range(1, g + 1)
    ]
    return expr_sum(terms)


def _block2x2(ul: Matrix, ur: Matrix, ll: Matrix, lr: Matrix) -> Matrix:
    rows = [ul.row(r) + ur.row(r) for r in range(ul.rows)]
    rows += [ll.row(r) + lr.row(r) for r in range(ll.rows)]
    return Matrix(ul.field, rows, ul.cols + ur.cols)


def fund_block_point(
    a_prime: Sequence[Matrix],
    a: Sequence[Matrix],
    v: Sequence,
    rest: Sequence[Sequence[Matrix]],
) -> MpPoint:
    """Point whose part-1 matrices are [[a'_j (x) I, v_j I], [0, I (x) a_j]].

    a_prime and a are part-1 tuples at sizes m' and m; rest holds the
    matrices of parts 2..G unchanged.  The alphabet is read off the shapes.
    """
    if not a or len(a_prime) != len(a) or len(v) != len(a):
        raise ValueError("a_prime, a, v must have equal nonzero length")
    mp = a_prime[0].rows
    m = a[0].rows
    for mat in a_prime:
        if not (mat.is_square() and mat.rows == mp):
            raise ValueError("a_prime matrices must be square of one size")
    for mat in a:
        if not (mat.is_square() and mat.rows == m):
            raise ValueError("a matrices must be square of one size")
    field = a[0].field
    half = mp * m
    blocks = []
    for j, (ap, aj) in enumerate(zip(a_prime, a)):
        ul = kron(ap, Matrix.identity(m, field))
        ur = scalar_matrix(half, Fraction(v[j]), field)
        lr = kron(Matrix.identity(mp, field), aj)
        blocks.append(_block2x2(ul, ur, Matrix.zeros(half, half, field), lr))
    sizes = (len(a),) + tuple(len(p) for p in rest)
    alphabet = Alphabet(sizes)
    parts = (tuple(blocks),) + tuple(tuple(p) for p in rest)
    return MpPoint(alphabet, parts)


def _demand(value: Matrix | Undefined) -> Matrix:
    if isinstance(value, Undefined):
        raise UndefinedError(value)
    return value


def verify_fund(
    e: Expr,
    a_prime: Sequence[Matrix],
    a: Sequence[Matrix],
    v: Sequence,
    rest: Sequence[Sequence[Matrix]],
    alphabet: Alphabet,
) -> bool:
    """Check the block identity for e at the given data, exactly.

    Evaluating e at fund_block_point must give
    [[e(a' (x) I, rest), (v . delta e)(a', a, rest)], [0, e(I (x) a, rest)]].
    Raises UndefinedError when any of the evaluations is undefined.
    """
    if len(a) != alphabet.size_of(1) or len(rest) != alphabet.parts - 1:
        raise ValueError("point shape does not match alphabet")
    point = fund_block_point(a_prime, a, v, rest)
    value = _demand(mp_evaluate(e, point))

    mp = a_prime[0].rows
    m = a[0].rows
    field = a[0].field
    rest_t = tuple(tuple(p) for p in rest)
    upper = MpPoint(
        alphabet,
        (tuple(kron(ap, Matrix.identity(m, field)) for ap in a_prime),) + rest_t,
    )
    lower = MpPoint(
        alphabet,
        (tuple(kron(Matrix.identity(mp, field), aj) for aj in a),) + rest_t,
    )
    ul_ref = _demand(mp_evaluate(e, upper))
    lr_ref = _demand(mp_evaluate(e, lower))

    extended = alphabet.with_primed(1)
    ext_point = MpPoint(extended, (tuple(a_prime), tuple(a)) + rest_t)
    ur_ref = _demand(mp_evaluate(directional_delta(1, v, e, alphabet), ext_point))

    half = value.rows // 2
    return (
        value.submatrix(0, half, 0, half) == ul_ref
        and value.submatrix(0, half, half, 2 * half) == ur_ref
        and value.submatrix(half, 2 * half, 0, half).is_zero()
        and value.submatrix(half, 2 * half, half, 2 * half) == lr_ref
    )

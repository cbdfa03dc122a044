"""Exact dense linear algebra with Kronecker-product structure.

Matrices are dense, immutable by convention after construction, and carry
the field they live over: arbitrary-precision rationals (``QQ``) or a prime
field ``PrimeField(p)`` meant for fast randomized experiments.  All
arithmetic is exact; singularity is reported, never approximated.

Field elements are plain values (``fractions.Fraction`` over the rationals,
canonical ``int`` residues modulo p) and the field object supplies the
operations.  Matrices refuse to combine operands over different fields.

Determinants and linear solves over the rationals go through fraction-free
Bareiss elimination on a row-scaled integer copy, which keeps intermediate
entries to minor-sized integers instead of letting gcd bookkeeping blow up.
"""

from __future__ import annotations

import operator
from fractions import Fraction
from math import lcm, prod
from typing import Sequence

_F0 = Fraction(0)
_F1 = Fraction(1)

#: 2**61 - 1, a Mersenne prime large enough that random small-entry data
#: essentially never collides with 0 mod p by accident.
MERSENNE61 = (1 << 61) - 1


class Rationals:
    """The field of arbitrary-precision rationals. Use the ``QQ`` singleton."""

    name = "QQ"
    zero = _F0
    one = _F1

    def of(self, x) -> Fraction:
        """Coerce an int, string like ``"-3/7"`` or Fraction into the field."""
        return Fraction(x)

    add = staticmethod(operator.add)
    sub = staticmethod(operator.sub)
    mul = staticmethod(operator.mul)
    neg = staticmethod(operator.neg)

    @staticmethod
    def inv(a: Fraction) -> Fraction:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in QQ")
        return 1 / a

    @staticmethod
    def dot(xs, ys) -> Fraction:
        return sum(map(operator.mul, xs, ys), _F0)

    def __repr__(self) -> str:
        return "QQ"

    def __eq__(self, other) -> bool:
        return isinstance(other, Rationals)

    def __hash__(self) -> int:
        return hash("QQ")


QQ = Rationals()


class PrimeField:
    """Integers modulo a prime, elements kept as canonical residues in [0, p)."""

    def __init__(self, p: int = MERSENNE61):
        if p < 2:
            raise ValueError("modulus must be at least 2")
        self.p = p
        self.name = f"GF({p})"
        self.zero = 0
        self.one = 1 % p

    def of(self, x):
        """Coerce an int, Fraction or string; fails if a denominator is 0 mod p."""
        f = Fraction(x)
        num = f.numerator % self.p
        if f.denominator == 1:
            return num
        return num * self.inv(f.denominator % self.p) % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError(f"inverse of zero in {self.name}")
        return pow(a, -1, self.p)

    def dot(self, xs, ys):
        return sum(map(operator.mul, xs, ys)) % self.p

    def __repr__(self) -> str:
        return self.name

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("GF", self.p))


class Matrix:
    """Dense matrix over a fixed field, stored as a list of row lists.

    The raw constructor trusts its input; use :meth:`of` to coerce entries
    through the field. Zero-row and zero-column shapes are legal (``cols``
    must be passed explicitly when there are no rows to infer it from).
    """

    __slots__ = ("field", "rows", "cols", "data")

    def __init__(self, field, data: list, cols: int | None = None):
        self.field = field
        self.data = data
        self.rows = len(data)
        if data:
            self.cols = len(data[0])
            for row in data:
                if len(row) != self.cols:
                    raise ValueError("ragged rows in matrix data")
        else:
            self.cols = 0 if cols is None else cols

    # -- construction -----------------------------------------------------

    @classmethod
    def of(cls, field, data: Sequence[Sequence], cols: int | None = None) -> "Matrix":
        return cls(field, [[field.of(x) for x in row] for row in data], cols)

    @classmethod
    def from_flat(cls, field, rows: int, cols: int, entries: Sequence) -> "Matrix":
        if len(entries) != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {len(entries)}")
        it = iter(entries)
        return cls(field, [[field.of(next(it)) for _ in range(cols)] for _ in range(rows)], cols)

    @classmethod
    def identity(cls, n: int, field=QQ) -> "Matrix":
        z, o = field.zero, field.one
        return cls(field, [[o if i == j else z for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, rows: int, cols: int, field=QQ) -> "Matrix":
        z = field.zero
        return cls(field, [[z] * cols for _ in range(rows)], cols)

    # -- access ------------------------------------------------------------

    def entry(self, i: int, j: int):
        return self.data[i][j]

    def row(self, i: int) -> list:
        return self.data[i]

    def flat(self) -> list:
        return [x for row in self.data for x in row]

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_zero(self) -> bool:
        z = self.field.zero
        return all(x == z for row in self.data for x in row)

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "Matrix":
        return Matrix(self.field, [row[c0:c1] for row in self.data[r0:r1]], c1 - c0)

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other, same_shape: bool) -> None:
        if not isinstance(other, Matrix):
            raise TypeError(f"expected Matrix, got {type(other).__name__}")
        if self.field != other.field:
            raise ValueError(f"field mismatch: {self.field} vs {other.field}")
        if same_shape and (self.rows != other.rows or self.cols != other.cols):
            raise ValueError(f"shape mismatch: {self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check(other, same_shape=True)
        add = self.field.add
        return Matrix(self.field,
                      [list(map(add, ra, rb)) for ra, rb in zip(self.data, other.data)],
                      self.cols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check(other, same_shape=True)
        sub = self.field.sub
        return Matrix(self.field,
                      [list(map(sub, ra, rb)) for ra, rb in zip(self.data, other.data)],
                      self.cols)

    def __neg__(self) -> "Matrix":
        neg = self.field.neg
        return Matrix(self.field, [list(map(neg, row)) for row in self.data], self.cols)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check(other, same_shape=False)
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        dot = self.field.dot
        cols_t = list(zip(*other.data)) if other.data else []
        if not cols_t:
            return Matrix.zeros(self.rows, other.cols, self.field)
        return Matrix(self.field,
                      [[dot(row, col) for col in cols_t] for row in self.data],
                      other.cols)

    def scale(self, c) -> "Matrix":
        mul = self.field.mul
        return Matrix(self.field, [[mul(c, x) for x in row] for row in self.data], self.cols)

    def transpose(self) -> "Matrix":
        if not self.data:
            return Matrix(self.field, [[] for _ in range(self.cols)], 0)
        return Matrix(self.field, [list(col) for col in zip(*self.data)], self.rows)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Matrix) and self.field == other.field
                and self.rows == other.rows and self.cols == other.cols
                and self.data == other.data)

    def __hash__(self):
        raise TypeError("Matrix is not hashable")

    def __repr__(self) -> str:
        if self.rows * self.cols > 36:
            return f"Matrix({self.field}, {self.rows}x{self.cols})"
        return f"Matrix({self.field}, {self.data})"


def scalar_matrix(n: int, c, field=QQ) -> Matrix:
    """c times the n-by-n identity."""
    return Matrix.identity(n, field).scale(field.of(c))


# -- Kronecker structure ----------------------------------------------------


def kron(a: Matrix, b: Matrix) -> Matrix:
    """Kronecker product; block (i,j) of the result is a[i][j] * b."""
    a._check(b, same_shape=False)
    mul = a.field.mul
    data = []
    for arow in a.data:
        for brow in b.data:
            data.append([mul(av, bv) for av in arow for bv in brow])
    return Matrix(a.field, data, a.cols * b.cols)


def direct_sum(a: Matrix, b: Matrix) -> Matrix:
    """Block diagonal stacking; tolerates empty summands."""
    a._check(b, same_shape=False)
    z = a.field.zero
    data = [row + [z] * b.cols for row in a.data]
    data += [[z] * a.cols + row for row in b.data]
    return Matrix(a.field, data, a.cols + b.cols)


def tau_embed(i: int, a: Matrix, dims: Sequence[int]) -> Matrix:
    """Embed ``a`` into the i-th tensor slot (1-based) of a Kronecker product.

    Returns I_{n_1} (x) ... (x) a (x) ... (x) I_{n_G} for the slot sizes in
    ``dims``; ``a`` must be square of size ``dims[i-1]``.
    """
    if not 1 <= i <= len(dims):
        raise ValueError(f"slot {i} out of range for {len(dims)} slots")
    if not a.is_square() or a.rows != dims[i - 1]:
        raise ValueError(f"matrix is {a.rows}x{a.cols}, slot {i} wants size {dims[i - 1]}")
    pre = prod(dims[: i - 1])
    post = prod(dims[i:])
    out = a
    if pre > 1:
        out = kron(Matrix.identity(pre, a.field), out)
    if post > 1:
        out = kron(out, Matrix.identity(post, a.field))
    return out


def _check_permutation(pi: Sequence[int], g: int) -> None:
    if sorted(pi) != list(range(1, g + 1)):
        raise ValueError(f"{tuple(pi)} is not a permutation of 1..{g}")


def _factor_permutation_map(pi: Sequence[int], dims: Sequence[int]) -> list[int]:
    # flat index map s with e_I -> e_{s(I)} when tensor factors are reordered
    # so that factor pi[k] lands in position k.
    g = len(dims)
    n = prod(dims)
    pdims = [dims[pi[k] - 1] for k in range(g)]
    # strides for mixed-radix encodings in both orders
    strides = [prod(dims[k + 1:]) for k in range(g)]
    pstrides = [prod(pdims[k + 1:]) for k in range(g)]
    out = [0] * n
    for flat in range(n):
        rem = flat
        multi = [0] * g
        for k in range(g):
            multi[k], rem = divmod(rem, strides[k]) if strides[k] != 1 else (rem, 0)
        out[flat] = sum(multi[pi[k] - 1] * pstrides[k] for k in range(g))
    return out


def commutation_matrix(pi: Sequence[int], dims: Sequence[int], field=QQ) -> Matrix:
    """Permutation matrix K with kron(a_pi(1), ..) = K @ kron(a_1, ..) @ K^T.

    ``pi`` is 1-based: pi[k] is the original slot that lands in position k+1.
    """
    _check_permutation(pi, len(dims))
    smap = _factor_permutation_map(pi, dims)
    n = len(smap)
    z, o = field.zero, field.one
    data = [[z] * n for _ in range(n)]
    for src, dst in enumerate(smap):
        data[dst][src] = o
    return Matrix(field, data, n)


def permute_kron_factors(m: Matrix, pi: Sequence[int], dims: Sequence[int]) -> Matrix:
    """K @ m @ K^T for the commutation matrix K, computed by index remapping."""
    _check_permutation(pi, len(dims))
    n = prod(dims)
    if m.rows != n or m.cols != n:
        raise ValueError(f"matrix is {m.rows}x{m.cols}, dims imply {n}")
    smap = _factor_permutation_map(pi, dims)
    z = m.field.zero
    data = [[z] * n for _ in range(n)]
    for i in range(n):
        di = smap[i]
        row = m.data[i]
        target = data[di]
        for j in range(n):
            target[smap[j]] = row[j]
    return Matrix(m.field, data, n)


# -- elimination -------------------------------------------------------------


def _scaled_int_rows(a: Matrix, b: Matrix | None) -> list[list[int]]:
    # Row-scale [A | B] to integers.  Row scaling preserves the solution set
    # of A x = B, so back substitution on the scaled system is exact.
    out = []
    for i in range(a.rows):
        row = list(a.data[i]) + (list(b.data[i]) if b is not None else [])
        den = lcm(*(x.denominator for x in row)) if row else 1
        out.append([int(x * den) for x in row])
    return out


def _bareiss_forward(rows: list[list[int]], n: int, width: int) -> int | None:
    """Fraction-free elimination to upper triangular form, in place.

    Returns the sign from row swaps, or None if the left n-by-n block is
    singular.  Every row below the pivot is rescaled each step (also when its
    pivot-column entry is zero); the theory needs that for later divisions
    to stay exact.
    """
    sign = 1
    prev = 1
    for k in range(n):
        piv = next((r for r in range(k, n) if rows[r][k] != 0), None)
        if piv is None:
            return None
        if piv != k:
            rows[k], rows[piv] = rows[piv], rows[k]
            sign = -sign
        rk = rows[k]
        pk = rk[k]
        for i in range(k + 1, n):
            ri = rows[i]
            rik = ri[k]
            for j in range(k + 1, width):
                ri[j] = (pk * ri[j] - rik * rk[j]) // prev
            ri[k] = 0
        prev = pk
    return sign


def _back_substitute(rows: list[list[int]], n: int, ncols: int) -> list[list[Fraction]]:
    xs: list[list[Fraction]] = [[_F0] * ncols for _ in range(n)]
    for i in reversed(range(n)):
        ri = rows[i]
        piv = ri[i]
        for col in range(ncols):
            acc = Fraction(ri[n + col])
            for j in range(i + 1, n):
                cij = ri[j]
                if cij:
                    acc -= cij * xs[j][col]
            xs[i][col] = acc / piv
    return xs


def _gfp_solve(a: Matrix, b: Matrix, want_det: bool):
    p = a.field.p
    n = a.rows
    rows = [list(a.data[i]) + list(b.data[i]) for i in range(n)]
    width = n + b.cols
    det_acc = 1 % p
    for k in range(n):
        piv = next((r for r in range(k, n) if rows[r][k] % p != 0), None)
        if piv is None:
            return None, 0
        if piv != k:
            rows[k], rows[piv] = rows[piv], rows[k]
            det_acc = -det_acc % p
        inv_p = pow(rows[k][k], -1, p)
        det_acc = det_acc * rows[k][k] % p
        rows[k] = [x * inv_p % p for x in rows[k]]
        for i in range(n):
            if i != k and rows[i][k]:
                f = rows[i][k]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rows[k])]
    sol = Matrix(a.field, [row[n:] for row in rows], b.cols)
    return sol, det_acc if want_det else None


def det(a: Matrix):
    """Exact determinant; empty matrices have determinant one."""
    if not a.is_square():
        raise ValueError("determinant of a non-square matrix")
    n = a.rows
    if n == 0:
        return a.field.one
    if isinstance(a.field, PrimeField):
        res = _gfp_solve(a, Matrix.zeros(n, 0, a.field), want_det=True)
        return res[1] if res[0] is not None else 0
    rows = _scaled_int_rows(a, None)
    scale = prod(r_orig_den(a, i) for i in range(n))
    sign = _bareiss_forward(rows, n, n)
    if sign is None:
        return _F0
    return Fraction(sign * rows[n - 1][n - 1], scale)


def r_orig_den(a: Matrix, i: int) -> int:
    return lcm(*(x.denominator for x in a.data[i])) if a.cols else 1


def solve(a: Matrix, b: Matrix) -> Matrix | None:
    """Solve a @ x = b exactly; None when ``a`` is singular."""
    if not a.is_square():
        raise ValueError("solve needs a square coefficient matrix")
    if a.rows != b.rows:
        raise ValueError("right-hand side has wrong number of rows")
    if a.field != b.field:
        raise ValueError(f"field mismatch: {a.field} vs {b.field}")
    n = a.rows
    if n == 0:
        return Matrix.zeros(0, b.cols, a.field)
    if isinstance(a.field, PrimeField):
        return _gfp_solve(a, b, want_det=False)[0]
    rows = _scaled_int_rows(a, b)
    if _bareiss_forward(rows, n, n + b.cols) is None:
        return None
    return Matrix(a.field, _back_substitute(rows, n, b.cols), b.cols)


def inv_det(a: Matrix):
    """(A^{-1}, det A) for invertible A, or None when A is singular."""
    if not a.is_square():
        raise ValueError("inverse of a non-square matrix")
    n = a.rows
    if n == 0:
        return Matrix.zeros(0, 0, a.field), a.field.one
    if isinstance(a.field, PrimeField):
        inv, d = _gfp_solve(a, Matrix.identity(n, a.field), want_det=True)
        return None if inv is None else (inv, d)
    # One elimination pass over [A | I]: back substitution gives the inverse,
    # the pivot chain gives the determinant of the row-scaled copy.
    scale = 1
    rows = []
    for i in range(n):
        den = lcm(*(x.denominator for x in a.data[i])) if a.cols else 1
        scale *= den
        rows.append([int(x * den) for x in a.data[i]]
                    + [den if j == i else 0 for j in range(n)])
    sign = _bareiss_forward(rows, n, 2 * n)
    if sign is None:
        return None
    # rows hold D @ A with D the diagonal of row multipliers; the identity
    # block was pre-multiplied by D as well, so solutions are A^{-1} exactly.
    inv = Matrix(a.field, _back_substitute(rows, n, n), n)
    d = Fraction(sign * rows[n - 1][n - 1], scale)
    return inv, d

"""Evaluation of rational expressions on tuples of matrices.

Three evaluation models share one engine:

* nc-evaluation plugs one square matrix per letter into the expression,
  ignoring the part structure entirely.
* mp-evaluation first embeds part i's matrices into a common Kronecker
  space by ``tau_embed`` so that distinct parts commute, then nc-evaluates.
  Part 1 is the outermost tensor factor; a primed part occupies its own
  slot immediately before its unprimed sibling.
* bf-evaluation (two equal-sized letter families X, Y over g indices) uses
  g+2 slots of size n: X_i acts on the first slot and middle slot i, Y_i on
  the last slot and middle slot i.

An inverse of a singular matrix does not raise; evaluation returns an
``Undefined`` record naming the offending Inverse node and its path from
the root, and the failure propagates outward.  Within one call, shared
subtrees are evaluated once.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expression import Alphabet, Const, Expr, Inverse, Product, Sum, Var, validate_vars
from .matrix_kernel import Matrix, inv_det, scalar_matrix, tau_embed


@dataclass(frozen=True)
class Undefined:
    """An Inverse node whose argument evaluated to a singular matrix."""

    subexpr: Expr
    path: tuple[int, ...]


class UndefinedError(ValueError):
    """Raised by operations that cannot return an Undefined value."""

    def __init__(self, undefined: Undefined):
        super().__init__(f"expression undefined at this point "
                         f"(inverse at path {list(undefined.path)})")
        self.undefined = undefined


@dataclass(frozen=True)
class MpPoint:
    """One tuple of square matrices per alphabet slot; slot i's matrices all
    share the size dims[i]."""

    alphabet: Alphabet
    parts: tuple[tuple[Matrix, ...], ...]

    def __post_init__(self):
        slots = self.alphabet.slots()
        object.__setattr__(self, "parts", tuple(tuple(p) for p in self.parts))
        if len(self.parts) != len(slots):
            raise ValueError(f"expected {len(slots)} slot tuples, got {len(self.parts)}")
        field = self.parts[0][0].field
        for (part, _), mats in zip(slots, self.parts):
            if len(mats) != self.alphabet.size_of(part):
                raise ValueError(f"part {part} needs {self.alphabet.size_of(part)} matrices")
            size = mats[0].rows
            for m in mats:
                if not m.is_square() or m.rows != size:
                    raise ValueError(f"part {part}: matrices must all be {size}x{size}")
                if m.field != field:
                    raise ValueError("all matrices must share one field")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(mats[0].rows for mats in self.parts)

    @property
    def field(self):
        return self.parts[0][0].field


@dataclass(frozen=True)
class NcPoint:
    """One n-by-n matrix per letter, flat in the alphabet's letter order."""

    alphabet: Alphabet
    mats: tuple[Matrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "mats", tuple(self.mats))
        letters = self.alphabet.letters()
        if len(self.mats) != len(letters):
            raise ValueError(f"expected {len(letters)} matrices, got {len(self.mats)}")
        n = self.mats[0].rows
        field = self.mats[0].field
        for m in self.mats:
            if not m.is_square() or m.rows != n:
                raise ValueError(f"all matrices must be {n}x{n}")
            if m.field != field:
                raise ValueError("all matrices must share one field")

    @property
    def n(self) -> int:
        return self.mats[0].rows

    @property
    def field(self):
        return self.mats[0].field


@dataclass(frozen=True)
class BfPoint:
    """Data for bf-evaluation: per index i ≤ g an outer/inner pair for the
    X family (a_outer acts on slot 1, a_inner on middle slot i) and one for
    the Y family (b_inner on middle slot i, b_outer on the last slot)."""

    g: int
    n: int
    a_outer: tuple[Matrix, ...]
    a_inner: tuple[Matrix, ...]
    b_inner: tuple[Matrix, ...]
    b_outer: tuple[Matrix, ...]

    def __post_init__(self):
        for name in ("a_outer", "a_inner", "b_inner", "b_outer"):
            mats = tuple(getattr(self, name))
            object.__setattr__(self, name, mats)
            if len(mats) != self.g:
                raise ValueError(f"{name} needs {self.g} matrices")
            for m in mats:
                if not m.is_square() or m.rows != self.n:
                    raise ValueError(f"{name}: matrices must be {self.n}x{self.n}")


def tau_point(a: MpPoint) -> NcPoint:
    """Embed every slot's matrices into the common n₁⋯n_G tensor space."""
    dims = a.dims
    mats = []
    for s, slot_mats in enumerate(a.parts):
        mats.extend(tau_embed(s + 1, m, dims) for m in slot_mats)
    return NcPoint(a.alphabet, tuple(mats))


class Evaluator:
    """Bottom-up evaluator over one NcPoint, memoizing shared subtrees.

    Reusable across expressions over the same point (matrix_rational
    evaluates whole expression matrices through one instance).  A cached
    Undefined keeps the path where it was first discovered.
    """

    def __init__(self, point: NcPoint):
        self.point = point
        self.n = point.n
        self.field = point.field
        self.lookup = {(v.part, v.index, v.primed): m
                       for v, m in zip(point.alphabet.letters(), point.mats)}
        self.memo: dict[int, Matrix | Undefined] = {}

    def run(self, e: Expr) -> Matrix | Undefined:
        validate_vars(e, self.point.alphabet)
        return self._rec(e, ())

    def _rec(self, node: Expr, path: tuple[int, ...]) -> Matrix | Undefined:
        hit = self.memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Const):
            val = scalar_matrix(self.n, self.field.of(node.value), self.field)
        elif isinstance(node, Var):
            val = self.lookup[(node.part, node.index, node.primed)]
        elif isinstance(node, Sum):
            val = None
            for k, t in enumerate(node.terms):
                res = self._rec(t, path + (k,))
                if isinstance(res, Undefined):
                    val = res
                    break
                val = res if val is None else val + res
        elif isinstance(node, Product):
            val = None
            for k, f in enumerate(node.factors):
                res = self._rec(f, path + (k,))
                if isinstance(res, Undefined):
                    val = res
                    break
                val = res if val is None else val @ res
        elif isinstance(node, Inverse):
            res = self._rec(node.arg, path + (0,))
            if isinstance(res, Undefined):
                val = res
            else:
                pair = inv_det(res)
                val = Undefined(node, path) if pair is None else pair[0]
        else:
            raise TypeError(f"not an expression node: {type(node).__name__}")
        self.memo[id(node)] = val
        return val


def nc_evaluate(e: Expr, point: NcPoint) -> Matrix | Undefined:
    """Plug the point's matrices into the expression, one per letter."""
    return Evaluator(point).run(e)


def mp_evaluate(e: Expr, a: MpPoint) -> Matrix | Undefined:
    """Evaluate after tau-embedding, in M_{n₁⋯n_G}."""
    return nc_evaluate(e, tau_point(a))


def bf_evaluate(e: Expr, p: BfPoint) -> Matrix | Undefined:
    """Evaluate an expression over two g-letter parts in the g+2 slot model.

    Part 1 letters are the X family, part 2 the Y family.  The result has
    size n^(g+2).
    """
    alphabet = Alphabet((p.g, p.g))
    validate_vars(e, alphabet)
    dims = (p.n,) * (p.g + 2)
    mats = []
    for i in range(p.g):
        mats.append(tau_embed(1, p.a_outer[i], dims)
                    @ tau_embed(2 + i, p.a_inner[i], dims))
    for i in range(p.g):
        mats.append(tau_embed(2 + i, p.b_inner[i], dims)
                    @ tau_embed(p.g + 2, p.b_outer[i], dims))
    return nc_evaluate(e, NcPoint(alphabet, tuple(mats)))


def ell_collapse(m: Matrix, n: int, g: int) -> Matrix:
    """Collapse an n^g tensor-space matrix to n-by-n by multiplying factors.

    Linear extension of E_{i₁j₁}⊗⋯⊗E_{i_g j_g} ↦ E_{i₁j₁}⋯E_{i_g j_g}; the
    matrix-unit product telescopes, so entry (r, c) sums the entries whose
    row multi-index is (r, t) and column multi-index (t, c) over all
    (g−1)-tuples t.
    """
    if g < 1 or n < 1:
        raise ValueError("need n ≥ 1 and g ≥ 1")
    size = n ** g
    if m.rows != size or m.cols != size:
        raise ValueError(f"matrix is {m.rows}x{m.cols}, expected {size}x{size}")
    inner = n ** (g - 1)
    field = m.field
    data = []
    for r in range(n):
        row = []
        for c in range(n):
            acc = field.zero
            for t in range(inner):
                acc = field.add(acc, m.data[r * inner + t][t * n + c])
            row.append(acc)
        data.append(row)
    return Matrix(field, data, n)


def check_multipartite_tuple(p: NcPoint) -> bool:
    """True when matrices assigned to different slots pairwise commute."""
    letters = p.alphabet.letters()
    for i, v in enumerate(letters):
        for j in range(i + 1, len(letters)):
            w = letters[j]
            if (v.part, v.primed) == (w.part, w.primed):
                continue
            a, b = p.mats[i], p.mats[j]
            if a @ b != b @ a:
                return False
    return True


def tau_point_of_nc(b: NcPoint) -> NcPoint:
    """Embed each letter of slot i by tau_embed into (n, …, n), one slot per
    alphabet slot.  For a commuting tuple this is the point the collapse map
    relates back to b."""
    n = b.n
    slots = b.alphabet.slots()
    dims = (n,) * len(slots)
    mats = []
    for v, m in zip(b.alphabet.letters(), b.mats):
        s = slots.index((v.part, v.primed))
        mats.append(tau_embed(s + 1, m, dims))
    return NcPoint(b.alphabet, tuple(mats))

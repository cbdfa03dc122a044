"""Randomized zero- and equivalence-testing with level escalation.

Inverse-free expressions are decided exactly through the polynomial normal
form; when nonzero, a concrete witness point is still hunted down (it exists
at level ⌊d/2⌋+1 for maximal per-part degree d, since no product of fewer
than 2n alternating factors vanishes identically on n-by-n matrices, and the
parts separate into independent tensor slots).

Expressions containing inverses are sampled on square levels (n, …, n) for
n = 1..max_level.  A nonzero value at a defined point is a proof of
nonzeroness; exhausting the budget only ever yields "probably zero up to
this level", never a zero claim.  All sampling is a pure function of
(seed, dims, trial), so verdicts are reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .evaluation import MpPoint, Undefined, mp_evaluate
from .expression import (
    Alphabet,
    Expr,
    expr_neg,
    expr_sum,
    inversion_height,
    poly_normal_form,
)
from .matrix_kernel import QQ, Matrix, det


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # keep pytest from collecting this as a test class

    max_level: int = 4
    trials_per_level: int = 8
    entry_bound: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.max_level < 1 or self.trials_per_level < 1 or self.entry_bound < 1:
            raise ValueError("max_level, trials_per_level, entry_bound must be ≥ 1")


@dataclass(frozen=True)
class ExactZero:
    """The expression is the zero polynomial (inverse-free case only)."""


@dataclass(frozen=True)
class NonzeroWitness:
    point: MpPoint
    value: Matrix
    level: int
    trial: int


@dataclass(frozen=True)
class ProbablyZeroUpTo:
    max_level: int
    trials: int
    decided: int


@dataclass(frozen=True)
class NowhereDefined:
    subexpr: Expr
    path: tuple[int, ...]


ZeroVerdict = ExactZero | NonzeroWitness | ProbablyZeroUpTo | NowhereDefined


def _sample(alphabet: Alphabet, dims, seed: int, trial: int, bound: int) -> MpPoint:
    rng = random.Random(f"{seed}|{','.join(map(str, dims))}|{trial}")
    parts = []
    for s, (part, _) in enumerate(alphabet.slots()):
        n = dims[s]
        parts.append(tuple(
            Matrix.from_flat(QQ, n, n, [rng.randint(-bound, bound) for _ in range(n * n)])
            for _ in range(alphabet.size_of(part))))
    return MpPoint(alphabet, tuple(parts))


def sample_point(alphabet: Alphabet, dims, cfg: TestConfig, trial: int) -> MpPoint:
    """Deterministic in (cfg.seed, dims, trial); entries uniform in [−B, B]."""
    if len(dims) != len(alphabet.slots()):
        raise ValueError(f"expected {len(alphabet.slots())} dims, got {len(dims)}")
    return _sample(alphabet, dims, cfg.seed, trial, cfg.entry_bound)


def _level_consistency(entries) -> None:
    # Determinant criterion: if det vanished at every defined trial of the
    # level, the values themselves must all vanish.  A failure here means a
    # kernel bug or an astronomically unlucky sample of a nonvanishing det.
    if entries and all(d == 0 for _, _, _, d in entries):
        for _, _, v, _ in entries:
            if not v.is_zero():
                raise RuntimeError("determinant criterion violated: singular "
                                   "values at a level where no determinant "
                                   "was nonzero")


def _square_dims(alphabet: Alphabet, level: int) -> tuple[int, ...]:
    return (level,) * len(alphabet.slots())


def _hunt_polynomial_witness(e: Expr, alphabet: Alphabet, cfg: TestConfig,
                             guarantee_level: int) -> NonzeroWitness:
    top = max(cfg.max_level, guarantee_level)
    for level in range(1, top + 1):
        for trial in range(cfg.trials_per_level):
            a = sample_point(alphabet, _square_dims(alphabet, level), cfg, trial)
            v = mp_evaluate(e, a)
            if not v.is_zero():
                return NonzeroWitness(a, v, level, trial)
    # the nonzero locus at the guarantee level is dense; widen the entry
    # range until a sample lands in it
    bound = cfg.entry_bound
    trial = cfg.trials_per_level
    dims = _square_dims(alphabet, top)
    while True:
        bound *= 2
        for _ in range(cfg.trials_per_level):
            a = _sample(alphabet, dims, cfg.seed, trial, bound)
            v = mp_evaluate(e, a)
            if not v.is_zero():
                return NonzeroWitness(a, v, top, trial)
            trial += 1


def is_zero(e: Expr, alphabet: Alphabet, cfg: TestConfig | None = None) -> ZeroVerdict:
    """Zero-test: exact for inverse-free input, level-scanned otherwise."""
    cfg = cfg or TestConfig()
    if inversion_height(e) == 0:
        nf = poly_normal_form(e, alphabet)
        if nf.is_zero():
            return ExactZero()
        return _hunt_polynomial_witness(e, alphabet, cfg,
                                        nf.max_slot_degree() // 2 + 1)

    first_undef: Undefined | None = None
    decided = 0
    for level in range(1, cfg.max_level + 1):
        entries = []
        for trial in range(cfg.trials_per_level):
            a = sample_point(alphabet, _square_dims(alphabet, level), cfg, trial)
            v = mp_evaluate(e, a)
            if isinstance(v, Undefined):
                if first_undef is None:
                    first_undef = v
                continue
            entries.append((trial, a, v, det(v)))
        _level_consistency(entries)
        decided += len(entries)
        for trial, a, v, _ in entries:
            if not v.is_zero():
                return NonzeroWitness(a, v, level, trial)
    if decided == 0:
        return NowhereDefined(first_undef.subexpr, first_undef.path)
    return ProbablyZeroUpTo(cfg.max_level, cfg.trials_per_level, decided)


def equivalent(e1: Expr, e2: Expr, alphabet: Alphabet,
               cfg: TestConfig | None = None) -> ZeroVerdict:
    """Zero-test of e1 − e2 on the intersection of the two mp-domains.

    Trials where either side is undefined are skipped, not counted; with two
    inverse-free inputs the decision is exact via normal forms.
    """
    cfg = cfg or TestConfig()
    if inversion_height(e1) == 0 and inversion_height(e2) == 0:
        return is_zero(expr_sum([e1, expr_neg(e2)]), alphabet, cfg)

    first_undef: Undefined | None = None
    decided = 0
    for level in range(1, cfg.max_level + 1):
        entries = []
        for trial in range(cfg.trials_per_level):
            a = sample_point(alphabet, _square_dims(alphabet, level), cfg, trial)
            v1 = mp_evaluate(e1, a)
            v2 = mp_evaluate(e2, a)
            if isinstance(v1, Undefined) or isinstance(v2, Undefined):
                if first_undef is None:
                    first_undef = v1 if isinstance(v1, Undefined) else v2
                continue
            diff = v1 - v2
            entries.append((trial, a, diff, det(diff)))
        _level_consistency(entries)
        decided += len(entries)
        for trial, a, diff, _ in entries:
            if not diff.is_zero():
                return NonzeroWitness(a, diff, level, trial)
    if decided == 0:
        return NowhereDefined(first_undef.subexpr, first_undef.path)
    return ProbablyZeroUpTo(cfg.max_level, cfg.trials_per_level, decided)


def domain_scan(e: Expr, alphabet: Alphabet, cfg: TestConfig | None = None):
    """Smallest square level with a sampled point in the mp-domain.

    Returns (level, witness point) or (None, None).  Once an expression is
    defined at level n it is defined at every multiple of n (pad the point
    with direct-sum copies of itself), so a hit certifies all multiples.
    """
    cfg = cfg or TestConfig()
    for level in range(1, cfg.max_level + 1):
        for trial in range(cfg.trials_per_level):
            a = sample_point(alphabet, _square_dims(alphabet, level), cfg, trial)
            if not isinstance(mp_evaluate(e, a), Undefined):
                return level, a
    return None, None

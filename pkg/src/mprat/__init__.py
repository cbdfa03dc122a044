"""Exact computer algebra for multipartite noncommutative rational functions."""

from .calculus import delta, directional_delta, fund_block_point, prime_part, verify_fund
from .evaluation import (
    BfPoint,
    MpPoint,
    NcPoint,
    Undefined,
    UndefinedError,
    bf_evaluate,
    check_multipartite_tuple,
    ell_collapse,
    mp_evaluate,
    nc_evaluate,
    tau_point,
    tau_point_of_nc,
)
from .expression import (
    Alphabet,
    Const,
    Expr,
    ExprSyntaxError,
    Inverse,
    Product,
    Sum,
    Var,
    expr_neg,
    expr_product,
    expr_sum,
    format_expr,
    inverse_of,
    inversion_height,
    parse,
    poly_normal_form,
    validate_vars,
)
from .identity import (
    ExactZero,
    NonzeroWitness,
    NowhereDefined,
    ProbablyZeroUpTo,
    TestConfig,
    domain_scan,
    equivalent,
    is_zero,
    sample_point,
)
from .matrix_kernel import (
    QQ,
    Matrix,
    commutation_matrix,
    det,
    direct_sum,
    inv_det,
    kron,
    permute_kron_factors,
    scalar_matrix,
    solve,
    tau_embed,
)
from .matrix_rational import (
    ExprMatrix,
    InvertibleWitness,
    NotInvertible,
    PartialUndefined,
    ProbablyNotInvertible,
    SchurInverse,
    matrix_inverse_expr,
    matrix_invertible,
    matrix_mp_evaluate,
    partial_evaluate,
)
from .realization import (
    BasePointOutsideDomain,
    PencilSingular,
    Realization,
    real_domain_contains,
    real_evaluate,
    real_reduce,
    realize,
)

__version__ = "0.1.0"

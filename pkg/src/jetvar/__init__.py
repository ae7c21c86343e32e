"""Symbolic calculus of variations on jets of submanifolds."""

from .errors import (
    EvaluationError,
    JetvarError,
    OrderError,
    ParseError,
    SingularError,
    SubstitutionError,
    UnknownIdentifierError,
    VerificationError,
)
from .expr import (
    Expr,
    FunctionSymbol,
    ZeroResult,
    constant,
    evaluate,
    is_zero,
    normalize,
    partial,
    sqrt,
    substitute,
    to_expr,
    zero_test,
)
from .jet import (
    EvolutionaryField,
    JetContext,
    change_division_first_order,
    enumerate_coordinates,
    evolutionary_apply,
    iterated_total_derivative,
    multi_index,
    multi_indices,
    multi_indices_upto,
    permute_base_coordinates,
    total_derivative,
)
from .parser import parse
from .printing import render_latex, render_machine, render_text
from .variational import (
    COperator,
    Lagrangian,
    MultiOperator,
    SourceForm,
    adjoint,
    euler_lagrange,
    finite_difference_action_check,
    first_variation,
    green_residual,
    helmholtz_check,
    internalize,
    is_null_lagrangian,
    linearization,
)

__version__ = "0.1.0"

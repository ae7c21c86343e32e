"""Tiny exact linear algebra over symbolic expressions.

Matrices are lists of lists of :class:`~jetvar.expr.Expr`.  Sizes here are
desk scale (n <= 4), so cofactor expansion is all we need.
"""

from __future__ import annotations

from typing import List, Sequence

from . import expr as ex
from .errors import SingularError
from .expr import Expr, to_expr


def matrix_det(mat: Sequence[Sequence]) -> Expr:
    n = len(mat)
    rows = [[to_expr(v) for v in row] for row in mat]
    if any(len(row) != n for row in rows):
        raise ValueError("determinant needs a square matrix")
    if n == 1:
        return rows[0][0]
    out = ex.ZERO
    sign = 1
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in rows[1:]]
        out = out + ex.from_rational(sign) * rows[0][j] * matrix_det(minor)
        sign = -sign
    return out


def matrix_adjugate(mat: Sequence[Sequence]) -> List[List[Expr]]:
    n = len(mat)
    rows = [[to_expr(v) for v in row] for row in mat]
    adj = [[ex.ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [rows[r][c] for c in range(n) if c != j] for r in range(n) if r != i
            ]
            cof = matrix_det(minor) if n > 1 else ex.ONE
            adj[j][i] = ex.from_rational((-1) ** (i + j)) * cof
    return adj


def matrix_inverse(mat: Sequence[Sequence]) -> List[List[Expr]]:
    det = matrix_det(mat)
    if ex.is_zero(det):
        raise SingularError("symbolically singular matrix")
    inv_det = det.inverse()
    adj = matrix_adjugate(mat)
    return [[entry * inv_det for entry in row] for row in adj]


def matrix_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> List[List[Expr]]:
    rows, mid, cols = len(a), len(b), len(b[0])
    return [
        [
            sum((to_expr(a[i][k]) * to_expr(b[k][j]) for k in range(mid)), start=ex.ZERO)
            for j in range(cols)
        ]
        for i in range(rows)
    ]


def linear_solve(mat: Sequence[Sequence], rhs: Sequence) -> List[Expr]:
    """Solve mat @ x = rhs exactly via the adjugate; raises if singular."""
    inv = matrix_inverse(mat)
    return [
        sum((inv[i][k] * to_expr(rhs[k]) for k in range(len(rhs))), start=ex.ZERO)
        for i in range(len(inv))
    ]

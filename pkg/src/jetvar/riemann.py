"""Geometric objects on jets of submanifolds of a Riemannian manifold.

The ambient manifold E carries coordinates split into n independent and m
dependent ones; a metric is an (n+m) x (n+m) symmetric matrix of
expressions in those order-0 coordinates.  Everything derived here is a
field on a jet space: the induced ("universal first fundamental") metric,
a normal frame, the vertical metric, the totally geodesic and minimal
submanifold equations, the area density and its fiber Hessian.

Index conventions: Latin a, b, c run over all of E (1..n+m), Greek
lambda, mu over the base block (1..n), i, j over the fiber block (1..m);
Gamma[a][b][c] is the Christoffel symbol with upper index a.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from . import expr as ex
from .errors import SingularError
from .expr import Atom, BaseCoord, Expr, JetCoord, atom_expr, partial, to_expr
from .jet import JetContext, relabel_atoms
from .linalg import matrix_det, matrix_inverse
from .variational import Lagrangian, SourceForm


@dataclass(frozen=True)
class MetricSpec:
    """Symmetric nondegenerate metric on E, given in a divided chart."""

    ctx: JetContext
    entries: Tuple[Tuple[Expr, ...], ...]

    def __post_init__(self):
        d = self.ctx.n + self.ctx.m
        rows = tuple(tuple(to_expr(v) for v in row) for row in self.entries)
        if len(rows) != d or any(len(row) != d for row in rows):
            raise ValueError(f"metric must be {d}x{d}")
        object.__setattr__(self, "entries", rows)
        for a in range(d):
            for b in range(a):
                if not ex.is_zero(rows[a][b] - rows[b][a]):
                    raise ValueError("metric must be symmetric")
        if ex.is_zero(matrix_det(rows)):
            raise SingularError("metric is symbolically degenerate")

    def coordinate_atom(self, a: int) -> Atom:
        """E-coordinate atom at 1-based position a (base block first)."""
        if a <= self.ctx.n:
            return BaseCoord(a)
        return JetCoord(a - self.ctx.n, ())

    def dim(self) -> int:
        return self.ctx.n + self.ctx.m


def permute_chart_division(g: MetricSpec, positions: Sequence[int]) -> MetricSpec:
    """Regenerate the metric in a different division of the same chart.

    `positions` lists, for each new E-coordinate slot, the old slot it
    takes over (a permutation of 1..n+m whose first n entries become the
    new independent coordinates).  Entries are relabelled exactly.
    """
    d = g.dim()
    if sorted(positions) != list(range(1, d + 1)):
        raise ValueError("positions must be a permutation of 1..n+m")
    mapping: Dict[Atom, Atom] = {}
    new_atoms = [g.coordinate_atom(a) for a in range(1, d + 1)]
    for new_slot, old_slot in enumerate(positions, start=1):
        mapping[g.coordinate_atom(old_slot)] = new_atoms[new_slot - 1]
    rows = [
        [
            relabel_atoms(g.entries[positions[a] - 1][positions[b] - 1], mapping)
            for b in range(d)
        ]
        for a in range(d)
    ]
    return MetricSpec(g.ctx, tuple(tuple(row) for row in rows))


# ---------------------------------------------------------------------------
# connection and induced metrics
# ---------------------------------------------------------------------------


def christoffel(g: MetricSpec) -> List[List[List[Expr]]]:
    """Levi-Civita symbols Gamma[a][b][c] = 1/2 g^{ad}(d_b g_dc + d_c g_bd - d_d g_bc)."""
    d = g.dim()
    ginv = matrix_inverse(g.entries)
    atoms = [g.coordinate_atom(a + 1) for a in range(d)]
    dg = [
        [[partial(g.entries[a][b], atoms[c]) for c in range(d)] for b in range(d)]
        for a in range(d)
    ]
    half = ex.from_rational(Fraction(1, 2))
    out = [[[ex.ZERO] * d for _ in range(d)] for _ in range(d)]
    for a in range(d):
        for b in range(d):
            for c in range(b, d):
                acc = ex.ZERO
                for e in range(d):
                    acc = acc + ginv[a][e] * (dg[e][c][b] + dg[b][e][c] - dg[b][c][e])
                val = half * acc
                out[a][b][c] = val
                out[a][c][b] = val
    return out


def first_fundamental_form(g: MetricSpec) -> List[List[Expr]]:
    """Induced metric on the pseudo-horizontal bundle:
    gH_lm = g_lm + g_lj u^j_m + g_im u^i_l + g_ij u^i_l u^j_m."""
    n, m = g.ctx.n, g.ctx.m

    def u1(i, lam):
        return atom_expr(JetCoord(i, (lam,)))

    out = []
    for lam in range(1, n + 1):
        row = []
        for mu in range(1, n + 1):
            acc = g.entries[lam - 1][mu - 1]
            for j in range(1, m + 1):
                acc = acc + g.entries[lam - 1][n + j - 1] * u1(j, mu)
                acc = acc + g.entries[n + j - 1][mu - 1] * u1(j, lam)
            for i in range(1, m + 1):
                for j in range(1, m + 1):
                    acc = acc + g.entries[n + i - 1][n + j - 1] * u1(i, lam) * u1(j, mu)
            row.append(acc)
        out.append(row)
    return out


def inverse_first_fundamental_form(gH: Sequence[Sequence[Expr]]) -> List[List[Expr]]:
    """Exact symbolic inverse (adjugate over determinant)."""
    return matrix_inverse(gH)


def _fiber_covector(g: MetricSpec, i: int, lam: int) -> Expr:
    """g(d/du^i, D_lam) = g_{lam i} + g_{ij} u^j_lam."""
    n, m = g.ctx.n, g.ctx.m
    acc = g.entries[lam - 1][n + i - 1]
    for j in range(1, m + 1):
        acc = acc + g.entries[n + i - 1][n + j - 1] * atom_expr(JetCoord(j, (lam,)))
    return acc


@dataclass(frozen=True)
class NormalFrame:
    """Fields N_i = d/du^i - coeff[i][lam] D_lam spanning the g-normal bundle."""

    coefficients: Tuple[Tuple[Expr, ...], ...]  # [i][lam]


def normal_frame(g: MetricSpec) -> NormalFrame:
    """Local basis of the orthogonal complement of the horizontal bundle.

    Orthogonality g(N_i, D_lam) = 0 is verified symbolically on
    construction.
    """
    n, m = g.ctx.n, g.ctx.m
    gH = first_fundamental_form(g)
    gHinv = inverse_first_fundamental_form(gH)
    coeffs = []
    for i in range(1, m + 1):
        row = []
        for lam in range(1, n + 1):
            acc = ex.ZERO
            for mu in range(1, n + 1):
                acc = acc + _fiber_covector(g, i, mu) * gHinv[mu - 1][lam - 1]
            row.append(acc)
        coeffs.append(tuple(row))
    frame = NormalFrame(tuple(coeffs))
    for i in range(1, m + 1):
        for lam in range(1, n + 1):
            val = _fiber_covector(g, i, lam)
            for mu in range(1, n + 1):
                val = val - coeffs[i - 1][mu - 1] * gH[mu - 1][lam - 1]
            if not ex.is_zero(val):
                raise SingularError("normal frame failed the orthogonality check")
    return frame


def vertical_metric(g: MetricSpec) -> List[List[Expr]]:
    """gV_ij = g_ij - (g_li + g_ik u^k_l)(g_mj + g_jk u^k_m) gHinv^{lm}."""
    n, m = g.ctx.n, g.ctx.m
    gHinv = inverse_first_fundamental_form(first_fundamental_form(g))
    out = [[ex.ZERO] * m for _ in range(m)]
    for i in range(1, m + 1):
        for j in range(i, m + 1):
            acc = g.entries[n + i - 1][n + j - 1]
            for lam in range(1, n + 1):
                for mu in range(1, n + 1):
                    acc = acc - (
                        _fiber_covector(g, i, lam)
                        * _fiber_covector(g, j, mu)
                        * gHinv[lam - 1][mu - 1]
                    )
            out[i - 1][j - 1] = acc
            out[j - 1][i - 1] = acc
    return out


# ---------------------------------------------------------------------------
# second fundamental form, minimal equation, area
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MinimalSystem:
    """Second-fundamental-form tensor and its metric trace.

    `totally_geodesic[k][lam][xi]` is the uncontracted tensor whose zero
    set is the totally geodesic submanifold equation; `minimal` holds the
    m components of its contraction with the inverse induced metric (the
    minimal submanifold equation, stated without the 1/n mean-curvature
    normalization).
    """

    totally_geodesic: Tuple[Tuple[Tuple[Expr, ...], ...], ...]
    minimal: SourceForm


def mean_curvature_equation(g: MetricSpec) -> MinimalSystem:
    n, m = g.ctx.n, g.ctx.m
    gamma = christoffel(g)
    gHinv = inverse_first_fundamental_form(first_fundamental_form(g))

    def u1(i, lam):
        return atom_expr(JetCoord(i, (lam,)))

    def gamma_pulled(a: int, lam: int, xi: int) -> Expr:
        """Gamma^a evaluated on the tangent lifts T_lam, T_xi."""
        acc = gamma[a - 1][lam - 1][xi - 1]
        for i in range(1, m + 1):
            acc = acc + gamma[a - 1][lam - 1][n + i - 1] * u1(i, xi)
            acc = acc + gamma[a - 1][n + i - 1][xi - 1] * u1(i, lam)
        for j in range(1, m + 1):
            for i in range(1, m + 1):
                acc = acc + gamma[a - 1][n + j - 1][n + i - 1] * u1(j, lam) * u1(i, xi)
        return acc

    tg = []
    for k in range(1, m + 1):
        plane = []
        for lam in range(1, n + 1):
            row = []
            for xi in range(1, n + 1):
                val = atom_expr(JetCoord(k, (lam, xi))) + gamma_pulled(n + k, lam, xi)
                for beta in range(1, n + 1):
                    val = val - u1(k, beta) * gamma_pulled(beta, lam, xi)
                row.append(val)
            plane.append(tuple(row))
        tg.append(tuple(plane))
    minimal = []
    for k in range(m):
        acc = ex.ZERO
        for lam in range(n):
            for xi in range(n):
                acc = acc + gHinv[lam][xi] * tg[k][lam][xi]
        minimal.append(acc)
    return MinimalSystem(tuple(tg), SourceForm(g.ctx, tuple(minimal)))


def area_lagrangian(g: MetricSpec) -> Lagrangian:
    """Area density sqrt(det gH) against dxbar^1 ^ ... ^ dxbar^n."""
    return Lagrangian(g.ctx, ex.sqrt(matrix_det(first_fundamental_form(g))))


@dataclass(frozen=True)
class HessianAreaReport:
    """Fiber Hessian of the area density, both ways.

    `direct[lam][mu][i][j]` is d^2 sqrt(det gH) / du^i_lam du^j_mu;
    `closed_form` is gHinv^{lam mu} gV_ij sqrt(det gH); `verified` states
    their exact symbolic equality.
    """

    direct: Tuple
    closed_form: Tuple
    verified: bool


def hessian_area(g: MetricSpec) -> HessianAreaReport:
    n, m = g.ctx.n, g.ctx.m
    area = area_lagrangian(g).density
    gH = first_fundamental_form(g)
    gHinv = inverse_first_fundamental_form(gH)
    gV = vertical_metric(g)
    sqrt_det = area
    direct = []
    closed = []
    verified = True
    for lam in range(1, n + 1):
        d_l, c_l = [], []
        for mu in range(1, n + 1):
            d_m, c_m = [], []
            for i in range(1, m + 1):
                d_i, c_i = [], []
                for j in range(1, m + 1):
                    second = partial(
                        partial(area, JetCoord(i, (lam,))), JetCoord(j, (mu,))
                    )
                    closed_entry = gHinv[lam - 1][mu - 1] * gV[i - 1][j - 1] * sqrt_det
                    if not ex.is_zero(second - closed_entry):
                        verified = False
                    d_i.append(second)
                    c_i.append(closed_entry)
                d_m.append(tuple(d_i))
                c_m.append(tuple(c_i))
            d_l.append(tuple(d_m))
            c_l.append(tuple(c_m))
        direct.append(tuple(d_l))
        closed.append(tuple(c_l))
    return HessianAreaReport(tuple(direct), tuple(closed), verified)

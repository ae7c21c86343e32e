"""Variational operators: Euler-Lagrange, adjoints, Helmholtz, boundary terms.

Densities are stored against dxbar^1 ^ ... ^ dxbar^n (see
:mod:`jetvar.forms` for the volume normalization).  Source forms collect
the m components of an Euler-Lagrange-type equation; C-differential
operators are matrices of total-derivative polynomials.

Sign conventions fixed here:

* euler_lagrange:  eps_i = sum_tau (-1)^|tau| D_tau(d lam0 / d u^i_tau);
* adjoint:         (Delta^* psi)_j = sum (-1)^|sigma| D_sigma(a^sigma_ij psi_i),
  so that psi . Delta(phi) - Delta^*(psi) . phi is a total divergence whose
  boundary term integration-by-parts bookkeeping makes explicit, one
  multi-index letter at a time, left to right over the sorted index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import expr as ex
from .errors import EvaluationError, OrderError, VerificationError
from .expr import BaseCoord, Expr, JetCoord, Param, atom_expr, partial, to_expr
from .forms import Form, boundary_form, horizontal_density, volume_form
from .jet import (
    EvolutionaryField,
    JetContext,
    iterated_total_derivative,
    multi_indices_upto,
    total_derivative,
)

MultiIndex = Tuple[int, ...]


@dataclass(frozen=True)
class Lagrangian:
    """Horizontal n-form density lam0 over a jet context."""

    ctx: JetContext
    density: Expr

    def __post_init__(self):
        object.__setattr__(self, "density", to_expr(self.density))
        if self.density.jet_order() > self.ctx.r:
            raise OrderError(
                f"density order {self.density.jet_order()} exceeds context order {self.ctx.r}"
            )

    def order(self) -> int:
        return max(0, self.density.jet_order())


@dataclass(frozen=True)
class SourceForm:
    """m component expressions of an Euler-Lagrange-type morphism."""

    ctx: JetContext
    components: Tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "components", tuple(to_expr(c) for c in self.components)
        )
        if len(self.components) != self.ctx.m:
            raise ValueError("need one component per dependent coordinate")

    def __getitem__(self, i: int) -> Expr:
        return self.components[i]

    def is_zero(self) -> bool:
        return all(ex.is_zero(c) for c in self.components)


class COperator:
    """Matrix of total-derivative polynomials sum_sigma a^sigma_ij D_sigma.

    Entries map (out component i, in component j, sigma) to coefficient
    expressions; zero entries are pruned, multi-indices kept sorted.
    """

    __slots__ = ("ctx", "m_out", "m_in", "entries")

    def __init__(
        self,
        ctx: JetContext,
        m_out: int,
        m_in: int,
        entries: Mapping[Tuple[int, int, MultiIndex], Expr],
    ):
        self.ctx = ctx
        self.m_out = m_out
        self.m_in = m_in
        self.entries: Dict[Tuple[int, int, MultiIndex], Expr] = {}
        for (i, j, sigma), coef in entries.items():
            coef = to_expr(coef)
            if coef.is_structural_zero:
                continue
            key = (i, j, tuple(sorted(sigma)))
            cur = self.entries.get(key)
            new = coef if cur is None else cur + coef
            if new.is_structural_zero:
                self.entries.pop(key, None)
            else:
                self.entries[key] = new

    def apply(self, phi: Sequence[Expr]) -> Tuple[Expr, ...]:
        if len(phi) != self.m_in:
            raise ValueError(f"operator takes {self.m_in} components")
        phi = [to_expr(p) for p in phi]
        out = [ex.ZERO] * self.m_out
        for (i, j, sigma), coef in self.entries.items():
            out[i - 1] = out[i - 1] + coef * iterated_total_derivative(
                phi[j - 1], sigma, self.ctx
            )
        return tuple(out)

    def __sub__(self, other: "COperator") -> "COperator":
        if (self.m_out, self.m_in) != (other.m_out, other.m_in):
            raise ValueError("operator shapes differ")
        merged = dict(self.entries)
        out = COperator(self.ctx, self.m_out, self.m_in, merged)
        for key, coef in other.entries.items():
            cur = out.entries.get(key, ex.ZERO)
            new = cur - coef
            if new.is_structural_zero:
                out.entries.pop(key, None)
            else:
                out.entries[key] = new
        return out

    def is_zero(self) -> bool:
        return all(ex.is_zero(coef) for coef in self.entries.values())

    def equals(self, other: "COperator") -> bool:
        return (self - other).is_zero()

    def max_order(self) -> int:
        return max((len(sigma) for (_, _, sigma) in self.entries), default=0)

    def __repr__(self):
        return f"COperator({self.m_out}x{self.m_in}, {len(self.entries)} entries)"


# ---------------------------------------------------------------------------
# Euler-Lagrange operator
# ---------------------------------------------------------------------------


def euler_lagrange(lam: Lagrangian) -> SourceForm:
    """eps_i = sum_{|tau| <= r} (-1)^|tau| D_tau(d lam0 / d u^i_tau)."""
    ctx = lam.ctx
    r = lam.order()
    comps = []
    for i in range(1, ctx.m + 1):
        acc = ex.ZERO
        for tau in multi_indices_upto(ctx.n, r):
            d = partial(lam.density, JetCoord(i, tau))
            if d.is_structural_zero:
                continue
            term = iterated_total_derivative(d, tau, ctx)
            if len(tau) % 2:
                term = -term
            acc = acc + term
        comps.append(acc)
    out = SourceForm(ctx, tuple(comps))
    top = max((c.jet_order() for c in out.components), default=-1)
    if top > 2 * r:
        raise OrderError(f"Euler-Lagrange output order {top} exceeds 2r = {2 * r}")
    return out


def is_null_lagrangian(lam: Lagrangian) -> bool:
    return euler_lagrange(lam).is_zero()


# ---------------------------------------------------------------------------
# adjoints and Green's formula
# ---------------------------------------------------------------------------


def _aux_component(ctx: JetContext, family: int, comp: int, width: int) -> int:
    # auxiliary dependent symbols live above the genuine fiber components
    return ctx.m + (family - 1) * width + comp


def _extract_linear(
    e: Expr, ctx: JetContext, family: int, width: int
) -> Dict[Tuple[int, MultiIndex], Expr]:
    """Coefficients of an expression linear in one auxiliary symbol family."""
    lo = ctx.m + (family - 1) * width
    hi = lo + width
    out: Dict[Tuple[int, MultiIndex], Expr] = {}
    for a in sorted(e.atoms(), key=lambda a: a.key):
        if isinstance(a, JetCoord) and lo < a.comp <= hi:
            coef = partial(e, a)
            if coef.is_structural_zero:
                continue
            out[(a.comp - lo, a.sigma)] = coef
    return out


def adjoint(op: COperator) -> COperator:
    """Green dual: (Delta^* psi)_j = (-1)^|sigma| D_sigma(a^sigma_ij psi_i).

    Expanded to canonical form by treating psi as fresh dependent symbols
    and extracting the coefficients of their jet coordinates.
    """
    ctx = op.ctx
    width = max(op.m_out, op.m_in)
    entries: Dict[Tuple[int, int, MultiIndex], Expr] = {}
    for j in range(1, op.m_in + 1):
        acc = ex.ZERO
        for (i, jj, sigma), coef in op.entries.items():
            if jj != j:
                continue
            psi = atom_expr(JetCoord(_aux_component(ctx, 1, i, width), ()))
            term = iterated_total_derivative(coef * psi, sigma, ctx)
            if len(sigma) % 2:
                term = -term
            acc = acc + term
        for (i, tau), coef in _extract_linear(acc, ctx, 1, width).items():
            entries[(j, i, tau)] = entries.get((j, i, tau), ex.ZERO) + coef
    return COperator(ctx, op.m_in, op.m_out, entries)


def _telescope(
    coef: Expr,
    phi_comp: Expr,
    sigma: MultiIndex,
    ctx: JetContext,
    boundary: List[Expr],
) -> Expr:
    """One integration-by-parts sweep.

    Rewrites coef * D_sigma(phi) as (-1)^|sigma| D_sigma(coef) * phi plus a
    divergence, accumulating the divergence components; returns the
    adjoint-side term.
    """
    if not sigma:
        return coef * phi_comp
    lam, rest = sigma[0], sigma[1:]
    boundary[lam - 1] = boundary[lam - 1] + coef * iterated_total_derivative(
        phi_comp, rest, ctx
    )
    return _telescope(-total_derivative(coef, lam, ctx), phi_comp, rest, ctx, boundary)


def green_residual(
    op: COperator, phi: Sequence[Expr], psi: Sequence[Expr]
) -> Form:
    """Boundary (n-1)-form w with dbar(w) = psi . Delta(phi) - Delta^*(psi) . phi.

    The defining identity is re-verified symbolically before returning; a
    failure raises :class:`VerificationError` and indicates a bug, not bad
    input.
    """
    ctx = op.ctx
    phi = [to_expr(p) for p in phi]
    psi = [to_expr(p) for p in psi]
    if len(phi) != op.m_in or len(psi) != op.m_out:
        raise ValueError("phi/psi lengths do not match the operator shape")
    boundary = [ex.ZERO] * ctx.n
    adj_side = ex.ZERO
    for (i, j, sigma), coef in op.entries.items():
        adj_side = adj_side + _telescope(
            psi[i - 1] * coef, phi[j - 1], sigma, ctx, boundary
        )
    lhs = ex.ZERO
    for i, val in enumerate(op.apply(phi)):
        lhs = lhs + psi[i] * val
    star = adjoint(op)
    rhs = ex.ZERO
    for j, val in enumerate(star.apply(psi)):
        rhs = rhs + val * phi[j]
    divergence = ex.ZERO
    for lam in range(1, ctx.n + 1):
        divergence = divergence + total_derivative(boundary[lam - 1], lam, ctx)
    if not ex.is_zero(lhs - rhs - divergence):
        raise VerificationError("green_residual identity failed to verify")
    return boundary_form(boundary, ctx)


# ---------------------------------------------------------------------------
# linearization and Helmholtz test
# ---------------------------------------------------------------------------


def linearization(eps: SourceForm) -> COperator:
    """Fréchet derivative along evolutionary directions:
    entries sum_sigma (d eps_i / d u^j_sigma) D_sigma."""
    ctx = eps.ctx
    entries: Dict[Tuple[int, int, MultiIndex], Expr] = {}
    for i, comp in enumerate(eps.components, start=1):
        for a in sorted(comp.atoms(), key=lambda a: a.key):
            if isinstance(a, JetCoord) and a.comp <= ctx.m:
                d = partial(comp, a)
                if not d.is_structural_zero:
                    entries[(i, a.comp, a.sigma)] = d
    return COperator(ctx, ctx.m, ctx.m, entries)


def helmholtz_check(eps: SourceForm) -> Tuple[bool, COperator]:
    """Local variationality test.

    The obstruction is the failure of the linearization to be self-adjoint;
    the residual ell - ell^* is returned alongside the verdict (zero
    residual == locally variational).
    """
    ell = linearization(eps)
    residual = ell - adjoint(ell)
    return residual.is_zero(), residual


# ---------------------------------------------------------------------------
# multilinear operators and internalization
# ---------------------------------------------------------------------------


class MultiOperator:
    """p-argument C-differential operator with density values.

    Entries map a tuple of p (component, sigma) slots to a coefficient:
    Delta(phi_1, ..., phi_p) = sum entry * prod_k D_{sigma_k} phi_k^{j_k},
    as a multiple of the horizontal volume.
    """

    __slots__ = ("ctx", "p", "entries")

    def __init__(self, ctx: JetContext, p: int, entries):
        self.ctx = ctx
        self.p = p
        self.entries: Dict[Tuple[Tuple[int, MultiIndex], ...], Expr] = {}
        for slots, coef in entries.items():
            coef = to_expr(coef)
            if coef.is_structural_zero:
                continue
            key = tuple((j, tuple(sorted(sig))) for j, sig in slots)
            if len(key) != p:
                raise ValueError("slot count does not match arity")
            cur = self.entries.get(key)
            new = coef if cur is None else cur + coef
            if new.is_structural_zero:
                self.entries.pop(key, None)
            else:
                self.entries[key] = new

    def apply(self, phis: Sequence[Sequence[Expr]]) -> Expr:
        if len(phis) != self.p:
            raise ValueError(f"operator takes {self.p} arguments")
        out = ex.ZERO
        for slots, coef in self.entries.items():
            term = coef
            for k, (j, sigma) in enumerate(slots):
                term = term * iterated_total_derivative(
                    to_expr(phis[k][j - 1]), sigma, self.ctx
                )
            out = out + term
        return out

    def is_zero(self) -> bool:
        return all(ex.is_zero(coef) for coef in self.entries.values())

    def __sub__(self, other: "MultiOperator") -> "MultiOperator":
        merged = dict(self.entries)
        out = MultiOperator(self.ctx, self.p, merged)
        for key, coef in other.entries.items():
            cur = out.entries.get(key, ex.ZERO)
            new = cur - coef
            if new.is_structural_zero:
                out.entries.pop(key, None)
            else:
                out.entries[key] = new
        return out

    def __repr__(self):
        return f"MultiOperator(p={self.p}, {len(self.entries)} entries)"


def internalize(op: MultiOperator) -> MultiOperator:
    """Adjoint in the last argument; the canonical representative used for
    variational p-forms.

    Output entries carry an undifferentiated last slot:
    I(Delta)(phi_1..phi_{p-1})(phi_p) =
        (-1)^|tau| D_tau(coef * prod_{k<p} D_{sigma_k} phi_k) * phi_p.
    For p = 1 this reproduces the Euler-Lagrange components of the density
    Delta(.).
    """
    ctx = op.ctx
    p = op.p
    width = ctx.m
    out_entries: Dict[Tuple[Tuple[int, MultiIndex], ...], Expr] = {}
    by_last: Dict[Tuple[int, MultiIndex], Expr] = {}
    for slots, coef in op.entries.items():
        head, last = slots[:-1], slots[-1]
        term = coef
        for k, (j, sigma) in enumerate(head, start=1):
            aux = atom_expr(JetCoord(_aux_component(ctx, k, j, width), sigma))
            # D_sigma(Phi^k_j) is itself a jet coordinate of the aux symbol
            term = term * aux
        key = last
        by_last[key] = by_last.get(key, ex.ZERO) + term
    for (j_p, tau), packed in by_last.items():
        moved = iterated_total_derivative(packed, tau, ctx)
        if len(tau) % 2:
            moved = -moved
        for head_slots, coef in _unpack_multilinear(moved, ctx, p - 1, width).items():
            key = head_slots + ((j_p, ()),)
            cur = out_entries.get(key, ex.ZERO)
            out_entries[key] = cur + coef
    return MultiOperator(ctx, p, out_entries)


def _unpack_multilinear(
    e: Expr, ctx: JetContext, families: int, width: int
) -> Dict[Tuple[Tuple[int, MultiIndex], ...], Expr]:
    """Extract coefficients of an expression multilinear in `families`
    auxiliary symbol families (one jet atom of each per term)."""
    if families == 0:
        return {(): e}
    out: Dict[Tuple[Tuple[int, MultiIndex], ...], Expr] = {}
    for (comp, sigma), coef in _extract_linear(e, ctx, 1, width).items():
        for tail, sub in _unpack_multilinear(
            _shift_families(coef, ctx, width), ctx, families - 1, width
        ).items():
            key = ((comp, sigma),) + tail
            out[key] = out.get(key, ex.ZERO) + sub
    return out


def _shift_families(e: Expr, ctx: JetContext, width: int) -> Expr:
    """Renumber aux families 2.. down by one (family 1 was just consumed)."""
    bindings = {}
    for a in e.atoms():
        if isinstance(a, JetCoord) and a.comp > ctx.m + width:
            bindings[a] = atom_expr(JetCoord(a.comp - width, a.sigma))
    if not bindings:
        return e
    return ex.substitute(e, bindings)


def source_pairing_operator(eps: SourceForm) -> MultiOperator:
    """Two-argument operator (phi1, phi2) -> phi1 . ell_eps(phi2)."""
    ell = linearization(eps)
    entries = {}
    for (i, j, sigma), coef in ell.entries.items():
        entries[((i, ()), (j, sigma))] = coef
    return MultiOperator(eps.ctx, 2, entries)


def density_operator(lam: Lagrangian) -> MultiOperator:
    """One-argument operator phi -> Evo_phi(lam0) as a density."""
    ctx = lam.ctx
    entries = {}
    for a in sorted(lam.density.atoms(), key=lambda a: a.key):
        if isinstance(a, JetCoord) and a.comp <= ctx.m:
            d = partial(lam.density, a)
            if not d.is_structural_zero:
                entries[((a.comp, a.sigma),)] = d
    return MultiOperator(ctx, 1, entries)


# ---------------------------------------------------------------------------
# first variation
# ---------------------------------------------------------------------------


def first_variation(
    lam: Lagrangian, phi: EvolutionaryField
) -> Tuple[Expr, Form]:
    """Split Evo_phi(lam0) Vol = E(lam)(phi) Vol + dbar(boundary).

    Returns the contracted Euler-Lagrange term sum_i eps_i phi^i and the
    boundary (n-1)-form; the identity is verified symbolically.
    """
    ctx = lam.ctx
    eps = euler_lagrange(lam)
    e_term = ex.ZERO
    for i in range(ctx.m):
        e_term = e_term + eps.components[i] * phi.components[i]
    boundary = [ex.ZERO] * ctx.n
    direct = ex.ZERO
    for a in sorted(lam.density.atoms(), key=lambda a: a.key):
        if isinstance(a, JetCoord) and a.comp <= ctx.m:
            d = partial(lam.density, a)
            if d.is_structural_zero:
                continue
            direct = direct + _telescope(
                d, phi.components[a.comp - 1], a.sigma, ctx, boundary
            )
    divergence = ex.ZERO
    for lam_i in range(1, ctx.n + 1):
        divergence = divergence + total_derivative(boundary[lam_i - 1], lam_i, ctx)
    evo_value = ex.ZERO
    for a in sorted(lam.density.atoms(), key=lambda a: a.key):
        if isinstance(a, JetCoord) and a.comp <= ctx.m:
            evo_value = evo_value + iterated_total_derivative(
                phi.components[a.comp - 1], a.sigma, ctx
            ) * partial(lam.density, a)
    if not ex.is_zero(direct - e_term):
        raise VerificationError("telescoped E-term disagrees with euler_lagrange")
    if not ex.is_zero(evo_value - e_term - divergence):
        raise VerificationError("first variation identity failed to verify")
    return e_term, boundary_form(boundary, ctx)


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------


@dataclass
class ActionCheckReport:
    lhs: float  # d/dt of the discretized action at t = 0
    rhs: float  # grid integral of E(lam) . phi on the submanifold
    rel_error: float
    tol: float
    grid_shape: Tuple[int, ...]

    @property
    def passed(self) -> bool:
        return self.rel_error < self.tol


def _simpson_weights(k: int) -> List[Fraction]:
    if k < 3 or k % 2 == 0:
        raise ValueError("Simpson needs an odd point count >= 3")
    w = [Fraction(1)] + [Fraction(4) if i % 2 else Fraction(2) for i in range(1, k - 1)] + [
        Fraction(1)
    ]
    return [Fraction(1, 3) * wi for wi in w]


def finite_difference_action_check(
    lam: Lagrangian,
    submanifold: Sequence[Expr],
    variation: Sequence[Expr],
    box: Sequence[Tuple[Fraction, Fraction]] = None,
    grid_points: Optional[int] = None,
    fd_step: float = 1e-4,
    tol: float = 1e-4,
) -> ActionCheckReport:
    """Numeric cross-check of the first variation.

    Compares the central finite difference (step `fd_step`) of the
    discretized action of u = p + t*phi against the grid integral of
    E(lam) . phi on p, over a box with a composite-Simpson rule.  `p` and
    `phi` are polynomial expressions in the base coordinates; phi should
    vanish on the box boundary.
    """
    ctx = lam.ctx
    n = ctx.n
    if box is None:
        box = [(Fraction(0), Fraction(1))] * n
    if grid_points is None:
        grid_points = {1: 1001, 2: 33, 3: 11}.get(n, 5)
    if grid_points % 2 == 0:
        grid_points += 1
    p = [to_expr(c) for c in submanifold]
    phi = [to_expr(c) for c in variation]
    for e in itertools.chain(p, phi):
        if any(isinstance(a, JetCoord) for a in e.atoms()):
            raise ValueError("submanifold/variation must depend on base coordinates only")

    t = Param("t@fd")  # private name, cannot collide with parsed constants

    def jets(fns: Sequence[Expr], tau: MultiIndex) -> List[Expr]:
        out = []
        for f in fns:
            g = f
            for lam_i in tau:
                g = partial(g, BaseCoord(lam_i))
            out.append(g)
        return out

    # substitution u^i_tau -> d_tau(p^i) + t d_tau(phi^i)
    bindings = {}
    bindings_p = {}
    for a in sorted(lam.density.atoms(), key=lambda a: a.key):
        if isinstance(a, JetCoord):
            dp = jets(p, a.sigma)[a.comp - 1]
            dphi = jets(phi, a.sigma)[a.comp - 1]
            bindings[a] = dp + atom_expr(t) * dphi
            bindings_p[a] = dp
    density_t = ex.substitute(lam.density, bindings)

    eps = euler_lagrange(lam)
    integrand = ex.ZERO
    for i in range(ctx.m):
        comp = eps.components[i]
        comp_bindings = {}
        for a in comp.atoms():
            if isinstance(a, JetCoord):
                comp_bindings[a] = jets(p, a.sigma)[a.comp - 1]
        integrand = integrand + ex.substitute(comp, comp_bindings) * phi[i]

    # quadrature grid; plain float arithmetic is plenty for the 1e-4 target
    axes = []
    weights = []
    w1 = _simpson_weights(grid_points)
    for (lo, hi) in box:
        lo, hi = Fraction(lo), Fraction(hi)
        h = (hi - lo) / (grid_points - 1)
        axes.append([float(lo + h * i) for i in range(grid_points)])
        weights.append([float(w * h) for w in w1])

    base_atoms = [BaseCoord(lam_i) for lam_i in range(1, n + 1)]

    def quad(expr: Expr, extra: Optional[Mapping] = None) -> float:
        total = 0.0
        for idx in itertools.product(range(grid_points), repeat=n):
            point = {base_atoms[k]: axes[k][idx[k]] for k in range(n)}
            if extra:
                point.update(extra)
            w = 1.0
            for k in range(n):
                w *= weights[k][idx[k]]
            total += w * float(ex.evaluate(expr, point))
        return total

    h = fd_step
    s_plus = quad(density_t, {t: h})
    s_minus = quad(density_t, {t: -h})
    lhs = (s_plus - s_minus) / (2 * h)
    rhs = quad(integrand)
    scale = max(abs(lhs), abs(rhs), 1e-12)
    rel = abs(lhs - rhs) if scale <= 1e-9 else abs(lhs - rhs) / scale
    return ActionCheckReport(
        lhs=lhs,
        rhs=rhs,
        rel_error=rel,
        tol=tol,
        grid_shape=tuple([grid_points] * n),
    )

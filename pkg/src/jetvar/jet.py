"""Jet-space bookkeeping.

A :class:`JetContext` fixes the chart data: n independent coordinates,
m dependent ones, the jet order r and the coordinate names.  Atoms are
context-free index records; the context interprets and names them, and
owns multi-index canonicalization (multi-indices are sorted tuples, so
symmetry of mixed partials is built in).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import expr as ex
from .errors import OrderError, SingularError
from .expr import Atom, BaseCoord, Expr, JetCoord, atom_expr, partial, to_expr

MultiIndex = Tuple[int, ...]


def multi_index(entries: Sequence[int], n: Optional[int] = None) -> MultiIndex:
    """Canonical (sorted) multi-index; validates the 1..n range if n given."""
    sig = tuple(sorted(entries))
    if any(s < 1 for s in sig):
        raise ValueError("multi-index entries are 1-based")
    if n is not None and any(s > n for s in sig):
        raise ValueError(f"multi-index entry exceeds n={n}")
    return sig


def multi_indices(n: int, order: int) -> List[MultiIndex]:
    """All sorted multi-indices over 1..n with |sigma| == order."""
    return list(itertools.combinations_with_replacement(range(1, n + 1), order))


def multi_indices_upto(n: int, order: int) -> List[MultiIndex]:
    out: List[MultiIndex] = []
    for k in range(order + 1):
        out.extend(multi_indices(n, k))
    return out


def _default_base_names(n: int) -> Tuple[str, ...]:
    if n <= 3:
        return ("x", "y", "z")[:n]
    return tuple(f"x{i}" for i in range(1, n + 1))


@dataclass(frozen=True)
class JetContext:
    """Chart data for a jet space of n-dimensional submanifolds."""

    n: int
    m: int
    r: int
    base_names: Tuple[str, ...] = ()
    fiber_names: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.r < 0:
            raise ValueError("need n >= 1, m >= 1, r >= 0")
        if not self.base_names:
            object.__setattr__(self, "base_names", _default_base_names(self.n))
        if not self.fiber_names:
            object.__setattr__(
                self, "fiber_names", tuple(f"u{i}" for i in range(1, self.m + 1))
            )
        if len(self.base_names) != self.n or len(self.fiber_names) != self.m:
            raise ValueError("coordinate name count does not match (n, m)")
        names = self.base_names + self.fiber_names
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be distinct")
        for nm in names:
            if "_" in nm:
                raise ValueError("coordinate names may not contain '_'")

    # -- atom/expression factories ------------------------------------------

    def x(self, lam: int) -> Expr:
        if not 1 <= lam <= self.n:
            raise ValueError(f"base index {lam} out of range 1..{self.n}")
        return atom_expr(BaseCoord(lam))

    def u(self, comp: int, sigma: Sequence[int] = ()) -> Expr:
        if not 1 <= comp <= self.m:
            raise ValueError(f"fiber index {comp} out of range 1..{self.m}")
        sig = multi_index(sigma, self.n)
        return atom_expr(JetCoord(comp, sig))

    # -- naming --------------------------------------------------------------

    def atom_name(self, a: Atom) -> str:
        if isinstance(a, BaseCoord):
            return self.base_names[a.index - 1]
        if isinstance(a, JetCoord):
            head = self.fiber_names[a.comp - 1]
            if not a.sigma:
                return head
            letters = "".join(self.base_names[s - 1] for s in a.sigma)
            return f"{head}_{letters}"
        raise TypeError(f"not a coordinate atom: {a!r}")

    @cached_property
    def name_table(self) -> Dict[str, Atom]:
        """Identifier -> coordinate atom, with a bare-'u' alias for m = 1."""
        table: Dict[str, Atom] = {}
        for i, nm in enumerate(self.base_names, start=1):
            table[nm] = BaseCoord(i)
        for i, nm in enumerate(self.fiber_names, start=1):
            table[nm] = JetCoord(i, ())
        if self.m == 1 and "u" not in table:
            table["u"] = JetCoord(1, ())
        if self.n == 1 and "x" not in table:
            table["x"] = BaseCoord(1)
        return table


def enumerate_coordinates(ctx: JetContext, k: int) -> List[Atom]:
    """All coordinate atoms of order <= k, in deterministic order.

    Base coordinates first, then jet coordinates grouped by |sigma|,
    within a group by component and by multi-index.
    """
    if not 0 <= k <= ctx.r:
        raise OrderError(f"order {k} out of range 0..{ctx.r}")
    out: List[Atom] = [BaseCoord(lam) for lam in range(1, ctx.n + 1)]
    for order in range(k + 1):
        for comp in range(1, ctx.m + 1):
            for sig in multi_indices(ctx.n, order):
                out.append(JetCoord(comp, sig))
    return out


# ---------------------------------------------------------------------------
# total derivatives
# ---------------------------------------------------------------------------


def total_derivative(e: Expr, lam: int, ctx: JetContext) -> Expr:
    """D_lam = d/dx^lam + u^j_{sigma,lam} d/du^j_sigma.

    Function symbols differentiate through their arguments by the chain
    rule, which the kernel partial already provides.  The result lives one
    jet order higher than the input.
    """
    if not 1 <= lam <= ctx.n:
        raise ValueError(f"base index {lam} out of range 1..{ctx.n}")
    out = partial(e, BaseCoord(lam))
    for a in sorted(e.atoms(), key=lambda a: a.key):
        if isinstance(a, JetCoord):
            d = partial(e, a)
            if not d.is_structural_zero:
                lifted = JetCoord(a.comp, a.sigma + (lam,))
                out = out + atom_expr(lifted) * d
    return out


def iterated_total_derivative(e: Expr, sigma: Sequence[int], ctx: JetContext) -> Expr:
    """D_sigma as a composition; independent of the composition order."""
    out = e
    for lam in sigma:
        out = total_derivative(out, lam, ctx)
    return out


@dataclass(frozen=True)
class EvolutionaryField:
    """Vertical-direction generator with m component expressions."""

    components: Tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "components", tuple(to_expr(c) for c in self.components)
        )

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]


def evolutionary_apply(phi: EvolutionaryField, e: Expr, ctx: JetContext) -> Expr:
    """Apply sum_{i,sigma} D_sigma(phi^i) d/du^i_sigma to e."""
    out = ex.ZERO
    for a in sorted(e.atoms(), key=lambda a: a.key):
        if isinstance(a, JetCoord):
            d = partial(e, a)
            if d.is_structural_zero:
                continue
            comp = phi.components[a.comp - 1]
            out = out + iterated_total_derivative(comp, a.sigma, ctx) * d
    return out


# ---------------------------------------------------------------------------
# first-order change of chart division
# ---------------------------------------------------------------------------


def change_division_first_order(jac: Sequence[Sequence[Expr]], ctx: JetContext):
    """First-order jet coordinate change induced by a point transformation.

    `jac` is the (n+m) x (n+m) Jacobian of the new chart (y^mu, v^j) with
    respect to the old one (x^lam, u^i); rows list new coordinates, columns
    old ones, base block first.  Returns the map {(j, mu): v^j_mu} with

        v^j_mu = A_mu^lam (J^j_lam + J^j_i u^i_lam),
        A = (J^mu_lam + J^mu_i u^i_lam)^{-1}.

    Raises :class:`SingularError` when A is symbolically singular.
    """
    from .linalg import matrix_inverse

    n, m = ctx.n, ctx.m
    if len(jac) != n + m or any(len(row) != n + m for row in jac):
        raise ValueError(f"expected a {(n + m)}x{(n + m)} Jacobian")
    J = [[to_expr(v) for v in row] for row in jac]

    def u1(i, lam):
        return atom_expr(JetCoord(i, (lam,)))

    # M[mu][lam] = J^mu_lam + J^mu_i u^i_lam
    M = [
        [
            J[mu][lam]
            + sum(
                (J[mu][n + i] * u1(i + 1, lam + 1) for i in range(m)),
                start=ex.ZERO,
            )
            for lam in range(n)
        ]
        for mu in range(n)
    ]
    A = matrix_inverse(M)  # A[mu][lam], raises SingularError if degenerate
    out: Dict[Tuple[int, int], Expr] = {}
    for j in range(m):
        for mu in range(n):
            acc = ex.ZERO
            for lam in range(n):
                rhs = J[n + j][lam] + sum(
                    (J[n + j][n + i] * u1(i + 1, lam + 1) for i in range(m)),
                    start=ex.ZERO,
                )
                acc = acc + A[mu][lam] * rhs
            out[(j + 1, mu + 1)] = acc
    return out


def relabel_atoms(e: Expr, mapping: Dict[Atom, Atom]) -> Expr:
    """Exact atom-for-atom relabeling (swaps allowed, unlike substitute)."""
    return _rebuild_atoms(e, lambda a: mapping.get(a, a))


def permute_base_coordinates(e: Expr, perm: Sequence[int]) -> Expr:
    """Relabel base coordinates by a permutation (1-based images).

    Exact substitution at the atom level: x^lam -> x^perm(lam) and every
    multi-index entry is remapped and re-sorted.  Used to regenerate chart
    formulas in a different division of the same chart.
    """
    n = len(perm)
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError("not a permutation of 1..n")

    def map_atom(a: Atom):
        if isinstance(a, BaseCoord):
            return BaseCoord(perm[a.index - 1])
        if isinstance(a, JetCoord):
            return JetCoord(a.comp, tuple(perm[s - 1] for s in a.sigma))
        return a

    return _rebuild_atoms(e, map_atom)


def _rebuild_atoms(e: Expr, map_atom) -> Expr:
    def conv_atom(a: Atom) -> Expr:
        if isinstance(a, ex.PowAtom):
            return ex.rational_power(conv(a.base), Fraction(1, a.root))
        if isinstance(a, ex.FuncAtom):
            return atom_expr(
                ex.FuncAtom(a.name, a.deriv, tuple(conv(arg) for arg in a.args))
            )
        return atom_expr(map_atom(a))

    def conv(x: Expr) -> Expr:
        out = ex.ZERO
        for mono, c in x.num.items():
            term = ex.from_rational(c)
            for a, k in mono:
                term = term * conv_atom(a) ** k
            out = out + term
        for p, k in x.den:
            out = out * conv(ex.Expr(p, ())) ** (-k)
        return out

    return conv(e)

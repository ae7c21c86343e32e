"""Exterior calculus on jet coordinates.

Forms are stored as graded sums: ordered wedge of basis covectors mapped
to a coefficient expression.  Two covector families coexist:

* raw basis `dx^lam`, `du^i_sigma`;
* contact basis `dx^lam`, `omega^i_sigma` with
  `omega^i_sigma = du^i_sigma - u^i_{sigma,lam} dx^lam`; horizontal slots
  are relabelled `dxbar^lam` once a form has been pushed to the
  pseudo-horizontal bundle.

Wedge factors are kept strictly ordered (dxbar < dx < du < omega, then by
index); antisymmetry is resolved at construction, duplicates vanish.

Volume convention: horizontal densities are stored against
`dxbar^1 ^ ... ^ dxbar^n` with no n! factor; every derived equation here
is invariant under that overall normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import expr as ex
from .errors import JetvarError
from .expr import Atom, BaseCoord, Expr, JetCoord, atom_expr, partial, to_expr
from .jet import EvolutionaryField, JetContext, iterated_total_derivative, total_derivative

DXBAR = 0
DX = 1
DU = 2
OMEGA = 3

_FAMILY_NAMES = {DXBAR: "dxbar", DX: "dx", DU: "du", OMEGA: "omega"}


@dataclass(frozen=True)
class Covector:
    """Basis covector; `index` is the base index for dx/dxbar, else the
    fiber component, with `sigma` the jet multi-index."""

    family: int
    index: int
    sigma: Tuple[int, ...] = ()

    @property
    def key(self):
        return (self.family, self.index, len(self.sigma), self.sigma)

    def __repr__(self):
        name = _FAMILY_NAMES[self.family]
        if self.family in (DX, DXBAR):
            return f"{name}{self.index}"
        sig = "".join(str(s) for s in self.sigma)
        return f"{name}{self.index}_{sig}" if sig else f"{name}{self.index}"


def dx(lam: int) -> Covector:
    return Covector(DX, lam)


def dxbar(lam: int) -> Covector:
    return Covector(DXBAR, lam)


def du(comp: int, sigma: Sequence[int] = ()) -> Covector:
    return Covector(DU, comp, tuple(sorted(sigma)))


def omega(comp: int, sigma: Sequence[int] = ()) -> Covector:
    return Covector(OMEGA, comp, tuple(sorted(sigma)))


def _sort_covectors(covs: Sequence[Covector]):
    """Insertion sort returning (sorted tuple, parity sign) or (None, 0)."""
    arr = list(covs)
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j].key < arr[j - 1].key:
            arr[j], arr[j - 1] = arr[j - 1], arr[j]
            sign = -sign
            j -= 1
    for a, b in zip(arr, arr[1:]):
        if a.key == b.key:
            return None, 0
    return tuple(arr), sign


class Form:
    """Graded sum of wedge terms with expression coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Tuple[Covector, ...], Expr]] = None):
        self.terms = {}
        if terms:
            for covs, coef in terms.items():
                self._accumulate(covs, coef)

    def _accumulate(self, covs, coef):
        coef = to_expr(coef)
        if coef.is_structural_zero:
            return
        sorted_covs, sign = _sort_covectors(covs)
        if sorted_covs is None:
            return
        if sign < 0:
            coef = -coef
        cur = self.terms.get(sorted_covs)
        new = coef if cur is None else cur + coef
        if new.is_structural_zero:
            self.terms.pop(sorted_covs, None)
        else:
            self.terms[sorted_covs] = new

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero() -> "Form":
        return Form()

    @staticmethod
    def term(coef, covs: Sequence[Covector] = ()) -> "Form":
        f = Form()
        f._accumulate(tuple(covs), coef)
        return f

    @staticmethod
    def scalar(coef) -> "Form":
        return Form.term(coef, ())

    # -- algebra -------------------------------------------------------------

    def __add__(self, other: "Form") -> "Form":
        out = Form()
        for covs, coef in self.terms.items():
            out._accumulate(covs, coef)
        for covs, coef in other.terms.items():
            out._accumulate(covs, coef)
        return out

    def __neg__(self) -> "Form":
        out = Form()
        for covs, coef in self.terms.items():
            out.terms[covs] = -coef
        return out

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, scalar) -> "Form":
        s = to_expr(scalar)
        out = Form()
        for covs, coef in self.terms.items():
            out._accumulate(covs, coef * s)
        return out

    __rmul__ = __mul__

    def wedge(self, other: "Form") -> "Form":
        out = Form()
        for c1, k1 in self.terms.items():
            for c2, k2 in other.terms.items():
                out._accumulate(c1 + c2, k1 * k2)
        return out

    # -- inspection ----------------------------------------------------------

    @property
    def is_structural_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        degs = {len(covs) for covs in self.terms}
        if not degs:
            return 0
        if len(degs) > 1:
            raise JetvarError("form has mixed degrees")
        return degs.pop()

    def families(self) -> set:
        return {c.family for covs in self.terms for c in covs}

    def contact_degree_parts(self) -> Dict[int, "Form"]:
        parts: Dict[int, Form] = {}
        for covs, coef in self.terms.items():
            p = sum(1 for c in covs if c.family == OMEGA)
            parts.setdefault(p, Form())._accumulate(covs, coef)
        return parts

    def coefficient(self, covs: Sequence[Covector]) -> Expr:
        sorted_covs, sign = _sort_covectors(tuple(covs))
        if sorted_covs is None:
            return ex.ZERO
        coef = self.terms.get(sorted_covs, ex.ZERO)
        return -coef if sign < 0 else coef

    def map_coefficients(self, fn) -> "Form":
        out = Form()
        for covs, coef in self.terms.items():
            out._accumulate(covs, fn(coef))
        return out

    def __repr__(self):
        if not self.terms:
            return "Form(0)"
        bits = []
        for covs in sorted(self.terms, key=lambda cs: tuple(c.key for c in cs)):
            wedge_txt = "^".join(repr(c) for c in covs) or "1"
            bits.append(f"({self.terms[covs]!r})*{wedge_txt}")
        return "Form(" + " + ".join(bits) + ")"


def form_is_zero(f: Form) -> bool:
    return all(ex.is_zero(coef) for coef in f.terms.values())


def forms_equal(f1: Form, f2: Form) -> bool:
    return form_is_zero(f1 - f2)


def wedge_all(forms: Iterable[Form]) -> Form:
    out = Form.scalar(ex.ONE)
    for f in forms:
        out = out.wedge(f)
    return out


# ---------------------------------------------------------------------------
# differentials
# ---------------------------------------------------------------------------


def _coefficient_differential(coef: Expr, ctx: JetContext) -> Form:
    """d(coef) as a 1-form in the raw basis, chain rule included."""
    out = Form()
    for a in sorted(coef.atoms(), key=lambda a: a.key):
        if isinstance(a, BaseCoord):
            out._accumulate((dx(a.index),), partial(coef, a))
        elif isinstance(a, JetCoord):
            out._accumulate((du(a.comp, a.sigma),), partial(coef, a))
    return out


def exterior_derivative(f: Form, ctx: JetContext) -> Form:
    """Exterior differential on raw/contact forms; d o d = 0."""
    if DXBAR in f.families():
        raise JetvarError("apply horizontal_differential to horizontal forms")
    out = Form()
    for covs, coef in f.terms.items():
        dcoef = _coefficient_differential(coef, ctx)
        for dc_cov, dc_val in dcoef.terms.items():
            out._accumulate(dc_cov + covs, dc_val)
        # d(omega^i_sigma) = dx^lam ^ omega^i_{sigma,lam}
        for j, c in enumerate(covs):
            if c.family != OMEGA:
                continue
            sign = (-1) ** j
            for lam in range(1, ctx.n + 1):
                new = (
                    covs[:j]
                    + (dx(lam), omega(c.index, c.sigma + (lam,)))
                    + covs[j + 1 :]
                )
                out._accumulate(new, coef * ex.from_rational(sign))
    return out


def contact_split(f: Form, ctx: JetContext) -> Form:
    """Rewrite du^i_sigma = omega^i_sigma + u^i_{sigma,lam} dx^lam.

    Splitting then recombining with :func:`to_raw_basis` returns the input
    exactly.
    """
    out = Form()
    for covs, coef in f.terms.items():
        expansions: List[List[Tuple[Covector, Expr]]] = []
        for c in covs:
            if c.family == DU:
                opts = [(omega(c.index, c.sigma), ex.ONE)]
                for lam in range(1, ctx.n + 1):
                    opts.append(
                        (dx(lam), atom_expr(JetCoord(c.index, c.sigma + (lam,))))
                    )
                expansions.append(opts)
            else:
                expansions.append([(c, ex.ONE)])
        _expand_product(out, covs=(), coef=coef, options=expansions)
    return out


def _expand_product(out: Form, covs, coef, options):
    if not options:
        out._accumulate(covs, coef)
        return
    head, *rest = options
    for cov, factor in head:
        _expand_product(out, covs + (cov,), coef * factor, rest)


def to_raw_basis(f: Form, ctx: JetContext) -> Form:
    """Inverse of :func:`contact_split`: omega -> du - u^i_{sigma,lam} dx^lam."""
    out = Form()
    for covs, coef in f.terms.items():
        expansions = []
        for c in covs:
            if c.family == OMEGA:
                opts = [(du(c.index, c.sigma), ex.ONE)]
                for lam in range(1, ctx.n + 1):
                    opts.append(
                        (dx(lam), -atom_expr(JetCoord(c.index, c.sigma + (lam,))))
                    )
                expansions.append(opts)
            elif c.family == DXBAR:
                raise JetvarError("horizontal forms have no raw-basis preimage")
            else:
                expansions.append([(c, ex.ONE)])
        _expand_product(out, covs=(), coef=coef, options=expansions)
    return out


def _relabel_dx_to_dxbar(f: Form) -> Form:
    out = Form()
    for covs, coef in f.terms.items():
        out._accumulate(
            tuple(dxbar(c.index) if c.family == DX else c for c in covs), coef
        )
    return out


def horizontalize(f: Form, ctx: JetContext, q: Optional[int] = None) -> Form:
    """Projection to the pseudo-horizontal bundle.

    Every du^i_sigma is sent to u^i_{sigma,lam} dxbar^lam and dx^lam to
    dxbar^lam; contact forms are exactly the kernel for degree <= n.
    """
    if q is not None and not f.is_structural_zero and f.degree() != q:
        raise JetvarError(f"form degree {f.degree()} != declared {q}")
    split = contact_split(f, ctx)
    out = Form()
    for covs, coef in split.terms.items():
        if any(c.family == OMEGA for c in covs):
            continue
        out._accumulate(tuple(dxbar(c.index) for c in covs), coef)
    return out


def partial_horizontalize(f: Form, p: int, q: int, ctx: JetContext) -> Form:
    """Contact-degree-p part with the complementary slots horizontalized.

    Agrees with the shuffle-sum formula on decomposable forms; for p = 0 it
    reduces to :func:`horizontalize`.
    """
    if not f.is_structural_zero and f.degree() != p + q:
        raise JetvarError(f"form degree {f.degree()} != p+q = {p + q}")
    split = contact_split(f, ctx)
    out = Form()
    for covs, coef in split.terms.items():
        if sum(1 for c in covs if c.family == OMEGA) != p:
            continue
        out._accumulate(
            tuple(dxbar(c.index) if c.family == DX else c for c in covs), coef
        )
    return out


def horizontal_differential(f: Form, ctx: JetContext) -> Form:
    """dbar: total derivatives on coefficients, dxbar^lam wedged in front.

    Acts on horizontal forms and on mixed contact/horizontal representatives
    (omega slots differentiate by index appending); satisfies dbar o dbar = 0
    and dbar(h^{p,q} a) = h^{p,q+1}(d a).
    """
    fams = f.families()
    if DX in fams or DU in fams:
        raise JetvarError("horizontal differential expects dxbar/omega slots only")
    out = Form()
    for covs, coef in f.terms.items():
        for lam in range(1, ctx.n + 1):
            out._accumulate(
                (dxbar(lam),) + covs, total_derivative(coef, lam, ctx)
            )
            for j, c in enumerate(covs):
                if c.family != OMEGA:
                    continue
                new = covs[:j] + (omega(c.index, c.sigma + (lam,)),) + covs[j + 1 :]
                out._accumulate((dxbar(lam),) + new, coef)
    return out


def insert_evolutionary(phi: EvolutionaryField, f: Form, ctx: JetContext) -> Form:
    """Contract one contact slot: omega^i_sigma(Evo_phi) = D_sigma(phi^i)."""
    if not f.is_structural_zero and not any(
        c.family == OMEGA for covs in f.terms for c in covs
    ):
        raise JetvarError("form has contact degree 0; nothing to contract")
    out = Form()
    for covs, coef in f.terms.items():
        for j, c in enumerate(covs):
            if c.family != OMEGA:
                continue
            paired = iterated_total_derivative(
                phi.components[c.index - 1], c.sigma, ctx
            )
            sign = (-1) ** j
            out._accumulate(
                covs[:j] + covs[j + 1 :], coef * paired * ex.from_rational(sign)
            )
    return out


# ---------------------------------------------------------------------------
# horizontal volume helpers
# ---------------------------------------------------------------------------


def volume_form(ctx: JetContext) -> Form:
    return Form.term(ex.ONE, tuple(dxbar(lam) for lam in range(1, ctx.n + 1)))


def horizontal_density(f: Form, ctx: JetContext) -> Expr:
    """Coefficient of dxbar^1 ^ ... ^ dxbar^n."""
    return f.coefficient(tuple(dxbar(lam) for lam in range(1, ctx.n + 1)))


def boundary_form(components: Sequence[Expr], ctx: JetContext) -> Form:
    """(n-1)-horizontal form with dbar(result) = D_lam(b^lam) Vol.

    `components` lists b^lam; the form is sum_lam (-1)^(lam-1) b^lam
    dxbar^1 ^ ... (omit lam) ... ^ dxbar^n.
    """
    if len(components) != ctx.n:
        raise ValueError("need one component per base coordinate")
    out = Form()
    for lam in range(1, ctx.n + 1):
        covs = tuple(dxbar(mu) for mu in range(1, ctx.n + 1) if mu != lam)
        out._accumulate(covs, to_expr(components[lam - 1]) * ex.from_rational((-1) ** (lam - 1)))
    return out

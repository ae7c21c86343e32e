"""Deterministic random generators and small oracles shared by the tests."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from jetvar import expr as ex
from jetvar import forms as fo
from jetvar.expr import BaseCoord, Expr, JetCoord
from jetvar.jet import JetContext, enumerate_coordinates, multi_indices_upto


def random_polynomial(
    rng: random.Random,
    ctx: JetContext,
    order: int,
    terms: int = 3,
    max_degree: int = 2,
    coeff_bound: int = 4,
) -> Expr:
    """Sparse random polynomial in the coordinates of order <= `order`."""
    atoms = enumerate_coordinates(ctx, order)
    out = ex.ZERO
    for _ in range(terms):
        c = 0
        while c == 0:
            c = rng.randint(-coeff_bound, coeff_bound)
        term = ex.from_rational(Fraction(c, rng.randint(1, 3)))
        for _ in range(rng.randint(0, max_degree)):
            term = term * ex.atom_expr(rng.choice(atoms))
        out = out + term
    return out


def random_coperator(
    rng: random.Random,
    ctx: JetContext,
    m_out: int,
    m_in: int,
    max_order: int = 2,
    entries: int = 4,
):
    from jetvar.variational import COperator

    table = {}
    sigmas = multi_indices_upto(ctx.n, max_order)
    for _ in range(entries):
        key = (
            rng.randint(1, m_out),
            rng.randint(1, m_in),
            rng.choice(sigmas),
        )
        table[key] = random_polynomial(rng, ctx, 1, terms=2, max_degree=2)
    return COperator(ctx, m_out, m_in, table)


def random_form(
    rng: random.Random,
    ctx: JetContext,
    degree: int,
    order: int,
    terms: int = 3,
) -> fo.Form:
    """Random raw-basis form with sparse polynomial coefficients."""
    covs: List[fo.Covector] = [fo.dx(lam) for lam in range(1, ctx.n + 1)]
    for comp in range(1, ctx.m + 1):
        for sig in multi_indices_upto(ctx.n, order):
            covs.append(fo.du(comp, sig))
    out = fo.Form.zero()
    for _ in range(terms):
        pick = rng.sample(covs, degree) if degree else []
        coef = random_polynomial(rng, ctx, order, terms=2, max_degree=2)
        out = out + fo.Form.term(coef, tuple(pick))
    return out


def random_contact_form(
    rng: random.Random, ctx: JetContext, degree: int, order: int, terms: int = 2
) -> fo.Form:
    """Random form with at least one omega factor per term (contact)."""
    omegas = [
        fo.omega(comp, sig)
        for comp in range(1, ctx.m + 1)
        for sig in multi_indices_upto(ctx.n, order)
    ]
    others = [fo.dx(lam) for lam in range(1, ctx.n + 1)]
    out = fo.Form.zero()
    for _ in range(terms):
        picked = [rng.choice(omegas)]
        pool = [c for c in omegas + others if c not in picked]
        picked.extend(rng.sample(pool, degree - 1))
        coef = random_polynomial(rng, ctx, order, terms=2, max_degree=1)
        out = out + fo.Form.term(coef, tuple(picked))
    return fo.to_raw_basis(out, ctx)


def random_graph(
    rng: random.Random, ctx: JetContext, degree: int
) -> List[Expr]:
    """Random polynomial section u^i = p^i(x) of the given degree."""
    out = []
    for _ in range(ctx.m):
        p = ex.ZERO
        for exps in itertools.product(range(degree + 1), repeat=ctx.n):
            if sum(exps) > degree or rng.random() < 0.4:
                continue
            term = ex.from_rational(Fraction(rng.randint(-5, 5), rng.randint(1, 3)))
            for lam, k in enumerate(exps, start=1):
                term = term * ex.atom_expr(BaseCoord(lam)) ** k
            p = p + term
        out.append(p)
    return out


def graph_jet(p: Sequence[Expr], comp: int, sigma: Tuple[int, ...]) -> Expr:
    """d_sigma p^comp, the jet coordinate of a polynomial graph."""
    g = p[comp - 1]
    for lam in sigma:
        g = ex.partial(g, BaseCoord(lam))
    return g


def pullback_along_graph(form: fo.Form, p: Sequence[Expr], ctx: JetContext) -> fo.Form:
    """(j L)^* of a raw-basis form along the graph u = p(x).

    Coefficients get u^i_sigma -> d_sigma p^i; du^i_sigma becomes
    d_{sigma,lam} p^i dx^lam.
    """
    out = fo.Form.zero()
    for covs, coef in form.terms.items():
        bindings = {
            a: graph_jet(p, a.comp, a.sigma)
            for a in coef.atoms()
            if isinstance(a, JetCoord)
        }
        base_coef = ex.substitute(coef, bindings) if bindings else coef
        options = []
        for c in covs:
            if c.family == fo.DX:
                options.append([(fo.dx(c.index), ex.ONE)])
            elif c.family == fo.DU:
                opts = []
                for lam in range(1, ctx.n + 1):
                    opts.append(
                        (fo.dx(lam), graph_jet(p, c.index, c.sigma + (lam,)))
                    )
                options.append(opts)
            else:
                raise ValueError("pullback expects a raw-basis form")
        _expand(out, (), base_coef, options)
    return out


def _expand(out, covs, coef, options):
    if not options:
        out._accumulate(covs, coef)
        return
    head, *rest = options
    for cov, factor in head:
        _expand(out, covs + (cov,), coef * factor, rest)


def contract_with_field(form: fo.Form, pairing: Dict, ctx: JetContext) -> fo.Form:
    """Interior product with a vector field given by covector pairings.

    `pairing` maps raw covectors dx/du to the field component they return;
    missing covectors pair to zero.
    """
    out = fo.Form.zero()
    for covs, coef in form.terms.items():
        for j, c in enumerate(covs):
            val = pairing.get(c)
            if val is None:
                continue
            sign = (-1) ** j
            out._accumulate(
                covs[:j] + covs[j + 1 :], coef * val * ex.from_rational(sign)
            )
    return out

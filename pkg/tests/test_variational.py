"""Variational engine: Euler-Lagrange, adjoints, Helmholtz, boundary terms."""

import random
from fractions import Fraction

import pytest

from jetvar import expr as ex
from jetvar import forms as fo
from jetvar.errors import OrderError
from jetvar.expr import JetCoord, is_zero, sqrt
from jetvar.expr import _poly_exact_div
from jetvar.jet import EvolutionaryField, JetContext, total_derivative
from jetvar.variational import (
    COperator,
    Lagrangian,
    MultiOperator,
    SourceForm,
    adjoint,
    density_operator,
    euler_lagrange,
    finite_difference_action_check,
    first_variation,
    green_residual,
    helmholtz_check,
    internalize,
    is_null_lagrangian,
    linearization,
    source_pairing_operator,
)

from helpers import random_coperator, random_polynomial

CTX1 = JetContext(n=1, m=1, r=2)
CTX2 = JetContext(n=2, m=1, r=2)


# -- Euler-Lagrange -------------------------------------------------------------


def test_euler_lagrange_minimal_surface_golden():
    ux, uy = CTX2.u(1, (1,)), CTX2.u(1, (2,))
    uxx, uxy, uyy = CTX2.u(1, (1, 1)), CTX2.u(1, (1, 2)), CTX2.u(1, (2, 2))
    lam = Lagrangian(CTX2, sqrt(1 + ux**2 + uy**2))
    eps = euler_lagrange(lam).components[0]
    target = (1 + uy**2) * uxx - 2 * ux * uy * uxy + (1 + ux**2) * uyy
    quotient = _poly_exact_div(eps.num, target.num)
    assert quotient is not None and quotient
    assert not ex.Expr(quotient, ()).is_structural_zero


def test_euler_lagrange_laplace():
    ux, uy = CTX2.u(1, (1,)), CTX2.u(1, (2,))
    lam = Lagrangian(CTX2, Fraction(1, 2) * (ux**2 + uy**2))
    eps = euler_lagrange(lam)
    want = -(CTX2.u(1, (1, 1)) + CTX2.u(1, (2, 2)))
    assert is_zero(eps.components[0] - want)


def test_euler_lagrange_kills_total_divergences():
    rng = random.Random(61)
    for _ in range(25):
        f = random_polynomial(rng, CTX2, 1, terms=3)
        g = random_polynomial(rng, CTX2, 1, terms=3)
        density = total_derivative(f, 1, CTX2) + total_derivative(g, 2, CTX2)
        assert is_null_lagrangian(Lagrangian(CTX2, density))


def test_lagrangian_order_bound_enforced():
    with pytest.raises(OrderError):
        Lagrangian(JetContext(1, 1, 1), CTX1.u(1, (1, 1)))


# -- adjoint ---------------------------------------------------------------------


def test_adjoint_examples():
    Dx = COperator(CTX1, 1, 1, {(1, 1, (1,)): ex.ONE})
    star = adjoint(Dx)
    assert star.entries == {(1, 1, (1,)): ex.from_rational(-1)}
    f = ex.FunctionSymbol("a", (CTX1.x(1),))
    order0 = COperator(CTX1, 1, 1, {(1, 1, ()): f()})
    assert adjoint(order0).equals(order0)
    Dxx = COperator(CTX1, 1, 1, {(1, 1, (1, 1)): ex.ONE})
    assert adjoint(Dxx).equals(Dxx)


def test_adjoint_is_an_involution():
    rng = random.Random(67)
    ctx = JetContext(n=2, m=2, r=2)
    for _ in range(30):
        op = random_coperator(rng, ctx, m_out=2, m_in=2, max_order=2)
        assert adjoint(adjoint(op)).equals(op)


def test_adjoint_shapes_swap():
    rng = random.Random(71)
    ctx = JetContext(n=1, m=2, r=2)
    op = random_coperator(rng, ctx, m_out=1, m_in=2, max_order=1)
    star = adjoint(op)
    assert (star.m_out, star.m_in) == (2, 1)


# -- Green's formula ---------------------------------------------------------------


def test_green_residual_first_order():
    Dx = COperator(CTX1, 1, 1, {(1, 1, (1,)): ex.ONE})
    phi = [CTX1.u(1) ** 2]
    psi = [CTX1.u(1, (1,))]
    w = green_residual(Dx, phi, psi)
    # psi D_x(phi) + D_x(psi) phi = D_x(psi phi): residual is psi*phi
    assert is_zero(fo.horizontal_density(w, CTX1) - psi[0] * phi[0])


def test_green_residual_zero_order():
    op = COperator(CTX1, 1, 1, {(1, 1, ()): CTX1.u(1)})
    w = green_residual(op, [CTX1.u(1, (1,))], [ex.ONE])
    assert w.is_structural_zero


def test_green_residual_second_order_golden():
    Dxx = COperator(CTX1, 1, 1, {(1, 1, (1, 1)): ex.ONE})
    phi_sym = ex.FunctionSymbol("p", (CTX1.x(1),))()
    psi_sym = ex.FunctionSymbol("s", (CTX1.x(1),))()
    w = green_residual(Dxx, [phi_sym], [psi_sym])
    want = psi_sym * total_derivative(phi_sym, 1, CTX1) - total_derivative(
        psi_sym, 1, CTX1
    ) * phi_sym
    assert is_zero(fo.horizontal_density(w, CTX1) - want)


def test_green_residual_identity_holds_on_random_operators():
    rng = random.Random(73)
    ctx = JetContext(n=2, m=2, r=2)
    for _ in range(10):
        op = random_coperator(rng, ctx, 2, 2, max_order=2)
        phi = [random_polynomial(rng, ctx, 1, terms=2) for _ in range(2)]
        psi = [random_polynomial(rng, ctx, 1, terms=2) for _ in range(2)]
        w = green_residual(op, phi, psi)  # self-verifying constructor
        lhs = sum(
            (p * v for p, v in zip(psi, op.apply(phi))), start=ex.ZERO
        )
        rhs = sum(
            (v * p for v, p in zip(adjoint(op).apply(psi), phi)), start=ex.ZERO
        )
        div = fo.horizontal_density(fo.horizontal_differential(w, ctx), ctx)
        assert is_zero(lhs - rhs - div)


# -- linearization and Helmholtz -----------------------------------------------------


def test_linearization_examples():
    eps = SourceForm(CTX1, (CTX1.u(1, (1, 1)),))
    ell = linearization(eps)
    assert ell.entries == {(1, 1, (1, 1)): ex.ONE}
    eps2 = SourceForm(CTX1, (CTX1.u(1) * CTX1.u(1, (1,)),))
    ell2 = linearization(eps2)
    assert set(ell2.entries) == {(1, 1, ()), (1, 1, (1,))}
    assert linearization(SourceForm(CTX1, (ex.ZERO,))).entries == {}


def test_linearization_applies_like_evolutionary_derivative():
    from jetvar.jet import evolutionary_apply

    rng = random.Random(79)
    for _ in range(10):
        comp = random_polynomial(rng, CTX2, 2, terms=3)
        eps = SourceForm(CTX2, (comp,))
        phi = EvolutionaryField((random_polynomial(rng, CTX2, 1, terms=2),))
        via_op = linearization(eps).apply(phi.components)[0]
        via_evo = evolutionary_apply(phi, comp, CTX2)
        assert is_zero(via_op - via_evo)


def test_helmholtz_golden_counterexample():
    u, ux, uxx = CTX1.u(1), CTX1.u(1, (1,)), CTX1.u(1, (1, 1))
    ok, residual = helmholtz_check(SourceForm(CTX1, (uxx + u * ux,)))
    assert not ok
    # residual is exactly 2u D_x + u_x id
    want = COperator(CTX1, 1, 1, {(1, 1, (1,)): 2 * u, (1, 1, ()): ux})
    assert residual.equals(want)
    assert not residual.entries.get((1, 1, (1,))).is_structural_zero


def test_helmholtz_accepts_variational_sources():
    ok, res = helmholtz_check(SourceForm(CTX1, (CTX1.u(1, (1, 1)),)))
    assert ok and res.is_zero()
    rng = random.Random(83)
    ctx = JetContext(n=2, m=2, r=2)
    for _ in range(10):
        lam = Lagrangian(ctx, random_polynomial(rng, ctx, 2, terms=3))
        ok, _ = helmholtz_check(euler_lagrange(lam))
        assert ok


# -- internalization ------------------------------------------------------------------


def test_internalize_p1_reproduces_euler_lagrange():
    rng = random.Random(89)
    for _ in range(10):
        lam = Lagrangian(CTX2, random_polynomial(rng, CTX2, 2, terms=3))
        op = density_operator(lam)
        internal = internalize(op)
        eps = euler_lagrange(lam)
        for (slots, coef) in internal.entries.items():
            ((j, sigma),) = slots
            assert sigma == ()
        got = [
            internal.entries.get(((i, ()),), ex.ZERO) for i in range(1, CTX2.m + 1)
        ]
        for g, e in zip(got, eps.components):
            assert is_zero(g - e)


def test_internalize_zero_operator():
    op = MultiOperator(CTX1, 2, {})
    assert internalize(op).is_zero()


def _antisymmetrized_pairing(eps):
    ell = linearization(eps)
    entries = {}
    for (i, j, sigma), coef in ell.entries.items():
        key1 = ((i, ()), (j, sigma))
        entries[key1] = entries.get(key1, ex.ZERO) + coef
        key2 = ((j, sigma), (i, ()))
        entries[key2] = entries.get(key2, ex.ZERO) - coef
    return MultiOperator(eps.ctx, 2, entries)


def test_internalize_p2_matches_helmholtz():
    rng = random.Random(97)
    ctx = JetContext(n=1, m=1, r=2)
    for k in range(20):
        if k % 2:
            comp = random_polynomial(rng, ctx, 2, terms=3)
        else:
            comp = euler_lagrange(
                Lagrangian(ctx, random_polynomial(rng, ctx, 1, terms=3))
            ).components[0]
        eps = SourceForm(ctx, (comp,))
        variational, residual = helmholtz_check(eps)
        internal = internalize(_antisymmetrized_pairing(eps))
        assert internal.is_zero() == variational
        # exact relation: I_2(antisym pairing)(phi1, phi2) = (ell* - ell)(phi1) . phi2
        phi1 = [random_polynomial(rng, ctx, 1, terms=2)]
        phi2 = [random_polynomial(rng, ctx, 1, terms=2)]
        lhs = internal.apply([phi1, phi2])
        star = adjoint(linearization(eps))
        rhs = (star.apply(phi1)[0] - linearization(eps).apply(phi1)[0]) * phi2[0]
        assert is_zero(lhs - rhs)


def test_internalize_kills_total_divergences():
    # well-definedness on classes: adding a divergence-shaped bilinear term
    # does not change the internalization
    rng = random.Random(101)
    ctx = CTX1
    for _ in range(10):
        w = random_polynomial(rng, ctx, 1, terms=2)
        sigma = (rng.choice((1,)),)
        entries = {}
        # D_x(w D_sigma(phi1) phi2) expanded into canonical slots
        dw = total_derivative(w, 1, ctx)
        entries[((1, sigma), (1, ()))] = dw
        entries[((1, tuple(sorted(sigma + (1,)))), (1, ()))] = w
        entries[((1, sigma), (1, (1,)))] = w
        div_op = MultiOperator(ctx, 2, entries)
        assert internalize(div_op).is_zero()


def test_source_pairing_operator_applies():
    eps = SourceForm(CTX1, (CTX1.u(1, (1, 1)),))
    op = source_pairing_operator(eps)
    phi1 = [CTX1.u(1)]
    phi2 = [CTX1.x(1) * CTX1.u(1)]
    got = op.apply([phi1, phi2])
    want = phi1[0] * linearization(eps).apply(phi2)[0]
    assert is_zero(got - want)


# -- first variation -------------------------------------------------------------------


def test_first_variation_quadratic():
    lam = Lagrangian(CTX1, Fraction(1, 2) * CTX1.u(1, (1,)) ** 2)
    e_term, boundary = first_variation(lam, EvolutionaryField((ex.ONE,)))
    assert is_zero(e_term + CTX1.u(1, (1, 1)))
    assert is_zero(fo.horizontal_density(boundary, CTX1) - CTX1.u(1, (1,)))


def test_first_variation_constant_density():
    lam = Lagrangian(CTX1, ex.from_rational(7))
    e_term, boundary = first_variation(lam, EvolutionaryField((CTX1.u(1),)))
    assert e_term.is_structural_zero
    assert boundary.is_structural_zero


def test_first_variation_arc_length_golden():
    ux = CTX1.u(1, (1,))
    lam = Lagrangian(CTX1, sqrt(1 + ux**2))
    phi = ex.FunctionSymbol("p", (CTX1.x(1), CTX1.u(1)))()
    e_term, boundary = first_variation(lam, EvolutionaryField((phi,)))
    uxx = CTX1.u(1, (1, 1))
    want_e = -uxx * (1 + ux**2) ** Fraction(-3, 2) * phi
    assert is_zero(e_term - want_e)
    want_b = ux * (1 + ux**2) ** Fraction(-1, 2) * phi
    assert is_zero(fo.horizontal_density(boundary, CTX1) - want_b)


def test_first_variation_identity_random():
    rng = random.Random(103)
    for _ in range(10):
        lam = Lagrangian(CTX2, random_polynomial(rng, CTX2, 2, terms=3))
        phi = EvolutionaryField((random_polynomial(rng, CTX2, 1, terms=2),))
        first_variation(lam, phi)  # raises VerificationError on failure


# -- finite-difference oracle ------------------------------------------------------------


def test_fd_check_quadratic_density_closed_form():
    ctx = JetContext(n=1, m=1, r=1)
    lam = Lagrangian(ctx, Fraction(1, 2) * ctx.u(1, (1,)) ** 2)
    x = ctx.x(1)
    report = finite_difference_action_check(lam, [x**2], [x * (1 - x)])
    # closed forms: both sides are -1/3
    assert report.lhs == pytest.approx(-1 / 3, rel=1e-6)
    assert report.rhs == pytest.approx(-1 / 3, rel=1e-9)
    assert report.passed


def test_fd_check_constant_density():
    ctx = JetContext(n=1, m=1, r=1)
    lam = Lagrangian(ctx, ex.from_rational(3))
    x = ctx.x(1)
    report = finite_difference_action_check(lam, [x**2], [x * (1 - x)])
    assert report.lhs == pytest.approx(0.0, abs=1e-9)
    assert report.rhs == 0.0
    assert report.passed


def test_fd_check_minimal_surface_critical_plane():
    ctx = JetContext(n=2, m=1, r=1)
    ux, uy = ctx.u(1, (1,)), ctx.u(1, (2,))
    lam = Lagrangian(ctx, sqrt(1 + ux**2 + uy**2))
    x, y = ctx.x(1), ctx.x(2)
    phi = x * (1 - x) * y * (1 - y)
    report = finite_difference_action_check(lam, [ex.ZERO], [phi], grid_points=15)
    assert report.lhs == pytest.approx(0.0, abs=1e-8)
    assert report.rhs == pytest.approx(0.0, abs=1e-12)

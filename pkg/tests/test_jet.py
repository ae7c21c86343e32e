"""Jet bookkeeping: enumeration, total derivatives, evolutionary fields,
first-order chart changes."""

import random
from fractions import Fraction

import pytest

from jetvar import expr as ex
from jetvar.errors import OrderError, SingularError
from jetvar.expr import BaseCoord, JetCoord, Param, atom_expr, is_zero, partial
from jetvar.jet import (
    EvolutionaryField,
    JetContext,
    change_division_first_order,
    enumerate_coordinates,
    evolutionary_apply,
    iterated_total_derivative,
    multi_index,
    permute_base_coordinates,
    total_derivative,
)

from helpers import random_polynomial

CTX1 = JetContext(n=1, m=1, r=2)
CTX2 = JetContext(n=2, m=1, r=2)


def test_context_validation():
    with pytest.raises(ValueError):
        JetContext(n=0, m=1, r=1)
    with pytest.raises(ValueError):
        JetContext(n=1, m=1, r=1, base_names=("x",), fiber_names=("x",))


def test_multi_index_is_sorted():
    assert multi_index((2, 1, 2)) == (1, 2, 2)
    with pytest.raises(ValueError):
        multi_index((0,))
    with pytest.raises(ValueError):
        multi_index((3,), n=2)


def test_enumerate_coordinates_small():
    names = [CTX1.atom_name(a) for a in enumerate_coordinates(CTX1, 1)]
    assert names == ["x", "u1", "u1_x"]


def test_enumerate_coordinates_counts():
    # n=2, m=1, k=2: 2 base + (1 + 2 + 3) jet coordinates
    assert len(enumerate_coordinates(CTX2, 2)) == 8
    ctx = JetContext(n=2, m=2, r=1)
    names = [ctx.atom_name(a) for a in enumerate_coordinates(ctx, 0)]
    assert names == ["x", "y", "u1", "u2"]
    with pytest.raises(OrderError):
        enumerate_coordinates(CTX2, 3)


# -- total derivatives ---------------------------------------------------------


def test_total_derivative_examples():
    u = CTX1.u(1)
    ux, uxx = CTX1.u(1, (1,)), CTX1.u(1, (1, 1))
    assert total_derivative(u, 1, CTX1) == ux
    assert is_zero(total_derivative(ux**2, 1, CTX1) - 2 * ux * uxx)
    x, uy, uxy = CTX2.x(1), CTX2.u(1, (2,)), CTX2.u(1, (1, 2))
    assert is_zero(total_derivative(x * uy, 1, CTX2) - (uy + x * uxy))


def test_total_derivative_chain_through_function_symbol():
    x, u = CTX1.x(1), CTX1.u(1)
    f = ex.FunctionSymbol("f", (x, u))
    d = total_derivative(f(), 1, CTX1)
    want = f.derivative((1,)) + f.derivative((2,)) * CTX1.u(1, (1,))
    assert is_zero(d - want)


def test_total_derivatives_commute_on_random_expressions():
    rng = random.Random(23)
    for _ in range(100):
        e = random_polynomial(rng, CTX2, 2, terms=3)
        d12 = total_derivative(total_derivative(e, 1, CTX2), 2, CTX2)
        d21 = total_derivative(total_derivative(e, 2, CTX2), 1, CTX2)
        assert (d12 - d21).is_structural_zero


def test_total_derivative_raises_order_by_one_and_top_coefficient():
    rng = random.Random(5)
    for _ in range(20):
        e = random_polynomial(rng, CTX2, 1, terms=3)
        de = total_derivative(e, 1, CTX2)
        assert de.jet_order() <= e.jet_order() + 1
        # d(D_lam e)/du^i_{sigma+lam} = d e/du^i_sigma for top-order sigma
        sigma = (2,)
        tau = tuple(sorted(sigma + (1,)))
        lhs = partial(de, JetCoord(1, tau))
        rhs = partial(e, JetCoord(1, sigma))
        assert is_zero(lhs - rhs)


def test_iterated_total_derivative():
    u = CTX2.u(1)
    assert iterated_total_derivative(u, (1, 2), CTX2) == CTX2.u(1, (1, 2))
    assert iterated_total_derivative(u, (2, 1), CTX2) == CTX2.u(1, (1, 2))
    e = CTX1.u(1) ** 2
    ux, uxx = CTX1.u(1, (1,)), CTX1.u(1, (1, 1))
    got = iterated_total_derivative(e, (1, 1), CTX1)
    assert is_zero(got - (2 * ux**2 + 2 * CTX1.u(1) * uxx))
    assert iterated_total_derivative(e, (), CTX1) == e


# -- evolutionary fields ---------------------------------------------------------


def test_evolutionary_apply_examples():
    phi = EvolutionaryField((ex.ONE,))
    assert evolutionary_apply(phi, CTX1.u(1, (1, 1)), CTX1).is_structural_zero
    phi_u = EvolutionaryField((CTX1.u(1),))
    got = evolutionary_apply(phi_u, CTX1.u(1, (1,)), CTX1)
    assert got == CTX1.u(1, (1,))


def test_evolutionary_commutes_with_total_derivative():
    rng = random.Random(31)
    for _ in range(30):
        e = random_polynomial(rng, CTX2, 1, terms=3)
        phi = EvolutionaryField(
            (random_polynomial(rng, CTX2, 1, terms=2),)
        )
        lam = rng.choice((1, 2))
        a = evolutionary_apply(phi, total_derivative(e, lam, CTX2), CTX2)
        b = total_derivative(evolutionary_apply(phi, e, CTX2), lam, CTX2)
        assert is_zero(a - b)


# -- chart changes ----------------------------------------------------------------


def test_change_division_identity():
    jac = ((ex.ONE, ex.ZERO), (ex.ZERO, ex.ONE))
    out = change_division_first_order(jac, CTX1)
    assert out[(1, 1)] == CTX1.u(1, (1,))


def test_change_division_swap_gives_reciprocal():
    # new base y = u, new fiber v = x
    jac = ((ex.ZERO, ex.ONE), (ex.ONE, ex.ZERO))
    out = change_division_first_order(jac, CTX1)
    assert is_zero(out[(1, 1)] - CTX1.u(1, (1,)).inverse())


def test_change_division_rotation():
    cs = atom_expr(Param("cs"))
    sn = atom_expr(Param("sn"))
    jac = ((cs, -sn), (sn, cs))
    out = change_division_first_order(jac, CTX1)
    ux = CTX1.u(1, (1,))
    want = (sn + cs * ux) / (cs - sn * ux)
    assert is_zero(out[(1, 1)] - want)


def test_change_division_composes_with_inverse():
    rng = random.Random(77)
    ux = CTX1.u(1, (1,))
    for _ in range(10):
        while True:
            a, b, c, d = (Fraction(rng.randint(-3, 3)) for _ in range(4))
            if a * d - b * c != 0:
                break
        det = a * d - b * c
        jac = ((ex.from_rational(a), ex.from_rational(b)),
               (ex.from_rational(c), ex.from_rational(d)))
        inv = (
            (ex.from_rational(d / det), ex.from_rational(-b / det)),
            (ex.from_rational(-c / det), ex.from_rational(a / det)),
        )
        v = change_division_first_order(jac, CTX1)[(1, 1)]
        w = change_division_first_order(inv, CTX1)[(1, 1)]
        composed = ex.substitute(w, {ux.atoms().__iter__().__next__(): v})
        assert is_zero(composed - ux)


def test_change_division_singular_matrix():
    jac = ((ex.ZERO, ex.ZERO), (ex.ONE, ex.ONE))
    with pytest.raises(SingularError):
        change_division_first_order(jac, CTX1)


def test_permute_base_coordinates():
    e = CTX2.u(1, (1, 1)) * CTX2.x(2)
    got = permute_base_coordinates(e, (2, 1))
    want = CTX2.u(1, (2, 2)) * CTX2.x(1)
    assert is_zero(got - want)
    # involution
    assert is_zero(permute_base_coordinates(got, (2, 1)) - e)

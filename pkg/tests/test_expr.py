"""Kernel tests: canonical form, calculus, evaluation, zero testing."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetvar import expr as ex
from jetvar.errors import EvaluationError, SubstitutionError
from jetvar.expr import (
    BaseCoord,
    FunctionSymbol,
    JetCoord,
    Param,
    atom_expr,
    evaluate,
    is_zero,
    normalize,
    partial,
    sqrt,
    substitute,
    zero_test,
)
from jetvar.jet import JetContext, enumerate_coordinates

from helpers import random_polynomial

CTX = JetContext(n=2, m=1, r=2)
X, Y = CTX.x(1), CTX.x(2)
U = CTX.u(1)
UX, UY = CTX.u(1, (1,)), CTX.u(1, (2,))
UXX = CTX.u(1, (1, 1))


def test_rational_arithmetic_is_exact():
    e = ex.from_rational(Fraction(1, 3)) + ex.from_rational(Fraction(1, 6))
    assert e.as_rational() == Fraction(1, 2)


def test_difference_of_squares_normalizes_to_zero():
    e = (UX + UY) * (UX - UY) - (UX**2 - UY**2)
    assert e.is_structural_zero


def test_symmetric_multi_index_collapses():
    assert JetCoord(1, (1, 2)) == JetCoord(1, (2, 1))
    assert (CTX.u(1, (1, 2)) - CTX.u(1, (2, 1))).is_structural_zero


def test_power_atom_fold_rule():
    b = 1 + UX**2 + UY**2
    a = sqrt(b)
    assert a * a == b
    assert a**3 == a * b
    assert (a.inverse() * a) == ex.ONE
    assert (b ** Fraction(3, 2)) == a * b


def test_rational_power_of_constants():
    assert sqrt(ex.from_rational(4)).as_rational() == 2
    assert (ex.from_rational(Fraction(27, 8)) ** Fraction(2, 3)).as_rational() == Fraction(9, 4)
    assert sqrt(ex.from_rational(6)).as_rational() is None


def test_normalize_is_idempotent():
    rng = random.Random(7)
    for _ in range(50):
        e = random_polynomial(rng, CTX, 2, terms=4) / random_polynomial(
            rng, CTX, 1, terms=2
        )
        n1 = normalize(e)
        assert normalize(n1) == n1
        assert n1 == e


@settings(max_examples=60, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(1, 4), st.integers(-3, 3))
def test_normalize_is_a_congruence(a, b, d, c):
    ua = ex.from_rational(Fraction(a, d)) * UX + ex.from_rational(b) * U
    ub = ex.from_rational(c) * UY + ex.from_rational(b)
    assert normalize(ua + ub) == normalize(normalize(ua) + normalize(ub))
    assert normalize(ua * ub) == normalize(normalize(ua) * normalize(ub))


# -- partial -----------------------------------------------------------------


def test_partial_examples():
    assert partial(UX**2, UX) == 2 * UX
    d = partial(sqrt(1 + UX**2), UX)
    assert is_zero(d - UX * (1 + UX**2) ** Fraction(-1, 2))


def test_partial_of_function_symbol_is_formal():
    g = FunctionSymbol("g00", (X, U))
    e = g()
    d = partial(e, U)
    assert d == g.derivative((2,))
    assert partial(e, UX).is_structural_zero


def test_formal_function_derivatives_commute():
    g = FunctionSymbol("g00", (X, U))
    e = g()
    d12 = partial(partial(e, X.atoms().__iter__().__next__()), U)
    d21 = partial(partial(e, U), BaseCoord(1))
    assert d12 == d21
    assert d12 == g.derivative((1, 2))


def test_partial_quotient_rule():
    e = U / (1 + UX**2)
    d = partial(e, UX)
    want = -2 * U * UX / (1 + UX**2) ** 2
    assert is_zero(d - want)


def test_partial_matches_finite_differences():
    rng = random.Random(11)
    atoms = enumerate_coordinates(CTX, 2)
    h = Fraction(1, 10**4)
    for _ in range(100):
        e = random_polynomial(rng, CTX, 2, terms=3)
        a = rng.choice(atoms)
        point = {at: Fraction(rng.randint(-3, 3), rng.randint(1, 4)) for at in atoms}
        d_sym = evaluate(partial(e, a), point)
        up = dict(point)
        up[a] = point[a] + h
        dn = dict(point)
        dn[a] = point[a] - h
        d_num = (evaluate(e, up) - evaluate(e, dn)) / (2 * h)
        if d_sym == 0:
            assert abs(d_num) < Fraction(1, 10**6)
        else:
            assert abs(d_num - d_sym) <= abs(d_sym) * Fraction(1, 10**6)


# -- substitute ----------------------------------------------------------------


def test_substitute_examples():
    assert substitute(UX**2, {UX: ex.from_rational(3)}).as_rational() == 9
    assert substitute(UXX - UXX, {U: X}).is_structural_zero
    e = substitute(U * UX, {U: X * Y, UX: Y})
    assert is_zero(e - X * Y**2)


def test_substitute_is_simultaneous():
    # u -> u_x while u_x -> 1: no re-application
    e = substitute(U + UX, {U: UX, UX: ex.ONE})
    assert is_zero(e - (UX + 1))


def test_substitute_rejects_cycles():
    with pytest.raises(SubstitutionError):
        substitute(U + UX, {U: UX, UX: U})


def test_substitute_self_reference_is_fine():
    assert is_zero(substitute(U, {U: U + 1}) - (U + 1))


def test_substitute_through_radical_and_function():
    e = sqrt(1 + UX**2)
    s = substitute(e, {UX: ex.ZERO})
    assert s.as_rational() == 1
    g = FunctionSymbol("g", (X, U))
    e2 = g()
    s2 = substitute(e2, {U: X})
    # composite application: same symbol, new arguments
    (atom,) = [a for a in s2.atoms() if isinstance(a, ex.FuncAtom)]
    assert atom.args == (X, X)


# -- evaluate -----------------------------------------------------------------


def test_evaluate_examples():
    assert evaluate(sqrt(1 + UX**2), {UX: 0}) == 1
    v = evaluate(sqrt(1 + UX**2 + UY**2), {UX: 1, UY: 2})
    assert v == pytest.approx(2.449489742783178)
    with pytest.raises(EvaluationError):
        evaluate(UX.inverse(), {UX: 0})
    with pytest.raises(EvaluationError):
        evaluate(U + UX, {U: 1})
    with pytest.raises(EvaluationError):
        evaluate(sqrt(U), {U: -1})


def test_evaluate_function_callback():
    g = FunctionSymbol("g", (X, U))
    e = g() * UX
    val = evaluate(
        e,
        {UX: Fraction(2), U: Fraction(3), BaseCoord(1): Fraction(1)},
        funcs={"g": lambda deriv, x, u: x + u},
    )
    assert val == 8


def test_evaluate_exact_when_rational():
    e = (U + UX) ** 2 / (1 - UX)
    v = evaluate(e, {U: Fraction(1, 2), UX: Fraction(1, 3)})
    assert v == Fraction(25, 24)


# -- zero testing --------------------------------------------------------------


def test_is_zero_exact_cases():
    assert is_zero(CTX.u(1, (1, 2)) - CTX.u(1, (2, 1)))
    assert is_zero((1 + UX**2) * (1 - UX**2) - (1 - UX**4))
    assert not is_zero(UXX)


def test_zero_test_flags_probabilistic():
    b = 1 + UX**2
    r = zero_test(sqrt(b) - sqrt(b))
    assert r.is_zero and not r.probabilistic
    # distinct radicands: only the numeric oracle can decide
    e = sqrt(ex.from_rational(2)) * sqrt(ex.from_rational(3)) - sqrt(
        ex.from_rational(6)
    )
    r2 = zero_test(e)
    assert r2.is_zero and r2.probabilistic
    r3 = zero_test(sqrt(ex.from_rational(2)) - 1)
    assert (not r3.is_zero) and r3.probabilistic


def test_param_dimension_is_metadata_only():
    c1 = atom_expr(Param("c", dim="L/T"))
    c2 = atom_expr(Param("c"))
    assert c1 == c2

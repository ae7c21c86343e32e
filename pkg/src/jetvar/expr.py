"""Exact symbolic kernel.

Expressions are kept in a canonical form: a fraction of multivariate
polynomials over Q whose indeterminates ("atoms") are jet coordinates,
base coordinates, named constants, abstract function-symbol applications
and fractional-power atoms.  The denominator is stored factored, as a
product of primitive integer-content polynomials with positive leading
coefficient.

A fractional power b^(p/q) is represented through an opaque atom
A = b^(1/q) whose integer powers are reduced modulo the defining relation
A^q = b: whenever a product accumulates A^e with e >= q, the excess is
folded back into the radicand polynomial.  This keeps zero testing exact
for every expression whose radicals share a radicand, which covers all
the fraction/radical algebra produced by the variational operators.

Everything here is immutable; all operations are pure functions, so
values can be shared freely across threads.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .errors import EvaluationError, SubstitutionError

Rat = Fraction
Number = Union[int, Fraction]

_R0 = Fraction(0)
_R1 = Fraction(1)


# ---------------------------------------------------------------------------
# atoms
# ---------------------------------------------------------------------------

# Kind ranks order atoms inside monomials.  Power atoms must rank first
# (lexicographically dominant): folding A^q -> radicand then strictly
# decreases the term order, which is what makes exact division terminate.
_KIND_POW = 0
_KIND_FUNC = 1
_KIND_JET = 2
_KIND_BASE = 3
_KIND_PARAM = 4


class Atom:
    """Base class for indeterminates.  Identity is structural via `key`."""

    __slots__ = ("key", "_hash", "weight")

    def __init__(self, key, weight):
        self.key = key
        self.weight = weight  # graded weight; Fraction for power atoms
        self._hash = hash(key)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (isinstance(other, Atom) and self.key == other.key)

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"<{type(self).__name__} {self.key}>"


class BaseCoord(Atom):
    """Independent coordinate x^lam, lam = 1..n."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 1:
            raise ValueError("base coordinate index is 1-based")
        self.index = index
        super().__init__((_KIND_BASE, index), _R1)


class JetCoord(Atom):
    """Jet coordinate u^i_sigma; sigma is a sorted multi-index over 1..n."""

    __slots__ = ("comp", "sigma")

    def __init__(self, comp: int, sigma: Sequence[int] = ()):
        if comp < 1:
            raise ValueError("fiber component index is 1-based")
        sig = tuple(sorted(sigma))
        if any(s < 1 for s in sig):
            raise ValueError("multi-index entries are 1-based")
        self.comp = comp
        self.sigma = sig
        super().__init__((_KIND_JET, comp, len(sig), sig), _R1)


class Param(Atom):
    """Named scalar constant; the dimension tag is carried but never checked."""

    __slots__ = ("name", "dim")

    def __init__(self, name: str, dim: Optional[str] = None):
        self.name = name
        self.dim = dim  # metadata only, excluded from identity
        super().__init__((_KIND_PARAM, name), _R1)


class FunctionSymbol:
    """Declaration of an abstract function symbol f(a_1, ..., a_k).

    `args` fixes the default argument coordinates; `deriv` multi-indices on
    applications refer to argument slots (1-based) and are kept sorted, so
    formal mixed partials commute by construction.
    """

    __slots__ = ("name", "args")

    def __init__(self, name: str, args: Sequence["Expr"]):
        self.name = name
        self.args = tuple(args)

    @property
    def arity(self) -> int:
        return len(self.args)

    def __call__(self, *args: "Expr") -> "Expr":
        use = tuple(args) if args else self.args
        if len(use) != len(self.args):
            raise ValueError(f"{self.name} expects {len(self.args)} arguments")
        return atom_expr(FuncAtom(self.name, (), use))

    def derivative(self, slots: Sequence[int], *args: "Expr") -> "Expr":
        use = tuple(args) if args else self.args
        return atom_expr(FuncAtom(self.name, tuple(sorted(slots)), use))

    def __repr__(self):
        return f"FunctionSymbol({self.name}/{self.arity})"


class FuncAtom(Atom):
    """Application of a function symbol with a formal derivative marker."""

    __slots__ = ("name", "deriv", "args")

    def __init__(self, name: str, deriv: Sequence[int], args: Sequence["Expr"]):
        self.name = name
        self.deriv = tuple(sorted(deriv))
        self.args = tuple(args)
        key = (_KIND_FUNC, name, self.deriv, tuple(a.sort_key() for a in self.args))
        super().__init__(key, _R1)


class PowAtom(Atom):
    """Opaque atom for base^(1/root); base is a denominator-free Expr."""

    __slots__ = ("base", "root")

    def __init__(self, base: "Expr", root: int):
        if root < 2:
            raise ValueError("root must be >= 2")
        if base.den:
            raise ValueError("power-atom radicand must be denominator-free")
        self.base = base
        self.root = root
        wdeg = max((_mono_weight(m) for m in base.num), default=_R0)
        super().__init__((_KIND_POW, root, base.sort_key()), wdeg / root)


# ---------------------------------------------------------------------------
# monomials and polynomials
# ---------------------------------------------------------------------------
#
# Monomial: tuple of (atom, exponent) pairs, sorted by atom key, exps >= 1.
# Poly:     dict {monomial: Fraction}, no zero coefficients.

Mono = tuple
Poly = dict

_M1: Mono = ()


def _mono_weight(m: Mono) -> Fraction:
    w = _R0
    for a, e in m:
        w += a.weight * e
    return w


def _mono_cmp(m1: Mono, m2: Mono) -> int:
    """Graded (by weight) lexicographic order; smaller atom key dominates."""
    w1, w2 = _mono_weight(m1), _mono_weight(m2)
    if w1 != w2:
        return 1 if w1 > w2 else -1
    i = j = 0
    while i < len(m1) and j < len(m2):
        a1, e1 = m1[i]
        a2, e2 = m2[j]
        if a1.key < a2.key:
            return 1
        if a2.key < a1.key:
            return -1
        if e1 != e2:
            return 1 if e1 > e2 else -1
        i += 1
        j += 1
    if i < len(m1):
        return 1
    if j < len(m2):
        return -1
    return 0


def _leading_mono(p: Poly) -> Mono:
    it = iter(p)
    best = next(it)
    for m in it:
        if _mono_cmp(m, best) > 0:
            best = m
    return best


def _mono_mul(m1: Mono, m2: Mono) -> Poly:
    """Product of two monomials, folding overflowing power atoms."""
    exps: dict = {}
    for a, e in m1:
        exps[a] = exps.get(a, 0) + e
    for a, e in m2:
        exps[a] = exps.get(a, 0) + e
    folds = []
    items = []
    for a, e in exps.items():
        if isinstance(a, PowAtom) and e >= a.root:
            k, e = divmod(e, a.root)
            folds.append((a.base.num, k))
        if e:
            items.append((a, e))
    mono = tuple(sorted(items, key=lambda ae: ae[0].key))
    out: Poly = {mono: _R1}
    for base_num, k in folds:
        for _ in range(k):
            out = _poly_mul(out, base_num)
    return out


def _poly_add_term(p: Poly, m: Mono, c: Fraction) -> None:
    new = p.get(m, _R0) + c
    if new:
        p[m] = new
    elif m in p:
        del p[m]


def _poly_add(p1: Poly, p2: Poly) -> Poly:
    out = dict(p1)
    for m, c in p2.items():
        _poly_add_term(out, m, c)
    return out


def _poly_scale(p: Poly, c: Fraction) -> Poly:
    if not c:
        return {}
    return {m: co * c for m, co in p.items()}


def _poly_mul(p1: Poly, p2: Poly) -> Poly:
    if not p1 or not p2:
        return {}
    out: Poly = {}
    for m1, c1 in p1.items():
        for m2, c2 in p2.items():
            c = c1 * c2
            for m, cf in _mono_mul(m1, m2).items():
                _poly_add_term(out, m, c * cf)
    return out


def _poly_pow(p: Poly, k: int) -> Poly:
    out: Poly = {_M1: _R1}
    base = p
    while k:
        if k & 1:
            out = _poly_mul(out, base)
        k >>= 1
        if k:
            base = _poly_mul(base, base)
    return out


def _poly_const(p: Poly) -> Optional[Fraction]:
    if not p:
        return _R0
    if len(p) == 1 and _M1 in p:
        return p[_M1]
    return None


def _mono_divides(md: Mono, mn: Mono) -> bool:
    expd = dict(md)
    for a, e in mn:
        if a in expd:
            expd[a] -= min(expd[a], e)
            if expd[a] == 0:
                del expd[a]
    return not expd


def _mono_quot(mn: Mono, md: Mono) -> Mono:
    expd = dict(md)
    items = []
    for a, e in mn:
        e -= expd.pop(a, 0)
        if e:
            items.append((a, e))
    return tuple(items)


def _poly_exact_div(num: Poly, den: Poly) -> Optional[Poly]:
    """Greedy multivariate division; returns the quotient or None.

    Complete on fold-free polynomials.  With power atoms it can miss
    divisibility that only holds modulo radicand relations, in which case
    callers fall back to fraction arithmetic.
    """
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    dc = _poly_const(den)
    if dc is not None:
        return _poly_scale(num, 1 / dc)
    cur = dict(num)
    quot: Poly = {}
    lm_d = _leading_mono(den)
    cd = den[lm_d]
    while cur:
        lm = _leading_mono(cur)
        if not _mono_divides(lm_d, lm):
            return None
        qm = _mono_quot(lm, lm_d)
        qc = cur[lm] / cd
        _poly_add_term(quot, qm, qc)
        for m2, c2 in den.items():
            contrib = _mono_mul(qm, m2)
            for m, cf in contrib.items():
                _poly_add_term(cur, m, -qc * c2 * cf)
    return quot


def _freeze_mono(m: Mono):
    return tuple((a.key, e) for a, e in m)


def _poly_freeze(p: Poly):
    """Primitive (hashable, comparable) snapshot of a polynomial."""
    return tuple(sorted((_freeze_mono(m), c) for m, c in p.items()))


def _poly_normalize_factor(p: Poly):
    """Scale a denominator factor to primitive integer form.

    Returns (normalized poly, multiplier s) with p == s * normalized; the
    normalized factor has coprime integer coefficients and a positive
    leading coefficient.
    """
    lm = _leading_mono(p)
    num_gcd = 0
    den_lcm = 1
    for c in p.values():
        num_gcd = _gcd(num_gcd, abs(c.numerator))
        den_lcm = _lcm(den_lcm, c.denominator)
    s = Fraction(num_gcd, den_lcm)
    if p[lm] < 0:
        s = -s
    return {m: c / s for m, c in p.items()}, s


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _lcm(a: int, b: int) -> int:
    return a // _gcd(a, b) * b


# ---------------------------------------------------------------------------
# canonical expressions
# ---------------------------------------------------------------------------


class Expr:
    """Immutable canonical rational expression.

    `num` is a polynomial, `den` a tuple of (factor poly, exponent) pairs.
    Structural equality (`==`) compares canonical forms; mathematical
    equality of values that normalize differently is decided by
    :func:`is_zero` on the difference.
    """

    __slots__ = ("num", "den", "_frozen", "_hash", "_atoms")

    def __init__(self, num: Poly, den):
        self.num = num
        self.den = den
        self._frozen = None
        self._hash = None
        self._atoms = None

    # -- identity ----------------------------------------------------------

    def sort_key(self):
        """Hashable, fully comparable snapshot of the canonical form."""
        if self._frozen is None:
            self._frozen = (
                _poly_freeze(self.num),
                tuple((_poly_freeze(p), e) for p, e in self.den),
            )
        return self._frozen

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.sort_key())
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction)):
                other = from_rational(other)
            else:
                return NotImplemented
        return self.sort_key() == other.sort_key()

    # -- predicates ---------------------------------------------------------

    @property
    def is_structural_zero(self) -> bool:
        return not self.num

    def as_rational(self) -> Optional[Fraction]:
        """The exact rational value, if the expression is constant."""
        if self.den:
            return None
        return _poly_const(self.num)

    def atoms(self) -> frozenset:
        """All atoms the expression depends on, including nested ones."""
        if self._atoms is None:
            out = set()
            _collect_atoms_poly(self.num, out)
            for p, _ in self.den:
                _collect_atoms_poly(p, out)
            self._atoms = frozenset(out)
        return self._atoms

    def jet_order(self) -> int:
        """Highest |sigma| among jet coordinates present (-1 if none)."""
        return max((len(a.sigma) for a in self.atoms() if isinstance(a, JetCoord)), default=-1)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = to_expr(other)
        if self.den == other.den:
            return _make(_poly_add(self.num, other.num), list(self.den))
        merged, c1, c2 = _merge_dens(self.den, other.den)
        num = _poly_add(_poly_mul(self.num, c1), _poly_mul(other.num, c2))
        return _make(num, merged)

    __radd__ = __add__

    def __neg__(self):
        return Expr(_poly_scale(self.num, Fraction(-1)), self.den)

    def __sub__(self, other):
        return self + (-to_expr(other))

    def __rsub__(self, other):
        return to_expr(other) + (-self)

    def __mul__(self, other):
        other = to_expr(other)
        if not self.num or not other.num:
            return ZERO
        den: dict = {}
        for p, e in list(self.den) + list(other.den):
            key = _poly_freeze(p)
            if key in den:
                den[key] = (p, den[key][1] + e)
            else:
                den[key] = (p, e)
        return _make(_poly_mul(self.num, other.num), list(den.values()))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * to_expr(other).inverse()

    def __rtruediv__(self, other):
        return to_expr(other) * self.inverse()

    def inverse(self) -> "Expr":
        if self.is_structural_zero:
            raise EvaluationError("division by zero expression")
        num: Poly = {_M1: _R1}
        den: list = []
        # the old denominator moves (expanded) to the numerator
        for p, e in self.den:
            num = _poly_mul(num, _poly_pow(p, e))
        # a monomial numerator inverts atom by atom; power atoms use the
        # complement trick A^-e = A^(kq-e) / base^k so denominators stay
        # free of radicals
        if len(self.num) == 1:
            (mono, coeff), = self.num.items()
            num = _poly_scale(num, 1 / coeff)
            for a, e in mono:
                if isinstance(a, PowAtom):
                    k = -(-e // a.root)  # ceil
                    comp = k * a.root - e
                    if comp:
                        num = _poly_mul(num, {((a, comp),): _R1})
                    den.append((dict(a.base.num), k))
                else:
                    den.append(({((a, 1),): _R1}, e))
        else:
            den.append((dict(self.num), 1))
        return _make(num, den)

    def __pow__(self, k):
        if isinstance(k, Fraction) and k.denominator != 1:
            return rational_power(self, k)
        k = int(k)
        if k == 0:
            return ONE
        if k < 0:
            return self.inverse() ** (-k)
        return _make(_poly_pow(self.num, k), [(p, e * k) for p, e in self.den])

    def __repr__(self):
        from .printing import render_text  # local import to avoid a cycle

        try:
            return f"Expr({render_text(self)})"
        except Exception:
            return f"Expr<{len(self.num)} terms / {len(self.den)} factors>"


def _collect_atoms_poly(p: Poly, out: set) -> None:
    for m in p:
        for a, _ in m:
            out.add(a)
            if isinstance(a, PowAtom):
                out.update(a.base.atoms())
            elif isinstance(a, FuncAtom):
                for arg in a.args:
                    out.update(arg.atoms())


def _merge_dens(d1, d2):
    """Common denominator of two factor lists.

    Returns (merged factor list, complement poly for side 1, for side 2).
    """
    f1 = {_poly_freeze(p): (p, e) for p, e in d1}
    f2 = {_poly_freeze(p): (p, e) for p, e in d2}
    merged = []
    c1: Poly = {_M1: _R1}
    c2: Poly = {_M1: _R1}
    for key in set(f1) | set(f2):
        p1, e1 = f1.get(key, (None, 0))
        p2, e2 = f2.get(key, (None, 0))
        p = p1 if p1 is not None else p2
        e = max(e1, e2)
        merged.append((p, e))
        if e > e1:
            c1 = _poly_mul(c1, _poly_pow(p, e - e1))
        if e > e2:
            c2 = _poly_mul(c2, _poly_pow(p, e - e2))
    return merged, c1, c2


def _make(num: Poly, den_list) -> Expr:
    """Normalizing constructor: the single entry point for new values."""
    if not num:
        return ZERO
    factors: dict = {}
    scale = _R1
    for p, e in den_list:
        if e == 0:
            continue
        if not p:
            raise EvaluationError("division by zero expression")
        c = _poly_const(p)
        if c is not None:
            scale *= Fraction(c) ** e
            continue
        pn, s = _poly_normalize_factor(p)
        scale *= Fraction(s) ** e
        key = _poly_freeze(pn)
        if key in factors:
            factors[key] = (pn, factors[key][1] + e)
        else:
            factors[key] = (pn, e)
    if scale != 1:
        num = _poly_scale(num, 1 / scale)
    out = []
    for key, (p, e) in sorted(factors.items()):
        # cancel factors that divide the numerator exactly
        while e > 0:
            q = _poly_exact_div(num, p)
            if q is None:
                break
            num = q
            e -= 1
            if not num:
                return ZERO
        if e:
            out.append((p, e))
    out.sort(key=lambda pe: _poly_freeze(pe[0]))
    return Expr(num, tuple(out))


# ---------------------------------------------------------------------------
# public constructors
# ---------------------------------------------------------------------------

ZERO = Expr({}, ())
ONE = Expr({_M1: _R1}, ())


def from_rational(c: Number) -> Expr:
    c = Fraction(c)
    if not c:
        return ZERO
    return Expr({_M1: c}, ())


def to_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return from_rational(v)
    if isinstance(v, Atom):
        return atom_expr(v)
    raise TypeError(f"cannot coerce {type(v).__name__} to Expr")


def atom_expr(a: Atom) -> Expr:
    return Expr({((a, 1),): _R1}, ())


def constant(name: str, dim: Optional[str] = None) -> Expr:
    """A named positive scalar constant with an optional dimension tag."""
    return atom_expr(Param(name, dim))


def _int_nth_root(a: int, q: int) -> Optional[int]:
    if a < 0:
        return None
    if a in (0, 1):
        return a
    lo, hi = 1, 1 << ((a.bit_length() + q - 1) // q + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**q < a:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**q == a else None


def _rational_nth_root(c: Fraction, q: int) -> Optional[Fraction]:
    if c < 0:
        return None
    rn = _int_nth_root(c.numerator, q)
    rd = _int_nth_root(c.denominator, q)
    if rn is None or rd is None:
        return None
    return Fraction(rn, rd)


def rational_power(e: Expr, exp: Fraction) -> Expr:
    """e**(p/q) with q > 1, via a fold-reduced power atom."""
    p, q = exp.numerator, exp.denominator
    c = e.as_rational()
    if c is not None:
        if c == 0:
            if p > 0:
                return ZERO
            raise EvaluationError("zero raised to a negative power")
        r = _rational_nth_root(Fraction(c) ** p, q)
        if r is not None:
            return from_rational(r)
    if e.is_structural_zero:
        return ZERO if p > 0 else ZERO.inverse()
    # clear the denominator: (n/d)^(1/q) = (n * d^(q-1))^(1/q) / d
    dens = ONE
    radicand = dict(e.num)
    if e.den:
        d: Poly = {_M1: _R1}
        for pf, ef in e.den:
            d = _poly_mul(d, _poly_pow(pf, ef))
        radicand = _poly_mul(radicand, _poly_pow(d, q - 1))
        dens = _make({_M1: _R1}, [(pf, ef) for pf, ef in e.den])
    # pull perfect q-th powers out of the rational content
    base_poly, s = _poly_normalize_factor(radicand)
    s = Fraction(s)
    sign = 1 if s > 0 else -1
    root_c = _rational_nth_root(abs(s), q)
    if root_c is not None:
        outer = root_c
        base = Expr(base_poly if sign > 0 else _poly_scale(base_poly, Fraction(-1)), ())
    else:
        outer = _R1
        base = Expr(_poly_scale(base_poly, s), ())
    bc = base.as_rational()
    if bc is not None:
        r = _rational_nth_root(Fraction(bc) ** p, q)
        if r is not None:
            return from_rational(outer**p * r) * dens**p
    a = PowAtom(base, q)
    result = from_rational(outer**p) if outer != 1 else ONE
    result = result * atom_expr(a) ** p
    return result * dens**p


def sqrt(e) -> Expr:
    return to_expr(e) ** Fraction(1, 2)


def normalize(e: Expr) -> Expr:
    """Re-run canonicalization; a fixed point for anything built here."""
    return _make(dict(e.num), [(dict(p), k) for p, k in e.den])


# ---------------------------------------------------------------------------
# calculus on the canonical form
# ---------------------------------------------------------------------------


def _as_atom(a) -> Atom:
    if isinstance(a, Atom):
        return a
    if isinstance(a, Expr):
        if not a.den and len(a.num) == 1:
            (mono, c), = a.num.items()
            if c == 1 and len(mono) == 1 and mono[0][1] == 1:
                return mono[0][0]
    raise TypeError("expected an atom (or an Expr wrapping exactly one atom)")


def _atom_partial(a: Atom, target: Atom) -> Expr:
    """d(atom)/d(target), chaining through radicands and function arguments."""
    if a == target:
        return ONE
    if isinstance(a, PowAtom):
        if target in a.base.atoms():
            # d(b^(1/q)) = (1/q) * A * db / b
            return (
                atom_expr(a)
                * partial(a.base, target)
                * a.base.inverse()
                * Fraction(1, a.root)
            )
        return ZERO
    if isinstance(a, FuncAtom):
        out = ZERO
        for slot, arg in enumerate(a.args, start=1):
            d_arg = partial(arg, target)
            if d_arg.is_structural_zero:
                continue
            marker = FuncAtom(a.name, a.deriv + (slot,), a.args)
            out = out + atom_expr(marker) * d_arg
        return out
    return ZERO


def _poly_partial(p: Poly, target: Atom) -> Expr:
    out = ZERO
    for mono, c in p.items():
        for idx, (a, e) in enumerate(mono):
            d = _atom_partial(a, target)
            if d.is_structural_zero:
                continue
            rest = list(mono)
            if e > 1:
                rest[idx] = (a, e - 1)
            else:
                del rest[idx]
            term = Expr({tuple(rest): c * e}, ())
            out = out + term * d
    return out


def partial(e: Expr, a) -> Expr:
    """Partial derivative treating all other atoms as independent."""
    target = _as_atom(a)
    dn = _poly_partial(e.num, target)
    if not e.den:
        return dn
    inv_den = _make({_M1: _R1}, list(e.den))
    out = dn * inv_den
    num_expr = Expr(e.num, ())
    for p, k in e.den:
        dp = _poly_partial(p, target)
        if dp.is_structural_zero:
            continue
        out = out - num_expr * dp * Expr({_M1: Fraction(k)}, ()) * _make(
            {_M1: _R1}, [(p, 1)]
        ) * inv_den
    return out


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneous substitution followed by normalization.

    Bindings map atoms to expressions.  Self-references are fine (the
    substitution is one-pass); cycles between two or more distinct atoms
    are rejected.
    """
    amap = {_as_atom(k): to_expr(v) for k, v in bindings.items()}
    _check_acyclic(amap)
    return _subst(e, amap)


def _check_acyclic(amap: Mapping[Atom, Expr]) -> None:
    keys = set(amap)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {k: WHITE for k in keys}

    def visit(k: Atom, path):
        color[k] = GRAY
        for dep in amap[k].atoms():
            if dep in keys and dep != k:
                if color[dep] == GRAY:
                    raise SubstitutionError(
                        f"cyclic binding set via {k!r} -> {dep!r}"
                    )
                if color[dep] == WHITE:
                    visit(dep, path + [dep])
        color[k] = BLACK

    for k in keys:
        if color[k] == WHITE:
            visit(k, [k])


def _subst_atom(a: Atom, amap) -> Expr:
    if a in amap:
        return amap[a]
    if isinstance(a, PowAtom):
        if a.base.atoms() & amap.keys():
            return rational_power(_subst(a.base, amap), Fraction(1, a.root))
        return atom_expr(a)
    if isinstance(a, FuncAtom):
        hit = False
        new_args = []
        for arg in a.args:
            if arg.atoms() & amap.keys():
                hit = True
                new_args.append(_subst(arg, amap))
            else:
                new_args.append(arg)
        if hit:
            return atom_expr(FuncAtom(a.name, a.deriv, tuple(new_args)))
        return atom_expr(a)
    return atom_expr(a)


def _subst_poly(p: Poly, amap) -> Expr:
    out = ZERO
    for mono, c in p.items():
        term = from_rational(c)
        for a, e in mono:
            term = term * _subst_atom(a, amap) ** e
        out = out + term
    return out


def _subst(e: Expr, amap) -> Expr:
    out = _subst_poly(e.num, amap)
    for p, k in e.den:
        out = out * _subst_poly(p, amap) ** (-k)
    return out


# ---------------------------------------------------------------------------
# numeric evaluation and zero testing
# ---------------------------------------------------------------------------

FuncCallback = Callable[..., float]


def evaluate(
    e: Expr,
    point: Mapping,
    funcs: Optional[Mapping[str, FuncCallback]] = None,
    prec: Optional[int] = None,
):
    """Evaluate at a point; exact Fraction where possible, float otherwise.

    `point` binds atoms (or single-atom Exprs) to numbers.  `funcs` binds
    function-symbol names to callbacks invoked as f(deriv_slots, *args).
    With `prec` set, irrational intermediates use mpmath at that many
    digits and the result is an mpf.
    """
    vals = {_as_atom(k): v for k, v in (point or {}).items()}
    funcs = funcs or {}

    def ev_atom(a: Atom):
        if a in vals:
            return vals[a]
        if isinstance(a, PowAtom):
            b = ev(a.base)
            return _numeric_root(b, a.root, prec)
        if isinstance(a, FuncAtom):
            cb = funcs.get(a.name)
            if cb is None:
                raise EvaluationError(f"no callback bound for function symbol {a.name}")
            return cb(a.deriv, *[ev(arg) for arg in a.args])
        raise EvaluationError(f"unbound atom {a!r}")

    memo: dict = {}

    def ev_poly(p: Poly):
        total = _R0
        for mono, c in p.items():
            term = c
            for a, k in mono:
                if a not in memo:
                    memo[a] = ev_atom(a)
                term = term * memo[a] ** k
            total = total + term
        return total

    def coerce(v):
        if not isinstance(v, (int, Fraction)):
            return v
        if prec is not None:
            import mpmath

            f = Fraction(v)
            return mpmath.mpf(f.numerator) / mpmath.mpf(f.denominator)
        return float(v)

    def ev(x: Expr):
        v = ev_poly(x.num)
        for p, k in x.den:
            dv = ev_poly(p)
            if dv == 0:
                raise EvaluationError("division by zero at evaluation point")
            if isinstance(v, (int, Fraction)) and isinstance(dv, (int, Fraction)):
                v = Fraction(v) / Fraction(dv) ** k
            else:
                v = coerce(v) / coerce(dv) ** k
        return v

    if prec is not None:
        import mpmath

        with mpmath.workdps(prec):
            return ev(e)
    out = ev(e)
    if not isinstance(out, (Fraction, int)):
        out = float(out)
    return out


def _numeric_root(v, q: int, prec: Optional[int]):
    if isinstance(v, (int, Fraction)):
        f = Fraction(v)
        if f < 0 and q % 2 == 0:
            raise EvaluationError("negative radicand")
        r = _rational_nth_root(abs(f), q)
        if r is not None:
            return r if f >= 0 else -r
        if prec is not None:
            import mpmath

            with mpmath.workdps(prec):
                x = mpmath.mpf(f.numerator) / mpmath.mpf(f.denominator)
                return mpmath.root(x, q) if f >= 0 else -mpmath.root(-x, q)
        return float(f) ** (1.0 / q) if f >= 0 else -((-float(f)) ** (1.0 / q))
    if v < 0 and q % 2 == 0:
        raise EvaluationError("negative radicand")
    if prec is not None:
        import mpmath

        with mpmath.workdps(prec):
            return mpmath.root(v, q) if v >= 0 else -mpmath.root(-v, q)
    return v ** (1.0 / q) if v >= 0 else -((-v) ** (1.0 / q))


class ZeroResult:
    """Outcome of a zero test; `probabilistic` flags the numeric fallback."""

    __slots__ = ("is_zero", "probabilistic")

    def __init__(self, is_zero: bool, probabilistic: bool):
        self.is_zero = is_zero
        self.probabilistic = probabilistic

    def __bool__(self):
        return self.is_zero

    def __repr__(self):
        tag = "probabilistic" if self.probabilistic else "exact"
        return f"ZeroResult({self.is_zero}, {tag})"


def zero_test(e: Expr, trials: int = 8, seed: int = 20090, prec: int = 60) -> ZeroResult:
    """Exact for the rational fragment; random numeric oracle for radicals.

    Normalization already maps every expression that vanishes as a rational
    function of its atoms to the canonical zero, so a nonzero normal form
    without power atoms is definitely nonzero.  Expressions mixing several
    radicals fall back to evaluation at `trials` random rational points in
    high-precision arithmetic, and the result is flagged probabilistic.
    """
    if e.is_structural_zero:
        return ZeroResult(True, False)
    atoms = e.atoms()
    if not any(isinstance(a, PowAtom) for a in atoms):
        return ZeroResult(False, False)
    import random

    rng = random.Random(seed)
    free = sorted(
        (a for a in atoms if not isinstance(a, PowAtom)), key=lambda a: a.key
    )
    func_like = [a for a in free if isinstance(a, FuncAtom)]
    coord_like = [a for a in free if not isinstance(a, FuncAtom)]
    threshold = Fraction(1, 10**40)
    # radicands may be positive only near the origin (think 1 - |v|^2), so
    # the sampler shrinks its magnitude when points keep getting rejected
    tiers = [(99, 9), (9, 9), (3, 9), (1, 19), (1, 99)]
    for _ in range(trials):
        for attempt in range(100):
            mag, den = tiers[min(attempt // 20, len(tiers) - 1)]
            point = {
                a: Fraction(rng.randint(-mag, mag), rng.randint(1, den))
                for a in coord_like
            }
            fvals = {
                a: Fraction(rng.randint(-mag, mag), rng.randint(1, den))
                for a in func_like
            }
            point.update(fvals)
            try:
                v = evaluate(e, point, funcs=None, prec=prec)
            except EvaluationError:
                continue  # negative radicand or unlucky pole: resample
            break
        else:
            raise EvaluationError("could not sample an admissible random point")
        if Fraction(float(abs(v))) > threshold:
            return ZeroResult(False, True)
    return ZeroResult(True, True)


def is_zero(e, trials: int = 8, seed: int = 20090) -> bool:
    return bool(zero_test(to_expr(e), trials=trials, seed=seed))

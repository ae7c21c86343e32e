"""Deterministic renderers for expressions and related objects.

Three formats: `text` (compact ASCII), `latex`, and `machine` (fully
parenthesized ASCII guaranteed to re-parse through :func:`jetvar.parser.parse`
with the same context, function symbols and constants).  Term order is fixed
by (descending weight, rendered string), so output is stable across runs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from . import expr as ex
from .expr import (
    Atom,
    BaseCoord,
    Expr,
    FuncAtom,
    JetCoord,
    Param,
    PowAtom,
    _mono_weight,
)

_DISPLAY_RANK = {BaseCoord: 0, JetCoord: 1, Param: 2, FuncAtom: 3, PowAtom: 4}


def _atom_name(a: Atom, ctx, latex: bool) -> str:
    if isinstance(a, BaseCoord):
        name = ctx.base_names[a.index - 1] if ctx else f"x{a.index}"
        return name
    if isinstance(a, JetCoord):
        if ctx:
            head = ctx.fiber_names[a.comp - 1]
            letters = [ctx.base_names[s - 1] for s in a.sigma]
        else:
            head = f"u{a.comp}"
            letters = [f"x{s}" for s in a.sigma]
        if latex:
            head_tex = f"u^{{{a.comp}}}" if head == f"u{a.comp}" or head == "u" else head
            return head_tex + (f"_{{{''.join(letters)}}}" if letters else "")
        return head + (f"_{''.join(letters)}" if letters else "")
    if isinstance(a, Param):
        return a.name
    raise TypeError(f"unnamed atom {a!r}")


def _render_atom_power(a: Atom, e: int, ctx, latex: bool) -> str:
    if isinstance(a, PowAtom):
        base = _render(a.base, ctx, latex)
        p = Fraction(e, a.root)
        if latex:
            if p == Fraction(1, 2):
                return f"\\sqrt{{{base}}}"
            return f"\\left({base}\\right)^{{{p.numerator}/{p.denominator}}}"
        if p == Fraction(1, 2):
            return f"sqrt({base})"
        return f"({base})^({p.numerator}/{p.denominator})"
    if isinstance(a, FuncAtom):
        args = ", ".join(_render(arg, ctx, latex) for arg in a.args)
        if a.deriv:
            head = f"dif({a.name}, {', '.join(str(s) for s in a.deriv)})"
        else:
            head = a.name
        s = f"{head}({args})"
    else:
        s = _atom_name(a, ctx, latex)
    if e == 1:
        return s
    if latex:
        return f"{s}^{{{e}}}"
    return f"{s}^{e}"


def _render_coeff(c: Fraction, latex: bool) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    if latex:
        sign = "-" if c < 0 else ""
        return f"{sign}\\frac{{{abs(c.numerator)}}}{{{c.denominator}}}"
    return f"{c.numerator}/{c.denominator}"


def _render_mono(mono, c: Fraction, ctx, latex: bool) -> str:
    """Renders |c| * monomial; the caller places the sign."""
    sep = " " if latex else "*"
    parts = []
    atoms = sorted(mono, key=lambda ae: (_DISPLAY_RANK[type(ae[0])], ae[0].key))
    for a, e in atoms:
        parts.append(_render_atom_power(a, e, ctx, latex))
    ac = abs(c)
    if ac != 1 or not parts:
        parts.insert(0, _render_coeff(ac, latex))
    return sep.join(parts)


def _render_poly(p, ctx, latex: bool) -> str:
    if not p:
        return "0"
    rendered = []
    for mono, c in p.items():
        rendered.append((-_mono_weight(mono), _render_mono(mono, c, ctx, latex), c < 0))
    rendered.sort(key=lambda t: (t[0], t[1]))
    out = ""
    for i, (_, body, neg) in enumerate(rendered):
        if i == 0:
            out = ("-" if neg else "") + body
        else:
            out += (" - " if neg else " + ") + body
    return out


def _render(e: Expr, ctx, latex: bool) -> str:
    num = _render_poly(e.num, ctx, latex)
    if not e.den:
        return num
    den_parts = []
    for p, k in e.den:
        body = _render_poly(p, ctx, latex)
        if latex:
            den_parts.append(f"\\left({body}\\right)^{{{k}}}" if k != 1 else f"({body})")
        else:
            den_parts.append(f"({body})^{k}" if k != 1 else f"({body})")
    den = (" " if latex else "*").join(den_parts)
    if latex:
        return f"\\frac{{{num}}}{{{den}}}"
    num_wrapped = f"({num})" if (" + " in num or " - " in num or num.startswith("-")) else num
    return f"{num_wrapped}/({den})" if len(e.den) > 1 or e.den[0][1] != 1 else f"{num_wrapped}/{den}"


def render_text(e: Expr, ctx=None) -> str:
    return _render(e, ctx, latex=False)


def render_latex(e: Expr, ctx=None) -> str:
    return _render(e, ctx, latex=True)


def render_machine(e: Expr, ctx=None) -> str:
    """Fully explicit form: num and each denominator factor parenthesized."""
    num = _render_poly(e.num, ctx, latex=False)
    out = f"({num})"
    for p, k in e.den:
        out += f"*({_render_poly(p, ctx, latex=False)})^(-{k})"
    return out


def render(e: Expr, fmt: str = "text", ctx=None) -> str:
    if fmt == "text":
        return render_text(e, ctx)
    if fmt == "latex":
        return render_latex(e, ctx)
    if fmt == "machine":
        return render_machine(e, ctx)
    raise ValueError(f"unknown format {fmt!r}")

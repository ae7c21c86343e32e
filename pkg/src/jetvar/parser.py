"""Expression text front end.

Grammar (whitespace-insensitive)::

    expr     := ["-"] term (("+" | "-") term)*
    term     := factor (("*" | "/") factor)*
    factor   := base ("^" exponent)?
    base     := number | ident | "(" expr ")" | "sqrt(" expr ")" | func-app
    func-app := ident "(" expr ("," expr)* ")"
               | "dif" "(" ident ("," integer)+ ")" "(" expr ("," expr)* ")"
    exponent := integer | "(" integer ["/" integer] ")"

Jet coordinates are written `u1`, `u1_xy`, ...: the head is a declared
fiber name, the subscript letters are base-coordinate names (greedy
longest match), order-insensitive on input and canonicalized sorted.
`dif(f, k, ...)` marks formal partial derivatives of a declared function
symbol with respect to its argument slots; it is what the machine format
emits, so rendered output always re-parses.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import expr as ex
from .errors import OrderError, ParseError, UnknownIdentifierError
from .expr import Expr, FuncAtom, FunctionSymbol, JetCoord, Param, atom_expr
from .jet import JetContext, multi_index

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z][A-Za-z0-9]*)?)"
    r"|(?P<op>\^|\*|/|\+|-|\(|\)|,))"
)


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> List[_Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos == len(text):
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        pos = m.end()
        for kind in ("num", "ident", "op"):
            if m.group(kind) is not None:
                out.append(_Token(kind, m.group(kind), m.start(kind)))
                break
    out.append(_Token("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, ctx: JetContext, symbols, params):
        self.text = text
        self.ctx = ctx
        self.symbols: Dict[str, FunctionSymbol] = symbols or {}
        self.params: Dict[str, Expr] = params or {}
        self.toks = _tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------------

    def peek(self) -> _Token:
        return self.toks[self.i]

    def take(self, text: Optional[str] = None) -> _Token:
        tok = self.toks[self.i]
        if text is not None and tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.pos)
        self.i += 1
        return tok

    # -- grammar -------------------------------------------------------------

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"trailing input {tok.text!r}", tok.pos)
        return e

    def expr(self) -> Expr:
        if self.peek().text == "-":
            self.take()
            out = -self.term()
        else:
            out = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> Expr:
        out = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            rhs = self.factor()
            out = out * rhs if op == "*" else out / rhs
        return out

    def factor(self) -> Expr:
        b = self.base()
        if self.peek().text == "^":
            self.take()
            expnt = self.exponent()
            b = b**expnt
        return b

    def exponent(self) -> Fraction:
        if self.peek().text == "(":
            self.take()
            p = self.signed_int()
            q = 1
            if self.peek().text == "/":
                self.take()
                q = self.signed_int()
            self.take(")")
            return Fraction(p, q)
        return Fraction(self.signed_int())

    def signed_int(self) -> int:
        sign = 1
        if self.peek().text == "-":
            self.take()
            sign = -1
        tok = self.take()
        if tok.kind != "num" or "." in tok.text:
            raise ParseError("expected an integer", tok.pos)
        return sign * int(tok.text)

    def base(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return ex.from_rational(Fraction(tok.text))
        if tok.text == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if tok.kind == "ident":
            return self.ident_or_app()
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos)

    def ident_or_app(self) -> Expr:
        tok = self.take()
        name = tok.text
        if name == "sqrt":
            self.take("(")
            e = self.expr()
            self.take(")")
            return ex.sqrt(e)
        if name == "dif":
            return self.dif_app(tok)
        if self.peek().text == "(" and name in self.symbols:
            return self.func_app(self.symbols[name])
        return self.resolve(name, tok.pos)

    def func_app(self, sym: FunctionSymbol, deriv: Tuple[int, ...] = ()) -> Expr:
        self.take("(")
        args = [self.expr()]
        while self.peek().text == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        if len(args) != sym.arity:
            raise ParseError(
                f"{sym.name} expects {sym.arity} arguments, got {len(args)}"
            )
        return atom_expr(FuncAtom(sym.name, deriv, tuple(args)))

    def dif_app(self, tok: _Token) -> Expr:
        self.take("(")
        name_tok = self.take()
        if name_tok.kind != "ident" or name_tok.text not in self.symbols:
            raise UnknownIdentifierError(
                f"unknown function symbol {name_tok.text!r}", name_tok.pos
            )
        sym = self.symbols[name_tok.text]
        slots = []
        while self.peek().text == ",":
            self.take()
            slot = self.signed_int()
            if not 1 <= slot <= sym.arity:
                raise ParseError(f"derivative slot {slot} out of range", name_tok.pos)
            slots.append(slot)
        self.take(")")
        if not slots:
            raise ParseError("dif() needs at least one derivative slot", tok.pos)
        if self.peek().text == "(":
            return self.func_app(sym, tuple(sorted(slots)))
        return atom_expr(FuncAtom(sym.name, tuple(sorted(slots)), sym.args))

    def resolve(self, name: str, pos: int) -> Expr:
        table = self.ctx.name_table
        if name in table:
            return atom_expr(table[name])
        if name in self.params:
            return self.params[name]
        if name in self.symbols:
            return self.symbols[name]()
        if "_" in name:
            head, letters = name.split("_", 1)
            if head in table and isinstance(table[head], JetCoord):
                comp = table[head].comp
                sigma = self._parse_letters(letters, pos + len(head) + 1)
                if len(sigma) > self.ctx.r:
                    raise OrderError(
                        f"multi-index {name!r} exceeds declared order r={self.ctx.r}"
                    )
                return atom_expr(JetCoord(comp, multi_index(sigma, self.ctx.n)))
        raise UnknownIdentifierError(f"unknown identifier {name!r}", pos)

    def _parse_letters(self, letters: str, pos: int) -> List[int]:
        """Greedy longest-match split of a subscript into base names."""
        by_len = sorted(
            ((nm, i + 1) for i, nm in enumerate(self.ctx.base_names)),
            key=lambda t: -len(t[0]),
        )
        out = []
        rest = letters
        while rest:
            for nm, idx in by_len:
                if rest.startswith(nm):
                    out.append(idx)
                    rest = rest[len(nm) :]
                    break
            else:
                raise ParseError(f"bad derivative subscript {letters!r}", pos)
        return out


def parse(
    text: str,
    ctx: JetContext,
    symbols: Optional[Dict[str, FunctionSymbol]] = None,
    params: Optional[Dict[str, Expr]] = None,
) -> Expr:
    """Parse `text` in the given context; result is normalized.

    `symbols` declares abstract function symbols, `params` named constants.
    All other identifiers must resolve to declared coordinates.
    """
    return _Parser(text, ctx, symbols, params).parse()

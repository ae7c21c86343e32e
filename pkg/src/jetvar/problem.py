"""Line-oriented problem files.

An INI-like sectioned text format with no external config dependency::

    # comment
    [context]
    n = 2
    m = 1
    r = 2
    base = x y        # optional coordinate names
    fiber = u

    [constants]
    theta             # opaque named constant
    c = 1             # or bound to an expression

    [functions]
    f = x y           # abstract function symbol and its arguments

    [lagrangian]
    sqrt(1 + u1_x^2 + u1_y^2)

    [source]          # one expression per dependent coordinate
    [metric]          # (n+m) x (n+m) rows, comma-separated entries
    [potential]       # 4 comma-separated entries (relativistic models)
    [field]           # 4 x 4 antisymmetric matrix
    [submanifold]     # m expressions in the base coordinates
    [variation]       # m expressions in the base coordinates

Which sections must be present depends on the command that consumes the
file; expressions are parsed in the declared context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import expr as ex
from .errors import ParseError
from .expr import Expr, FunctionSymbol
from .jet import JetContext
from .parser import parse


@dataclass
class ProblemFile:
    sections: Dict[str, List[str]]
    path: str = "<problem>"

    _ctx: Optional[JetContext] = None
    _symbols: Optional[Dict[str, FunctionSymbol]] = None
    _params: Optional[Dict[str, Expr]] = None

    @staticmethod
    def loads(text: str, path: str = "<problem>") -> "ProblemFile":
        sections: Dict[str, List[str]] = {}
        current: Optional[str] = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().lower()
                if current in sections:
                    raise ParseError(f"duplicate section [{current}] (line {lineno})")
                sections[current] = []
                continue
            if current is None:
                raise ParseError(f"content before any section (line {lineno})")
            sections[current].append(line)
        return ProblemFile(sections, path)

    @staticmethod
    def load(path: str) -> "ProblemFile":
        with open(path, "r", encoding="utf-8") as fh:
            return ProblemFile.loads(fh.read(), path)

    # -- section accessors ----------------------------------------------------

    def has(self, name: str) -> bool:
        return name in self.sections

    def require(self, name: str) -> List[str]:
        if name not in self.sections:
            raise ParseError(f"missing required section [{name}]")
        return self.sections[name]

    def context(self, default: Optional[JetContext] = None) -> JetContext:
        if self._ctx is not None:
            return self._ctx
        if "context" not in self.sections:
            if default is None:
                raise ParseError("missing required section [context]")
            self._ctx = default
            return default
        kv = {}
        for line in self.sections["context"]:
            if "=" not in line:
                raise ParseError(f"bad context line {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            kv[key.lower()] = val
        try:
            n = int(kv.pop("n"))
            m = int(kv.pop("m"))
            r = int(kv.pop("r"))
        except KeyError as missing:
            raise ParseError(f"context needs n, m and r (missing {missing})")
        base = tuple(kv.pop("base").split()) if "base" in kv else ()
        fiber = tuple(kv.pop("fiber").split()) if "fiber" in kv else ()
        if kv:
            raise ParseError(f"unknown context keys {sorted(kv)}")
        try:
            self._ctx = JetContext(n=n, m=m, r=r, base_names=base, fiber_names=fiber)
        except ValueError as err:
            raise ParseError(str(err))
        return self._ctx

    def symbols(self, ctx: JetContext) -> Dict[str, FunctionSymbol]:
        if self._symbols is not None:
            return self._symbols
        out: Dict[str, FunctionSymbol] = {}
        for line in self.sections.get("functions", ()):
            if "=" not in line:
                raise ParseError(f"bad function line {line!r}")
            name, args = (s.strip() for s in line.split("=", 1))
            arg_exprs = []
            for token in args.split():
                if token not in ctx.name_table:
                    raise ParseError(f"unknown coordinate {token!r} in function {name}")
                arg_exprs.append(ex.atom_expr(ctx.name_table[token]))
            out[name] = FunctionSymbol(name, tuple(arg_exprs))
        self._symbols = out
        return out

    def params(self, ctx: JetContext) -> Dict[str, Expr]:
        if self._params is not None:
            return self._params
        out: Dict[str, Expr] = {}
        for line in self.sections.get("constants", ()):
            if "=" in line:
                name, val = (s.strip() for s in line.split("=", 1))
                out[name] = parse(val, ctx, self.symbols(ctx), dict(out))
            else:
                name = line.strip()
                out[name] = ex.constant(name)
        self._params = out
        return out

    def expr(self, text: str, ctx: JetContext) -> Expr:
        return parse(text, ctx, self.symbols(ctx), self.params(ctx))

    def expr_lines(self, name: str, ctx: JetContext, count: int) -> List[Expr]:
        lines = self.require(name)
        if len(lines) != count:
            raise ParseError(f"section [{name}] needs {count} expressions, got {len(lines)}")
        return [self.expr(line, ctx) for line in lines]

    def matrix(self, name: str, ctx: JetContext, size: int) -> List[List[Expr]]:
        lines = self.require(name)
        if len(lines) != size:
            raise ParseError(f"section [{name}] needs {size} rows, got {len(lines)}")
        rows = []
        for line in lines:
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != size:
                raise ParseError(f"section [{name}] rows need {size} entries")
            rows.append([self.expr(c, ctx) for c in cells])
        return rows

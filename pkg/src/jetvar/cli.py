"""Command-line front end.

Exit codes: 0 success, 2 parse/validation error, 3 mathematical
degeneracy (e.g. singular metric), 4 internal verification failure.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from . import expr as ex
from .errors import (
    EvaluationError,
    JetvarError,
    OrderError,
    ParseError,
    SingularError,
    SubstitutionError,
    VerificationError,
)
from .expr import Expr
from .jet import JetContext
from .printing import render as render_expr
from .problem import ProblemFile
from .variational import (
    Lagrangian,
    SourceForm,
    euler_lagrange,
    finite_difference_action_check,
    helmholtz_check,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY = 4


def render(obj, fmt: str = "text", ctx: Optional[JetContext] = None) -> str:
    """Deterministic rendering of engine objects in the chosen format."""
    if isinstance(obj, Expr):
        return render_expr(obj, fmt, ctx)
    if isinstance(obj, SourceForm):
        lines = []
        for i, comp in enumerate(obj.components, start=1):
            body = render_expr(comp, fmt, ctx or obj.ctx)
            lines.append(f"{body} = 0" if fmt != "latex" else f"{body} = 0")
        return "\n".join(lines)
    if isinstance(obj, (list, tuple)):
        return "\n".join(render(o, fmt, ctx) for o in obj)
    return str(obj)


def _emit(args, text: str) -> None:
    print(text)


def cmd_euler_lagrange(args) -> int:
    pf = ProblemFile.load(args.file)
    ctx = pf.context()
    density = pf.expr(pf.require("lagrangian")[0], ctx)
    eps = euler_lagrange(Lagrangian(ctx, density))
    _emit(args, render(eps, args.format, ctx))
    return EXIT_OK


def cmd_null_check(args) -> int:
    pf = ProblemFile.load(args.file)
    ctx = pf.context()
    density = pf.expr(pf.require("lagrangian")[0], ctx)
    eps = euler_lagrange(Lagrangian(ctx, density))
    if eps.is_zero():
        _emit(args, "null Lagrangian (Euler-Lagrange form vanishes)")
    else:
        _emit(args, "not null; Euler-Lagrange components:")
        _emit(args, render(eps, args.format, ctx))
    return EXIT_OK


def cmd_helmholtz(args) -> int:
    pf = ProblemFile.load(args.file)
    ctx = pf.context()
    comps = pf.expr_lines("source", ctx, ctx.m)
    variational, residual = helmholtz_check(SourceForm(ctx, tuple(comps)))
    _emit(args, "variational" if variational else "not variational")
    if not variational:
        _emit(args, "residual (linearization minus its adjoint):")
        for (i, j, sigma), coef in sorted(residual.entries.items()):
            d_txt = "id" if not sigma else "D_" + "".join(ctx.base_names[s - 1] for s in sigma)
            _emit(
                args,
                f"  component ({i},{j}): {render(coef, args.format, ctx)} * {d_txt}",
            )
    return EXIT_OK


def cmd_minimal(args) -> int:
    from .riemann import (
        MetricSpec,
        area_lagrangian,
        hessian_area,
        mean_curvature_equation,
    )

    pf = ProblemFile.load(args.file)
    ctx = pf.context()
    g = MetricSpec(ctx, tuple(tuple(row) for row in pf.matrix("metric", ctx, ctx.n + ctx.m)))
    system = mean_curvature_equation(g)
    _emit(args, "totally geodesic system:")
    for k, plane in enumerate(system.totally_geodesic, start=1):
        for lam, row in enumerate(plane, start=1):
            for xi, entry in enumerate(row, start=1):
                if xi < lam:
                    continue
                _emit(
                    args,
                    f"  [{k};{lam}{xi}] {render(entry, args.format, ctx)} = 0",
                )
    _emit(args, "minimal submanifold equation:")
    _emit(args, render(system.minimal, args.format, ctx))
    area = area_lagrangian(g)
    _emit(args, f"area density: {render(area.density, args.format, ctx)}")
    eps = euler_lagrange(area)
    _emit(args, "area Euler-Lagrange equation:")
    _emit(args, render(eps, args.format, ctx))
    hess = hessian_area(g)
    _emit(args, f"area Hessian closed form verified: {hess.verified}")
    proportional = _proportional_verdict(system.minimal.components, eps.components)
    _emit(args, f"minimal equation vs area Euler-Lagrange: {proportional}")
    return EXIT_OK


def _proportional_verdict(left: Sequence[Expr], right: Sequence[Expr]) -> str:
    ref = next((i for i in range(len(right)) if not ex.is_zero(right[i])), None)
    if ref is None:
        return "both zero" if all(ex.is_zero(c) for c in left) else "right side zero"
    factor = left[ref] / right[ref]
    if ex.is_zero(factor):
        return "left side zero"
    if all(
        ex.is_zero(left[i] - factor * right[i]) for i in range(len(left))
    ):
        return "proportional (nonzero factor)"
    return "not proportional"


def cmd_relativistic(args) -> int:
    from .relativity import SpacetimeModel, curve_context, motion_equation

    pf = ProblemFile.load(args.file)
    ctx = pf.context(default=curve_context())
    if (ctx.n, ctx.m) != (1, 3):
        raise ParseError("relativistic models need a curve context (n=1, m=3)")
    metric = tuple(tuple(row) for row in pf.matrix("metric", ctx, 4))
    params = pf.params(ctx)
    potential = None
    if pf.has("potential"):
        cells = [c.strip() for c in pf.require("potential")[0].split(",")]
        if len(cells) != 4:
            raise ParseError("[potential] needs 4 comma-separated entries")
        potential = tuple(pf.expr(c, ctx) for c in cells)
    field = None
    if pf.has("field"):
        field = tuple(tuple(row) for row in pf.matrix("field", ctx, 4))
    kwargs = {}
    for key, name in (
        ("mass", "m"),
        ("light_speed", "c"),
        ("charge", "q"),
        ("hbar", "hbar"),
    ):
        if name in params:
            kwargs[key] = params[name]
    try:
        model = SpacetimeModel(
            metric=metric, potential=potential, field=field, **kwargs
        )
    except ValueError as err:
        raise ParseError(str(err))
    report = motion_equation(model)
    _emit(args, f"lagrangian density: {render(report.lagrangian.density, args.format, ctx)}")
    _emit(args, "Euler-Lagrange components:")
    _emit(args, render(report.epsilon, args.format, ctx))
    _emit(args, "accelerations solved from E(lambda):")
    for i, a in enumerate(report.el_accelerations, start=1):
        _emit(args, f"  x{i}_00 = {render(a, args.format, ctx)}")
    _emit(args, "foliation components (gravity | electromagnetic):")
    for i in range(3):
        _emit(
            args,
            f"  [{i + 1}] {render(report.gamma_gravity[i], args.format, ctx)} | "
            f"{render(report.gamma_em[i], args.format, ctx)}",
        )
    _emit(args, "accelerations solved from the displayed morphism:")
    for i, a in enumerate(report.display_accelerations, start=1):
        _emit(args, f"  x{i}_00 = {render(a, args.format, ctx)}")
    verdict = report.display_verdict
    if report.display_factor is not None and verdict == "constant_factor":
        verdict += f" (factor {render(report.display_factor, args.format, ctx)})"
    _emit(args, f"E(lambda) vs displayed morphism: {verdict}")
    _emit(args, f"electromagnetic time-normalization verified: {report.em_scaling_verified}")
    return EXIT_OK


def cmd_verify(args) -> int:
    pf = ProblemFile.load(args.file)
    ctx = pf.context()
    density = pf.expr(pf.require("lagrangian")[0], ctx)
    p = pf.expr_lines("submanifold", ctx, ctx.m)
    phi = pf.expr_lines("variation", ctx, ctx.m)
    report = finite_difference_action_check(
        Lagrangian(ctx, density),
        p,
        phi,
        grid_points=args.grid_points,
        fd_step=args.fd_step,
        tol=args.fd_tol,
    )
    _emit(args, f"action derivative (finite difference): {report.lhs:.10g}")
    _emit(args, f"Euler-Lagrange pairing integral:       {report.rhs:.10g}")
    _emit(args, f"relative error: {report.rel_error:.3e} (tolerance {report.tol:g})")
    _emit(args, "PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="jetvar",
        description="Symbolic calculus of variations on jets of submanifolds.",
    )
    ap.add_argument(
        "--format",
        choices=("text", "latex", "machine"),
        default="text",
        help="output rendering format",
    )
    ap.add_argument(
        "--seed", type=int, default=20090, help="seed for the probabilistic zero test"
    )
    ap.add_argument("--fd-step", type=float, default=1e-4, help="finite-difference step")
    ap.add_argument(
        "--fd-tol", type=float, default=1e-4, help="finite-difference relative tolerance"
    )
    ap.add_argument(
        "--grid-points",
        type=int,
        default=None,
        help="quadrature points per axis for `verify`",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, blurb in (
        ("el", cmd_euler_lagrange, "derive the Euler-Lagrange equations"),
        ("helmholtz", cmd_helmholtz, "test a source form for local variationality"),
        ("null-check", cmd_null_check, "test whether a Lagrangian is null"),
        ("minimal", cmd_minimal, "minimal-submanifold system from a metric"),
        ("relativistic", cmd_relativistic, "relativistic particle motion report"),
        ("verify", cmd_verify, "finite-difference check of the first variation"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("file", help="problem file")
        p.set_defaults(fn=fn)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, OrderError, SubstitutionError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except (SingularError, EvaluationError) as err:
        print(f"degenerate problem: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except VerificationError as err:
        print(f"internal verification failure: {err}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

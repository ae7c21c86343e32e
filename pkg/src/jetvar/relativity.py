"""Relativistic particle motion as a variational problem on jets of curves.

Spacetime is four-dimensional with coordinates (x0, x1, x2, x3); curves
are graphs over x0, so the jet context has n = 1, m = 3 and the first
and second order jet coordinates are the velocities x^i_0 and
accelerations x^i_00.

Conventions fixed here and surfaced in the README:

* the electromagnetic 2-form is summed over all index pairs, so the
  scaled-potential relation reads componentwise
  F_mu_nu = d_mu A_nu - d_nu A_mu; the loader checks it and refuses a
  mismatched pair rather than renormalizing silently;
* the connection coefficients K_a^b_c entering the foliation components
  are identified with the Christoffel symbols Gamma^b_ac of the supplied
  metric.  The identification is verified per concrete metric by
  comparing against the directly derived Euler-Lagrange expression, and
  the comparison result is reported, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import expr as ex
from .errors import SingularError, VerificationError
from .expr import BaseCoord, Expr, JetCoord, Param, atom_expr, partial, to_expr
from .forms import DU, DX, Covector, Form, du, dx, exterior_derivative
from .jet import JetContext
from .linalg import matrix_inverse
from .riemann import MetricSpec, christoffel
from .variational import Lagrangian, SourceForm, euler_lagrange


def curve_context(r: int = 2) -> JetContext:
    return JetContext(
        n=1, m=3, r=r, base_names=("x0",), fiber_names=("x1", "x2", "x3")
    )


def _velocity(i: int) -> Expr:
    return atom_expr(JetCoord(i, (1,)))


def _acceleration(i: int) -> Expr:
    return atom_expr(JetCoord(i, (1, 1)))


@dataclass(frozen=True)
class SpacetimeModel:
    """Lorentzian metric with optional electromagnetic data and constants.

    `metric` is the 4x4 matrix over (x0..x3); signature (+---) is the
    caller's responsibility (time-likeness is not symbolically enforced).
    `potential` lists A_0..A_3, `field` the antisymmetric F_mu_nu matrix.
    The constants are opaque positive scalars; their dimension tags are
    carried as metadata only.
    """

    metric: Tuple[Tuple[Expr, ...], ...]
    potential: Optional[Tuple[Expr, ...]] = None
    field: Optional[Tuple[Tuple[Expr, ...], ...]] = None
    mass: Expr = None
    light_speed: Expr = None
    charge: Expr = None
    hbar: Expr = None

    def __post_init__(self):
        ctx = curve_context()
        rows = tuple(tuple(to_expr(v) for v in row) for row in self.metric)
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ValueError("spacetime metric must be 4x4")
        # symmetry + nondegeneracy via the shared metric validator
        MetricSpec(ctx, rows)
        object.__setattr__(self, "metric", rows)
        object.__setattr__(
            self, "mass", to_expr(self.mass) if self.mass is not None else constant_m()
        )
        object.__setattr__(
            self,
            "light_speed",
            to_expr(self.light_speed) if self.light_speed is not None else constant_c(),
        )
        object.__setattr__(
            self,
            "charge",
            to_expr(self.charge) if self.charge is not None else constant_q(),
        )
        object.__setattr__(
            self, "hbar", to_expr(self.hbar) if self.hbar is not None else constant_hbar()
        )
        if self.potential is not None:
            pot = tuple(to_expr(v) for v in self.potential)
            if len(pot) != 4:
                raise ValueError("potential needs 4 components A_0..A_3")
            object.__setattr__(self, "potential", pot)
        if self.field is not None:
            F = tuple(tuple(to_expr(v) for v in row) for row in self.field)
            if len(F) != 4 or any(len(r) != 4 for r in F):
                raise ValueError("field must be 4x4")
            for a in range(4):
                for b in range(4):
                    if not ex.is_zero(F[a][b] + F[b][a]):
                        raise ValueError("field matrix must be antisymmetric")
            object.__setattr__(self, "field", F)
        if self.potential is not None and self.field is not None:
            for mu in range(4):
                for nu in range(4):
                    want = _coord_partial(self.potential[nu], mu) - _coord_partial(
                        self.potential[mu], nu
                    )
                    if not ex.is_zero(self.field[mu][nu] - want):
                        raise ValueError(
                            "potential/field mismatch: need F_mu_nu = "
                            "d_mu A_nu - d_nu A_mu (the scaled-potential "
                            "convention with 2-forms summed over all pairs)"
                        )

    @property
    def ctx(self) -> JetContext:
        return curve_context()

    def metric_spec(self) -> MetricSpec:
        return MetricSpec(self.ctx, self.metric)

    def field_matrix(self) -> Tuple[Tuple[Expr, ...], ...]:
        """F as given, or derived from A when only the potential is known."""
        if self.field is not None:
            return self.field
        if self.potential is None:
            return tuple(tuple(ex.ZERO for _ in range(4)) for _ in range(4))
        return tuple(
            tuple(
                _coord_partial(self.potential[nu], mu)
                - _coord_partial(self.potential[mu], nu)
                for nu in range(4)
            )
            for mu in range(4)
        )

    @staticmethod
    def minkowski(**kwargs) -> "SpacetimeModel":
        eta = ((1, 0, 0, 0), (0, -1, 0, 0), (0, 0, -1, 0), (0, 0, 0, -1))
        return SpacetimeModel(metric=eta, **kwargs)


def constant_m() -> Expr:
    return atom_expr(Param("m", dim="M"))


def constant_c() -> Expr:
    return atom_expr(Param("c", dim="L/T"))


def constant_q() -> Expr:
    return atom_expr(Param("q", dim="Q"))


def constant_hbar() -> Expr:
    return atom_expr(Param("hbar", dim="M L^2/T"))


def _coord_partial(e: Expr, position: int) -> Expr:
    """d/dx^position with position 0..3 (0 is the curve parameter slot)."""
    atom = BaseCoord(1) if position == 0 else JetCoord(position, ())
    return partial(e, atom)


# ---------------------------------------------------------------------------
# kinematic scalars and forms
# ---------------------------------------------------------------------------


def velocity_quadratic(model: SpacetimeModel) -> Expr:
    """g_00 + 2 g_0j x^j_0 + g_ij x^i_0 x^j_0."""
    g = model.metric
    acc = g[0][0]
    for j in range(1, 4):
        acc = acc + 2 * g[0][j] * _velocity(j)
    for i in range(1, 4):
        for j in range(1, 4):
            acc = acc + g[i][j] * _velocity(i) * _velocity(j)
    return acc


def alpha_factor(model: SpacetimeModel) -> Expr:
    """Normalization alpha = (g_00 + 2 g_0j v^j + g_ij v^i v^j)^(-1/2)."""
    return velocity_quadratic(model) ** Fraction(-1, 2)


def tau_form(model: SpacetimeModel) -> Tuple[Expr, Expr, Expr, Expr]:
    """Components tau_lam = c alpha (g_0lam + g_ilam v^i) of the unit-speed
    covelocity; the normalization gbar(tau, tau) = c^2 is verified
    symbolically before returning."""
    g = model.metric
    c = model.light_speed
    alpha = alpha_factor(model)
    comps = []
    for lam in range(4):
        acc = g[0][lam]
        for i in range(1, 4):
            acc = acc + g[i][lam] * _velocity(i)
        comps.append(c * alpha * acc)
    gbar = matrix_inverse(model.metric)
    norm = ex.ZERO
    for a in range(4):
        for b in range(4):
            norm = norm + gbar[a][b] * comps[a] * comps[b]
    if not ex.is_zero(norm - c * c):
        raise VerificationError("tau normalization gbar(tau, tau) = c^2 failed")
    return tuple(comps)


@dataclass(frozen=True)
class GravitationalFormReport:
    """d(tau) and the assembled coordinate display, compared per metric."""

    two_form: Form
    display: Form
    closed: bool  # d(d tau) == 0
    matches_display: bool


def _spacetime_covector(position: int) -> Covector:
    return dx(1) if position == 0 else du(position)


def gravitational_two_form(model: SpacetimeModel) -> GravitationalFormReport:
    """Exterior derivative of the covelocity form, with a cross-check
    against the displayed expression under the K = Christoffel reading."""
    ctx = model.ctx
    tau = tau_form(model)
    one_form = Form.zero()
    for lam in range(4):
        one_form = one_form + Form.term(tau[lam], (_spacetime_covector(lam),))
    omega2 = exterior_derivative(one_form, ctx)
    closed = all(
        c.is_structural_zero or ex.is_zero(c)
        for c in exterior_derivative(omega2, ctx).terms.values()
    )
    display = _omega_display(model, tau)
    diff = omega2 - display
    matches = all(ex.is_zero(c) for c in diff.terms.values())
    return GravitationalFormReport(omega2, display, closed, matches)


def _omega_display(model: SpacetimeModel, tau) -> Form:
    """c alpha (g_imu - c^-2 tau_i tau_mu)(dx^i_0 - Gamma^i_0) ^ dx^mu."""
    g = model.metric
    c = model.light_speed
    alpha = alpha_factor(model)
    K = christoffel(model.metric_spec())

    def Kc(a: int, b: int, cc: int) -> Expr:
        # K_a^b_c identified with Gamma^b_ac
        return K[b][a][cc]

    out = Form.zero()
    c2inv = (c * c).inverse()
    for i in range(1, 4):
        # Gamma^i_0 as a 1-form over dx^phi
        slot = Form.term(ex.ONE, (du(i, (1,)),))
        for phi in range(4):
            coef = Kc(phi, i, 0)
            for j in range(1, 4):
                coef = coef + Kc(phi, i, j) * _velocity(j)
            inner = Kc(phi, 0, 0)
            for j in range(1, 4):
                inner = inner + Kc(phi, 0, j) * _velocity(j)
            coef = coef - _velocity(i) * inner
            slot = slot - Form.term(coef, (_spacetime_covector(phi),))
        for mu in range(4):
            weight = c * alpha * (g[i][mu] - c2inv * tau[i] * tau[mu])
            out = out + slot.wedge(Form.term(weight, (_spacetime_covector(mu),)))
    return out


# ---------------------------------------------------------------------------
# Lagrangian and motion equation
# ---------------------------------------------------------------------------


def relativistic_lagrangian(model: SpacetimeModel) -> Lagrangian:
    """(m c / hbar) sqrt(g_00 + 2 g_0j v^j + g_ij v^i v^j)
    + (q / (hbar c)) (A_0 + v^i A_i), a first-order density on curves."""
    ctx = model.ctx
    kinetic = (
        model.mass * model.light_speed / model.hbar
    ) * velocity_quadratic(model) ** Fraction(1, 2)
    if model.potential is None:
        if not ex.is_zero(model.charge):
            raise ValueError("charged model needs a potential (or set charge = 0)")
        return Lagrangian(ctx, kinetic)
    A = model.potential
    coupling = A[0]
    for i in range(1, 4):
        coupling = coupling + _velocity(i) * A[i]
    em = model.charge / (model.hbar * model.light_speed) * coupling
    return Lagrangian(ctx, kinetic + em)


def gamma_gravity(model: SpacetimeModel) -> Tuple[Expr, Expr, Expr]:
    """Foliation components from the connection, K read as Christoffel:
    gamma^i = K_0^i_0 - 2 K_0^i_j v^j + K_0^0_0 v^i + 2 K_0^0_j v^i v^j
              - K_j^i_k v^j v^k + K_j^0_k v^j v^k v^i."""
    K = christoffel(model.metric_spec())

    def Kc(a, b, cc):
        return K[b][a][cc]

    out = []
    for i in range(1, 4):
        acc = Kc(0, i, 0)
        for j in range(1, 4):
            acc = acc - 2 * Kc(0, i, j) * _velocity(j)
        acc = acc + Kc(0, 0, 0) * _velocity(i)
        for j in range(1, 4):
            acc = acc + 2 * Kc(0, 0, j) * _velocity(i) * _velocity(j)
        for j in range(1, 4):
            for k in range(1, 4):
                acc = acc - Kc(j, i, k) * _velocity(j) * _velocity(k)
                acc = acc + Kc(j, 0, k) * _velocity(j) * _velocity(k) * _velocity(i)
        out.append(acc)
    return tuple(out)


def gamma_electromagnetic(model: SpacetimeModel) -> Tuple[Expr, Expr, Expr]:
    """gamma^i_e = -(q / (m c)) (gbar^{i mu} - v^i gbar^{0 mu})
    (F_0mu + F_jmu v^j)."""
    F = model.field_matrix()
    gbar = matrix_inverse(model.metric)
    scale = -(model.charge / (model.mass * model.light_speed))
    out = []
    for i in range(1, 4):
        acc = ex.ZERO
        for mu in range(4):
            lead = gbar[i][mu] - _velocity(i) * gbar[0][mu]
            fpart = F[0][mu]
            for j in range(1, 4):
                fpart = fpart + F[j][mu] * _velocity(j)
            acc = acc + lead * fpart
        out.append(scale * acc)
    return tuple(out)


@dataclass(frozen=True)
class MotionReport:
    """Euler-Lagrange data of the particle Lagrangian, the assembled
    foliation display, and every comparison between them.

    Two acceleration solves are reported: `el_accelerations` clears the
    Euler-Lagrange components of their (symmetric, nondegenerate)
    coefficient matrix, while `display_accelerations` does the same to the
    assembled displayed morphism, recovering the foliation components.

    `display_verdict` states how E(lam) relates to the display: "exact",
    "constant_factor" (with the factor in `display_factor`; the equation is
    defined up to overall scale) or "mismatch".  The electromagnetic parts
    of the two solves differ by the time-normalization c*alpha, which
    `em_scaling_verified` checks symbolically; see the README for the
    convention discussion.
    """

    lagrangian: Lagrangian
    epsilon: SourceForm
    el_coefficient_matrix: Tuple[Tuple[Expr, ...], ...]
    el_accelerations: Tuple[Expr, Expr, Expr]
    display_rhs: Tuple[Expr, Expr, Expr]
    display_coefficient_matrix: Tuple[Tuple[Expr, ...], ...]
    display_accelerations: Tuple[Expr, Expr, Expr]
    gamma_gravity: Tuple[Expr, Expr, Expr]
    gamma_em: Tuple[Expr, Expr, Expr]
    display_factor: Optional[Expr]
    display_verdict: str
    em_scaling_verified: bool


def motion_equation(model: SpacetimeModel) -> MotionReport:
    """Derive E(lam) and compare with the displayed equation of motion.

    Both E(lam) and the assembled display are linear in the accelerations
    x^i_00 with the symmetric nondegenerate coefficient matrix
    (g_ij - c^-2 tau_i tau_j) (up to prefactor); each is cleared by an
    exact linear solve.  Raises :class:`SingularError` when the matrix
    degenerates.
    """
    from .linalg import linear_solve

    lam = relativistic_lagrangian(model)
    eps = euler_lagrange(lam)
    acc_atoms = [JetCoord(i, (1, 1)) for i in range(1, 4)]

    def split_linear(rows: Sequence[Expr]):
        C = [[partial(rows[j], acc_atoms[i]) for i in range(3)] for j in range(3)]
        for row in C:
            for entry in row:
                if any(a in entry.atoms() for a in acc_atoms):
                    raise VerificationError("expression not linear in accelerations")
        zero_acc = {a: ex.ZERO for a in acc_atoms}
        d = [ex.substitute(rows[j], zero_acc) for j in range(3)]
        return C, d

    C_el, d_el = split_linear(eps.components)
    el_solved = linear_solve(C_el, [-dj for dj in d_el])

    g_nat = gamma_gravity(model)
    g_em = gamma_electromagnetic(model)
    gamma_total = [g_nat[i] + g_em[i] for i in range(3)]

    # assembled right side of the displayed morphism
    tau = tau_form(model)
    alpha = alpha_factor(model)
    c = model.light_speed
    c2inv = (c * c).inverse()
    prefactor = model.mass * c / model.hbar * alpha
    display = []
    for j in range(3):
        acc = ex.ZERO
        for i in range(3):
            coeff = model.metric[i + 1][j + 1] - c2inv * tau[i + 1] * tau[j + 1]
            acc = acc + coeff * (atom_expr(acc_atoms[i]) - gamma_total[i])
        display.append(prefactor * acc)
    C_disp, d_disp = split_linear(display)
    disp_solved = linear_solve(C_disp, [-dj for dj in d_disp])

    factor: Optional[Expr] = None
    verdict = "mismatch"
    ref = next((j for j in range(3) if not ex.is_zero(display[j])), None)
    if ref is None:
        if eps.is_zero():
            verdict = "exact"
            factor = ex.ONE
    else:
        candidate = eps.components[ref] / display[ref]
        if all(
            ex.is_zero(eps.components[j] - candidate * display[j]) for j in range(3)
        ):
            if all(isinstance(a, Param) for a in candidate.atoms()):
                factor = candidate
                verdict = "exact" if candidate == ex.ONE else "constant_factor"

    # the EL solve carries the coordinate-time kinematics: its
    # electromagnetic part times c*alpha reproduces the gamma^e display
    q_atom = None
    q_atoms = [a for a in model.charge.atoms() if isinstance(a, Param)]
    em_ok = True
    if len(q_atoms) == 1 and not ex.is_zero(model.charge):
        q_atom = q_atoms[0]
        no_charge = {q_atom: ex.ZERO}
        for i in range(3):
            em_part = el_solved[i] - ex.substitute(el_solved[i], no_charge)
            if not ex.is_zero(em_part * c * alpha - g_em[i]):
                em_ok = False
    return MotionReport(
        lagrangian=lam,
        epsilon=eps,
        el_coefficient_matrix=tuple(tuple(row) for row in C_el),
        el_accelerations=tuple(el_solved),
        display_rhs=tuple(display),
        display_coefficient_matrix=tuple(tuple(row) for row in C_disp),
        display_accelerations=tuple(disp_solved),
        gamma_gravity=g_nat,
        gamma_em=g_em,
        display_factor=factor,
        display_verdict=verdict,
        em_scaling_verified=em_ok,
    )

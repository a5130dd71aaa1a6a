"""Homological vector fields: assembly and nilpotency certification.

The odd field attached to an anchor has the anchor applied to the odd
fibre coordinates as its even-bundle velocity and minus one half of the
bracket evaluated on the odd coordinates as its odd-bundle velocity.
Nilpotency is certified by applying the field to its own velocities and
checking that both residual polynomials vanish identically.

For skew-adjoint anchors the same field is Hamiltonian: its velocities
are the variational derivatives of the quadratic density built from the
anchor, taken with respect to the odd and even coordinates.  The finite
dimensional (no base variables) case covers structure-constant algebras.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .algebroid import AnchorSpec, BiDiffOp, resolve_bracket
from .calculus import EvolField, euler, ev_apply
from .errors import ArityError, EngineError, ParityError
from .jetcore import (
    EVEN,
    ODD,
    Bundle,
    DiffPoly,
    JetVar,
    mi_order,
    mul,
    partial,
)
from .operators import TotalDiffOp, op_apply
from .report import VerificationReport, make_report

_ODD_POOL = ("b", "c", "e", "f", "g")


@dataclass(frozen=True)
class QField:
    """An odd evolutionary field with its provenance."""

    field: EvolField
    b_bundle: Bundle
    u_bundle: Bundle | None = None
    anchor: AnchorSpec | None = None
    bracket: BiDiffOp | None = None

    def phi_u(self) -> tuple[DiffPoly, ...]:
        if self.u_bundle is None:
            return ()
        return self.field.velocities[self.u_bundle]

    def phi_b(self) -> tuple[DiffPoly, ...]:
        return self.field.velocities[self.b_bundle]


def _jets(bundle: Bundle) -> tuple[DiffPoly, ...]:
    return tuple(
        DiffPoly.from_jet(JetVar(bundle, comp))
        for comp in range(1, bundle.fibre_dim + 1)
    )


def _odd_partner(
    operator: TotalDiffOp,
    declared: Bundle | None,
    taken: Iterable[str] = (),
) -> Bundle:
    if declared is not None:
        if declared.parity != ODD:
            raise ParityError(
                f"bundle {declared.symbol!r} is not odd"
            )
        return declared
    domain = operator.domain
    if domain.parity == ODD:
        return domain
    used = set(taken) | {domain.symbol}
    if operator.codomain is not None:
        used.add(operator.codomain.symbol)
    for symbol in _ODD_POOL + tuple(f"b{k}" for k in range(2, 10)):
        if symbol not in used:
            return Bundle(symbol, domain.fibre_dim, ODD, domain.depends_on)
    raise EngineError("no free symbol for the odd partner bundle")


def build_q(
    spec: AnchorSpec,
    b_bundle: Bundle | None = None,
    taken: Iterable[str] = (),
) -> QField:
    """Assemble the odd field of an anchor with a resolved bracket."""
    operator = spec.operator
    if operator.codomain is None:
        raise EngineError("anchor needs a declared codomain bundle")
    bracket = resolve_bracket(spec)
    odd = _odd_partner(operator, b_bundle or spec.odd_domain, taken)
    b_jets = _jets(odd)
    phi_u = op_apply(operator, b_jets)
    bb = bracket.eval(b_jets, b_jets)
    phi_b = tuple(poly * Fraction(-1, 2) for poly in bb)
    velocities = {operator.codomain: phi_u, odd: phi_b}
    field = EvolField(parity=ODD, velocities=velocities)
    return QField(
        field=field,
        b_bundle=odd,
        u_bundle=operator.codomain,
        anchor=spec,
        bracket=bracket,
    )


def verify_q2(q: QField, name: str = "") -> VerificationReport:
    """Residuals of the field applied to its own generating sections."""
    started = time.perf_counter()
    items: list[tuple[str, object]] = []
    for bundle, sections in q.field.velocities.items():
        for comp, poly in enumerate(sections, start=1):
            suffix = f"[{comp}]" if bundle.fibre_dim > 1 else ""
            items.append(
                (f"Q(phi_{bundle.symbol}{suffix})", ev_apply(q.field, poly))
            )
    inputs = {}
    if q.anchor is not None:
        inputs["operator"] = str(q.anchor.operator)
    if q.bracket is not None:
        inputs["bracket"] = str(q.bracket)
    return make_report(
        check="verify-q2" + (f" {name}" if name else ""),
        inputs=inputs,
        residual_items=items,
        started=started,
    )


def bivector(
    operator: TotalDiffOp,
    b_bundle: Bundle | None = None,
    taken: Iterable[str] = (),
) -> DiffPoly:
    """Quadratic density: half the operator applied to the odd coordinates,
    coupled with the odd coordinates."""
    if operator.shape[0] != operator.shape[1]:
        raise ArityError("the quadratic density needs a square operator")
    odd = _odd_partner(operator, b_bundle, taken)
    b_jets = _jets(odd)
    applied = op_apply(operator, b_jets)
    acc = DiffPoly.zero()
    for component, b_jet in zip(applied, b_jets):
        acc = acc + mul(component, b_jet)
    return acc * Fraction(1, 2)


def hamiltonian_q(density: DiffPoly, u_bundle: Bundle, b_bundle: Bundle) -> QField:
    """Field with velocities (d/db of the density, -d/du of the density)."""
    phi_u = euler(density, b_bundle)
    phi_b = tuple(-poly for poly in euler(density, u_bundle))
    field = EvolField(
        parity=ODD, velocities={u_bundle: phi_u, b_bundle: phi_b}
    )
    return QField(field=field, b_bundle=b_bundle, u_bundle=u_bundle)


def check_master_equation(
    density: DiffPoly,
    u_bundle: Bundle,
    b_bundle: Bundle,
    name: str = "",
) -> VerificationReport:
    """Total-divergence test of the paired variational derivatives.

    The coupling of the odd-variable and even-variable variational
    derivatives of the density must itself have vanishing variational
    derivatives, i.e. be a total divergence.
    """
    started = time.perf_counter()
    delta_b = euler(density, b_bundle)
    delta_u = euler(density, u_bundle)
    coupling = DiffPoly.zero()
    for left, right in zip(delta_b, delta_u):
        coupling = coupling + mul(left, right)
    items: list[tuple[str, object]] = []
    for bundle in (u_bundle, b_bundle):
        for comp, poly in enumerate(euler(coupling, bundle), start=1):
            suffix = f"[{comp}]" if bundle.fibre_dim > 1 else ""
            items.append((f"divergence_{bundle.symbol}{suffix}", poly))
    return make_report(
        check="master" + (f" {name}" if name else ""),
        inputs={"density": str(density)},
        residual_items=items,
        started=started,
        details={"coupling": str(coupling)},
    )


@dataclass(frozen=True)
class ClassicalAlgebroidSpec:
    """Structure data over a point: anchor matrix and structure functions.

    ``anchors[alpha][i]`` is the coefficient of the i-th basis section in
    the alpha-th coordinate direction; ``constants[k][i][j]`` the
    structure function, antisymmetric in (i, j).  All entries are
    polynomials of order zero in the fibre coordinates; there are no base
    variables.  A rank over a zero-dimensional fibre has no even bundle.
    """

    u_bundle: Bundle | None
    b_bundle: Bundle
    anchors: tuple[tuple[DiffPoly, ...], ...]
    constants: tuple[tuple[tuple[DiffPoly, ...], ...], ...]

    def __post_init__(self) -> None:
        m = self.u_bundle.fibre_dim if self.u_bundle is not None else 0
        d = self.b_bundle.fibre_dim
        if self.b_bundle.parity != ODD:
            raise ParityError("fibre bundle of the odd coordinates must be odd")
        if self.u_bundle is not None and self.u_bundle.parity != EVEN:
            raise ParityError("coordinate bundle must be even")
        if len(self.anchors) != m or any(len(row) != d for row in self.anchors):
            raise ArityError(f"anchor table must be {m} x {d}")
        if len(self.constants) != d or any(
            len(plane) != d or any(len(row) != d for row in plane)
            for plane in self.constants
        ):
            raise ArityError(f"constants table must be {d} x {d} x {d}")
        for table in (self.anchors, *self.constants):
            for row in table:
                for poly in row:
                    for var in poly.jet_vars():
                        if var.bundle != self.u_bundle or mi_order(var.mi):
                            raise EngineError(
                                "classical data may only depend on the "
                                "order-zero fibre coordinates"
                            )
        for k in range(d):
            for i in range(d):
                for j in range(d):
                    if (
                        self.constants[k][i][j] + self.constants[k][j][i]
                    ).is_zero():
                        continue
                    raise EngineError(
                        "structure constants are not antisymmetric in the "
                        "lower indices"
                    )

    @property
    def m(self) -> int:
        return self.u_bundle.fibre_dim if self.u_bundle is not None else 0

    @property
    def d(self) -> int:
        return self.b_bundle.fibre_dim


def classical_frame(m: int, d: int) -> tuple[Bundle | None, Bundle]:
    """Even and odd bundles over a point (no base variables)."""
    u_bundle = Bundle("u", m, EVEN, ()) if m > 0 else None
    return u_bundle, Bundle("b", d, ODD, ())


def classical_q(spec: ClassicalAlgebroidSpec) -> QField:
    """Odd field of a structure-constant algebroid over a point."""
    b_jets = _jets(spec.b_bundle)
    velocities: dict[Bundle, tuple[DiffPoly, ...]] = {}
    if spec.u_bundle is not None:
        phi_u = []
        for alpha in range(spec.m):
            acc = DiffPoly.zero()
            for i in range(spec.d):
                acc = acc + mul(spec.anchors[alpha][i], b_jets[i])
            phi_u.append(acc)
        velocities[spec.u_bundle] = tuple(phi_u)
    phi_b = []
    for k in range(spec.d):
        acc = DiffPoly.zero()
        for i in range(spec.d):
            for j in range(spec.d):
                acc = acc + mul(mul(spec.constants[k][i][j], b_jets[i]), b_jets[j])
        phi_b.append(acc * Fraction(-1, 2))
    velocities[spec.b_bundle] = tuple(phi_b)
    field = EvolField(parity=ODD, velocities=velocities)
    return QField(field=field, b_bundle=spec.b_bundle, u_bundle=spec.u_bundle)


def classical_checks(
    spec: ClassicalAlgebroidSpec, name: str = ""
) -> VerificationReport:
    """Anchor-morphism and structure-function identities, componentwise."""
    started = time.perf_counter()
    m, d = spec.m, spec.d
    coords = (
        [JetVar(spec.u_bundle, comp) for comp in range(1, m + 1)]
        if spec.u_bundle is not None
        else []
    )

    def d_u(poly: DiffPoly, alpha: int) -> DiffPoly:
        return partial(poly, coords[alpha])

    morphism: list[tuple[str, object]] = []
    for beta in range(m):
        for i in range(d):
            for j in range(i + 1, d):
                acc = DiffPoly.zero()
                for alpha in range(m):
                    acc = acc + mul(
                        spec.anchors[alpha][i], d_u(spec.anchors[beta][j], alpha)
                    )
                    acc = acc - mul(
                        spec.anchors[alpha][j], d_u(spec.anchors[beta][i], alpha)
                    )
                for k in range(d):
                    acc = acc - mul(spec.constants[k][i][j], spec.anchors[beta][k])
                if not acc.is_zero():
                    morphism.append((f"morphism[{beta + 1};{i + 1},{j + 1}]", acc))
    jacobi: list[tuple[str, object]] = []
    for q_idx in range(d):
        for i in range(d):
            for j in range(d):
                for n in range(d):
                    acc = DiffPoly.zero()
                    for a, b_, c_ in ((i, j, n), (j, n, i), (n, i, j)):
                        for alpha in range(m):
                            acc = acc - mul(
                                spec.anchors[alpha][c_],
                                d_u(spec.constants[q_idx][a][b_], alpha),
                            )
                        for ell in range(d):
                            acc = acc + mul(
                                spec.constants[ell][a][b_],
                                spec.constants[q_idx][ell][c_],
                            )
                    if not acc.is_zero():
                        jacobi.append(
                            (
                                f"jacobi[{q_idx + 1};{i + 1},{j + 1},{n + 1}]",
                                acc,
                            )
                        )
    items: list[tuple[str, object]] = []
    items.extend(morphism if morphism else [("anchor-morphism", DiffPoly.zero())])
    items.extend(jacobi if jacobi else [("structure-jacobi", DiffPoly.zero())])
    return make_report(
        check="classical-checks" + (f" {name}" if name else ""),
        inputs={"m": str(m), "d": str(d)},
        residual_items=items,
        started=started,
    )

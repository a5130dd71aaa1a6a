"""Differential calculus on jet coordinates.

Total derivatives, evolutionary vector fields with their graded
commutators, linearizations and variational (Euler) derivatives.

An evolutionary field is determined by one generating section per bundle
it touches; jets of all other bundles are inert.  The field acts as a
graded derivation from the left:

    F(f*g) = F(f)*g + (-1)^(|F|*|f|) f*F(g)

which pairs with the left partial derivatives of ``jetcore``.  The Euler
operator uses the right partial derivatives, matching the convention that
variations are moved to the rightmost position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ArityError, ParityError
from .jetcore import (
    EVEN,
    ODD,
    Bundle,
    DiffPoly,
    partial,
    partial_left,
    total_derivative,
    total_derivative_multi,
)
from .operators import ScalarOp, TotalDiffOp

__all__ = [
    "EvolField",
    "ev_apply",
    "ev_commutator",
    "euler",
    "linearization",
    "total_derivative",
    "total_derivative_multi",
]


@dataclass(frozen=True)
class EvolField:
    """Evolutionary vector field: parity plus generating sections.

    Applying the field to a coordinate of bundle parity ``e`` yields a
    polynomial of parity ``e + field parity`` (mod 2); each velocity
    component must be homogeneous of that parity or zero.
    """

    parity: int
    velocities: Mapping[Bundle, tuple[DiffPoly, ...]]

    def __post_init__(self) -> None:
        if self.parity not in (EVEN, ODD):
            raise ParityError("field parity must be EVEN or ODD")
        table = {}
        for bundle, sections in self.velocities.items():
            parts = tuple(sections) if isinstance(sections, (list, tuple)) else (sections,)
            if len(parts) != bundle.fibre_dim:
                raise ArityError(
                    f"velocity for bundle {bundle.symbol!r} needs "
                    f"{bundle.fibre_dim} components, got {len(parts)}"
                )
            want = (bundle.parity + self.parity) % 2
            for poly in parts:
                got = poly.parity()
                if got is None or (not poly.is_zero() and got != want):
                    raise ParityError(
                        f"velocity for bundle {bundle.symbol!r} must be "
                        f"homogeneous of parity {want}"
                    )
            table[bundle] = parts
        object.__setattr__(self, "velocities", table)

    def velocity(self, bundle: Bundle, component: int = 1) -> DiffPoly:
        sections = self.velocities.get(bundle)
        if sections is None:
            return DiffPoly.zero()
        return sections[component - 1]

    def is_zero(self) -> bool:
        return all(p.is_zero() for parts in self.velocities.values() for p in parts)


def ev_apply(field: EvolField, p: DiffPoly) -> DiffPoly:
    """Apply the evolutionary field to a polynomial.

    Equals the sum over jet variables of D_sigma(velocity) times the left
    partial derivative, i.e. the graded derivation determined by the
    field's action on coordinates.
    """
    if field.parity == ODD and p.parity() is None:
        raise ParityError("parity-inhomogeneous argument")
    acc = DiffPoly.zero()
    cache: dict[tuple[Bundle, int, tuple], DiffPoly] = {}
    for var in p.jet_vars():
        sections = field.velocities.get(var.bundle)
        if sections is None:
            continue
        key = (var.bundle, var.component, var.mi)
        shifted = cache.get(key)
        if shifted is None:
            shifted = total_derivative_multi(sections[var.component - 1], var.mi)
            cache[key] = shifted
        acc = acc + shifted * partial_left(p, var)
    return acc


def ev_commutator(first: EvolField, second: EvolField) -> EvolField:
    """Graded commutator of evolutionary fields.

    The result is evolutionary with generating sections
    first(psi_second) - (-1)^(|first|*|second|) second(psi_first).
    """
    sign = -1 if (first.parity and second.parity) else 1
    bundles = set(first.velocities) | set(second.velocities)
    velocities = {}
    for bundle in bundles:
        parts = []
        for comp in range(1, bundle.fibre_dim + 1):
            lhs = ev_apply(first, second.velocity(bundle, comp))
            rhs = ev_apply(second, first.velocity(bundle, comp))
            parts.append(lhs - sign * rhs)
        velocities[bundle] = tuple(parts)
    return EvolField(parity=(first.parity + second.parity) % 2, velocities=velocities)


def linearization(
    sections: Sequence[DiffPoly],
    wrt: Bundle,
    codomain: Bundle | None = None,
) -> TotalDiffOp:
    """Linearization of a section tuple along the jets of one bundle.

    Applying the result to phi equals acting on the sections with the
    evolutionary field generated by phi (for even arguments).
    """
    rows: list[list[ScalarOp]] = []
    for poly in sections:
        row: list[ScalarOp] = [{} for _ in range(wrt.fibre_dim)]
        for var in poly.jet_vars():
            if var.bundle != wrt:
                continue
            slope = partial_left(poly, var)
            if slope.is_zero():
                continue
            entry = row[var.component - 1]
            cur = entry.get(var.mi)
            entry[var.mi] = slope if cur is None else cur + slope
        rows.append(row)
    return TotalDiffOp(wrt, codomain, rows)


def euler(p: DiffPoly, wrt: Bundle) -> tuple[DiffPoly, ...]:
    """Variational derivative of a density along one bundle.

    Component alpha is the sum over sigma of (-D)_sigma applied to the
    right partial derivative by the jet (alpha, sigma).  Annihilates total
    derivatives.
    """
    out = []
    for comp in range(1, wrt.fibre_dim + 1):
        acc = DiffPoly.zero()
        for var in sorted(p.jet_vars(), key=lambda v: v.sort_key()):
            if var.bundle != wrt or var.component != comp:
                continue
            inner = partial(p, var)
            if inner.is_zero():
                continue
            term = total_derivative_multi(inner, var.mi)
            if sum(count for _, count in var.mi) % 2:
                term = -term
            acc = acc + term
        out.append(acc)
    return tuple(out)

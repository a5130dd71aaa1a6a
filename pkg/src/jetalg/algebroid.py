"""Brackets induced by anchors and their defining identities.

An anchor is a total-differential operator whose image of evolutionary
fields closes under commutation.  The induced bracket on its domain has
two standard summands and a bi-differential skew part; for skew-adjoint
anchors the skew part is computed from the adjoint of the coefficient
linearization, which is also the criterion for the operator to define a
Poisson structure.

Checks work with inert formal arguments: distinct even bundles whose
``depends_on`` sets mirror the anchor's domain, so that all residuals
are honest polynomial identities.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .calculus import EvolField, ev_apply
from .errors import ArityError, EngineError
from .jetcore import (
    EVEN,
    Bundle,
    DiffPoly,
    JetVar,
    MultiIndex,
    mi_key,
    total_derivative_multi,
)
from .operators import TotalDiffOp, op_adjoint, op_apply, op_coeff_linearization
from .report import VerificationReport, make_report

BiTermKey = tuple[int, int, int, MultiIndex, MultiIndex]


class BiDiffOp:
    """Bi-differential operation: sum of coeff * D_sigma(p) * D_tau(q).

    Terms are collected per (output component, slot components, sigma,
    tau); the coefficient is a polynomial in the ambient jets and base
    variables.  Evaluation substitutes arbitrary polynomials into the two
    slots with the usual Koszul renormalization.
    """

    __slots__ = ("first", "second", "out_dim", "terms")

    def __init__(
        self,
        first: Bundle,
        second: Bundle,
        out_dim: int,
        terms: dict[BiTermKey, DiffPoly],
    ):
        self.first = first
        self.second = second
        self.out_dim = out_dim
        self.terms = {
            key: poly for key, poly in terms.items() if not poly.is_zero()
        }

    @classmethod
    def zero(cls, first: Bundle, second: Bundle, out_dim: int = 1) -> "BiDiffOp":
        return cls(first, second, out_dim, {})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, BiDiffOp):
            return NotImplemented
        return self.out_dim == other.out_dim and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset((key, poly) for key, poly in self.terms.items()))

    def scale(self, factor) -> "BiDiffOp":
        return BiDiffOp(
            self.first,
            self.second,
            self.out_dim,
            {key: poly * factor for key, poly in self.terms.items()},
        )

    def __neg__(self) -> "BiDiffOp":
        return self.scale(-1)

    def __add__(self, other: "BiDiffOp") -> "BiDiffOp":
        if self.out_dim != other.out_dim:
            raise ArityError("bi-differential operations have different arity")
        acc = dict(self.terms)
        for key, poly in other.terms.items():
            cur = acc.get(key)
            acc[key] = poly if cur is None else cur + poly
        return BiDiffOp(self.first, self.second, self.out_dim, acc)

    def skew_residual(self) -> "BiDiffOp":
        """Self plus itself with slots swapped; zero for skew operations."""
        swapped = {
            (k, j, i, tau, sigma): poly
            for (k, i, j, sigma, tau), poly in self.terms.items()
        }
        return self + BiDiffOp(self.first, self.second, self.out_dim, swapped)

    def eval(
        self, first_values: Sequence[DiffPoly], second_values: Sequence[DiffPoly]
    ) -> tuple[DiffPoly, ...]:
        """Evaluate on section tuples (prolonging derivatives into them)."""
        out = [DiffPoly.zero() for _ in range(self.out_dim)]
        for (k, i, j, sigma, tau), coeff in self.terms.items():
            left = total_derivative_multi(first_values[i - 1], sigma)
            right = total_derivative_multi(second_values[j - 1], tau)
            out[k - 1] = out[k - 1] + coeff * left * right
        return tuple(out)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        order = sorted(
            self.terms,
            key=lambda key: (key[0], key[1], mi_key(key[3]), key[2], mi_key(key[4])),
        )
        for key in order:
            k, i, j, sigma, tau = key
            coeff = self.terms[key]
            pvar = JetVar(self.first, i, sigma).name()
            qvar = JetVar(self.second, j, tau).name()
            prefix = f"[{k}] " if self.out_dim > 1 else ""
            if coeff == DiffPoly.const(1):
                text = f"{pvar}*{qvar}"
                negative = False
            elif coeff == DiffPoly.const(-1):
                text = f"{pvar}*{qvar}"
                negative = True
            elif len(coeff.terms()) == 1:
                rendered = str(coeff)
                negative = rendered.startswith("-")
                text = f"{rendered.lstrip('-')}*{pvar}*{qvar}"
            else:
                rendered = f"({coeff})*{pvar}*{qvar}"
                negative = False
                text = rendered
            if not parts:
                parts.append(prefix + ("-" if negative else "") + text)
            else:
                parts.append(("- " if negative else "+ ") + prefix + text)
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"BiDiffOp({self})"


@dataclass(frozen=True)
class AnchorSpec:
    """An anchor with an optional candidate bracket.

    ``kind`` is "hamiltonian" when the skew part may be derived from the
    coefficient-linearization adjoint, "generic" when a candidate bracket
    must be supplied.  ``odd_domain`` optionally names the odd partner of
    the domain used by the homological constructions.
    """

    operator: TotalDiffOp
    bracket: BiDiffOp | None = None
    kind: str = "hamiltonian"
    odd_domain: Bundle | None = None
    name: str = ""

    def label(self) -> str:
        return self.name or str(self.operator)


_SLOT_POOL = ("p", "q", "r", "s", "t")


def formal_arguments(
    operator: TotalDiffOp, count: int = 2, taken: Iterable[str] = ()
) -> tuple[Bundle, ...]:
    """Even inert argument bundles matching the operator's domain.

    The domain itself is reused when it is even; further slots are fresh
    bundles with the same dimension and base dependence, named from
    p, q, r, ... while avoiding ``taken`` symbols.
    """
    domain = operator.domain
    used = set(taken) | {domain.symbol}
    if operator.codomain is not None:
        used.add(operator.codomain.symbol)
    slots: list[Bundle] = []
    if domain.parity == EVEN:
        slots.append(domain)
    names = iter(
        [name for name in _SLOT_POOL if name not in used]
        + [f"{name}{k}" for k in range(2, 10) for name in _SLOT_POOL]
    )
    while len(slots) < count:
        symbol = next(names)
        if symbol in used:
            continue
        used.add(symbol)
        slots.append(
            Bundle(symbol, domain.fibre_dim, EVEN, domain.depends_on)
        )
    return tuple(slots)


def _jets(bundle: Bundle) -> tuple[DiffPoly, ...]:
    return tuple(
        DiffPoly.from_jet(JetVar(bundle, comp))
        for comp in range(1, bundle.fibre_dim + 1)
    )


def operator_variation(field: EvolField, operator: TotalDiffOp) -> TotalDiffOp:
    """Differentiate the operator's coefficients along the field."""
    rows = [
        [
            {sigma: ev_apply(field, coeff) for sigma, coeff in entry.items()}
            for entry in row
        ]
        for row in operator.entries
    ]
    return TotalDiffOp(operator.domain, operator.codomain, rows)


def _anchor_field(operator: TotalDiffOp, argument: Sequence[DiffPoly]) -> EvolField:
    if operator.codomain is None:
        raise EngineError("anchor needs a declared codomain bundle")
    return EvolField(
        parity=EVEN, velocities={operator.codomain: op_apply(operator, argument)}
    )


def bilinear_decompose(
    values: Sequence[DiffPoly], first: Bundle, second: Bundle
) -> BiDiffOp:
    """Split polynomials bilinear in two formal bundles into a BiDiffOp."""
    terms: dict[BiTermKey, DiffPoly] = {}
    for k, poly in enumerate(values, start=1):
        for (base, factors), coeff in poly.terms().items():
            p_hits = [(v, pw) for v, pw in factors if v.bundle == first]
            q_hits = [(v, pw) for v, pw in factors if v.bundle == second]
            if (
                len(p_hits) != 1
                or len(q_hits) != 1
                or p_hits[0][1] != 1
                or q_hits[0][1] != 1
            ):
                raise EngineError(
                    "expression is not bilinear in the two argument bundles"
                )
            rest = tuple(
                (v, pw)
                for v, pw in factors
                if v.bundle != first and v.bundle != second
            )
            pvar, qvar = p_hits[0][0], q_hits[0][0]
            key = (k, pvar.component, qvar.component, pvar.mi, qvar.mi)
            piece = DiffPoly({(base, rest): coeff})
            cur = terms.get(key)
            terms[key] = piece if cur is None else cur + piece
    return BiDiffOp(first, second, len(values), terms)


def hamiltonian_bracket(
    operator: TotalDiffOp, slots: tuple[Bundle, Bundle] | None = None
) -> BiDiffOp:
    """Skew bracket of a skew-adjoint operator from its coefficient
    linearization: the adjoint of the linearization at the first slot,
    applied to the second."""
    if operator.shape[0] != operator.shape[1]:
        raise ArityError("bracket derivation needs a square operator")
    if slots is None:
        slots = formal_arguments(operator, 2)  # type: ignore[assignment]
    p_bundle, q_bundle = slots
    lin = op_coeff_linearization(operator, p_bundle)
    adj = op_adjoint(lin)
    values = op_apply(adj, _jets(q_bundle))
    return bilinear_decompose(values, p_bundle, q_bundle)


def resolve_bracket(
    spec: AnchorSpec, slots: tuple[Bundle, Bundle] | None = None
) -> BiDiffOp:
    if spec.bracket is not None:
        return spec.bracket
    if spec.kind == "hamiltonian":
        return hamiltonian_bracket(spec.operator, slots)
    raise EngineError(f"unresolved bracket for anchor {spec.label()!r}")


def closure_residual(
    operator: TotalDiffOp,
    bracket: BiDiffOp,
    slots: tuple[Bundle, Bundle],
) -> tuple[DiffPoly, ...]:
    """Residual of the image-closure identity on inert formal arguments."""
    p_bundle, q_bundle = slots
    p_jets, q_jets = _jets(p_bundle), _jets(q_bundle)
    var_p = operator_variation(_anchor_field(operator, p_jets), operator)
    var_q = operator_variation(_anchor_field(operator, q_jets), operator)
    first = op_apply(var_p, q_jets)
    second = op_apply(var_q, p_jets)
    third = op_apply(operator, bracket.eval(p_jets, q_jets))
    return tuple(a - b - c for a, b, c in zip(first, second, third))


def check_hamiltonian(
    operator: TotalDiffOp, name: str = "", taken: Iterable[str] = ()
) -> VerificationReport:
    """Skew-adjointness plus the closure identity with the derived bracket."""
    started = time.perf_counter()
    adj = op_adjoint(operator)
    skew = TotalDiffOp(operator.domain, operator.codomain, adj.entries) + operator
    slots = formal_arguments(operator, 2, taken)
    bracket = hamiltonian_bracket(operator, slots)
    residuals: list[tuple[str, object]] = [("skew-adjointness", skew)]
    for k, poly in enumerate(closure_residual(operator, bracket, slots), start=1):
        label = "criterion" if operator.shape[0] == 1 else f"criterion[{k}]"
        residuals.append((label, poly))
    return make_report(
        check="check-hamiltonian" + (f" {name}" if name else ""),
        inputs={"operator": str(operator)},
        residual_items=residuals,
        started=started,
        details={"bracket": str(bracket)},
    )


def check_closure(
    spec: AnchorSpec, taken: Iterable[str] = ()
) -> VerificationReport:
    """Certify the closure identity, trying both signs of the bracket.

    Exactly the supplied (or derived) bracket is tried first; if its
    residual does not vanish the negated bracket is tried, and the sign
    under which the identity holds is recorded in the details.
    """
    started = time.perf_counter()
    slots = formal_arguments(spec.operator, 2, taken)
    bracket = resolve_bracket(spec, slots)
    plus = closure_residual(spec.operator, bracket, slots)
    if all(p.is_zero() for p in plus):
        certified, residuals = "+", plus
    else:
        minus = closure_residual(spec.operator, -bracket, slots)
        if all(p.is_zero() for p in minus):
            certified, residuals = "-", minus
        else:
            certified, residuals = "none", plus
    items: list[tuple[str, object]] = []
    for k, poly in enumerate(residuals, start=1):
        label = "closure" if spec.operator.shape[0] == 1 else f"closure[{k}]"
        items.append((label, poly))
    details = {"certified_sign": certified}
    if certified == "+":
        details["certified_bracket"] = str(bracket)
    elif certified == "-":
        details["certified_bracket"] = str(-bracket)
    return make_report(
        check="closure" + (f" {spec.name}" if spec.name else ""),
        inputs={
            "operator": str(spec.operator),
            "bracket": str(bracket),
        },
        residual_items=items,
        started=started,
        details=details,
    )


def check_jacobi(spec: AnchorSpec, taken: Iterable[str] = ()) -> VerificationReport:
    """Cyclic reduced Jacobi residual on three inert formal arguments.

    The evolutionary term differentiates only the ambient-jet coefficients
    of the bracket; the formal argument jets are inert by construction.
    """
    started = time.perf_counter()
    slots = formal_arguments(spec.operator, 3, taken)
    bracket = resolve_bracket(spec, slots[:2])
    jets = [_jets(bundle) for bundle in slots]
    dim = spec.operator.shape[1]
    acc = [DiffPoly.zero() for _ in range(dim)]
    for rotation in range(3):
        p_jets = jets[rotation % 3]
        q_jets = jets[(rotation + 1) % 3]
        r_jets = jets[(rotation + 2) % 3]
        inner = bracket.eval(p_jets, q_jets)
        field_r = _anchor_field(spec.operator, r_jets)
        nested = bracket.eval(inner, r_jets)
        for k in range(dim):
            acc[k] = acc[k] - ev_apply(field_r, inner[k]) + nested[k]
    items: list[tuple[str, object]] = []
    for k, poly in enumerate(acc, start=1):
        label = "jacobi" if dim == 1 else f"jacobi[{k}]"
        items.append((label, poly))
    return make_report(
        check="jacobi" + (f" {spec.name}" if spec.name else ""),
        inputs={"operator": str(spec.operator), "bracket": str(bracket)},
        residual_items=items,
        started=started,
    )


def full_bracket(
    spec: AnchorSpec,
    p: Sequence[DiffPoly],
    q: Sequence[DiffPoly],
) -> tuple[DiffPoly, ...]:
    """Three-term induced bracket of two sections of the anchor's domain.

    The evolutionary terms act on the arguments through the ambient jets;
    for inert formal arguments they vanish and the bi-differential part
    remains.
    """
    bracket = resolve_bracket(spec)
    field_p = _anchor_field(spec.operator, p)
    field_q = _anchor_field(spec.operator, q)
    skew = bracket.eval(p, q)
    return tuple(
        ev_apply(field_p, q_comp) - ev_apply(field_q, p_comp) + s
        for p_comp, q_comp, s in zip(p, q, skew)
    )

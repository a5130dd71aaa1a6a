"""Matrix operators in total derivatives with polynomial coefficients.

An operator maps section tuples of its domain bundle to section tuples of
its codomain bundle.  Each matrix entry is a finite sum of terms
``a_sigma * D_sigma`` stored coefficient-left, which gives a unique normal
form: composition commutes derivatives past coefficients by the Leibniz
rule, and the formal adjoint of ``a * D_sigma`` is ``(-D)_sigma . a``
(matrix entries transposed).  Adjoints refer to the coupling given by the
implicit volume form on the base; no boundary terms are kept.
"""

from __future__ import annotations

import time
from typing import Mapping, Sequence

from .errors import ArityError, EngineError
from .jetcore import (
    MI_ZERO,
    Bundle,
    DiffPoly,
    JetVar,
    MultiIndex,
    mi_add,
    mi_key,
    mi_order,
    mi_splits,
    partial,
    total_derivative_multi,
)
from .report import VerificationReport, make_report

ScalarOp = dict[MultiIndex, DiffPoly]


def _clean_scalar(entry: Mapping[MultiIndex, DiffPoly]) -> ScalarOp:
    return {index: poly for index, poly in entry.items() if not poly.is_zero()}


def _scalar_add(a: Mapping[MultiIndex, DiffPoly], b: Mapping[MultiIndex, DiffPoly]) -> ScalarOp:
    acc = dict(a)
    for index, poly in b.items():
        cur = acc.get(index)
        acc[index] = poly if cur is None else cur + poly
    return _clean_scalar(acc)


def _scalar_compose(first: Mapping[MultiIndex, DiffPoly], second: Mapping[MultiIndex, DiffPoly]) -> ScalarOp:
    """Normal form of (first . second) for scalar operators."""
    acc: dict[MultiIndex, DiffPoly] = {}
    for sigma, a in first.items():
        for tau, b in second.items():
            for rho, rem, coeff in mi_splits(sigma):
                poly = a * total_derivative_multi(b, rho) * coeff
                if poly.is_zero():
                    continue
                index = mi_add(rem, tau)
                cur = acc.get(index)
                acc[index] = poly if cur is None else cur + poly
    return _clean_scalar(acc)


def _scalar_adjoint(entry: Mapping[MultiIndex, DiffPoly]) -> ScalarOp:
    acc: ScalarOp = {}
    for sigma, a in entry.items():
        sign = -1 if mi_order(sigma) % 2 else 1
        flipped = _scalar_compose({sigma: DiffPoly.const(sign)}, {MI_ZERO: a})
        acc = _scalar_add(acc, flipped)
    return acc


def _scalar_str(entry: Mapping[MultiIndex, DiffPoly]) -> str:
    if not entry:
        return "0"
    parts: list[str] = []
    for index in sorted(entry, key=mi_key, reverse=True):
        poly = entry[index]
        dpart = "*".join(
            f"D[{var.name}]" + (f"^{count}" if count > 1 else "")
            for var, count in index
        )
        if not dpart:
            text = str(poly)
        elif poly == DiffPoly.const(1):
            text = dpart
        elif poly == DiffPoly.const(-1):
            text = "-" + dpart
        elif len(poly.terms()) == 1:
            text = f"{poly}*{dpart}"
        else:
            text = f"({poly})*{dpart}"
        if not parts:
            parts.append(text)
        elif text.startswith("-"):
            parts.append("- " + text[1:])
        else:
            parts.append("+ " + text)
    return " ".join(parts)


class TotalDiffOp:
    """Matrix operator in total derivatives, coefficient-left normal form."""

    __slots__ = ("domain", "codomain", "entries")

    def __init__(
        self,
        domain: Bundle,
        codomain: Bundle | None,
        entries: Sequence[Sequence[Mapping[MultiIndex, DiffPoly]]],
    ):
        rows = len(entries)
        if codomain is not None and rows != codomain.fibre_dim:
            raise ArityError(
                f"operator has {rows} rows, codomain "
                f"{codomain.symbol!r} has dimension {codomain.fibre_dim}"
            )
        cleaned = []
        for row in entries:
            if len(row) != domain.fibre_dim:
                raise ArityError(
                    f"operator row has {len(row)} columns, domain "
                    f"{domain.symbol!r} has dimension {domain.fibre_dim}"
                )
            cleaned.append(tuple(_clean_scalar(entry) for entry in row))
        self.domain = domain
        self.codomain = codomain
        self.entries = tuple(cleaned)

    # -- constructors --------------------------------------------------

    @classmethod
    def scalar(
        cls,
        domain: Bundle,
        codomain: Bundle | None,
        terms: Mapping[MultiIndex, DiffPoly],
    ) -> "TotalDiffOp":
        return cls(domain, codomain, [[dict(terms)]])

    @classmethod
    def zero(cls, domain: Bundle, codomain: Bundle | None = None) -> "TotalDiffOp":
        rows = codomain.fibre_dim if codomain is not None else domain.fibre_dim
        return cls(domain, codomain, [[{} for _ in range(domain.fibre_dim)] for _ in range(rows)])

    @classmethod
    def identity(cls, bundle: Bundle) -> "TotalDiffOp":
        one = DiffPoly.const(1)
        return cls(
            bundle,
            bundle,
            [
                [({MI_ZERO: one} if i == j else {}) for j in range(bundle.fibre_dim)]
                for i in range(bundle.fibre_dim)
            ],
        )

    # -- inspection ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), self.domain.fibre_dim)

    def order(self) -> int:
        orders = [
            mi_order(index)
            for row in self.entries
            for entry in row
            for index in entry
        ]
        return max(orders, default=0)

    def is_zero(self) -> bool:
        return all(not entry for row in self.entries for entry in row)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TotalDiffOp):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(
            tuple(
                tuple(frozenset(entry.items()) for entry in row)
                for row in self.entries
            )
        )

    def __add__(self, other: "TotalDiffOp") -> "TotalDiffOp":
        if self.shape != other.shape:
            raise ArityError("operator shapes differ")
        rows = [
            [_scalar_add(a, b) for a, b in zip(row_a, row_b)]
            for row_a, row_b in zip(self.entries, other.entries)
        ]
        return TotalDiffOp(self.domain, self.codomain, rows)

    def __neg__(self) -> "TotalDiffOp":
        rows = [
            [{index: -poly for index, poly in entry.items()} for entry in row]
            for row in self.entries
        ]
        return TotalDiffOp(self.domain, self.codomain, rows)

    def __str__(self) -> str:
        if self.shape == (1, 1):
            return _scalar_str(self.entries[0][0])
        rows = [
            ", ".join(_scalar_str(entry) for entry in row) for row in self.entries
        ]
        return "[" + "; ".join(rows) + "]"

    def __repr__(self) -> str:
        return f"TotalDiffOp({self})"


def op_apply(op: TotalDiffOp, sections: Sequence[DiffPoly]) -> tuple[DiffPoly, ...]:
    """Apply the operator componentwise to a section tuple."""
    if len(sections) != op.domain.fibre_dim:
        raise ArityError(
            f"expected {op.domain.fibre_dim} section components, got {len(sections)}"
        )
    out = []
    for row in op.entries:
        acc = DiffPoly.zero()
        for entry, section in zip(row, sections):
            for index, coeff in entry.items():
                acc = acc + coeff * total_derivative_multi(section, index)
        out.append(acc)
    return tuple(out)


def op_compose(first: TotalDiffOp, second: TotalDiffOp) -> TotalDiffOp:
    """Normal form of first . second."""
    if second.codomain is not None and first.domain != second.codomain:
        raise ArityError(
            f"cannot compose: domain {first.domain.symbol!r} does not match "
            f"codomain {second.codomain.symbol!r}"
        )
    if first.shape[1] != second.shape[0]:
        raise ArityError("cannot compose: inner dimensions differ")
    rows = []
    for i in range(first.shape[0]):
        row = []
        for j in range(second.shape[1]):
            acc: ScalarOp = {}
            for k in range(first.shape[1]):
                acc = _scalar_add(
                    acc, _scalar_compose(first.entries[i][k], second.entries[k][j])
                )
            row.append(acc)
        rows.append(row)
    return TotalDiffOp(second.domain, first.codomain, rows)


def op_adjoint(op: TotalDiffOp) -> TotalDiffOp:
    """Formal adjoint: entries transposed, each term flipped to (-D).a."""
    if op.codomain is None:
        raise EngineError("adjoint needs a declared codomain bundle")
    rows = []
    for j in range(op.shape[1]):
        rows.append([_scalar_adjoint(op.entries[i][j]) for i in range(op.shape[0])])
    return TotalDiffOp(op.codomain, op.domain, rows)


def is_skew_adjoint(op: TotalDiffOp, name: str = "") -> VerificationReport:
    """Check A + A{dagger} = 0 under the dual pairing of domain and codomain."""
    started = time.perf_counter()
    if op.shape[0] != op.shape[1]:
        raise ArityError("skew-adjointness needs equal fibre dimensions")
    adj = op_adjoint(op)
    residual = TotalDiffOp(op.domain, op.codomain, adj.entries) + op
    return make_report(
        check="is-skew-adjoint" + (f" {name}" if name else ""),
        inputs={"operator": str(op)},
        residual_items=[("adjoint-plus-original", residual)],
        started=started,
    )


def op_coeff_linearization(op: TotalDiffOp, argument: Bundle) -> TotalDiffOp:
    """Linearization of the operator's coefficients at a frozen argument.

    The result acts on sections of the codomain bundle; its coefficients
    depend on the codomain jets and on jets of ``argument``.  Applying it
    to phi equals differentiating the coefficients of ``op`` along the
    evolutionary field with velocity phi and evaluating at the argument.
    """
    if op.codomain is None:
        raise EngineError("coefficient linearization needs a codomain bundle")
    if argument.fibre_dim != op.domain.fibre_dim:
        raise ArityError(
            f"argument bundle {argument.symbol!r} has dimension "
            f"{argument.fibre_dim}, operator domain has {op.domain.fibre_dim}"
        )
    u = op.codomain
    dim = u.fibre_dim
    rows: list[list[ScalarOp]] = [[{} for _ in range(dim)] for _ in range(dim)]
    for alpha in range(dim):
        for j in range(op.domain.fibre_dim):
            for sigma, coeff in op.entries[alpha][j].items():
                arg_jet = DiffPoly.from_jet(JetVar(argument, j + 1, sigma))
                for var in list(coeff.jet_vars()):
                    if var.bundle != u:
                        continue
                    slope = partial(coeff, var)
                    if slope.is_zero():
                        continue
                    beta = var.component - 1
                    tau = var.mi
                    cur = rows[alpha][beta].get(tau)
                    piece = slope * arg_jet
                    rows[alpha][beta][tau] = piece if cur is None else cur + piece
    return TotalDiffOp(u, u, rows)

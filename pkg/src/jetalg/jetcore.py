"""Exact graded differential-polynomial algebra on jet-space coordinates.

Values are polynomials with rational coefficients in

* base variables (x, y, z, ...), entering through plain powers, and
* jet variables: a bundle component differentiated by a multi-index of
  base variables.

Bundles are even or odd.  Odd jet variables anticommute, square to zero,
and reordering them multiplies the coefficient by the Koszul sign (-1 per
transposition of two odd factors).

A polynomial is a dict mapping a canonical monomial key

    (base_powers, factors)

to a nonzero Fraction.  ``base_powers`` is a sorted tuple of
(BaseVar, exponent) pairs and ``factors`` a sorted tuple of
(JetVar, exponent) pairs; odd jet variables always carry exponent 1.
The zero polynomial has no terms.  Every operation returns canonical
values and never mutates its inputs, so values are safe to share.

The partial derivative with respect to an odd jet variable is the right
derivative: the differentiated factor is moved to the rightmost position
(collecting Koszul signs) and stripped.  ``partial_left`` gives the left
variant used by graded derivations.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import ArityError, EngineError, ParityError

EVEN = 0
ODD = 1

#: Largest supported number of base variables (for multi-index ordering).
_PAD = 16


def _max_order() -> int:
    """Derivative-order cap, a guard against runaway expansions."""
    try:
        return int(os.environ.get("JETS_MAX_ORDER", "16"))
    except ValueError:
        return 16


@dataclass(frozen=True)
class BaseVar:
    """An independent variable of the base manifold."""

    name: str
    index: int

    def __post_init__(self) -> None:
        if self.index < 0 or self.index >= _PAD:
            raise EngineError(f"base variable index {self.index} out of range")


@dataclass(frozen=True)
class Bundle:
    """A bundle of dependent variables: symbol, fibre dimension, parity.

    ``depends_on`` lists the base variables whose total derivatives act
    nontrivially on the bundle's jets; an inert formal argument uses a
    proper subset.
    """

    symbol: str
    fibre_dim: int
    parity: int
    depends_on: tuple[BaseVar, ...]

    def __post_init__(self) -> None:
        if self.fibre_dim < 1:
            raise EngineError(f"bundle {self.symbol!r}: fibre_dim must be positive")
        if self.parity not in (EVEN, ODD):
            raise ParityError(f"bundle {self.symbol!r}: parity must be EVEN or ODD")
        deps = tuple(sorted(set(self.depends_on), key=lambda v: v.index))
        object.__setattr__(self, "depends_on", deps)

    def depends_on_indices(self) -> frozenset[int]:
        return frozenset(v.index for v in self.depends_on)


# A multi-index: sorted tuple of (BaseVar, positive exponent) pairs.
MultiIndex = tuple[tuple[BaseVar, int], ...]
MI_ZERO: MultiIndex = ()


def mi(spec: Union[Mapping[BaseVar, int], Iterable[tuple[BaseVar, int]]]) -> MultiIndex:
    """Normalize a multi-index given as a mapping or pair iterable."""
    items = spec.items() if isinstance(spec, Mapping) else spec
    acc: dict[BaseVar, int] = {}
    for var, count in items:
        if count < 0:
            raise EngineError("negative multi-index entry")
        if count:
            acc[var] = acc.get(var, 0) + count
    return tuple(sorted(acc.items(), key=lambda it: it[0].index))


def mi_order(m: MultiIndex) -> int:
    return sum(count for _, count in m)


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for var, count in b:
        acc[var] = acc.get(var, 0) + count
    return tuple(sorted(acc.items(), key=lambda it: it[0].index))


def mi_shift(m: MultiIndex, var: BaseVar) -> MultiIndex:
    return mi_add(m, ((var, 1),))


def mi_key(m: MultiIndex):
    """Graded-lexicographic sort key (total order first, then exponents)."""
    dense = [0] * _PAD
    for var, count in m:
        dense[var.index] = count
    return (mi_order(m), tuple(dense))


def mi_suffix(m: MultiIndex) -> str:
    """Derivative suffix: base letters sorted by index, repeated per order."""
    return "".join(var.name * count for var, count in m)


def mi_splits(m: MultiIndex) -> Iterator[tuple[MultiIndex, MultiIndex, int]]:
    """Yield (rho, m - rho, multinomial) over all sub-multi-indices rho."""
    if not m:
        yield MI_ZERO, MI_ZERO, 1
        return
    variables = [var for var, _ in m]
    maxima = [count for _, count in m]
    for combo in product(*(range(count + 1) for count in maxima)):
        coeff = 1
        rho = []
        rem = []
        for var, total, taken in zip(variables, maxima, combo):
            coeff *= comb(total, taken)
            if taken:
                rho.append((var, taken))
            if total - taken:
                rem.append((var, total - taken))
        yield tuple(rho), tuple(rem), coeff


@dataclass(frozen=True)
class JetVar:
    """A jet coordinate: bundle component differentiated by a multi-index."""

    bundle: Bundle
    component: int = 1
    mi: MultiIndex = MI_ZERO

    def __post_init__(self) -> None:
        if not 1 <= self.component <= self.bundle.fibre_dim:
            raise ArityError(
                f"component {self.component} out of range for bundle "
                f"{self.bundle.symbol!r} of dimension {self.bundle.fibre_dim}"
            )
        allowed = self.bundle.depends_on_indices()
        for var, _ in self.mi:
            if var.index not in allowed:
                raise EngineError(
                    f"bundle {self.bundle.symbol!r} does not depend on base "
                    f"variable {var.name!r}"
                )

    @property
    def parity(self) -> int:
        return self.bundle.parity

    def sort_key(self):
        return (self.bundle.symbol, self.component, mi_key(self.mi))

    def name(self) -> str:
        comp = str(self.component) if self.bundle.fibre_dim > 1 else ""
        suffix = mi_suffix(self.mi)
        return self.bundle.symbol + comp + ("_" + suffix if suffix else "")


Factors = tuple[tuple[JetVar, int], ...]
TermKey = tuple[MultiIndex, Factors]

_RatLike = Union[int, Fraction]


def _norm_factor_seq(factors: Iterable[tuple[JetVar, int]]):
    """Canonicalize a factor sequence.

    Returns (koszul_sign, sorted factors) or None when the term vanishes
    (a repeated odd factor).  The sign counts the transpositions of odd
    factors needed to sort the sequence; even factors move freely.
    """
    odd_keys = []
    evens: dict[JetVar, int] = {}
    for var, power in factors:
        if power < 0:
            raise EngineError("negative jet power")
        if power == 0:
            continue
        if var.parity == ODD:
            if power > 1:
                return None
            odd_keys.append(var)
        else:
            evens[var] = evens.get(var, 0) + power
    sign = 1
    keys = [v.sort_key() for v in odd_keys]
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if keys[i] == keys[j]:
                return None
            if keys[i] > keys[j]:
                sign = -sign
    merged = [(v, p) for v, p in evens.items()] + [(v, 1) for v in odd_keys]
    merged.sort(key=lambda it: it[0].sort_key())
    return sign, tuple(merged)


def _term_sort_key(key: TermKey):
    base, factors = key
    return (mi_key(base), tuple((v.sort_key(), p) for v, p in factors))


class DiffPoly:
    """A differential polynomial in canonical form."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[TermKey, _RatLike] | None = None):
        # The mapping is assumed canonical up to zero coefficients.
        cleaned: dict[TermKey, Fraction] = {}
        if terms:
            for key, coeff in terms.items():
                frac = Fraction(coeff)
                if frac:
                    cleaned[key] = frac
        self._terms = cleaned

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls) -> "DiffPoly":
        return cls()

    @classmethod
    def const(cls, value: _RatLike) -> "DiffPoly":
        return cls({(MI_ZERO, ()): Fraction(value)})

    @classmethod
    def from_jet(cls, var: JetVar) -> "DiffPoly":
        return cls({(MI_ZERO, ((var, 1),)): Fraction(1)})

    @classmethod
    def from_base(cls, var: BaseVar, power: int = 1) -> "DiffPoly":
        if power < 0:
            raise EngineError("negative base power")
        if power == 0:
            return cls.const(1)
        return cls({(((var, power),), ()): Fraction(1)})

    # -- inspection --------------------------------------------------

    def terms(self) -> Mapping[TermKey, Fraction]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def parity(self) -> int | None:
        """EVEN or ODD for homogeneous polynomials, None when mixed.

        The zero polynomial counts as even.
        """
        seen: set[int] = set()
        for _, factors in self._terms:
            seen.add(sum(1 for v, _ in factors if v.parity == ODD) & 1)
            if len(seen) > 1:
                return None
        return seen.pop() if seen else EVEN

    def jet_vars(self) -> Iterator[JetVar]:
        """Distinct jet variables occurring in the polynomial."""
        seen: set[JetVar] = set()
        for _, factors in self._terms:
            for var, _ in factors:
                if var not in seen:
                    seen.add(var)
                    yield var

    def bundles(self) -> set[Bundle]:
        return {v.bundle for v in self.jet_vars()}

    def odd_degrees(self) -> set[int]:
        """Set of per-term degrees in odd jet variables."""
        return {
            sum(1 for v, _ in factors if v.parity == ODD)
            for _, factors in self._terms
        }

    def max_jet_order(self) -> int:
        orders = [mi_order(v.mi) for v in self.jet_vars()]
        return max(orders, default=0)

    # -- arithmetic --------------------------------------------------

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        if not isinstance(other, DiffPoly):
            return NotImplemented
        if not self._terms:
            return other
        if not other._terms:
            return self
        acc = dict(self._terms)
        for key, coeff in other._terms.items():
            val = acc.get(key, 0) + coeff
            if val:
                acc[key] = val
            else:
                acc.pop(key, None)
        return DiffPoly(acc)

    def __neg__(self) -> "DiffPoly":
        return DiffPoly({key: -coeff for key, coeff in self._terms.items()})

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, DiffPoly):
            return mul(self, other)
        if isinstance(other, (int, Fraction)):
            if not other:
                return DiffPoly.zero()
            return DiffPoly(
                {key: coeff * other for key, coeff in self._terms.items()}
            )
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "DiffPoly":
        if exponent < 0:
            raise EngineError("negative polynomial power")
        result = DiffPoly.const(1)
        for _ in range(exponent):
            result = mul(result, self)
        return result

    # -- comparison and rendering -------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts: list[str] = []
        for key in sorted(self._terms, key=_term_sort_key):
            coeff = self._terms[key]
            body = _monomial_body(key)
            mag = abs(coeff)
            if body:
                text = body if mag == 1 else f"{mag}*{body}"
            else:
                text = str(mag)
            if not parts:
                parts.append(("-" if coeff < 0 else "") + text)
            else:
                parts.append(("- " if coeff < 0 else "+ ") + text)
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"DiffPoly({self})"


def _monomial_body(key: TermKey) -> str:
    base, factors = key
    atoms = []
    for var, power in base:
        atoms.append(var.name + (f"^{power}" if power > 1 else ""))
    for var, power in factors:
        atoms.append(var.name() + (f"^{power}" if power > 1 else ""))
    return "*".join(atoms)


# -- module-level operations ------------------------------------------


def zero() -> DiffPoly:
    return DiffPoly.zero()


def const(value: _RatLike) -> DiffPoly:
    return DiffPoly.const(value)


def jet(bundle: Bundle, component: int = 1, m=MI_ZERO) -> DiffPoly:
    """Polynomial consisting of the single jet variable."""
    index = mi(m) if not isinstance(m, tuple) else m
    return DiffPoly.from_jet(JetVar(bundle, component, index))


def base_poly(var: BaseVar, power: int = 1) -> DiffPoly:
    return DiffPoly.from_base(var, power)


RawTerm = tuple[_RatLike, object, Iterable]


def normalize(raw: Iterable[RawTerm]) -> DiffPoly:
    """Build the canonical polynomial from raw (coeff, base, factors) terms.

    ``base`` may be a mapping, pair iterable or multi-index; ``factors``
    an iterable of JetVar or (JetVar, power) in any order.  Reordering odd
    factors multiplies the coefficient by the Koszul sign, a repeated odd
    factor annihilates the term, like terms merge and zeros are dropped.
    """
    acc: dict[TermKey, Fraction] = {}
    for coeff, base, factors in raw:
        frac = Fraction(coeff)
        if not frac:
            continue
        base_mi = base if isinstance(base, tuple) else mi(base)
        seq = []
        for item in factors:
            if isinstance(item, JetVar):
                seq.append((item, 1))
            else:
                seq.append((item[0], item[1]))
        norm = _norm_factor_seq(seq)
        if norm is None:
            continue
        sign, canon = norm
        key = (base_mi, canon)
        val = acc.get(key, 0) + frac * sign
        if val:
            acc[key] = val
        else:
            acc.pop(key, None)
    return DiffPoly(acc)


def add(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    return p + q


def mul(p: DiffPoly, q: DiffPoly) -> DiffPoly:
    """Supercommutative product with Koszul signs."""
    if not p._terms or not q._terms:
        return DiffPoly.zero()
    acc: dict[TermKey, Fraction] = {}
    for (base1, fac1), c1 in p._terms.items():
        for (base2, fac2), c2 in q._terms.items():
            norm = _norm_factor_seq(fac1 + fac2)
            if norm is None:
                continue
            sign, canon = norm
            key = (mi_add(base1, base2), canon)
            val = acc.get(key, 0) + c1 * c2 * sign
            if val:
                acc[key] = val
            else:
                acc.pop(key, None)
    return DiffPoly(acc)


def partial(p: DiffPoly, var: JetVar) -> DiffPoly:
    """Partial derivative; the right derivative for odd variables."""
    return _partial(p, var, left=False)


def partial_left(p: DiffPoly, var: JetVar) -> DiffPoly:
    """Left partial derivative for odd variables (even ones are unaffected)."""
    return _partial(p, var, left=True)


def _partial(p: DiffPoly, var: JetVar, left: bool) -> DiffPoly:
    acc: dict[TermKey, Fraction] = {}
    for (base, factors), coeff in p._terms.items():
        for i, (v, power) in enumerate(factors):
            if v != var:
                continue
            if v.parity == EVEN:
                new = list(factors)
                if power == 1:
                    del new[i]
                else:
                    new[i] = (v, power - 1)
                contrib = coeff * power
            else:
                if left:
                    crossings = sum(
                        1 for u, _ in factors[:i] if u.parity == ODD
                    )
                else:
                    crossings = sum(
                        1 for u, _ in factors[i + 1 :] if u.parity == ODD
                    )
                new = list(factors)
                del new[i]
                contrib = coeff if crossings % 2 == 0 else -coeff
            key = (base, tuple(new))
            val = acc.get(key, 0) + contrib
            if val:
                acc[key] = val
            else:
                acc.pop(key, None)
            break
    return DiffPoly(acc)


def total_derivative(p: DiffPoly, direction: BaseVar) -> DiffPoly:
    """Total derivative: base part plus the chain rule over all jets.

    Jets of bundles that do not depend on ``direction`` are inert.
    """
    cap = _max_order()
    acc: dict[TermKey, Fraction] = {}

    def put(key: TermKey, value: Fraction) -> None:
        val = acc.get(key, 0) + value
        if val:
            acc[key] = val
        else:
            acc.pop(key, None)

    for (base, factors), coeff in p._terms.items():
        exp = dict(base).get(direction, 0)
        if exp:
            lowered = tuple(
                (v, c - 1 if v == direction else c)
                for v, c in base
                if not (v == direction and c == 1)
            )
            put((lowered, factors), coeff * exp)
        for i, (v, power) in enumerate(factors):
            if direction.index not in v.bundle.depends_on_indices():
                continue
            if mi_order(v.mi) + 1 > cap:
                raise EngineError(
                    f"derivative order exceeds JETS_MAX_ORDER={cap}"
                )
            shifted = JetVar(v.bundle, v.component, mi_shift(v.mi, direction))
            new = list(factors)
            if power == 1:
                new[i] = (shifted, 1)
            else:
                new[i] = (v, power - 1)
                new.insert(i + 1, (shifted, 1))
            norm = _norm_factor_seq(new)
            if norm is None:
                continue
            sign, canon = norm
            put((base, canon), coeff * power * sign)
    return DiffPoly(acc)


def total_derivative_multi(p: DiffPoly, m) -> DiffPoly:
    """Iterated total derivative along a multi-index (order irrelevant)."""
    index = m if isinstance(m, tuple) else mi(m)
    if mi_order(index) > _max_order():
        raise EngineError(f"derivative order exceeds JETS_MAX_ORDER={_max_order()}")
    result = p
    for var, count in index:
        for _ in range(count):
            result = total_derivative(result, var)
    return result


BindingKey = Union[Bundle, tuple[Bundle, int]]


def _normalize_bindings(bindings: Mapping[BindingKey, object]):
    table: dict[tuple[Bundle, int], DiffPoly] = {}
    for key, value in bindings.items():
        if isinstance(key, Bundle):
            values: Sequence
            if isinstance(value, (list, tuple)):
                values = value
            else:
                values = (value,)
            if len(values) != key.fibre_dim:
                raise ArityError(
                    f"binding for bundle {key.symbol!r} needs "
                    f"{key.fibre_dim} components, got {len(values)}"
                )
            for comp, item in enumerate(values, start=1):
                table[(key, comp)] = _as_poly(item)
        else:
            bundle, comp = key
            table[(bundle, comp)] = _as_poly(value)
    return table


def _as_poly(value) -> DiffPoly:
    if isinstance(value, DiffPoly):
        return value
    if isinstance(value, (int, Fraction)):
        return DiffPoly.const(value)
    raise EngineError(f"cannot interpret {value!r} as a polynomial")


def substitute(p: DiffPoly, bindings: Mapping[BindingKey, object]) -> DiffPoly:
    """Substitute bundle components by polynomials, with prolongation.

    A derivative jet of a bound component is replaced by the matching
    total derivative of the binding.  Factors are multiplied back in their
    canonical order, so signs arise only from renormalizing the
    substituted values.  Unbound bundles pass through.
    """
    table = _normalize_bindings(bindings)
    result = DiffPoly.zero()
    for (base, factors), coeff in p._terms.items():
        acc = DiffPoly({(base, ()): coeff})
        for var, power in factors:
            slot = (var.bundle, var.component)
            if slot in table:
                value = total_derivative_multi(table[slot], var.mi)
            else:
                value = DiffPoly.from_jet(var)
            acc = mul(acc, value**power)
            if acc.is_zero():
                break
        result = result + acc
    return result

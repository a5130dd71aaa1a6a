"""Session language: declarations, operator expressions and checks.

A session file is a sequence of statements:

    base x, y;
    even w:1;                       # bundle symbol and fibre dimension
    odd b:1 dual w;                 # optional clauses: depends, dual
    even p:1 depends x;
    op A2 : b -> w = -1/2*D[x]^3 + 2*w*D[x] + w_x;
    bracket cand(p, q) = p_x*q - p*q_x;
    classical so3 { m = 0; d = 3; c[3][1][2] = 1; ... }
    check verify-q2 A2;

Comments run from ``#`` to the end of the line.  Operator expressions
combine exact rationals, base variables, jet identifiers (``w_x``,
``u2_xy``: component digits, then one underscore and base letters) and
total derivatives ``D[x]``; ``*`` composes, ``^`` repeats, and ``/`` is
only allowed between constants.  Jet suffix letters normalize to the
base order, so ``u_yx`` and ``u_xy`` are the same variable.  Base
variable names are single letters.  Matrix operators use
``[a, b; c, d]`` with one row per codomain component.

Parsing is a single deterministic recursive descent with
declaration-before-use; errors carry a line, a column and a stable code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .algebroid import BiDiffOp, bilinear_decompose
from .errors import EngineError
from .homological import ClassicalAlgebroidSpec, classical_frame
from .jetcore import (
    EVEN,
    MI_ZERO,
    ODD,
    BaseVar,
    Bundle,
    DiffPoly,
    JetVar,
    MultiIndex,
    mi,
)
from .operators import TotalDiffOp, _scalar_add, _scalar_compose


class ParseError(EngineError):
    """Lexical, syntactic or resolution error with position and code."""

    def __init__(self, message: str, line: int, col: int, code: str):
        super().__init__(f"{line}:{col}: {message} [{code}]")
        self.message = message
        self.line = line
        self.col = col
        self.code = code


@dataclass(frozen=True)
class CheckCommand:
    command: str
    args: tuple[str, ...]

    @property
    def label(self) -> str:
        return " ".join((self.command, *self.args))


@dataclass
class Session:
    """A resolved set of declarations plus the checks to run."""

    name: str = ""
    bases: dict[str, BaseVar] = field(default_factory=dict)
    bundles: dict[str, Bundle] = field(default_factory=dict)
    duals: dict[str, str] = field(default_factory=dict)
    dependencies: dict[str, tuple[str, ...]] = field(default_factory=dict)
    operators: dict[str, TotalDiffOp] = field(default_factory=dict)
    brackets: dict[str, BiDiffOp] = field(default_factory=dict)
    classicals: dict[str, ClassicalAlgebroidSpec] = field(default_factory=dict)
    checks: list[CheckCommand] = field(default_factory=list)

    def odd_partner(self, bundle: Bundle) -> Bundle | None:
        """Odd bundle declared dual to the given even bundle, if any."""
        for odd_symbol, even_symbol in self.duals.items():
            if even_symbol == bundle.symbol:
                return self.bundles[odd_symbol]
        return None


# Known check commands with their argument ranges.
COMMANDS: dict[str, tuple[int, int]] = {
    "check-hamiltonian": (1, 1),
    "bracket": (1, 1),
    "closure": (1, 2),
    "jacobi": (1, 2),
    "build-q": (1, 2),
    "verify-q2": (1, 2),
    "bivector": (1, 1),
    "master": (1, 1),
    "classical": (1, 1),
}

_OP_COMMANDS = {
    "check-hamiltonian",
    "bracket",
    "closure",
    "jacobi",
    "build-q",
    "verify-q2",
    "bivector",
    "master",
}

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<nl>\n)"
    r"|(?P<arrow>->)"
    r"|(?P<int>\d+)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<punct>[;:,=+\-*/^()\[\]{}])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "int" | "ident" | punctuation itself | "eof"
    value: str
    line: int
    col: int


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", line, col, "syntax"
            )
        kind = match.lastgroup
        value = match.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(value)
        elif kind == "punct":
            tokens.append(_Token(value, value, line, col))
            col += len(value)
        else:
            tokens.append(_Token(kind, value, line, col))
            col += len(value)
        pos = match.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# Scalar operator expressions are dicts multi-index -> coefficient.
_Scalar = dict[MultiIndex, DiffPoly]


def _sc_const(value: Fraction | int) -> _Scalar:
    poly = DiffPoly.const(value)
    return {MI_ZERO: poly} if not poly.is_zero() else {}


def _sc_poly(poly: DiffPoly) -> _Scalar:
    return {MI_ZERO: poly} if not poly.is_zero() else {}


class _Parser:
    def __init__(self, text: str):
        self.tokens = _lex(text)
        self.pos = 0
        self.session = Session()
        self._bundles_started = False

    # -- token plumbing -------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        if token.kind != "eof":
            self.pos += 1
        return token

    def expect(self, kind: str) -> _Token:
        token = self.peek()
        if token.kind != kind:
            raise ParseError(
                f"expected {kind!r}, found {token.value or 'end of input'!r}",
                token.line,
                token.col,
                "syntax",
            )
        return self.advance()

    def accept(self, kind: str) -> _Token | None:
        if self.peek().kind == kind:
            return self.advance()
        return None

    def fail(self, message: str, token: _Token, code: str):
        raise ParseError(message, token.line, token.col, code)

    # -- statements -----------------------------------------------------

    def parse(self) -> Session:
        while self.peek().kind != "eof":
            token = self.peek()
            if token.kind != "ident":
                self.fail(
                    f"expected a statement, found {token.value!r}", token, "syntax"
                )
            keyword = token.value
            if keyword == "base":
                self._parse_base()
            elif keyword in ("even", "odd"):
                self._parse_bundle()
            elif keyword == "op":
                self._parse_op()
            elif keyword == "bracket":
                self._parse_bracket()
            elif keyword == "classical":
                self._parse_classical()
            elif keyword == "check":
                self._parse_check()
            else:
                self.fail(f"unknown statement {keyword!r}", token, "syntax")
        return self.session

    def _check_fresh(self, name: str, token: _Token) -> None:
        taken = (
            set(self.session.bases)
            | set(self.session.bundles)
            | set(self.session.operators)
            | set(self.session.brackets)
            | set(self.session.classicals)
        )
        if name in taken or name == "D":
            code = "reserved" if name == "D" else "duplicate-name"
            self.fail(f"name {name!r} is already in use", token, code)

    def _parse_base(self) -> None:
        self.advance()
        if self._bundles_started:
            token = self.peek()
            self.fail(
                "base variables must be declared before bundles", token, "syntax"
            )
        seen_any = False
        while self.peek().kind != ";":
            self.accept(",")
            token = self.expect("ident")
            name = token.value
            if len(name) != 1:
                self.fail(
                    "base variable names must be single letters", token, "syntax"
                )
            self._check_fresh(name, token)
            self.session.bases[name] = BaseVar(name, len(self.session.bases))
            seen_any = True
        if not seen_any:
            self.fail("empty base declaration", self.peek(), "syntax")
        self.expect(";")

    def _parse_bundle(self) -> None:
        parity_token = self.advance()
        parity = EVEN if parity_token.value == "even" else ODD
        name_token = self.expect("ident")
        symbol = name_token.value
        self._check_fresh(symbol, name_token)
        self.expect(":")
        dim_token = self.expect("int")
        dim = int(dim_token.value)
        if dim < 1:
            self.fail("fibre dimension must be positive", dim_token, "arity")
        depends: tuple[BaseVar, ...] | None = None
        depends_names: tuple[str, ...] = ()
        dual: str | None = None
        while self.peek().kind == "ident" and self.peek().value in ("depends", "dual"):
            clause = self.advance().value
            if clause == "depends":
                names = []
                while self.peek().kind == "ident" and self.peek().value not in (
                    "depends",
                    "dual",
                ):
                    names.append(self.expect("ident"))
                    self.accept(",")
                if not names:
                    self.fail("empty depends clause", self.peek(), "syntax")
                bases = []
                for token in names:
                    base = self.session.bases.get(token.value)
                    if base is None:
                        self.fail(
                            f"unknown base variable {token.value}",
                            token,
                            "unknown-base",
                        )
                    bases.append(base)
                depends = tuple(bases)
                depends_names = tuple(token.value for token in names)
            else:
                token = self.expect("ident")
                partner = self.session.bundles.get(token.value)
                if partner is None:
                    self.fail(
                        f"unknown bundle {token.value!r}", token, "unknown-identifier"
                    )
                if partner.parity == parity:
                    self.fail(
                        "dual partner must have opposite parity", token, "parity"
                    )
                dual = token.value
        self.expect(";")
        if depends is None:
            depends = tuple(self.session.bases.values())
        bundle = Bundle(symbol, dim, parity, depends)
        self._bundles_started = True
        self.session.bundles[symbol] = bundle
        if depends_names:
            self.session.dependencies[symbol] = depends_names
        if dual is not None:
            if parity == ODD:
                self.session.duals[symbol] = dual
            else:
                self.session.duals[dual] = symbol

    def _parse_op(self) -> None:
        self.advance()
        name_token = self.expect("ident")
        name = name_token.value
        self._check_fresh(name, name_token)
        self.expect(":")
        dom_token = self.expect("ident")
        domain = self.session.bundles.get(dom_token.value)
        if domain is None:
            self.fail(
                f"unknown bundle {dom_token.value!r}", dom_token, "unknown-identifier"
            )
        self.expect("arrow")
        cod_token = self.expect("ident")
        codomain = self.session.bundles.get(cod_token.value)
        if codomain is None:
            self.fail(
                f"unknown bundle {cod_token.value!r}", cod_token, "unknown-identifier"
            )
        self.expect("=")
        context = _Context(self.session.bases, self.session.bundles)
        if self.peek().kind == "[":
            rows = self._parse_matrix(context)
            if len(rows) != codomain.fibre_dim or any(
                len(row) != domain.fibre_dim for row in rows
            ):
                self.fail(
                    f"matrix shape does not match {codomain.symbol!r} x "
                    f"{domain.symbol!r}",
                    name_token,
                    "arity",
                )
        else:
            scalar = self._parse_sum(context)
            if domain.fibre_dim != 1 or codomain.fibre_dim != 1:
                self.fail(
                    "scalar operator body needs one-dimensional bundles",
                    name_token,
                    "arity",
                )
            rows = [[scalar]]
        self.expect(";")
        self.session.operators[name] = TotalDiffOp(domain, codomain, rows)

    def _parse_matrix(self, context: "_Context") -> list[list[_Scalar]]:
        self.expect("[")
        rows: list[list[_Scalar]] = [[]]
        while True:
            rows[-1].append(self._parse_sum(context))
            token = self.peek()
            if token.kind == ",":
                self.advance()
            elif token.kind == ";":
                self.advance()
                rows.append([])
            elif token.kind == "]":
                self.advance()
                return rows
            else:
                self.fail(
                    f"expected ',', ';' or ']', found {token.value!r}",
                    token,
                    "syntax",
                )

    def _parse_bracket(self) -> None:
        self.advance()
        name_token = self.expect("ident")
        name = name_token.value
        self._check_fresh(name, name_token)
        self.expect("(")
        first_token = self.expect("ident")
        self.expect(",")
        second_token = self.expect("ident")
        self.expect(")")
        if first_token.value == second_token.value:
            self.fail("bracket arguments must differ", second_token, "syntax")
        bases = tuple(self.session.bases.values())
        first = Bundle(first_token.value, 1, EVEN, bases)
        second = Bundle(second_token.value, 1, EVEN, bases)
        self.expect("=")
        context = _Context(
            self.session.bases,
            {**self.session.bundles, first.symbol: first, second.symbol: second},
        )
        scalar = self._parse_sum(context)
        end_token = self.expect(";")
        poly = _order_zero(scalar, end_token, "bracket body")
        try:
            bracket = bilinear_decompose([poly], first, second)
        except EngineError:
            self.fail(
                "bracket body must be bilinear in its two arguments",
                end_token,
                "not-bilinear",
            )
        self.session.brackets[name] = bracket

    def _parse_classical(self) -> None:
        self.advance()
        name_token = self.expect("ident")
        name = name_token.value
        self._check_fresh(name, name_token)
        self.expect("{")
        m = d = None
        anchors: dict[tuple[int, int], DiffPoly] = {}
        constants: dict[tuple[int, int, int], DiffPoly] = {}
        explicit: set[tuple[int, int, int]] = set()
        u_bundle: Bundle | None = None
        b_bundle: Bundle | None = None
        while self.peek().kind != "}":
            token = self.expect("ident")
            if token.value in ("m", "d"):
                self.expect("=")
                value = int(self.expect("int").value)
                self.expect(";")
                if token.value == "m":
                    m = value
                else:
                    d = value
                if m is not None and d is not None and b_bundle is None:
                    if d < 1:
                        self.fail("rank d must be positive", token, "arity")
                    u_bundle, b_bundle = classical_frame(m, d)
                continue
            if b_bundle is None or d is None or m is None:
                self.fail(
                    "m and d must be declared before data entries", token, "syntax"
                )
            context = _Context(
                {}, {"u": u_bundle} if u_bundle is not None else {}
            )
            if token.value == "anchor":
                alpha = self._index(m, "coordinate index")
                i = self._index(d, "basis index")
                self.expect("=")
                poly = _order_zero(
                    self._parse_sum(context), token, "anchor entry"
                )
                self.expect(";")
                anchors[(alpha, i)] = poly
            elif token.value == "c":
                k = self._index(d, "upper index")
                i = self._index(d, "lower index")
                j = self._index(d, "lower index")
                self.expect("=")
                poly = _order_zero(
                    self._parse_sum(context), token, "structure entry"
                )
                self.expect(";")
                if i == j and not poly.is_zero():
                    self.fail(
                        "structure constants vanish on equal lower indices",
                        token,
                        "inconsistent-constants",
                    )
                if (k, j, i) in explicit and constants[(k, j, i)] != -poly:
                    self.fail(
                        "conflicting assignment for antisymmetric constants",
                        token,
                        "inconsistent-constants",
                    )
                constants[(k, i, j)] = poly
                constants[(k, j, i)] = -poly
                explicit.add((k, i, j))
            else:
                self.fail(
                    f"unknown classical entry {token.value!r}", token, "syntax"
                )
        self.expect("}")
        self.accept(";")
        if b_bundle is None or m is None or d is None:
            self.fail("classical block needs m and d", name_token, "syntax")
        zero = DiffPoly.zero()
        anchor_table = tuple(
            tuple(anchors.get((alpha, i), zero) for i in range(1, d + 1))
            for alpha in range(1, m + 1)
        )
        constant_table = tuple(
            tuple(
                tuple(constants.get((k, i, j), zero) for j in range(1, d + 1))
                for i in range(1, d + 1)
            )
            for k in range(1, d + 1)
        )
        self.session.classicals[name] = ClassicalAlgebroidSpec(
            u_bundle, b_bundle, anchor_table, constant_table
        )

    def _index(self, limit: int, what: str) -> int:
        self.expect("[")
        token = self.expect("int")
        value = int(token.value)
        if not 1 <= value <= limit:
            self.fail(f"{what} {value} out of range 1..{limit}", token, "arity")
        self.expect("]")
        return value

    def _parse_check(self) -> None:
        self.advance()
        token = self.expect("ident")
        parts = [token.value]
        while self.peek().kind == "-":
            self.advance()
            parts.append(self.expect("ident").value)
        command = "-".join(parts)
        if command not in COMMANDS:
            self.fail(f"unknown check command {command!r}", token, "bad-command")
        args = []
        while self.peek().kind == "ident":
            args.append(self.advance())
        self.expect(";")
        low, high = COMMANDS[command]
        if not low <= len(args) <= high:
            self.fail(
                f"command {command!r} takes {low}"
                + (f"..{high}" if high != low else "")
                + " arguments",
                token,
                "arity",
            )
        if command == "classical":
            if args[0].value not in self.session.classicals:
                self.fail(
                    f"unknown classical spec {args[0].value!r}",
                    args[0],
                    "unresolved-reference",
                )
        else:
            if args[0].value not in self.session.operators:
                self.fail(
                    f"unknown operator {args[0].value!r}",
                    args[0],
                    "unresolved-reference",
                )
            if len(args) > 1 and args[1].value not in self.session.brackets:
                self.fail(
                    f"unknown bracket {args[1].value!r}",
                    args[1],
                    "unresolved-reference",
                )
        self.session.checks.append(
            CheckCommand(command, tuple(arg.value for arg in args))
        )

    # -- expressions ------------------------------------------------------

    def _parse_sum(self, context: "_Context") -> _Scalar:
        negate = False
        if self.peek().kind in ("+", "-"):
            negate = self.advance().kind == "-"
        acc = self._parse_product(context)
        if negate:
            acc = {index: -poly for index, poly in acc.items()}
        while self.peek().kind in ("+", "-"):
            minus = self.advance().kind == "-"
            term = self._parse_product(context)
            if minus:
                term = {index: -poly for index, poly in term.items()}
            acc = _scalar_add(acc, term)
        return acc

    def _parse_product(self, context: "_Context") -> _Scalar:
        acc = self._parse_factor(context)
        while self.peek().kind in ("*", "/"):
            op_token = self.advance()
            rhs = self._parse_factor(context)
            if op_token.kind == "*":
                acc = _scalar_compose(acc, rhs)
            else:
                value = _constant_value(rhs)
                if value is None:
                    self.fail(
                        "division is only defined by a nonzero constant",
                        op_token,
                        "division",
                    )
                acc = _scalar_compose(acc, _sc_const(Fraction(1, 1) / value))
        return acc

    def _parse_factor(self, context: "_Context") -> _Scalar:
        base = self._parse_atom(context)
        if self.peek().kind == "^":
            self.advance()
            exp_token = self.expect("int")
            exponent = int(exp_token.value)
            acc = _sc_const(1)
            for _ in range(exponent):
                acc = _scalar_compose(acc, base)
            return acc
        return base

    def _parse_atom(self, context: "_Context") -> _Scalar:
        token = self.peek()
        if token.kind == "int":
            self.advance()
            return _sc_const(int(token.value))
        if token.kind == "(":
            self.advance()
            inner = self._parse_sum(context)
            self.expect(")")
            return inner
        if token.kind == "ident":
            self.advance()
            if token.value == "D":
                self.expect("[")
                base_token = self.expect("ident")
                base = context.bases.get(base_token.value)
                if base is None:
                    self.fail(
                        f"unknown base variable {base_token.value}",
                        base_token,
                        "unknown-base",
                    )
                self.expect("]")
                return {mi({base: 1}): DiffPoly.const(1)}
            return _sc_poly(self._resolve_ident(token, context))
        self.fail(
            f"expected an expression, found {token.value or 'end of input'!r}",
            token,
            "syntax",
        )

    def _resolve_ident(self, token: _Token, context: "_Context") -> DiffPoly:
        name = token.value
        head, underscore, suffix = name.partition("_")
        if "_" in suffix:
            self.fail(f"malformed jet identifier {name!r}", token, "syntax")
        resolved = context.resolve_head(head)
        if resolved is None:
            if not underscore and head in context.bases:
                return DiffPoly.from_base(context.bases[head])
            self.fail(f"unknown identifier {head!r}", token, "unknown-identifier")
        bundle, component = resolved
        counts: dict[BaseVar, int] = {}
        for letter in suffix:
            base = context.bases.get(letter)
            if base is None:
                self.fail(
                    f"unknown base variable {letter}", token, "unknown-base"
                )
            counts[base] = counts.get(base, 0) + 1
        try:
            var = JetVar(bundle, component, mi(counts))
        except EngineError as exc:
            self.fail(str(exc), token, "dependence")
        return DiffPoly.from_jet(var)


class _Context:
    """Name tables visible inside one expression."""

    def __init__(self, bases: dict[str, BaseVar], bundles: dict[str, Bundle]):
        self.bases = bases
        self.bundles = bundles

    def resolve_head(self, head: str) -> tuple[Bundle, int] | None:
        bundle = self.bundles.get(head)
        if bundle is not None:
            if bundle.fibre_dim != 1:
                return None
            return bundle, 1
        for split in range(len(head) - 1, 0, -1):
            prefix, digits = head[:split], head[split:]
            if not digits.isdigit():
                continue
            bundle = self.bundles.get(prefix)
            if bundle is not None and 1 <= int(digits) <= bundle.fibre_dim:
                return bundle, int(digits)
        return None


def _constant_value(scalar: _Scalar) -> Fraction | None:
    if set(scalar) - {MI_ZERO}:
        return None
    poly = scalar.get(MI_ZERO, DiffPoly.zero())
    terms = poly.terms()
    if len(terms) != 1:
        return None
    key, coeff = next(iter(terms.items()))
    if key != (MI_ZERO, ()):
        return None
    return coeff


def _order_zero(scalar: _Scalar, token: _Token, what: str) -> DiffPoly:
    extra = set(scalar) - {MI_ZERO}
    if extra:
        raise ParseError(
            f"{what} must not contain total derivatives",
            token.line,
            token.col,
            "syntax",
        )
    return scalar.get(MI_ZERO, DiffPoly.zero())


def parse_session(text: str, name: str = "") -> Session:
    """Parse a session; deterministic, declaration-before-use."""
    session = _Parser(text).parse()
    session.name = name
    return session


# -- canonical rendering ------------------------------------------------


def render_session(session: Session) -> str:
    """Canonical text for a session; parsing it back is the identity."""
    lines: list[str] = []
    if session.bases:
        lines.append("base " + ", ".join(session.bases) + ";")
    # Emit each dual clause on the later-declared bundle of the pair so
    # that the partner is always in scope when parsing the output back.
    order = {symbol: index for index, symbol in enumerate(session.bundles)}
    dual_clause: dict[str, str] = {}
    for odd_symbol, even_symbol in session.duals.items():
        if order.get(odd_symbol, 0) >= order.get(even_symbol, 0):
            dual_clause[odd_symbol] = even_symbol
        else:
            dual_clause[even_symbol] = odd_symbol
    for symbol, bundle in session.bundles.items():
        parity = "even" if bundle.parity == EVEN else "odd"
        clause = ""
        deps = session.dependencies.get(symbol)
        if deps:
            clause += " depends " + ", ".join(deps)
        if symbol in dual_clause:
            clause += f" dual {dual_clause[symbol]}"
        lines.append(f"{parity} {symbol}:{bundle.fibre_dim}{clause};")
    for name, operator in session.operators.items():
        lines.append(
            f"op {name} : {operator.domain.symbol} -> "
            f"{operator.codomain.symbol} = {operator};"
        )
    for name, bracket in session.brackets.items():
        lines.append(
            f"bracket {name}({bracket.first.symbol}, "
            f"{bracket.second.symbol}) = {bracket};"
        )
    for name, spec in session.classicals.items():
        lines.append(f"classical {name} {{")
        lines.append(f"  m = {spec.m};")
        lines.append(f"  d = {spec.d};")
        for alpha in range(spec.m):
            for i in range(spec.d):
                poly = spec.anchors[alpha][i]
                if not poly.is_zero():
                    lines.append(f"  anchor[{alpha + 1}][{i + 1}] = {poly};")
        for k in range(spec.d):
            for i in range(spec.d):
                for j in range(i + 1, spec.d):
                    poly = spec.constants[k][i][j]
                    if not poly.is_zero():
                        lines.append(
                            f"  c[{k + 1}][{i + 1}][{j + 1}] = {poly};"
                        )
        lines.append("}")
    for check in session.checks:
        lines.append(f"check {check.label};")
    return "\n".join(lines) + "\n"

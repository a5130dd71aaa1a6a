"""Session language: parsing, resolution errors, canonical rendering."""

from fractions import Fraction

import pytest

from jetalg import (
    EVEN,
    MI_ZERO,
    ODD,
    BUILTIN_TEXTS,
    DiffPoly,
    ParseError,
    TotalDiffOp,
    jet,
    mi,
    mul,
    parse_session,
    render_session,
)
from jetalg.registry import builtin_examples


class TestParsing:
    def test_spec_style_session(self):
        session = parse_session(
            "base x; even w:1; odd b:1 dual w;"
            " op A2 : b -> w = -1/2*D[x]^3 + 2*w*D[x] + w_x;"
        )
        assert list(session.bases) == ["x"]
        assert session.bundles["w"].parity == EVEN
        assert session.bundles["b"].parity == ODD
        assert session.duals == {"b": "w"}
        x = session.bases["x"]
        w = session.bundles["w"]
        b = session.bundles["b"]
        expected = TotalDiffOp.scalar(
            b,
            w,
            {
                mi({x: 3}): DiffPoly.const(Fraction(-1, 2)),
                mi({x: 1}): 2 * jet(w),
                MI_ZERO: jet(w, 1, {x: 1}),
            },
        )
        assert session.operators["A2"] == expected

    def test_empty_input(self):
        session = parse_session("")
        assert not session.bundles and not session.checks

    def test_composition_normalizes(self):
        session = parse_session(
            "base x; even w:1; odd b:1;"
            " op A : b -> w = w*D[x] + D[x]*w;"
            " op B : b -> w = 2*w*D[x] + w_x;"
        )
        assert session.operators["A"] == session.operators["B"]

    def test_jet_suffix_normalization(self):
        session = parse_session(
            "base x, y; even u:1; odd b:1;"
            " op A : b -> u = u_yx; op B : b -> u = u_xy;"
        )
        assert session.operators["A"] == session.operators["B"]

    def test_matrix_operator(self):
        session = parse_session(
            "base x; even v:2; even w:1; odd b:1;"
            " op M : v -> v = [D[x], 1; 0, w];"
        )
        m = session.operators["M"]
        assert m.shape == (2, 2)
        assert m.entries[0][1] == {MI_ZERO: DiffPoly.const(1)}

    def test_component_jets(self):
        session = parse_session(
            "base x; even v:2; odd b:1; op A : b -> v = [v1_x + v2; v2_xx];"
        )
        v = session.bundles["v"]
        x = session.bases["x"]
        entry = session.operators["A"].entries[0][0]
        assert entry[MI_ZERO] == jet(v, 1, {x: 1}) + jet(v, 2)

    def test_depends_clause(self):
        session = parse_session("base x, y; even p:1 depends x;")
        p = session.bundles["p"]
        assert tuple(v.name for v in p.depends_on) == ("x",)

    def test_bracket_definition(self):
        session = parse_session(
            "base x; even w:1; bracket br(p, q) = p_x*q - p*q_x;"
        )
        bracket = session.brackets["br"]
        assert bracket.first.symbol == "p" and bracket.second.symbol == "q"
        assert len(bracket.terms) == 2

    def test_classical_block_with_antisymmetry_fill(self):
        session = parse_session(
            "classical so3 { m = 0; d = 3;"
            " c[1][2][3] = 1; c[2][3][1] = 1; c[3][1][2] = 1; }"
        )
        spec = session.classicals["so3"]
        assert spec.m == 0 and spec.d == 3
        assert spec.constants[0][2][1] == DiffPoly.const(-1)

    def test_classical_coordinate_dependence(self):
        session = parse_session(
            "classical a { m = 2; d = 1; anchor[1][1] = u1*u2; }"
        )
        spec = session.classicals["a"]
        u = spec.u_bundle
        assert spec.anchors[0][0] == mul(jet(u, 1), jet(u, 2))

    def test_checks_recorded(self):
        session = parse_session(
            "base x; even w:1; odd b:1;"
            " op A : b -> w = D[x]; check verify-q2 A; check check-hamiltonian A;"
        )
        assert [c.label for c in session.checks] == [
            "verify-q2 A",
            "check-hamiltonian A",
        ]


def _error(text):
    with pytest.raises(ParseError) as info:
        parse_session(text)
    return info.value


class TestErrors:
    def test_unknown_base_variable_with_position(self):
        err = _error("base x; even w:1; odd b:1; op A : b -> w = w_y;")
        assert err.code == "unknown-base"
        assert "unknown base variable y" in err.message
        assert err.line == 1 and err.col > 40

    def test_unknown_identifier(self):
        assert _error("base x; even w:1; odd b:1; op A : b -> w = v;").code == (
            "unknown-identifier"
        )

    def test_syntax_error(self):
        assert _error("base x; even w:1 @;").code == "syntax"

    def test_duplicate_name(self):
        assert _error("base x; even w:1; odd w:1;").code == "duplicate-name"

    def test_reserved_symbol(self):
        assert _error("base x; even D:1;").code == "reserved"

    def test_dual_parity_misuse(self):
        assert _error("base x; even w:1; even v:1 dual w;").code == "parity"

    def test_scalar_body_arity(self):
        assert _error("base x; even v:2; odd b:1; op A : b -> v = v1;").code == (
            "arity"
        )

    def test_matrix_shape(self):
        assert _error(
            "base x; even v:2; odd b:1; op A : b -> v = [v1, v2; v1, v2];"
        ).code == "arity"

    def test_division_by_polynomial(self):
        assert _error("base x; even w:1; odd b:1; op A : b -> w = 1/w;").code == (
            "division"
        )

    def test_bracket_not_bilinear(self):
        assert _error(
            "base x; even w:1; bracket br(p, q) = p_x*q - p;"
        ).code == "not-bilinear"

    def test_inconsistent_constants(self):
        assert _error(
            "classical a { m = 0; d = 2; c[1][1][2] = 1; c[1][2][1] = 1; }"
        ).code == "inconsistent-constants"

    def test_diagonal_constant(self):
        assert _error(
            "classical a { m = 0; d = 2; c[1][1][1] = 1; }"
        ).code == "inconsistent-constants"

    def test_bad_command(self):
        assert _error(
            "base x; even w:1; odd b:1; op A : b -> w = D[x]; check frobnicate A;"
        ).code == "bad-command"

    def test_unresolved_reference(self):
        assert _error(
            "base x; even w:1; odd b:1; op A : b -> w = D[x]; check closure A nope;"
        ).code == "unresolved-reference"

    def test_base_after_bundle(self):
        assert _error("base x; even w:1; base y;").code == "syntax"

    def test_multi_letter_base(self):
        assert _error("base xx;").code == "syntax"

    def test_dependence_violation(self):
        err = _error(
            "base x, y; even u:1; even p:1 depends x; op A : p -> u = p_y;"
        )
        assert err.code == "dependence"


class TestRendering:
    def test_roundtrip_fixpoint_for_builtins(self):
        for name, text in BUILTIN_TEXTS.items():
            session = parse_session(text, name)
            rendered = render_session(session)
            reparsed = parse_session(rendered, name)
            assert render_session(reparsed) == rendered
            assert reparsed.operators == session.operators
            assert reparsed.brackets == session.brackets
            assert [c.label for c in reparsed.checks] == [
                c.label for c in session.checks
            ]

    def test_roundtrip_dual_on_even_bundle(self):
        session = parse_session("base x; odd b:1; even w:1 dual b;")
        rendered = render_session(session)
        reparsed = parse_session(rendered)
        assert reparsed.duals == {"b": "w"}
        assert render_session(reparsed) == rendered

    def test_roundtrip_matrix_and_classical(self):
        text = (
            "base x, y; even v:2; odd b:1 dual v;"
            " even p:1 depends x;"
            " op M : v -> v = [D[x], 1/3; 0, v1_xy];"
            " classical t { m = 2; d = 2; anchor[1][1] = 1; anchor[2][2] = u1; }"
            " check classical t;"
        )
        session = parse_session(text)
        rendered = render_session(session)
        assert render_session(parse_session(rendered)) == rendered

    def test_builtin_registry_parses(self):
        names = [session.name for session in builtin_examples()]
        assert names == [
            "kdv_a2",
            "toda_heavenly_x",
            "toda_heavenly_y",
            "tangent_algebroid",
            "so3_point",
            "skew_non_hamiltonian",
        ]

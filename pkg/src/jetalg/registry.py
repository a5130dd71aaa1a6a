"""Built-in example sessions.

Each entry is a complete session text together with the verdict every one
of its checks is expected to produce.  The golden tests in the test suite
pin the full serialized reports.
"""

from __future__ import annotations

from .dsl import Session, parse_session

BUILTIN_TEXTS: dict[str, str] = {
    "kdv_a2": """\
# Second structure of the Korteweg-de Vries hierarchy.
base x;
even w:1;
odd b:1 dual w;
op A2 : b -> w = -1/2*D[x]^3 + 2*w*D[x] + w_x;
check check-hamiltonian A2;
check bracket A2;
check closure A2;
check jacobi A2;
check build-q A2;
check verify-q2 A2;
check bivector A2;
check master A2;
""",
    "toda_heavenly_x": """\
# Symmetry operator of the heavenly equation in the x direction,
# acting on arguments that depend on x only.
base x, y, z;
even u:1;
even p:1 depends x;
op boxx : p -> u = u_x + 1/2*z^2*D[x];
bracket cand(p, q) = p*q_x - p_x*q;
check closure boxx cand;
check jacobi boxx cand;
""",
    "toda_heavenly_y": """\
# Symmetry operator of the heavenly equation in the y direction.
base x, y, z;
even u:1;
even p:1 depends y;
op boxy : p -> u = u_y + 1/2*z^2*D[y];
bracket cand(p, q) = p*q_y - p_y*q;
check closure boxy cand;
check jacobi boxy cand;
""",
    "tangent_algebroid": """\
# Identity anchor with vanishing structure functions: the odd field is
# the de Rham differential.
classical tangent {
  m = 2;
  d = 2;
  anchor[1][1] = 1;
  anchor[2][2] = 1;
}
check classical tangent;
""",
    "so3_point": """\
# so(3) over a point: zero anchor, totally antisymmetric constants.
classical so3 {
  m = 0;
  d = 3;
  c[1][2][3] = 1;
  c[2][3][1] = 1;
  c[3][1][2] = 1;
}
check classical so3;
""",
    "skew_non_hamiltonian": """\
# Skew-adjoint but not Hamiltonian: the criterion residual is nonzero.
base x;
even w:1;
odd b:1 dual w;
op Abad : b -> w = D[x]^3 + w^2*D[x] + w*w_x;
check check-hamiltonian Abad;
""",
}

#: Expected verdict per check label, per example.
EXPECTED_VERDICTS: dict[str, dict[str, str]] = {
    "kdv_a2": {
        "check-hamiltonian A2": "pass",
        "bracket A2": "pass",
        "closure A2": "pass",
        "jacobi A2": "pass",
        "build-q A2": "pass",
        "verify-q2 A2": "pass",
        "bivector A2": "pass",
        "master A2": "pass",
    },
    "toda_heavenly_x": {
        "closure boxx cand": "pass",
        "jacobi boxx cand": "pass",
    },
    "toda_heavenly_y": {
        "closure boxy cand": "pass",
        "jacobi boxy cand": "pass",
    },
    "tangent_algebroid": {"classical tangent": "pass"},
    "so3_point": {"classical so3": "pass"},
    "skew_non_hamiltonian": {"check-hamiltonian Abad": "fail"},
}


def builtin_examples() -> list[Session]:
    """Parsed sessions for every built-in example, in a fixed order."""
    return [parse_session(text, name) for name, text in BUILTIN_TEXTS.items()]

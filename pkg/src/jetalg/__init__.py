"""jetalg: exact calculus on jet spaces.

Graded differential polynomials with rational coefficients, total
derivatives, evolutionary fields, matrix operators in total derivatives
with formal adjoints, induced brackets of anchors with closure and Jacobi
certification, and odd homological fields with nilpotency checks.  A
small session language and the ``jets`` command line front end drive the
checkers; every verdict is an exact polynomial identity.
"""

from .algebroid import (
    AnchorSpec,
    BiDiffOp,
    bilinear_decompose,
    check_closure,
    check_hamiltonian,
    check_jacobi,
    closure_residual,
    formal_arguments,
    full_bracket,
    hamiltonian_bracket,
    operator_variation,
    resolve_bracket,
)
from .calculus import (
    EvolField,
    euler,
    ev_apply,
    ev_commutator,
    linearization,
    total_derivative,
    total_derivative_multi,
)
from .cli import main, render_report, render_reports, run_check, run_session
from .dsl import CheckCommand, ParseError, Session, parse_session, render_session
from .errors import ArityError, EngineError, ParityError
from .homological import (
    ClassicalAlgebroidSpec,
    QField,
    bivector,
    build_q,
    check_master_equation,
    classical_checks,
    classical_frame,
    classical_q,
    hamiltonian_q,
    verify_q2,
)
from .jetcore import (
    EVEN,
    MI_ZERO,
    ODD,
    BaseVar,
    Bundle,
    DiffPoly,
    JetVar,
    add,
    base_poly,
    jet,
    mi,
    mul,
    normalize,
    partial,
    partial_left,
    substitute,
)
from .operators import (
    TotalDiffOp,
    is_skew_adjoint,
    op_adjoint,
    op_apply,
    op_coeff_linearization,
    op_compose,
)
from .registry import BUILTIN_TEXTS, EXPECTED_VERDICTS, builtin_examples
from .report import ENGINE_VERSION, VerificationReport

__version__ = ENGINE_VERSION

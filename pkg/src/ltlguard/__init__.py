"""ltlguard: natural-language requirements to mutually consistent LTL.

Building blocks: an LTL core (AST, parser, printer, trace semantics), a
grammar-prefix recognizer with token masking for constrained decoding,
retrieval-augmented few-shot prompting, a tableau satisfiability checker
with minimal unsat cores, pluggable model backends, and an evaluation
harness for syntactic/semantic accuracy and robustness metrics.
"""

__version__ = "0.1.0"

from .formulas import (  # noqa: F401
    And,
    Atom,
    Always,
    Eventually,
    FalseFormula,
    Formula,
    Iff,
    Implies,
    Next,
    Not,
    Or,
    Release,
    TrueFormula,
    Until,
    atoms,
    canonical_template,
    closure,
    rename_atoms,
    to_nnf,
)
from .syntax import ParseDiagnostic, formula_to_text, parse, parse_strict  # noqa: F401
from .traces import LassoTrace, evaluate_trace  # noqa: F401
from .consistency import (  # noqa: F401
    NamedFormula,
    ResourceLimit,
    Sat,
    Unsat,
    check_sat,
    check_set,
    equivalent,
    join,
    minimize_core,
)

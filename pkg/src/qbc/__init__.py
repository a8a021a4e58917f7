"""Correct-by-construction workbench for quantum while programs.

The pieces, roughly bottom to top:

- ``qbc.matrixcore``     — registries, tolerances, Hermitian eigenvalue helpers
- ``qbc.qlang``          — the program/expression language: AST, parser, printer
- ``qbc.semantics``      — density-matrix evaluation, superoperators, adjoints
- ``qbc.hoare``          — weakest preconditions and triple checking
- ``qbc.refine``         — refinement rules, sessions, script derivation
- ``qbc.examples``       — bundled replayable scripts with measured promises
- ``qbc.cli``            — the ``qbc`` command (check/verify/simulate/derive/serve)
- ``qbc.server``         — the HTTP session service behind interactive clients
"""

from .hoare import check, check_partial, check_total, wp
from .matrixcore import DIM_CAP, Tolerances, VariableRegistry
from .qlang.parse import parse_expr, parse_program, parse_script
from .refine import Session, run_script
from .semantics import apply_program, superoperator_of

__version__ = "0.1.0"

__all__ = [
    "DIM_CAP",
    "Session",
    "Tolerances",
    "VariableRegistry",
    "apply_program",
    "check",
    "check_partial",
    "check_total",
    "parse_expr",
    "parse_program",
    "parse_script",
    "run_script",
    "superoperator_of",
    "wp",
    "__version__",
]

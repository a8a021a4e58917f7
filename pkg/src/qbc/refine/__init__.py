"""Interactive stepwise refinement: rules, sessions, and script derivation."""

from .base import HoleState, Obligation, RuleArgumentError
from .derive import DeriveError, derive_into, derive_program
from .rules import RULES, Rule, RuleOutcome, rule_available
from .session import AcceptedStep, ApplyOutcome, RejectedStep, Session, run_script

__all__ = [
    "AcceptedStep",
    "ApplyOutcome",
    "DeriveError",
    "HoleState",
    "Obligation",
    "RejectedStep",
    "Rule",
    "RuleOutcome",
    "RULES",
    "RuleArgumentError",
    "Session",
    "derive_into",
    "derive_program",
    "rule_available",
    "run_script",
]

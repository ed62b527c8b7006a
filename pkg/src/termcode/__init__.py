"""termcode: two-sided bounds for maximum code sizes of term-equation systems.

Lower bounds come from interpretation search and explicit constructions;
upper bounds from exact-rational polymatroid entropy LPs over dependency
graphs obtained by flattening and diversifying the equations.
"""

from .terms import (
    App,
    CodeReport,
    Interpretation,
    InvalidInstanceError,
    ParseError,
    Signature,
    Term,
    TermcodeError,
    TermInstance,
    Var,
    count_solutions,
    evaluate_term,
    format_instance,
    parse_instance,
)

__version__ = "0.1.0"

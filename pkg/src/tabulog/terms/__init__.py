from tabulog.terms.ops import deref, format_term, resolve, to_python
from tabulog.terms.store import TermStore
from tabulog.terms.types import NIL, Array, Atom, Cons, Struct, Term, Var, make_list

__all__ = [
    "NIL",
    "Array",
    "Atom",
    "Cons",
    "Struct",
    "Term",
    "TermStore",
    "Var",
    "deref",
    "format_term",
    "make_list",
    "resolve",
    "to_python",
]

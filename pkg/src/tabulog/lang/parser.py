"""Operator-precedence parser producing a :class:`~tabulog.lang.ast.Program`."""

from __future__ import annotations

import logging
from typing import cast

from tabulog.errors import ParseError
from tabulog.lang import ast
from tabulog.lang.lexer import Tok, Token, tokenize

logger = logging.getLogger(__name__)

XFX, XFY, YFX = "xfx", "xfy", "yfx"

INFIX: dict[str, tuple[int, str]] = {
    "=>": (1200, XFX),
    "?=>": (1200, XFX),
    ";": (1100, XFY),
    "->": (1050, XFY),
    ",": (1000, XFY),
    ":=": (990, XFX),
    "#<=>": (760, YFX),
    "#=>": (750, XFY),
    "#\\/": (740, YFX),
    "#^": (730, YFX),
    "#/\\": (720, YFX),
    "..": (600, XFX),
    "+": (500, YFX),
    "-": (500, YFX),
    "++": (500, YFX),
    "/\\": (500, YFX),
    "\\/": (500, YFX),
    "*": (400, YFX),
    "/": (400, YFX),
    "//": (400, YFX),
    "div": (400, YFX),
    "mod": (400, YFX),
    "rem": (400, YFX),
    "**": (200, XFY),
}
for _cmp in (
    "=", "!=", "==", "!==", "<", ">", "=<", ">=", "=:=", "=\\=",
    "#=", "#!=", "#<", "#>", "#=<", "#>=", "::", "in", "notin",
):
    INFIX[_cmp] = (700, XFX)

WORD_INFIX = {"div", "mod", "rem", "in", "notin"}

PREFIX: dict[str, int] = {"-": 200, "+": 200, "not": 900, "\\+": 900, "#~": 710}
QUOTE_PRIORITY = 699

MODES = {"+", "-", "min", "max", "nt"}
KEYWORDS = {"end", "then", "else", "elseif", "do"}


def _arg_limits(prec: int, kind: str) -> tuple[int, int]:
    if kind == XFX:
        return prec - 1, prec - 1
    if kind == XFY:
        return prec - 1, prec
    return prec, prec - 1


class Parser:
    def __init__(self, text: str, filename: str = "<string>") -> None:
        self.filename = filename
        self.toks = tokenize(text, filename)
        self.i = 0
        self.qualifiers: list[str] = []

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        j = min(self.i + offset, len(self.toks) - 1)
        return self.toks[j]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind is not Tok.EOF:
            self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(message, self.filename, t.line, t.col)

    def at_punct(self, ch: str) -> bool:
        return self.tok.kind is Tok.PUNCT and self.tok.text == ch

    def at_word(self, word: str) -> bool:
        return self.tok.kind is Tok.ATOM and self.tok.text == word

    def expect_punct(self, ch: str) -> Token:
        if not self.at_punct(ch):
            raise self.error(f"expected '{ch}', found {self._describe(self.tok)}")
        return self.advance()

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            raise self.error(f"expected '{word}', found {self._describe(self.tok)}")
        return self.advance()

    @staticmethod
    def _describe(t: Token) -> str:
        if t.kind is Tok.EOF:
            return "end of file"
        if t.kind is Tok.END:
            return "end of clause"
        return f"'{t.text}'"

    def _call_follows(self) -> bool:
        nxt = self.peek()
        return nxt.kind is Tok.PUNCT and nxt.text == "(" and not nxt.spaced

    # -- expressions --------------------------------------------------------

    def _infix_name(self) -> str | None:
        t = self.tok
        if t.kind is Tok.OP and t.text in INFIX:
            return t.text
        if t.kind is Tok.PUNCT and t.text == ",":
            return ","
        if t.kind is Tok.ATOM and t.text in WORD_INFIX:
            return t.text
        return None

    def parse(self, max_prec: int = 1200) -> ast.Expr:
        left, left_prec = self._primary(max_prec)
        while True:
            name = self._infix_name()
            if name is None:
                break
            prec, kind = INFIX[name]
            lmax, rmax = _arg_limits(prec, kind)
            if prec > max_prec or left_prec > lmax:
                break
            op_tok = self.advance()
            if name == "..":
                hi = self.parse(rmax)
                if self.tok.kind is Tok.OP and self.tok.text == "..":
                    self.advance()
                    upper = self.parse(rmax)
                    left = ast.Range(left, upper, hi)
                else:
                    left = ast.Range(left, hi)
            elif name == ":=":
                if not isinstance(left, ast.Variable):
                    raise self.error("left side of ':=' must be a variable", op_tok)
                left = ast.Assign(left, self.parse(rmax))
            else:
                left = ast.Call(name, (left, self.parse(rmax)))
            left_prec = prec
        return left

    def _primary(self, max_prec: int) -> tuple[ast.Expr, int]:
        t = self.tok
        if t.kind is Tok.OP:
            return self._operator_primary(max_prec)
        if t.kind is Tok.INT:
            self.advance()
            return self._postfix(ast.IntLit(t.value)), 0
        if t.kind is Tok.STR:
            self.advance()
            return ast.StrLit(t.text), 0
        if t.kind is Tok.VAR:
            self.advance()
            var = ast.Variable(t.text)
            if self.tok.kind is Tok.OP and self.tok.text == "@":
                self.advance()
                pattern, _ = self._primary(0)
                return ast.AsPattern(var, pattern), 0
            return self._postfix(var), 0
        if t.kind is Tok.ATOM or t.kind is Tok.QATOM:
            return self._atom_primary(max_prec)
        if t.kind is Tok.PUNCT:
            if t.text == "(":
                self.advance()
                inner = self.parse(1200)
                self.expect_punct(")")
                return self._postfix(inner), 0
            if t.text == "[":
                return self._postfix(self._list()), 0
            if t.text == "{":
                return self._postfix(self._array()), 0
        raise self.error(f"unexpected {self._describe(t)}")

    def _operator_primary(self, max_prec: int) -> tuple[ast.Expr, int]:
        t = self.advance()
        name = t.text
        if name == "$":
            return ast.Quote(self.parse(QUOTE_PRIORITY)), 0
        if self.tok.kind is Tok.PUNCT and self.tok.text == "(" and not self.tok.spaced:
            return self._postfix(ast.Call(name, self._args())), 0
        if name in PREFIX:
            prec = PREFIX[name]
            if name == "-" and self.tok.kind is Tok.INT:
                lit = self.advance()
                return self._postfix(ast.IntLit(-lit.value)), 0
            prec = min(prec, max_prec)
            return ast.Call(name, (self.parse(prec),)), prec
        raise self.error(f"unexpected operator '{name}'", t)

    def _atom_primary(self, max_prec: int) -> tuple[ast.Expr, int]:
        t = self.tok
        name = t.text
        if t.kind is Tok.ATOM:
            if name == "foreach":
                self.advance()
                return self._foreach(), 0
            if name == "if" and not self._call_follows():
                return self._if_then_else(), 0
            if name in PREFIX and not self._call_follows() and self._starts_term(self.peek()):
                self.advance()
                prec = min(PREFIX[name], max_prec)
                return ast.Call(name, (self.parse(prec),)), prec
        self.advance()
        if self.at_punct("(") and not self.tok.spaced:
            return self._postfix(ast.Call(name, self._args())), 0
        return self._postfix(ast.Symbol(name)), 0

    @staticmethod
    def _starts_term(t: Token) -> bool:
        if t.kind in (Tok.VAR, Tok.INT, Tok.STR, Tok.QATOM):
            return True
        if t.kind is Tok.ATOM:
            return t.text not in KEYWORDS and t.text not in WORD_INFIX
        if t.kind is Tok.PUNCT:
            return t.text in "([{"
        if t.kind is Tok.OP:
            return t.text in ("$", "-", "+", "\\+", "#~")
        return False

    def _args(self) -> tuple[ast.Expr, ...]:
        self.expect_punct("(")
        args: list[ast.Expr] = []
        if not self.at_punct(")"):
            args.append(self.parse(999))
            while self.at_punct(","):
                self.advance()
                args.append(self.parse(999))
        self.expect_punct(")")
        return tuple(args)

    def _postfix(self, base: ast.Expr) -> ast.Expr:
        while True:
            t = self.tok
            if t.kind is Tok.PUNCT and t.text == "[" and not t.spaced:
                self.advance()
                indices = [self.parse(999)]
                while self.at_punct(","):
                    self.advance()
                    indices.append(self.parse(999))
                self.expect_punct("]")
                base = ast.Index(base, tuple(indices))
            elif t.kind is Tok.DOT:
                self.advance()
                name_tok = self.advance()
                if name_tok.kind is not Tok.ATOM:
                    raise self.error("expected a name after '.'", name_tok)
                args = self._args() if (self.at_punct("(") and not self.tok.spaced) else None
                base = ast.Member(base, name_tok.text, args)
            else:
                return base

    def _list(self) -> ast.Expr:
        self.expect_punct("[")
        if self.at_punct("]"):
            self.advance()
            return ast.ListExpr(())
        first = self.parse(999)
        if self.tok.kind is Tok.OP and self.tok.text == ":":
            self.advance()
            clauses = self._clauses("]")
            self.expect_punct("]")
            return ast.Comprehension(first, clauses)
        items = [first]
        tail: ast.Expr | None = None
        while self.at_punct(","):
            self.advance()
            items.append(self.parse(999))
        if self.at_punct("|"):
            self.advance()
            tail = self.parse(999)
        self.expect_punct("]")
        return ast.ListExpr(tuple(items), tail)

    def _array(self) -> ast.Expr:
        self.expect_punct("{")
        items: list[ast.Expr] = []
        if not self.at_punct("}"):
            items.append(self.parse(999))
            while self.at_punct(","):
                self.advance()
                items.append(self.parse(999))
        self.expect_punct("}")
        return ast.ArrayExpr(tuple(items))

    def _clauses(self, closer: str) -> tuple[ast.Expr, ...]:
        """Iterators and filter conditions of a loop or comprehension."""
        out: list[ast.Expr] = []
        while True:
            item = self.parse(999)
            if isinstance(item, ast.Call) and item.name == "in" and len(item.args) == 2:
                item = ast.Iterator(item.args[0], item.args[1])
            elif not out:
                raise self.error("a loop must start with an iterator 'Pattern in Domain'")
            out.append(item)
            if not self.at_punct(","):
                break
            self.advance()
        if not self.at_punct(closer):
            raise self.error(f"expected '{closer}', found {self._describe(self.tok)}")
        return tuple(out)

    def _foreach(self) -> ast.Expr:
        self.expect_punct("(")
        clauses = self._clauses(")")
        self.expect_punct(")")
        body = self.parse(1100)
        self.expect_word("end")
        return ast.Foreach(clauses, body)

    def _if_then_else(self) -> ast.Expr:
        self.expect_word("if")
        branches: list[tuple[ast.Expr, ast.Expr]] = []
        cond = self.parse(1100)
        self.expect_word("then")
        branches.append((cond, self.parse(1100)))
        orelse: ast.Expr | None = None
        while True:
            if self.at_word("elseif"):
                self.advance()
                cond = self.parse(1100)
                self.expect_word("then")
                branches.append((cond, self.parse(1100)))
            elif self.at_word("else"):
                self.advance()
                orelse = self.parse(1100)
            else:
                break
        self.expect_word("end")
        return ast.IfThenElse(tuple(branches), orelse)

    # -- clauses ------------------------------------------------------------

    def parse_program(self) -> ast.Program:
        program = ast.Program(filename=self.filename)
        pending: tuple[ast.ModeTuple | None, Token] | None = None
        while self.tok.kind is not Tok.EOF:
            t = self.tok
            if t.kind is Tok.ATOM and t.text == "table" and not (self._call_follows() and self._is_clause_head()):
                if pending is not None:
                    raise self.error("table declaration must be followed by a rule", pending[1])
                self.advance()
                modes = self._modes() if self.at_punct("(") else None
                if self.tok.kind is Tok.END:
                    self.advance()
                pending = (modes, t)
                continue
            if t.kind is Tok.ATOM and t.text == "import" and not self._call_follows():
                self.advance()
                program.imports.extend(self._import_list())
                continue
            pred = self._clause(program)
            if pending is not None:
                modes, decl_tok = pending
                pending = None
                if pred.tabled:
                    raise self.error(f"duplicate table declaration for {pred.name}/{pred.arity}", decl_tok)
                if modes is not None:
                    expected = pred.arity + 1 if pred.is_function else pred.arity
                    if len(modes.modes) != expected:
                        raise self.error(
                            f"table declaration has {len(modes.modes)} modes, "
                            f"{pred.name} takes {expected} arguments",
                            decl_tok,
                        )
                pred.tabled = True
                pred.table_decl = modes
        if pending is not None:
            raise self.error("table declaration must be followed by a rule", pending[1])
        program.qualifiers = self.qualifiers
        return program

    def _is_clause_head(self) -> bool:
        """``table(...)`` followed by a rule operator is a predicate named table."""
        depth = 0
        j = self.i + 1
        while j < len(self.toks):
            t = self.toks[j]
            if t.kind is Tok.PUNCT and t.text == "(":
                depth += 1
            elif t.kind is Tok.PUNCT and t.text == ")":
                depth -= 1
                if depth == 0:
                    nxt = self.toks[j + 1] if j + 1 < len(self.toks) else t
                    return nxt.kind is Tok.OP and nxt.text in ("=>", "?=>", "=") or nxt.kind is Tok.END
            j += 1
        return False

    def _modes(self) -> ast.ModeTuple:
        open_tok = self.expect_punct("(")
        modes: list[str] = []
        while True:
            t = self.advance()
            if (t.kind is Tok.OP and t.text in ("+", "-")) or (t.kind is Tok.ATOM and t.text in MODES):
                modes.append(t.text)
            else:
                raise self.error(f"invalid table mode {self._describe(t)}", t)
            if self.at_punct(","):
                self.advance()
                continue
            self.expect_punct(")")
            break
        if "nt" in modes[:-1]:
            raise self.error("mode nt may only appear in the last position", open_tok)
        if sum(m in ("min", "max") for m in modes) > 1:
            raise self.error("at most one min or max mode is allowed", open_tok)
        return ast.ModeTuple(tuple(cast(list[ast.Mode], modes)))

    def _import_list(self) -> list[str]:
        names: list[str] = []
        while True:
            t = self.advance()
            if t.kind is not Tok.ATOM:
                raise self.error("expected a module name", t)
            names.append(t.text)
            if self.at_punct(","):
                self.advance()
                continue
            if self.tok.kind is not Tok.END:
                raise self.error("expected '.' after import list")
            self.advance()
            return names

    def _clause(self, program: ast.Program) -> ast.PredicateDef:
        start = self.tok
        term = self.parse(1200)
        if self.tok.kind is not Tok.END:
            raise self.error(f"expected end of clause, found {self._describe(self.tok)}")
        self.advance()

        kind: ast.RuleKind = "backtrackable"
        body: ast.Expr = ast.TRUE
        lhs = term
        if isinstance(term, ast.Call) and term.name in ("=>", "?=>") and len(term.args) == 2:
            lhs, body = term.args
            kind = "nonbacktrackable" if term.name == "=>" else "backtrackable"

        cond: ast.Expr = ast.TRUE
        if isinstance(lhs, ast.Call) and lhs.name == "," and len(lhs.args) == 2:
            lhs, cond = lhs.args

        return_expr: ast.Expr | None = None
        is_function = False
        if isinstance(lhs, ast.Call) and lhs.name == "=" and len(lhs.args) == 2:
            if kind == "backtrackable" and body != ast.TRUE:
                raise self.error("function rules must use '=>'", start)
            lhs, return_expr = lhs.args
            kind = "function"
            is_function = True

        if isinstance(lhs, ast.Symbol):
            name, arity = lhs.name, 0
        elif isinstance(lhs, ast.Call) and lhs.name not in (",", ";", "=>", "?=>"):
            name, arity = lhs.name, len(lhs.args)
        else:
            raise self.error("invalid rule head", start)

        rule = ast.SourceRule(
            head=lhs,
            cond=rewrite_oop(cond, self.qualifiers),
            body=rewrite_oop(body, self.qualifiers),
            kind=kind,
            return_expr=None if return_expr is None else rewrite_oop(return_expr, self.qualifiers),
            line=start.line,
            col=start.col,
        )
        existing = program.predicates.get((name, arity))
        if existing is not None and existing.is_function != is_function:
            raise self.error(f"{name}/{arity} is defined both as a function and as a predicate", start)
        return program.add_rule(name, arity, rule, is_function)


def rewrite_oop(expr: ast.Expr, qualifiers: list[str] | None = None) -> ast.Expr:
    """Rewrite dot notation: ``A.f(B)`` to ``f(A,B)`` and ``A.attr`` to attribute access.

    An atom receiver is a module qualifier: it is recorded and dropped.
    """
    seen = qualifiers if qualifiers is not None else []

    def walk(e: ast.Expr) -> ast.Expr:
        if isinstance(e, ast.Member):
            base = walk(e.base)
            args = None if e.args is None else tuple(walk(a) for a in e.args)
            if isinstance(base, ast.Symbol):
                seen.append(base.name)
                return ast.Call(e.name, args or ())
            if args is not None:
                return ast.Call(e.name, (base, *args))
            return ast.Attr(base, e.name)
        if isinstance(e, ast.Call):
            return ast.Call(e.name, tuple(walk(a) for a in e.args))
        if isinstance(e, ast.ListExpr):
            return ast.ListExpr(tuple(walk(a) for a in e.items), None if e.tail is None else walk(e.tail))
        if isinstance(e, ast.ArrayExpr):
            return ast.ArrayExpr(tuple(walk(a) for a in e.items))
        if isinstance(e, ast.Quote):
            return ast.Quote(walk(e.expr))
        if isinstance(e, ast.Index):
            return ast.Index(walk(e.base), tuple(walk(i) for i in e.indices))
        if isinstance(e, ast.Attr):
            return ast.Attr(walk(e.base), e.name)
        if isinstance(e, ast.Range):
            return ast.Range(walk(e.lo), walk(e.hi), None if e.step is None else walk(e.step))
        if isinstance(e, ast.AsPattern):
            return ast.AsPattern(e.var, walk(e.pattern))
        if isinstance(e, ast.Iterator):
            return ast.Iterator(walk(e.pattern), walk(e.domain))
        if isinstance(e, ast.Comprehension):
            return ast.Comprehension(walk(e.template), tuple(walk(c) for c in e.clauses))
        if isinstance(e, ast.Foreach):
            return ast.Foreach(tuple(walk(c) for c in e.clauses), walk(e.body))
        if isinstance(e, ast.Assign):
            return ast.Assign(e.target, walk(e.value))
        if isinstance(e, ast.IfThenElse):
            return ast.IfThenElse(
                tuple((walk(c), walk(g)) for c, g in e.branches),
                None if e.orelse is None else walk(e.orelse),
            )
        return e

    return walk(expr)


def parse_program(text: str, filename: str = "<string>") -> ast.Program:
    program = Parser(text, filename).parse_program()
    logger.debug("parsed %s: %d predicates", filename, len(program.predicates))
    return program


def parse_goal(text: str, filename: str = "<query>") -> ast.Expr:
    """Parse a query; a trailing period is optional."""
    parser = Parser(text, filename)
    goal = parser.parse(1200)
    if parser.tok.kind is Tok.END:
        parser.advance()
    if parser.tok.kind is not Tok.EOF:
        raise parser.error(f"unexpected {parser._describe(parser.tok)} after goal")
    return rewrite_oop(goal, parser.qualifiers)


def parse_expr(text: str) -> ast.Expr:
    parser = Parser(text)
    expr = parser.parse(1200)
    if parser.tok.kind is Tok.END:
        parser.advance()
    if parser.tok.kind is not Tok.EOF:
        raise parser.error(f"unexpected {parser._describe(parser.tok)}")
    return expr

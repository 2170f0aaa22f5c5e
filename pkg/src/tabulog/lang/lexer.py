"""Tokenizer for the surface syntax."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from tabulog.errors import ParseError


class Tok(Enum):
    VAR = "variable"
    ATOM = "atom"
    QATOM = "quoted atom"
    INT = "integer"
    STR = "string"
    PUNCT = "punctuation"
    OP = "operator"
    END = "end of clause"
    DOT = "'.'"
    EOF = "end of file"


@dataclass(frozen=True)
class Token:
    kind: Tok
    text: str
    line: int
    col: int
    # True when whitespace or a comment separates this token from the previous one.
    spaced: bool = False
    value: int = 0


SYMBOL_CHARS = set("+-*/\\^<>=~:.?@#&$!;")

OPERATORS = sorted(
    [
        "=>", "?=>", "->", ";", ":=", "::", "#<=>", "#=>", "#\\/", "#/\\", "#^", "#~",
        "#=", "#!=", "#<", "#>", "#=<", "#>=", "==", "!==", "!=", "=", "<", ">",
        "=<", ">=", "=:=", "=\\=", "..", "+", "-", "*", "/", "//", "**", "++",
        "@", "$", "\\+", ":", "^", "/\\", "\\/",
    ],
    key=len,
    reverse=True,
)

PUNCTUATION = set("()[]{},|")


class Lexer:
    def __init__(self, text: str, filename: str = "<string>") -> None:
        self.text = text
        self.filename = filename
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str, line: int | None = None, col: int | None = None) -> ParseError:
        return ParseError(message, self.filename, line or self.line, col or self.col)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def _skip_layout(self) -> bool:
        skipped = False
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in " \t\r\n":
                self._advance()
                skipped = True
            elif ch == "%":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
                skipped = True
            elif ch == "/" and self._peek(1) == "*":
                line, col = self.line, self.col
                self._advance(2)
                while not (self._peek() == "*" and self._peek(1) == "/"):
                    if self.pos >= len(self.text):
                        raise self.error("unterminated block comment", line, col)
                    self._advance()
                self._advance(2)
                skipped = True
            else:
                break
        return skipped

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        while True:
            spaced = self._skip_layout() or not out
            line, col = self.line, self.col
            if self.pos >= len(self.text):
                out.append(Token(Tok.EOF, "", line, col, True))
                return out
            ch = self.text[self.pos]
            if ch.isdigit():
                out.append(self._number(line, col, spaced))
            elif ch.isalpha() or ch == "_":
                start = self.pos
                while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
                    self._advance()
                word = self.text[start : self.pos]
                kind = Tok.VAR if (word[0].isupper() or word[0] == "_") else Tok.ATOM
                out.append(Token(kind, word, line, col, spaced))
            elif ch == "'":
                out.append(Token(Tok.QATOM, self._quoted("'"), line, col, spaced))
            elif ch == '"':
                out.append(Token(Tok.STR, self._quoted('"'), line, col, spaced))
            elif ch == ".":
                nxt = self._peek(1)
                if nxt == "" or nxt in " \t\r\n%":
                    self._advance()
                    out.append(Token(Tok.END, ".", line, col, spaced))
                elif nxt == ".":
                    self._advance(2)
                    out.append(Token(Tok.OP, "..", line, col, spaced))
                elif nxt.isalpha() or nxt == "_":
                    self._advance()
                    out.append(Token(Tok.DOT, ".", line, col, spaced))
                else:
                    raise self.error(f"unexpected character after '.': {nxt!r}")
            elif ch in PUNCTUATION:
                self._advance()
                out.append(Token(Tok.PUNCT, ch, line, col, spaced))
            elif ch in SYMBOL_CHARS:
                for op in OPERATORS:
                    if self.text.startswith(op, self.pos):
                        self._advance(len(op))
                        out.append(Token(Tok.OP, op, line, col, spaced))
                        break
                else:
                    raise self.error(f"unknown operator starting with {ch!r}")
            else:
                raise self.error(f"unexpected character {ch!r}")

    def _number(self, line: int, col: int, spaced: bool) -> Token:
        start = self.pos
        if self.text.startswith(("0x", "0b", "0o"), self.pos):
            self._advance(2)
            while self.pos < len(self.text) and self.text[self.pos].isalnum():
                self._advance()
            literal = self.text[start : self.pos]
            try:
                value = int(literal, 0)
            except ValueError:
                raise self.error(f"malformed integer {literal!r}", line, col) from None
        else:
            while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] == "_"):
                self._advance()
            literal = self.text[start : self.pos]
            value = int(literal.replace("_", ""))
        if self._peek() == "." and self._peek(1).isdigit():
            raise self.error("floating-point numbers are not supported", line, col)
        return Token(Tok.INT, literal, line, col, spaced, value)

    def _quoted(self, quote: str) -> str:
        line, col = self.line, self.col
        self._advance()
        chars: list[str] = []
        escapes = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"', "0": "\0"}
        while True:
            if self.pos >= len(self.text):
                raise self.error("unterminated quoted text", line, col)
            ch = self.text[self.pos]
            if ch == quote:
                if self._peek(1) == quote:
                    chars.append(quote)
                    self._advance(2)
                    continue
                self._advance()
                return "".join(chars)
            if ch == "\\":
                esc = self._peek(1)
                if esc not in escapes:
                    raise self.error(f"unknown escape sequence \\{esc}")
                chars.append(escapes[esc])
                self._advance(2)
                continue
            chars.append(ch)
            self._advance()


def tokenize(text: str, filename: str = "<string>") -> list[Token]:
    return Lexer(text, filename).tokens()

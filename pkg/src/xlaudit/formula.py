"""Formula lexer, A1 <-> R1C1 conversion, reference extraction and metrics.

The lexer is lossless: joining the ``text`` of every token reproduces the
source exactly. Canonical renderings (``canonical``, ``to_r1c1``) drop
insignificant whitespace and uppercase function names so that textual
equality of two canonical forms is a usable grouping key.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

from .refs import MAX_COL, MAX_ROW, CellAddr, RangeAddr, col_to_index, index_to_col, in_grid


class LexError(ValueError):
    def __init__(self, position: int, reason: str, source: str = ""):
        super().__init__(f"{reason} at position {position}" + (f" in {source!r}" if source else ""))
        self.position = position
        self.reason = reason


class OutOfGrid(ValueError):
    pass


class TokenKind(str, Enum):
    NUMBER = "number"
    STRING = "string"
    BOOL = "boolean"
    ERROR = "error"
    CELL = "cellref"
    RANGE = "rangeref"
    COLRANGE = "colrange"
    ROWRANGE = "rowrange"
    NAME = "name"
    FUNCTION = "function"
    OPERATOR = "operator"
    PAREN = "paren"
    ARG_SEP = "arg_sep"
    ARRAY_BRACE = "array_brace"
    WHITESPACE = "whitespace"


REF_KINDS = frozenset({TokenKind.CELL, TokenKind.RANGE, TokenKind.COLRANGE, TokenKind.ROWRANGE})

ERROR_LITERALS = ("#DIV/0!", "#N/A", "#NAME?", "#NULL!", "#NUM!", "#REF!", "#VALUE!",
                  "#GETTING_DATA", "#SPILL!", "#CALC!")

VOLATILE_FUNCTIONS = frozenset({"NOW", "TODAY", "RAND", "RANDBETWEEN", "OFFSET", "INDIRECT", "CELL", "INFO"})

LOOKUP_FUNCTIONS = frozenset({"VLOOKUP", "HLOOKUP"})


@dataclass(frozen=True, slots=True)
class CellRefTok:
    """One corner of a reference. ``row`` is None for column ranges, ``col`` for row ranges."""

    row: int | None
    col: int | None
    row_abs: bool = False
    col_abs: bool = False


@dataclass(frozen=True, slots=True)
class Prefix:
    """Sheet/book qualifier in front of a reference or name, e.g. ``'[Book.xls]XE'!``."""

    text: str
    sheet: str | None = None
    sheet_end: str | None = None
    book: str | None = None
    book_path: str | None = None
    quoted: bool = False

    @property
    def external(self) -> bool:
        return self.book is not None

    @property
    def is_3d(self) -> bool:
        return self.sheet_end is not None


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    text: str
    start: CellRefTok | None = None
    end: CellRefTok | None = None
    prefix: Prefix | None = None

    @property
    def is_ref(self) -> bool:
        return self.kind in REF_KINDS

    @property
    def bare(self) -> str:
        """Lexeme without its sheet/book prefix."""
        if self.prefix is None:
            return self.text
        return self.text[len(self.prefix.text):]


# --- lexer -------------------------------------------------------------------

_WS = re.compile(r"[ \t\r\n]+")
_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_\\][A-Za-z0-9_.\\?]*")
_UNQUOTED_PREFIX = re.compile(r"([A-Za-z_\\][A-Za-z0-9_.]*)(?::([A-Za-z_\\][A-Za-z0-9_.]*))?!")
_BOUNDARY = r"(?![A-Za-z0-9_.(\[!?\\])"

_A1_PART = r"(\$?)([A-Za-z]{1,3})(\$?)(\d+)"
_A1_RANGE = re.compile(_A1_PART + ":" + _A1_PART + _BOUNDARY)
_A1_CELL = re.compile(_A1_PART + _BOUNDARY)
_A1_COLRANGE = re.compile(r"(\$?)([A-Za-z]{1,3}):(\$?)([A-Za-z]{1,3})" + _BOUNDARY)
_A1_ROWRANGE = re.compile(r"(\$?)(\d+):(\$?)(\d+)" + _BOUNDARY)

_RC_AXIS = r"(\[-?\d+\]|\d+)?"
_RC_CELL_BODY = "R" + _RC_AXIS + "C" + _RC_AXIS
_RC_RANGE = re.compile(_RC_CELL_BODY + ":" + _RC_CELL_BODY + _BOUNDARY)
_RC_CELL = re.compile(_RC_CELL_BODY + _BOUNDARY)
_RC_ROWRANGE = re.compile("R" + _RC_AXIS + ":R" + _RC_AXIS + _BOUNDARY)
_RC_COLRANGE = re.compile("C" + _RC_AXIS + ":C" + _RC_AXIS + _BOUNDARY)

_TWO_CHAR_OPS = ("<>", "<=", ">=")
_ONE_CHAR_OPS = "+-*/^&=<>%:@"


def _a1_corner(dollar_col: str, letters: str, dollar_row: str, digits: str) -> CellRefTok | None:
    row, col = int(digits), col_to_index(letters)
    if not in_grid(row, col):
        return None
    return CellRefTok(row, col, bool(dollar_row), bool(dollar_col))


def _rc_axis(part: str | None, anchor_value: int, limit: int, what: str) -> tuple[int, bool]:
    if part is None:
        value, absolute = anchor_value, False
    elif part.startswith("["):
        value, absolute = anchor_value + int(part[1:-1]), False
    else:
        value, absolute = int(part), True
    if not 1 <= value <= limit:
        raise OutOfGrid(f"{what} {value} outside the grid")
    return value, absolute


class _Lexer:
    def __init__(self, src: str, style: str, anchor: CellAddr | None):
        self.src = src
        self.style = style
        self.anchor = anchor
        self.pos = 0
        self.tokens: list[Token] = []

    def error(self, reason: str, pos: int | None = None):
        raise LexError(self.pos if pos is None else pos, reason, self.src)

    def emit(self, kind: TokenKind, stop: int, **kw) -> None:
        self.tokens.append(Token(kind, self.src[self.pos:stop], **kw))
        self.pos = stop

    def run(self) -> list[Token]:
        src = self.src
        while self.pos < len(src):
            ch = src[self.pos]
            if ch in " \t\r\n":
                self.emit(TokenKind.WHITESPACE, _WS.match(src, self.pos).end())
            elif ch == '"':
                self.string()
            elif ch == "#":
                self.error_literal(None)
            elif ch in "{}":
                self.emit(TokenKind.ARRAY_BRACE, self.pos + 1)
            elif ch in "()":
                self.emit(TokenKind.PAREN, self.pos + 1)
            elif ch in ",;":
                self.emit(TokenKind.ARG_SEP, self.pos + 1)
            elif src.startswith(_TWO_CHAR_OPS, self.pos):
                self.emit(TokenKind.OPERATOR, self.pos + 2)
            elif ch in _ONE_CHAR_OPS:
                self.emit(TokenKind.OPERATOR, self.pos + 1)
            elif ch.isdigit() or (ch == "." and src[self.pos + 1:self.pos + 2].isdigit()):
                if not self.reference(None, self.pos):
                    self.number()
            elif ch == "'":
                self.quoted_prefix()
            elif ch == "[":
                self.bracket()
            elif ch == "$" or ch.isalpha() or ch in "_\\":
                self.word()
            else:
                self.error(f"unexpected character {ch!r}")
        return _mark_intersections(self.tokens)

    def string(self) -> None:
        i = self.pos + 1
        while True:
            j = self.src.find('"', i)
            if j < 0:
                self.error("unterminated string literal")
            if self.src.startswith('""', j):
                i = j + 2
                continue
            self.emit(TokenKind.STRING, j + 1)
            return

    def number(self) -> None:
        m = _NUMBER.match(self.src, self.pos)
        end = m.end()
        if end < len(self.src) and (self.src[end].isalpha() or self.src[end] in "_!"):
            self.error(f"unexpected {self.src[end]!r} after number", end)
        self.emit(TokenKind.NUMBER, end)

    def error_literal(self, prefix: Prefix | None, start: int | None = None) -> None:
        upper = self.src[self.pos:self.pos + 14].upper()
        for lit in ERROR_LITERALS:
            if upper.startswith(lit):
                if start is not None:
                    self.pos = start
                    end = self.pos + len(prefix.text) + len(lit)
                else:
                    end = self.pos + len(lit)
                self.emit(TokenKind.ERROR, end, prefix=prefix)
                return
        self.error("unknown error literal")

    def reference(self, prefix: Prefix | None, start: int) -> bool:
        """Try to lex a reference at self.pos; on success the token spans from ``start``."""
        src, pos = self.src, self.pos
        if self.style == "a1":
            attempts = ((_A1_RANGE, TokenKind.RANGE), (_A1_CELL, TokenKind.CELL),
                        (_A1_COLRANGE, TokenKind.COLRANGE), (_A1_ROWRANGE, TokenKind.ROWRANGE))
        else:
            attempts = ((_RC_RANGE, TokenKind.RANGE), (_RC_CELL, TokenKind.CELL),
                        (_RC_ROWRANGE, TokenKind.ROWRANGE), (_RC_COLRANGE, TokenKind.COLRANGE))
        for pattern, kind in attempts:
            m = pattern.match(src, pos)
            if not m:
                continue
            corners = self._corners(kind, m.groups())
            if corners is None:
                continue
            self.pos = start
            self.emit(kind, m.end(), start=corners[0], end=corners[1], prefix=prefix)
            return True
        return False

    def _corners(self, kind: TokenKind, g: tuple) -> tuple[CellRefTok, CellRefTok | None] | None:
        if self.style == "a1":
            if kind is TokenKind.RANGE:
                a, b = _a1_corner(*g[:4]), _a1_corner(*g[4:])
                return None if a is None or b is None else (a, b)
            if kind is TokenKind.CELL:
                a = _a1_corner(*g)
                return None if a is None else (a, None)
            if kind is TokenKind.COLRANGE:
                a, b = col_to_index(g[1]), col_to_index(g[3])
                if a > MAX_COL or b > MAX_COL:
                    return None
                return CellRefTok(None, a, False, bool(g[0])), CellRefTok(None, b, False, bool(g[2]))
            a, b = int(g[1]), int(g[3])
            if not (1 <= a <= MAX_ROW and 1 <= b <= MAX_ROW):
                return None
            return CellRefTok(a, None, bool(g[0]), False), CellRefTok(b, None, bool(g[2]), False)
        anchor = self.anchor
        if anchor is None:
            raise ValueError("R1C1 lexing needs an anchor cell")
        if kind in (TokenKind.CELL, TokenKind.RANGE):
            corners = []
            for rpart, cpart in zip(g[0::2], g[1::2]):
                r, ra = _rc_axis(rpart, anchor.row, MAX_ROW, "row")
                c, ca = _rc_axis(cpart, anchor.col, MAX_COL, "column")
                corners.append(CellRefTok(r, c, ra, ca))
            return corners[0], (corners[1] if kind is TokenKind.RANGE else None)
        if kind is TokenKind.ROWRANGE:
            (a, aa), (b, ba) = (_rc_axis(p, anchor.row, MAX_ROW, "row") for p in g)
            return CellRefTok(a, None, aa, False), CellRefTok(b, None, ba, False)
        (a, aa), (b, ba) = (_rc_axis(p, anchor.col, MAX_COL, "column") for p in g)
        return CellRefTok(None, a, False, aa), CellRefTok(None, b, False, ba)

    def after_prefix(self, prefix: Prefix, start: int) -> None:
        if self.pos >= len(self.src):
            self.error("reference expected after sheet prefix")
        ch = self.src[self.pos]
        if ch == "#":
            self.error_literal(prefix, start)
            return
        if self.reference(prefix, start):
            return
        m = _IDENT.match(self.src, self.pos)
        if m:
            self.pos = start
            self.emit(TokenKind.NAME, m.end(), prefix=prefix)
            return
        self.error("reference expected after sheet prefix")

    def quoted_prefix(self) -> None:
        start = self.pos
        i = start + 1
        while True:
            j = self.src.find("'", i)
            if j < 0:
                self.error("unterminated quoted sheet name")
            if self.src.startswith("''", j):
                i = j + 2
                continue
            break
        if not self.src.startswith("!", j + 1):
            self.error("quoted sheet name must be followed by '!'", j + 1)
        inner = self.src[start + 1:j].replace("''", "'")
        book = book_path = None
        lb, rb = inner.find("["), inner.find("]")
        if lb >= 0 and rb > lb:
            book_path = inner[:lb] or None
            book = inner[lb + 1:rb]
            inner = inner[rb + 1:]
        sheet, _, sheet_end = inner.partition(":")
        prefix = Prefix(self.src[start:j + 2], sheet=sheet or None, sheet_end=sheet_end or None,
                        book=book, book_path=book_path, quoted=True)
        self.pos = j + 2
        self.after_prefix(prefix, start)

    def bracket(self) -> None:
        start = self.pos
        depth, i = 0, start
        while i < len(self.src):
            if self.src[i] == "[":
                depth += 1
            elif self.src[i] == "]":
                depth -= 1
                if depth == 0:
                    break
            i += 1
        else:
            self.error("unterminated '['")
        close = i
        m = _UNQUOTED_PREFIX.match(self.src, close + 1)
        if depth == 0 and self.src.find("[", start + 1, close) < 0 and m:
            prefix = Prefix(self.src[start:m.end()], sheet=m.group(1), sheet_end=m.group(2),
                            book=self.src[start + 1:close])
            self.pos = m.end()
            self.after_prefix(prefix, start)
            return
        if self.src.startswith("!", close + 1):
            # [Book]!Name: external workbook-level name
            prefix = Prefix(self.src[start:close + 2], book=self.src[start + 1:close])
            self.pos = close + 2
            self.after_prefix(prefix, start)
            return
        self.emit(TokenKind.NAME, close + 1)  # structured reference, kept opaque

    def word(self) -> None:
        start = self.pos
        m = _IDENT.match(self.src, start)
        if m and self.src.startswith("(", m.end()):
            self.emit(TokenKind.FUNCTION, m.end())
            return
        m = _UNQUOTED_PREFIX.match(self.src, start)
        if m:
            prefix = Prefix(m.group(0), sheet=m.group(1), sheet_end=m.group(2))
            self.pos = m.end()
            self.after_prefix(prefix, start)
            return
        if self.reference(None, start):
            return
        m = _IDENT.match(self.src, start)
        if not m:
            self.error("unexpected '$'")
        end = m.end()
        word = m.group(0)
        nxt = self.src[end:end + 1]
        if nxt == "(":
            self.emit(TokenKind.FUNCTION, end)
        elif word.upper() in ("TRUE", "FALSE"):
            self.emit(TokenKind.BOOL, end)
        elif nxt == "[":
            depth, i = 0, end
            while i < len(self.src):
                depth += {"[": 1, "]": -1}.get(self.src[i], 0)
                if depth == 0:
                    break
                i += 1
            else:
                self.error("unterminated structured reference")
            self.emit(TokenKind.NAME, i + 1)
        else:
            if nxt == "'":
                self.error("unquoted sheet name contains a quote", end)
            self.emit(TokenKind.NAME, end)


_OPERAND_END = REF_KINDS | {TokenKind.NAME}
_OPERAND_START = REF_KINDS | {TokenKind.NAME, TokenKind.FUNCTION}


def _mark_intersections(tokens: list[Token]) -> list[Token]:
    """Whitespace between two reference operands is the intersection operator."""
    out = list(tokens)
    for i in range(1, len(out) - 1):
        tok = out[i]
        if tok.kind is not TokenKind.WHITESPACE:
            continue
        prev, nxt = out[i - 1], out[i + 1]
        ends = prev.kind in _OPERAND_END or (prev.kind is TokenKind.PAREN and prev.text == ")")
        starts = nxt.kind in _OPERAND_START or (nxt.kind is TokenKind.PAREN and nxt.text == "(")
        if ends and starts:
            out[i] = Token(TokenKind.OPERATOR, tok.text)
    return out


def tokenize(formula: str, *, style: str = "a1", anchor: CellAddr | None = None) -> list[Token]:
    """Lex ``formula`` into tokens whose lexemes concatenate back to it.

    ``style='r1c1'`` reads R1C1 text; relative offsets are resolved against
    ``anchor`` and :class:`OutOfGrid` is raised if one leaves the sheet.
    """
    if style not in ("a1", "r1c1"):
        raise ValueError(f"unknown reference style {style!r}")
    return _Lexer(formula, style, anchor).run()


# --- rendering ---------------------------------------------------------------

def _a1_corner_text(c: CellRefTok) -> str:
    out = ""
    if c.col is not None:
        out += ("$" if c.col_abs else "") + index_to_col(c.col)
    if c.row is not None:
        out += ("$" if c.row_abs else "") + str(c.row)
    return out


def _rc_axis_text(letter: str, value: int, absolute: bool, anchor_value: int) -> str:
    if absolute:
        return f"{letter}{value}"
    delta = value - anchor_value
    return letter if delta == 0 else f"{letter}[{delta}]"


def _rc_corner_text(c: CellRefTok, anchor: CellAddr) -> str:
    out = ""
    if c.row is not None:
        out += _rc_axis_text("R", c.row, c.row_abs, anchor.row)
    if c.col is not None:
        out += _rc_axis_text("C", c.col, c.col_abs, anchor.col)
    return out


def ref_text(tok: Token, style: str = "a1", anchor: CellAddr | None = None) -> str:
    """Render a reference token (prefix kept verbatim) in A1 or R1C1 style."""
    if style == "a1":
        body = _a1_corner_text(tok.start)
        if tok.end is not None:
            body += ":" + _a1_corner_text(tok.end)
    else:
        body = _rc_corner_text(tok.start, anchor)
        if tok.end is not None:
            body += ":" + _rc_corner_text(tok.end, anchor)
    return (tok.prefix.text if tok.prefix else "") + body


def _shift_corner(c: CellRefTok | None, dr: int, dc: int) -> CellRefTok | None:
    if c is None:
        return None
    row = c.row if c.row is None or c.row_abs else c.row + dr
    col = c.col if c.col is None or c.col_abs else c.col + dc
    if row is not None and not 1 <= row <= MAX_ROW or col is not None and not 1 <= col <= MAX_COL:
        raise OutOfGrid(f"shifted reference leaves the grid at row {row}, column {col}")
    return CellRefTok(row, col, c.row_abs, c.col_abs)


def shift_tokens(tokens: Sequence[Token], dr: int, dc: int) -> list[Token]:
    """Tokens of the formula copied ``dr`` rows and ``dc`` columns away.

    Relative corners move, absolute ones stay; reference lexemes are re-rendered.
    """
    out = []
    for tok in tokens:
        if tok.kind in REF_KINDS:
            start, end = _shift_corner(tok.start, dr, dc), _shift_corner(tok.end, dr, dc)
            moved = Token(tok.kind, "", start, end, tok.prefix)
            out.append(Token(tok.kind, ref_text(moved), start, end, tok.prefix))
        else:
            out.append(tok)
    return out


def canonical_token(tok: Token, style: str = "a1", anchor: CellAddr | None = None) -> str:
    kind = tok.kind
    if kind is TokenKind.WHITESPACE:
        return ""
    if kind in REF_KINDS:
        return ref_text(tok, style, anchor)
    if kind is TokenKind.OPERATOR and tok.text.isspace():
        return " "
    if kind in (TokenKind.FUNCTION, TokenKind.BOOL, TokenKind.ERROR):
        if tok.prefix is not None:
            return tok.prefix.text + tok.bare.upper()
        return tok.text.upper()
    return tok.text


def canonical(tokens: Iterable[Token]) -> str:
    return "".join(canonical_token(t) for t in tokens)


@dataclass(frozen=True)
class RelFormula:
    r1c1: str
    source_anchor: CellAddr


def to_r1c1(formula_a1: str, anchor: CellAddr) -> RelFormula:
    """Canonical R1C1 text of an A1 formula entered at ``anchor``."""
    tokens = tokenize(formula_a1)
    text = "".join(canonical_token(t, "r1c1", anchor) for t in tokens)
    return RelFormula(text, anchor)


def from_r1c1(rel: RelFormula | str, anchor: CellAddr) -> str:
    """A1 text of an R1C1 formula placed at ``anchor`` (inverse of :func:`to_r1c1`)."""
    text = rel.r1c1 if isinstance(rel, RelFormula) else rel
    tokens = tokenize(text, style="r1c1", anchor=anchor)
    return canonical(tokens)


# --- reference extraction ----------------------------------------------------

class ExtractedRefs(NamedTuple):
    ranges: list[RangeAddr]
    unresolved: list[Token]


def token_range(tok: Token, default_sheet: str) -> RangeAddr:
    """RangeAddr covered by a local (non-external, non-3D) reference token."""
    sheet = tok.prefix.sheet if tok.prefix and tok.prefix.sheet else default_sheet
    a, b = tok.start, tok.end or tok.start
    if tok.kind is TokenKind.COLRANGE:
        return RangeAddr(sheet, 1, min(a.col, b.col), MAX_ROW, max(a.col, b.col))
    if tok.kind is TokenKind.ROWRANGE:
        return RangeAddr(sheet, min(a.row, b.row), 1, max(a.row, b.row), MAX_COL)
    return RangeAddr(sheet, min(a.row, b.row), min(a.col, b.col), max(a.row, b.row), max(a.col, b.col))


def find_name(names: Sequence, name: str, sheet: str | None):
    """Resolve a defined name as Excel does: sheet scope first, then workbook scope."""
    key = name.upper()
    local = glob = None
    for dn in names:
        if dn.name.upper() != key:
            continue
        if dn.scope is None:
            glob = glob or dn
        elif sheet is not None and dn.scope == sheet:
            local = local or dn
    return local or glob


def extract_refs(formula_a1: str, anchor: CellAddr, names: Sequence = (),
                 tokens: Sequence[Token] | None = None) -> ExtractedRefs:
    """Ranges a formula reads, with defined names resolved recursively.

    External, 3-D and unresolvable tokens are returned in ``unresolved``.
    Pass ``tokens`` to skip lexing when they are already known.
    """
    ranges: list[RangeAddr] = []
    unresolved: list[Token] = []
    _extract(tokenize(formula_a1) if tokens is None else tokens, anchor, names, ranges, unresolved, set())
    return ExtractedRefs(ranges, unresolved)


def _extract(tokens, anchor, names, ranges, unresolved, seen) -> None:
    for tok in tokens:
        if tok.kind in REF_KINDS:
            if tok.prefix and (tok.prefix.external or tok.prefix.is_3d):
                unresolved.append(tok)
            else:
                ranges.append(token_range(tok, anchor.sheet))
        elif tok.kind is TokenKind.NAME:
            if tok.prefix and tok.prefix.external:
                unresolved.append(tok)
                continue
            sheet = tok.prefix.sheet if tok.prefix else anchor.sheet
            dn = find_name(names, tok.bare, sheet) if "[" not in tok.text else None
            if dn is None:
                unresolved.append(tok)
                continue
            key = (dn.scope, dn.name.upper())
            if key in seen:
                continue
            try:
                inner = tokenize(dn.refers_to)
            except LexError:
                unresolved.append(tok)
                continue
            _extract(inner, anchor, names, ranges, unresolved, seen | {key})


def external_targets(tokens: Iterable[Token]) -> list[str]:
    """Workbook targets ('path[Book]' collapsed to 'path\\Book') referenced by tokens."""
    out = []
    for tok in tokens:
        if tok.prefix is not None and tok.prefix.external:
            out.append((tok.prefix.book_path or "") + tok.prefix.book)
    return out


# --- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class FormulaMetrics:
    length: int
    nested_if_depth: int
    numeric_constants: int
    text_constants: int
    has_cell_refs: bool
    has_name_refs: bool
    functions: Counter = field(default_factory=Counter)
    starts_with_plus: bool = False
    starts_with_minus: bool = False
    has_double_minus: bool = False
    is_array: bool = False

    @property
    def volatile(self) -> bool:
        return any(f in VOLATILE_FUNCTIONS for f in self.functions)


class Call(NamedTuple):
    name: str
    argc: int
    index: int


def function_calls(tokens: Sequence[Token]) -> list[Call]:
    """Every function call with its top-level argument count."""
    calls: list[Call] = []
    stack: list[list] = []  # [name-or-None, commas, has_content, token index]
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.PAREN and tok.text == "(":
            prev = tokens[i - 1] if i else None
            name = prev.text.upper() if prev is not None and prev.kind is TokenKind.FUNCTION else None
            stack.append([name, 0, False, i - 1])
            continue
        if tok.kind is TokenKind.ARRAY_BRACE:
            if tok.text == "{":
                stack.append([None, 0, True, i])
            elif stack:
                stack.pop()
            continue
        if not stack:
            continue
        frame = stack[-1]
        if tok.kind is TokenKind.PAREN:  # ")"
            stack.pop()
            if frame[0] is not None:
                argc = frame[1] + 1 if (frame[2] or frame[1]) else 0
                calls.append(Call(frame[0], argc, frame[3]))
            if stack:
                stack[-1][2] = True
        elif tok.kind is TokenKind.ARG_SEP:
            frame[1] += 1
        elif tok.kind is not TokenKind.WHITESPACE:
            frame[2] = True
    calls.sort(key=lambda c: c.index)
    return calls


def _if_depth(tokens: Sequence[Token]) -> int:
    stack: list[bool] = []
    depth = best = 0
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.PAREN and tok.text == "(":
            prev = tokens[i - 1] if i else None
            is_if = prev is not None and prev.kind is TokenKind.FUNCTION and prev.text.upper() == "IF"
            stack.append(is_if)
            if is_if:
                depth += 1
                best = max(best, depth)
        elif tok.kind is TokenKind.PAREN and stack:
            if stack.pop():
                depth -= 1
    return best


def metrics(formula_a1: str) -> FormulaMetrics:
    is_array = formula_a1.startswith("{=") and formula_a1.endswith("}")
    text = formula_a1[1:-1] if is_array else formula_a1
    tokens = tokenize(text)
    sig = [t for t in tokens if t.kind is not TokenKind.WHITESPACE]
    body = sig[1:] if sig and sig[0].kind is TokenKind.OPERATOR and sig[0].text == "=" else sig
    double_minus = any(a.kind is b.kind is TokenKind.OPERATOR and a.text == b.text == "-"
                       for a, b in zip(body, body[1:]))
    first = body[0] if body else None
    return FormulaMetrics(
        length=len(formula_a1),
        nested_if_depth=_if_depth(tokens),
        numeric_constants=sum(t.kind is TokenKind.NUMBER for t in tokens),
        text_constants=sum(t.kind is TokenKind.STRING for t in tokens),
        has_cell_refs=any(t.kind in REF_KINDS for t in tokens),
        has_name_refs=any(t.kind is TokenKind.NAME for t in tokens),
        functions=Counter(t.text.upper() for t in tokens if t.kind is TokenKind.FUNCTION),
        starts_with_plus=first is not None and first.kind is TokenKind.OPERATOR and first.text == "+",
        starts_with_minus=first is not None and first.kind is TokenKind.OPERATOR and first.text == "-",
        has_double_minus=double_minus,
        is_array=is_array,
    )


def complexity(formula_a1: str) -> int:
    """Operator count plus function nesting, floored at 1 (OAK-style score)."""
    tokens = tokenize(formula_a1)
    sig = [t for t in tokens if t.kind is not TokenKind.WHITESPACE]
    binary = 0
    for i, tok in enumerate(sig):
        if i == 0 or tok.kind is not TokenKind.OPERATOR or tok.text in ("%", "@"):
            continue
        prev = sig[i - 1]
        if prev.kind in (TokenKind.OPERATOR, TokenKind.ARG_SEP) or (prev.kind is TokenKind.PAREN and prev.text == "("):
            continue  # unary
        binary += 1
    return 1 + binary + max(0, _function_depth(sig) - 1)


def _function_depth(tokens: Sequence[Token]) -> int:
    stack: list[bool] = []
    depth = best = 0
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.PAREN and tok.text == "(":
            is_fn = i > 0 and tokens[i - 1].kind is TokenKind.FUNCTION
            stack.append(is_fn)
            if is_fn:
                depth += 1
                best = max(best, depth)
        elif tok.kind is TokenKind.PAREN and stack and stack.pop():
            depth -= 1
    return best


def skeleton(formula_a1: str) -> str:
    """Canonical text with every reference replaced by a placeholder."""
    try:
        tokens = tokenize(formula_a1)
    except LexError:
        return formula_a1
    return "".join("¤" if t.kind in REF_KINDS else canonical_token(t) for t in tokens)


def remap_tokens(tokens: Sequence[Token], remap) -> list[Token]:
    """Apply ``remap(tok) -> Token | None`` to reference tokens (None -> #REF!)."""
    out = []
    for tok in tokens:
        if tok.kind in REF_KINDS:
            new = remap(tok)
            if new is None:
                text = (tok.prefix.text if tok.prefix else "") + "#REF!"
                out.append(Token(TokenKind.ERROR, text, prefix=tok.prefix))
            else:
                out.append(replace(new, text=ref_text(new)))
        else:
            out.append(tok)
    return out

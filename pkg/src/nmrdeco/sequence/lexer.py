"""Tokenizer for the pulse-sequence notation."""

import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Any, List

KEYWORDS = {"refocus", "decouple"}
STATES = {"on", "off"}
RESERVED = KEYWORDS | STATES | {"pi", "deg", "ms"}

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_LABEL = r"[A-Z][a-z]*\d*|\d"

_COUPLING_RE = re.compile(
    r"1\s*/\s*\(\s*4\s*J\s*(?P<a>" + _LABEL + r")\s*(?P<b>" + _LABEL + r")\s*\)"
)
_NUM_RE = re.compile(_NUM)
_IDENT_RE = re.compile(r"[a-z_][a-z0-9_]*")
_LABEL_RE = re.compile(r"[A-Z][a-z]*\d*")
_DIGITS_RE = re.compile(r"\d+")
_MS_RE = re.compile(r"\s*ms(?![A-Za-z0-9_])")

_PI_ANGLE_RE = re.compile(r"(?P<num>" + _NUM + r")?\s*pi(?:\s*/\s*(?P<den>" + _NUM + r"))?")
_DEG_ANGLE_RE = re.compile(r"(?P<deg>" + _NUM + r")\s*deg")

_SEPARATORS = "-−–"
_SINGLE = {
    "[": "LBRACK",
    "]": "RBRACK",
    "{": "LBRACE",
    "}": "RBRACE",
    "(": "LPAREN",
    ")": "RPAREN",
    "^": "CARET",
    ",": "COMMA",
}


class SequenceSyntaxError(ValueError):
    """Malformed sequence text; carries a 1-based line/column."""

    def __init__(self, message, line, col):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    value: Any
    line: int
    col: int

    def __repr__(self):
        if self.value is None:
            return self.kind
        return f"{self.kind}({self.value})"


def parse_angle_text(text):
    """Classify bracket contents: ('pi', num, den) | ('deg', x) | ('rad', x) | ('sym', name)."""
    s = text.strip().replace("π", "pi")
    if s in ("θ", "theta"):
        return ("sym", "theta")
    m = _PI_ANGLE_RE.fullmatch(s)
    if m:
        num = float(m["num"]) if m["num"] else 1.0
        den = float(m["den"]) if m["den"] else 1.0
        if den == 0:
            return None
        return ("pi", num, den)
    m = _DEG_ANGLE_RE.fullmatch(s)
    if m:
        return ("deg", float(m["deg"]))
    if _NUM_RE.fullmatch(s):
        return ("rad", float(s))
    if _IDENT_RE.fullmatch(s) and s not in RESERVED:
        return ("sym", s)
    return None


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    brace_depth = 0
    n = len(text)

    def emit(kind, value, start):
        tokens.append(Token(kind, value, line, start - line_start + 1))

    while pos < n:
        ch = text[pos]
        if ch == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        if ch == "#":
            while pos < n and text[pos] != "\n":
                pos += 1
            continue
        start = pos
        if ch == "[":
            emit("LBRACK", None, start)
            close = text.find("]", pos + 1)
            nl = text.find("\n", pos + 1)
            if close < 0 or (0 <= nl < close):
                raise SequenceSyntaxError("unterminated '['", line, start - line_start + 1)
            body = text[pos + 1 : close]
            inner = pos + 1 + (len(body) - len(body.lstrip()))
            parsed = parse_angle_text(body)
            if not body.strip():
                raise SequenceSyntaxError("empty pulse angle", line, inner - line_start + 1)
            if parsed is None:
                raise SequenceSyntaxError(
                    f"invalid angle {body.strip()!r}", line, inner - line_start + 1
                )
            if parsed[0] == "sym":
                emit("SYMBOL", parsed[1], inner)
            else:
                emit("EXPR", body.strip(), inner)
            emit("RBRACK", None, close)
            pos = close + 1
            continue
        if ch in _SINGLE:
            kind = _SINGLE[ch]
            if kind == "LBRACE":
                brace_depth += 1
            elif kind == "RBRACE":
                brace_depth = max(0, brace_depth - 1)
            emit(kind, None, start)
            pos += 1
            continue
        if ch in _SEPARATORS:
            emit("SEP", None, start)
            pos += 1
            continue
        if ch == "θ":
            emit("SYMBOL", "theta", start)
            pos += 1
            continue
        m = _COUPLING_RE.match(text, pos)
        if m:
            emit("COUPLING_DELAY", (m["a"], m["b"]), start)
            pos = m.end()
            continue
        if ch.isdigit() and brace_depth:
            m = _DIGITS_RE.match(text, pos)
            emit("LABEL", m.group(), start)
            pos = m.end()
            continue
        m = _NUM_RE.match(text, pos)
        if m:
            unit = _MS_RE.match(text, m.end())
            if unit:
                emit("DURATION", float(Decimal(m.group()).scaleb(-3)), start)
                pos = unit.end()
            else:
                emit("NUMBER", m.group(), start)
                pos = m.end()
            continue
        m = _LABEL_RE.match(text, pos)
        if m:
            emit("LABEL", m.group(), start)
            pos = m.end()
            continue
        m = _IDENT_RE.match(text, pos)
        if m:
            word = m.group()
            if word in ("x", "y", "z") and tokens and tokens[-1].kind == "RBRACK":
                emit("AXIS", word, start)
            elif word in KEYWORDS:
                emit("KEYWORD", word, start)
            elif word in STATES:
                emit("STATE", word, start)
            elif word in RESERVED:
                raise SequenceSyntaxError(f"unexpected {word!r}", line, start - line_start + 1)
            else:
                emit("SYMBOL", word, start)
            pos = m.end()
            continue
        raise SequenceSyntaxError(f"illegal character {ch!r}", line, start - line_start + 1)
    emit("EOF", None, pos)
    return tokens

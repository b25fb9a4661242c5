"""Sequence AST, recursive-descent parser and canonical formatter.

Grammar::

    sequence := element ( "-" element )* ;
    element  := pulse | delay | refocus | decouple ;
    pulse    := "[" angle "]" axis "^" "{" label ( "," label )* "}" ;
    angle    := PIEXPR | NUMBER "deg" | NUMBER | SYMBOL ;
    delay    := "1/(4J" label label ")" | NUMBER "ms" | SYMBOL ;
    refocus  := "refocus" "(" delay ")" ;
    decouple := "decouple" "(" label ("on"|"off") ")" ;
"""

import math
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Union

from .lexer import SequenceSyntaxError, Token, parse_angle_text, tokenize


# -- angles -----------------------------------------------------------------


@dataclass(frozen=True)
class PiAngle:
    num: float = 1.0
    den: float = 1.0

    def value(self, bind):
        return self.num * math.pi / self.den


@dataclass(frozen=True)
class DegAngle:
    degrees: float

    def value(self, bind):
        return math.radians(self.degrees)


@dataclass(frozen=True)
class RadAngle:
    radians: float

    def value(self, bind):
        return self.radians


@dataclass(frozen=True)
class Param:
    """Free symbol, bound at compile time (radians for angles, seconds for delays)."""

    name: str

    def value(self, bind):
        if self.name not in bind:
            raise KeyError(self.name)
        return float(bind[self.name])


Angle = Union[PiAngle, DegAngle, RadAngle, Param]


# -- delays -----------------------------------------------------------------


@dataclass(frozen=True)
class CouplingQuarter:
    """``1/(4 J_ab)``."""

    a: str
    b: str


@dataclass(frozen=True)
class Fixed:
    seconds: float

    def __post_init__(self):
        if not self.seconds >= 0:
            raise ValueError(f"delay must be non-negative, got {self.seconds}")


# -- elements ---------------------------------------------------------------


@dataclass(frozen=True)
class Pulse:
    angle: Angle
    axis: str
    targets: tuple

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError(f"unknown axis {self.axis!r}")
        if not self.targets:
            raise ValueError("pulse needs at least one target")


@dataclass(frozen=True)
class Delay:
    spec: Union[CouplingQuarter, Fixed, Param]


@dataclass(frozen=True)
class Refocus:
    inner: Delay


@dataclass(frozen=True)
class Decouple:
    spin: str
    on: bool


Element = Union[Pulse, Delay, Refocus, Decouple]


def _free_symbols(el):
    if isinstance(el, Pulse):
        return {el.angle.name} if isinstance(el.angle, Param) else set()
    if isinstance(el, Refocus):
        el = el.inner
    if isinstance(el, Delay) and isinstance(el.spec, Param):
        return {el.spec.name}
    return set()


@dataclass(frozen=True)
class PulseSequence:
    elements: tuple = ()
    parameters: frozenset = frozenset()

    @classmethod
    def of(cls, *elements) -> "PulseSequence":
        open_ = set()
        for el in elements:
            if isinstance(el, Decouple):
                if el.on == (el.spin in open_):
                    raise ValueError(f"unbalanced decoupling of {el.spin!r}")
                (open_.add if el.on else open_.discard)(el.spin)
        if open_:
            raise ValueError(f"decoupling never switched off for {sorted(open_)}")
        params = set()
        for el in elements:
            params |= _free_symbols(el)
        return cls(tuple(elements), frozenset(params))

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence.of(*self.elements, *other.elements)

    def __len__(self):
        return len(self.elements)


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, tokens):
        self.toks = list(tokens)
        if not self.toks or self.toks[-1].kind != "EOF":
            last = self.toks[-1] if self.toks else Token("EOF", None, 1, 1)
            self.toks.append(Token("EOF", None, last.line, last.col + 1))
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise SequenceSyntaxError(msg, tok.line, tok.col)

    def expect(self, kind, what=None):
        tok = self.peek()
        if tok.kind != kind:
            found = "end of input" if tok.kind == "EOF" else repr(tok)
            self.fail(f"expected {what or kind}, found {found}")
        return self.next()

    def sequence(self):
        elements, decoupled = [], {}
        if self.peek().kind == "EOF":
            self.fail("empty pulse sequence")
        while True:
            tok = self.peek()
            el = self.element()
            if isinstance(el, Decouple):
                if el.on:
                    if el.spin in decoupled:
                        self.fail(f"{el.spin} is already decoupled", tok)
                    decoupled[el.spin] = tok
                else:
                    if el.spin not in decoupled:
                        self.fail(f"decouple({el.spin} off) without matching on", tok)
                    del decoupled[el.spin]
            elements.append(el)
            if self.peek().kind == "SEP":
                self.next()
                continue
            if self.peek().kind != "EOF":
                self.fail(f"expected '-' or end of input, found {self.peek()!r}")
            break
        if decoupled:
            spin, tok = next(iter(decoupled.items()))
            self.fail(f"decoupling of {spin} is never switched off", tok)
        return PulseSequence.of(*elements)

    def element(self):
        tok = self.peek()
        if tok.kind == "LBRACK":
            return self.pulse()
        if tok.kind in ("COUPLING_DELAY", "DURATION", "SYMBOL", "NUMBER"):
            return self.delay()
        if tok.kind == "KEYWORD" and tok.value == "refocus":
            self.next()
            self.expect("LPAREN", "'('")
            inner = self.delay()
            self.expect("RPAREN", "')'")
            return Refocus(inner)
        if tok.kind == "KEYWORD" and tok.value == "decouple":
            self.next()
            self.expect("LPAREN", "'('")
            spin = self.label()
            state = self.expect("STATE", "'on' or 'off'")
            self.expect("RPAREN", "')'")
            return Decouple(spin, state.value == "on")
        if tok.kind == "EOF":
            self.fail("expected a sequence element, found end of input")
        self.fail(f"expected pulse, delay, refocus or decouple, found {tok!r}")

    def pulse(self):
        self.expect("LBRACK")
        tok = self.next()
        if tok.kind == "SYMBOL":
            angle = Param(tok.value)
        elif tok.kind == "EXPR":
            angle = _angle_from_text(tok.value)
        else:
            self.fail("expected a pulse angle", tok)
        self.expect("RBRACK", "']'")
        ax = self.peek()
        if ax.kind != "AXIS":
            self.fail("expected pulse axis 'x' or 'y'")
        if ax.value not in ("x", "y"):
            self.fail(f"unknown axis {ax.value!r}")
        self.next()
        self.expect("CARET", "'^'")
        self.expect("LBRACE", "'{'")
        if self.peek().kind == "RBRACE":
            self.fail("empty target set")
        targets = []
        while True:
            tok = self.peek()
            lab = self.label()
            if lab in targets:
                self.fail(f"duplicate target {lab}", tok)
            targets.append(lab)
            if self.peek().kind == "COMMA":
                self.next()
                continue
            self.expect("RBRACE", "',' or '}'")
            break
        return Pulse(angle, ax.value, tuple(targets))

    def delay(self):
        tok = self.next()
        if tok.kind == "COUPLING_DELAY":
            return Delay(CouplingQuarter(*tok.value))
        if tok.kind == "DURATION":
            return Delay(Fixed(tok.value))
        if tok.kind == "SYMBOL":
            return Delay(Param(tok.value))
        if tok.kind == "NUMBER":
            self.fail(f"delay {tok.value} needs a unit (ms)", tok)
        self.fail("expected a delay: 1/(4Jab), <number>ms or a symbol", tok)

    def label(self):
        tok = self.peek()
        if tok.kind == "LABEL" or (tok.kind == "NUMBER" and tok.value.isdigit()):
            self.next()
            return tok.value
        self.fail("expected a spin label")


def _angle_from_text(text):
    kind, *vals = parse_angle_text(text)
    if kind == "pi":
        return PiAngle(*vals)
    if kind == "deg":
        return DegAngle(vals[0])
    return RadAngle(vals[0])


def parse(tokens) -> PulseSequence:
    """Build the AST from a token list (or directly from text)."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return _Parser(tokens).sequence()


def parse_text(text: str) -> PulseSequence:
    return parse(tokenize(text))


def load_sequence(path) -> PulseSequence:
    from ..nmr import bundled_path

    p = Path(path)
    if not p.exists():
        alt = bundled_path(p.name)
        if not alt.exists():
            raise FileNotFoundError(f"sequence file not found: {path}")
        p = alt
    return parse_text(p.read_text(encoding="utf-8"))


# -- formatter --------------------------------------------------------------


def _num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _ms(seconds: float) -> str:
    # shift the shortest repr by three places; the lexer undoes this exactly
    text = format(Decimal(repr(float(seconds))).scaleb(3).normalize(), "f")
    return text + "ms"


def _format_angle(a) -> str:
    if isinstance(a, Param):
        return a.name
    if isinstance(a, PiAngle):
        head = "" if a.num == 1 else _num(a.num)
        tail = "" if a.den == 1 else "/" + _num(a.den)
        return f"{head}pi{tail}"
    if isinstance(a, DegAngle):
        return _num(a.degrees) + "deg"
    return _num(a.radians)


def _format_delay(d: Delay) -> str:
    s = d.spec
    if isinstance(s, CouplingQuarter):
        return f"1/(4J{s.a}{s.b})"
    if isinstance(s, Fixed):
        return _ms(s.seconds)
    return s.name


def format_element(el) -> str:
    if isinstance(el, Pulse):
        return f"[{_format_angle(el.angle)}]{el.axis}^{{{','.join(el.targets)}}}"
    if isinstance(el, Delay):
        return _format_delay(el)
    if isinstance(el, Refocus):
        return f"refocus({_format_delay(el.inner)})"
    if isinstance(el, Decouple):
        return f"decouple({el.spin} {'on' if el.on else 'off'})"
    raise TypeError(f"not a sequence element: {el!r}")


def format_sequence(seq: PulseSequence) -> str:
    return " - ".join(format_element(el) for el in seq.elements)

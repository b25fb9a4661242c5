"""Pulse-sequence mini-language: tokenize, parse, format, compile."""

from .compiler import CompileError, compile_sequence, decoupled_at_start
from .lexer import SequenceSyntaxError, Token, tokenize
from .syntax import (
    CouplingQuarter,
    Decouple,
    DegAngle,
    Delay,
    Fixed,
    Param,
    PiAngle,
    Pulse,
    PulseSequence,
    RadAngle,
    Refocus,
    format_element,
    format_sequence,
    load_sequence,
    parse,
    parse_text,
)

__all__ = [
    "CompileError",
    "CouplingQuarter",
    "Decouple",
    "DegAngle",
    "Delay",
    "Fixed",
    "Param",
    "PiAngle",
    "Pulse",
    "PulseSequence",
    "RadAngle",
    "Refocus",
    "SequenceSyntaxError",
    "Token",
    "compile_sequence",
    "decoupled_at_start",
    "format_element",
    "format_sequence",
    "load_sequence",
    "parse",
    "parse_text",
    "tokenize",
]

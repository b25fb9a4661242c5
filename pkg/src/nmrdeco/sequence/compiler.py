"""Compile a pulse sequence into propagators for a given spin system."""

import math
from typing import List, Mapping

from ..core import PhaseEvolution, Rotation
from ..nmr import PROPAGATOR_SIGN, SpinSystem, zeeman_coupling_energies
from .syntax import (
    Decouple,
    Delay,
    Fixed,
    Param,
    Pulse,
    PulseSequence,
    Refocus,
)


class CompileError(ValueError):
    pass


def _delay_seconds(d: Delay, sys: SpinSystem, bind) -> float:
    s = d.spec
    if isinstance(s, Fixed):
        return s.seconds
    if isinstance(s, Param):
        t = float(bind[s.name])
        if not t >= 0:
            raise CompileError(f"delay {s.name} bound to negative value {t}")
        return t
    try:
        j = sys.j(s.a, s.b)
    except KeyError as exc:
        raise CompileError(str(exc.args[0])) from None
    if j == 0:
        raise CompileError(f"no coupling declared between {s.a} and {s.b}")
    return 1.0 / (4.0 * abs(j))


def compile_sequence(seq: PulseSequence, sys: SpinSystem, bind: Mapping = None) -> List:
    """Lower ``seq`` to a list of :class:`Rotation` / :class:`PhaseEvolution`.

    Delays evolve under the rotating-frame Hamiltonian with every term that
    touches a currently decoupled spin removed. ``refocus(d)`` becomes
    ``d/2 - [pi]x on all non-decoupled spins - d/2``.
    """
    bind = dict(bind or {})
    missing = sorted(seq.parameters - set(bind))
    if missing:
        raise CompileError(f"unbound symbol(s): {', '.join(missing)}")
    n = sys.n
    decoupled = set()
    props = []

    def index(label):
        try:
            return sys.index(label)
        except KeyError:
            raise CompileError(f"unknown spin label {label!r}") from None

    def free_evolution(t):
        energies = zeeman_coupling_energies(sys, decoupled)
        return PhaseEvolution(energies, t, PROPAGATOR_SIGN)

    for el in seq.elements:
        if isinstance(el, Pulse):
            targets = tuple(sorted(index(t) for t in el.targets))
            angle = el.angle.value(bind)
            props.append(Rotation(angle, el.axis, targets, n, PROPAGATOR_SIGN))
        elif isinstance(el, Delay):
            props.append(free_evolution(_delay_seconds(el, sys, bind)))
        elif isinstance(el, Refocus):
            t = _delay_seconds(el.inner, sys, bind)
            active = tuple(i for i in range(1, n + 1) if sys.labels[i - 1] not in decoupled)
            if not active:
                raise CompileError("refocusing pulse has no undecoupled spin to act on")
            half = free_evolution(t / 2)
            props += [half, Rotation(math.pi, "x", active, n, PROPAGATOR_SIGN), half]
        elif isinstance(el, Decouple):
            lab = sys.labels[index(el.spin) - 1]
            if el.on:
                if lab in decoupled:
                    raise CompileError(f"{lab} is already decoupled")
                decoupled.add(lab)
            else:
                if lab not in decoupled:
                    raise CompileError(f"decouple({el.spin} off) without matching on")
                decoupled.discard(lab)
        else:
            raise CompileError(f"not a sequence element: {el!r}")
    return props


def decoupled_at_start(seq: PulseSequence, sys: SpinSystem) -> list:
    """Labels switched on by the leading run of decouple directives."""
    out = []
    for el in seq.elements:
        if not isinstance(el, Decouple) or not el.on:
            break
        out.append(sys.label(el.spin))
    return out

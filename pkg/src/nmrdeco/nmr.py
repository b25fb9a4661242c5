"""Spin-system configuration, rotating-frame Hamiltonians and observables."""

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    I_MINUS,
    P_DOWN,
    P_UP,
    DensityMatrix,
    Kind,
    embed,
    kron_states,
    maximally_mixed,
    partial_trace,
)

# Exponent sign used for every pulse and free-evolution propagator built from
# a pulse sequence. With +1 the two entangling sequences land on the reference
# matrices (double-quantum Bell state, readout pattern); with the textbook -1
# they produce the zero-quantum state instead.
PROPAGATOR_SIGN = +1

# Receiver phase that makes the product-state carbon doublet real and
# non-negative: an x pulse on |down> leaves <I-> = +i/2 under PROPAGATOR_SIGN.
RECEIVER_PHASE = -1j

_SYSTEM_FIELDS = {"reference", "spins", "couplings"}
_SPIN_FIELDS = {"label", "offset_hz"}
_COUPLING_FIELDS = {"a", "b", "hz"}


class SystemFileError(ValueError):
    pass


@dataclass(frozen=True)
class SpinSystem:
    """Labelled spin-1/2 nuclei with offsets (Hz) and scalar couplings (Hz).

    ``couplings`` maps ``frozenset({a, b})`` to J in Hz; absent pairs are
    uncoupled.
    """

    labels: tuple
    offsets_hz: tuple
    couplings: Mapping
    reference: str

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise SystemFileError(f"duplicate spin labels in {labels}")
        if len(self.offsets_hz) != len(labels):
            raise SystemFileError("one offset per spin required")
        if self.reference not in labels:
            raise SystemFileError(f"reference {self.reference!r} is not a spin label")
        if self.offsets_hz[labels.index(self.reference)] != 0:
            raise SystemFileError("the rotating-frame reference spin must have offset 0")
        cleaned = {}
        for pair, hz in dict(self.couplings).items():
            pair = frozenset(pair)
            if len(pair) != 2:
                raise SystemFileError(f"coupling needs two distinct spins, got {sorted(pair)}")
            for lab in pair:
                if lab not in labels:
                    raise SystemFileError(f"coupling names unknown spin {lab!r}")
            if pair in cleaned:
                raise SystemFileError(f"coupling {sorted(pair)} given twice")
            cleaned[pair] = float(hz)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "offsets_hz", tuple(float(o) for o in self.offsets_hz))
        object.__setattr__(self, "couplings", cleaned)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        """1-based position of ``label``; bare integers address spins by position."""
        label = str(label)
        if label in self.labels:
            return self.labels.index(label) + 1
        if label.isdigit() and 1 <= int(label) <= self.n:
            return int(label)
        raise KeyError(f"unknown spin label {label!r}")

    def label(self, label) -> str:
        return self.labels[self.index(label) - 1]

    def j(self, a, b) -> float:
        return self.couplings.get(frozenset((self.label(a), self.label(b))), 0.0)

    def coupling_matrix(self) -> np.ndarray:
        jm = np.zeros((self.n, self.n))
        for pair, hz in self.couplings.items():
            a, b = (self.index(x) - 1 for x in pair)
            jm[a, b] = jm[b, a] = hz
        return jm

    def with_offsets(self, offsets_hz: Mapping) -> "SpinSystem":
        new = list(self.offsets_hz)
        for lab, hz in offsets_hz.items():
            new[self.index(lab) - 1] = hz
        return SpinSystem(self.labels, tuple(new), self.couplings, self.reference)

    def to_json(self) -> dict:
        return {
            "reference": self.reference,
            "spins": [{"label": l, "offset_hz": o} for l, o in zip(self.labels, self.offsets_hz)],
            "couplings": [
                {"a": a, "b": b, "hz": hz}
                for (a, b), hz in sorted(
                    (tuple(sorted(p, key=self.labels.index)), hz) for p, hz in self.couplings.items()
                )
            ],
        }


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise SystemFileError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise SystemFileError(f"{where}: unknown field(s) {sorted(extra)}")
    missing = allowed - set(obj)
    if missing:
        raise SystemFileError(f"{where}: missing field(s) {sorted(missing)}")


def system_from_json(data: dict) -> SpinSystem:
    _reject_unknown(data, _SYSTEM_FIELDS, "system")
    labels, offsets, couplings = [], [], {}
    for i, s in enumerate(data["spins"]):
        _reject_unknown(s, _SPIN_FIELDS, f"spins[{i}]")
        labels.append(str(s["label"]))
        offsets.append(float(s["offset_hz"]))
    for i, c in enumerate(data["couplings"]):
        _reject_unknown(c, _COUPLING_FIELDS, f"couplings[{i}]")
        pair = frozenset((str(c["a"]), str(c["b"])))
        if pair in couplings:
            raise SystemFileError(f"couplings[{i}]: pair given twice")
        couplings[pair] = float(c["hz"])
    return SpinSystem(tuple(labels), tuple(offsets), couplings, str(data["reference"]))


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("nmrdeco") / "data" / name))


def load_system(path) -> SpinSystem:
    """Read a JSON spin-system file. Falls back to the bundled data directory."""
    p = Path(path)
    if not p.exists():
        alt = bundled_path(p.name)
        if not alt.exists():
            raise FileNotFoundError(f"spin-system file not found: {path}")
        p = alt
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{p}: invalid JSON ({exc})") from None
    return system_from_json(data)


def chloroform() -> SpinSystem:
    return load_system(bundled_path("chloroform.sys"))


def tce() -> SpinSystem:
    return load_system(bundled_path("tce.sys"))


def spin_z_table(n: int) -> np.ndarray:
    """``m[k, i]``: Iz eigenvalue (+-1/2) of spin ``i`` in basis state ``k``."""
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 0.5 - bits


def zeeman_coupling_energies(sys: SpinSystem, excluded: Iterable = ()) -> np.ndarray:
    """Diagonal of the rotating-frame Hamiltonian in rad/s.

    ``H = sum_i 2 pi nu_i Iz_i + sum_{i<j} 2 pi J_ij Iz_i Iz_j`` with every term
    touching an excluded spin dropped.
    """
    active = np.ones(sys.n, dtype=bool)
    for lab in excluded:
        active[sys.index(lab) - 1] = False
    m = spin_z_table(sys.n)
    nu = np.where(active, np.array(sys.offsets_hz), 0.0)
    jm = sys.coupling_matrix() * np.outer(active, active)
    zeeman = m @ nu
    coupling = 0.5 * np.einsum("ki,ij,kj->k", m, jm, m)
    return 2 * math.pi * (zeeman + coupling)


def pseudo_pure_down(n: int) -> DensityMatrix:
    """Projector onto ``|down>^n`` (the prepared pseudo-pure state)."""
    if n < 1:
        raise ValueError("need at least one spin")
    d = 1 << n
    m = np.zeros((d, d), dtype=complex)
    m[-1, -1] = 1
    return DensityMatrix._trusted(m, Kind.TRUE_STATE)


def environment_mixed(rho_sys: DensityMatrix, env_count: int) -> DensityMatrix:
    """Append ``env_count`` maximally mixed environment spins after the system."""
    if env_count < 1:
        raise ValueError("env_count must be at least 1")
    return kron_states(rho_sys, maximally_mixed(env_count))


@dataclass(frozen=True)
class PeakPair:
    """Doublet of the observed spin, split by the partner being up (low) or down (high)."""

    low: complex
    high: complex

    @property
    def total(self) -> complex:
        return self.low + self.high


def _labels_to_indices(sys: SpinSystem, labels) -> list:
    return sorted({sys.index(l) for l in labels})


def peak_amplitudes(rho: DensityMatrix, observed, partner, sys: SpinSystem) -> PeakPair:
    """Stick amplitudes ``Tr(rho I-_obs P_partner)`` after the receiver phase."""
    io, ip = sys.index(observed), sys.index(partner)
    if io == ip:
        raise ValueError("observed and partner spin must differ")
    if rho.n != sys.n:
        raise ValueError(f"state has {rho.n} spins, system has {sys.n}")
    red = partial_trace(rho, [io, ip])
    # after reduction the two spins sit in index order
    if io < ip:
        low_op, high_op = np.kron(I_MINUS, P_UP), np.kron(I_MINUS, P_DOWN)
    else:
        low_op, high_op = np.kron(P_UP, I_MINUS), np.kron(P_DOWN, I_MINUS)
    low = RECEIVER_PHASE * np.trace(red.mat @ low_op)
    high = RECEIVER_PHASE * np.trace(red.mat @ high_op)
    return PeakPair(complex(low), complex(high))


def transverse_signal(rho: DensityMatrix, observed, sys: SpinSystem) -> complex:
    """``Tr(rho I-_obs)`` after the receiver phase (sum over the whole multiplet)."""
    op = embed(I_MINUS, sys.index(observed), sys.n)
    return complex(RECEIVER_PHASE * np.trace(rho.mat @ op))


def acquire_decoupled(rho: DensityMatrix, decoupled: Iterable, sys: SpinSystem) -> DensityMatrix:
    """Model broadband decoupling during acquisition as a partial trace."""
    drop = set(_labels_to_indices(sys, decoupled))
    if len(drop) >= sys.n:
        raise ValueError("cannot decouple every spin")
    if not drop:
        return rho
    return partial_trace(rho, [i for i in range(1, sys.n + 1) if i not in drop])


def subsystem(sys: SpinSystem, keep: Sequence) -> SpinSystem:
    """The spin system restricted to ``keep`` (used after decoupled acquisition)."""
    keep_labels = [sys.label(k) for k in sorted({sys.index(k) for k in keep})]
    ref = sys.reference if sys.reference in keep_labels else keep_labels[0]
    shift = sys.offsets_hz[sys.index(ref) - 1]
    offsets = tuple(sys.offsets_hz[sys.index(l) - 1] - shift for l in keep_labels)
    couplings = {p: hz for p, hz in sys.couplings.items() if p <= set(keep_labels)}
    return SpinSystem(tuple(keep_labels), offsets, couplings, ref)


def initial_state(sys: SpinSystem, mixed: Iterable = ()) -> DensityMatrix:
    """``|down>`` on every spin except ``mixed``, which start maximally mixed."""
    mixed_idx = set(_labels_to_indices(sys, mixed))
    mat = np.eye(1, dtype=complex)
    for i in range(1, sys.n + 1):
        mat = np.kron(mat, np.eye(2) / 2 if i in mixed_idx else P_DOWN)
    return DensityMatrix._trusted(mat, Kind.TRUE_STATE)

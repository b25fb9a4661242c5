"""Dense linear algebra for registers of spin-1/2 nuclei.

Conventions used everywhere in the package:

* basis order ``|up> -> 0``, ``|down> -> 1``; spin 1 is the leftmost
  (most significant) tensor factor;
* spin indices are 1-based;
* ``rotation`` is ``exp(sign * 1j * angle * I_axis)`` and
  ``diagonal_propagator`` is ``exp(sign * 1j * E * t)``. The default
  ``sign=-1`` is the textbook right-handed sense; the NMR layer overrides it
  (see :data:`nmrdeco.nmr.PROPAGATOR_SIGN`).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

ATOL = 1e-10
EIG_ATOL = 1e-9
MAX_SPINS = 12

IX = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
IY = np.array([[0, -0.5j], [0.5j, 0]], dtype=complex)
IZ = np.array([[0.5, 0], [0, -0.5]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
# projectors and ladder operators, same basis
P_UP = np.array([[1, 0], [0, 0]], dtype=complex)
P_DOWN = np.array([[0, 0], [0, 1]], dtype=complex)
I_MINUS = IX - 1j * IY
I_PLUS = IX + 1j * IY

_AXES = {"x": IX, "y": IY}


@dataclass(frozen=True)
class SpinOperatorTriple:
    ix: np.ndarray
    iy: np.ndarray
    iz: np.ndarray


SPIN_HALF = SpinOperatorTriple(IX, IY, IZ)


class Kind(Enum):
    TRUE_STATE = "true"
    DEVIATION = "deviation"


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


def spin_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two of at least one spin")
    return n


def _check_square(m: np.ndarray) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return spin_count(m.shape[0])


def allclose(a, b, atol: float = ATOL) -> bool:
    """Entrywise comparison with an absolute tolerance only."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= atol))


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    return allclose(u.conj().T @ u, np.eye(u.shape[0]), atol)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian ``2**n x 2**n`` matrix.

    ``TRUE_STATE`` matrices have unit trace and are positive semidefinite;
    ``DEVIATION`` matrices carry only the observable part of a state and may
    have any real trace. Construction runs the cheap checks (shape,
    Hermiticity, trace); call :meth:`validate` for the eigenvalue check.
    """

    mat: np.ndarray
    kind: Kind = Kind.TRUE_STATE
    n: int = field(init=False)

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        n = _check_square(m)
        if not allclose(m, m.conj().T):
            raise ValueError("density matrix is not Hermitian")
        if self.kind is Kind.TRUE_STATE and abs(np.trace(m) - 1) > ATOL:
            raise ValueError(f"true state must have unit trace, got {np.trace(m).real:.6g}")
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "n", n)

    @classmethod
    def _trusted(cls, mat, kind):
        # skips checks; callers guarantee the invariants by construction
        obj = object.__new__(cls)
        mat = np.ascontiguousarray(mat, dtype=complex)
        mat.flags.writeable = False
        object.__setattr__(obj, "mat", mat)
        object.__setattr__(obj, "kind", kind)
        object.__setattr__(obj, "n", spin_count(mat.shape[0]))
        return obj

    @classmethod
    def from_state(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def purity(self) -> float:
        return float(np.vdot(self.mat, self.mat).real)

    def validate(self) -> "DensityMatrix":
        """Full invariant check including the eigenvalue bound; returns self."""
        if not allclose(self.mat, self.mat.conj().T):
            raise InvariantError("density matrix lost Hermiticity")
        if self.kind is Kind.TRUE_STATE:
            if abs(self.trace() - 1) > ATOL:
                raise InvariantError(f"trace drifted to {self.trace():.12g}")
            lo = np.linalg.eigvalsh(self.mat).min()
            if lo < -EIG_ATOL:
                raise InvariantError(f"negative eigenvalue {lo:.3g}")
        return self

    def deviation(self) -> np.ndarray:
        """Traceless part ``rho - tr(rho)/d * 1``."""
        return self.mat - np.trace(self.mat) / self.dim * np.eye(self.dim)

    def equals(self, other: "DensityMatrix", atol: float = ATOL) -> bool:
        return self.kind is other.kind and allclose(self.mat, other.mat, atol)

    def __repr__(self):
        return f"DensityMatrix(n={self.n}, kind={self.kind.name})"


def _check_targets(targets: Iterable[int], n: int) -> tuple:
    ts = tuple(sorted(set(int(t) for t in targets)))
    if not ts:
        raise ValueError("empty target set")
    for t in ts:
        if not 1 <= t <= n:
            raise ValueError(f"spin index {t} out of range 1..{n}")
    return ts


def embed(op: np.ndarray, target: int, n: int) -> np.ndarray:
    """Lift a single-spin operator onto spin ``target`` of an ``n``-spin register."""
    if not 1 <= target <= n:
        raise ValueError(f"spin index {target} out of range 1..{n}")
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError("embed expects a 2x2 operator")
    left = np.eye(1 << (target - 1), dtype=complex)
    right = np.eye(1 << (n - target), dtype=complex)
    return np.kron(np.kron(left, op), right)


def spin_rotation(angle: float, axis: str, sign: int = -1) -> np.ndarray:
    """Single-spin rotation ``cos(a/2) 1 + sign*2i sin(a/2) I_axis``."""
    if axis not in _AXES:
        raise ValueError(f"unsupported pulse axis {axis!r} (expected 'x' or 'y')")
    return np.cos(angle / 2) * ID2 + sign * 2j * np.sin(angle / 2) * _AXES[axis]


def rotation(angle: float, axis: str, targets: Iterable[int], n: int, sign: int = -1) -> np.ndarray:
    u1 = spin_rotation(angle, axis, sign)
    u = np.eye(1 << n, dtype=complex)
    for t in _check_targets(targets, n):
        u = u @ embed(u1, t, n)
    return u


def diagonal_propagator(energies: Sequence[float], t: float, sign: int = -1) -> np.ndarray:
    """``diag(exp(sign*1j*E_k*t))`` for angular frequencies ``E`` (rad/s)."""
    return np.diag(diagonal_phases(energies, t, sign))


def diagonal_phases(energies, t, sign=-1) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    spin_count(e.size)
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    return np.exp(sign * 1j * e * t)


def cnot_permutation(control: int, target: int, n: int) -> np.ndarray:
    """Index map of the CNOT that flips ``target`` when ``control`` is down."""
    if control == target:
        raise ValueError("control and target must differ")
    _check_targets([control, target], n)
    idx = np.arange(1 << n)
    cbit = 1 << (n - control)
    tbit = 1 << (n - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def cnot(control: int, target: int, n: int) -> np.ndarray:
    perm = cnot_permutation(control, target, n)
    u = np.zeros((1 << n, 1 << n), dtype=complex)
    u[np.arange(1 << n), perm] = 1
    return u


def conjugate(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    """``u rho u^dagger`` for a dense unitary ``u``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != rho.mat.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {rho.mat.shape}")
    if not is_unitary(u):
        raise ValueError("conjugate requires a unitary matrix")
    out = u @ rho.mat @ u.conj().T
    return DensityMatrix._trusted((out + out.conj().T) / 2, rho.kind)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every spin not in ``keep`` (1-based). Kept spins keep their order."""
    ks = _check_targets(keep, rho.n)
    if len(ks) == rho.n:
        return rho
    out = _kernels.partial_trace(rho.mat, [k - 1 for k in ks], rho.n)
    return DensityMatrix._trusted(out, rho.kind)


def kron_states(*states: DensityMatrix) -> DensityMatrix:
    mat = np.eye(1, dtype=complex)
    kind = Kind.TRUE_STATE
    for s in states:
        mat = np.kron(mat, s.mat)
        if s.kind is Kind.DEVIATION:
            kind = Kind.DEVIATION
    return DensityMatrix._trusted(mat, kind)


def maximally_mixed(n: int) -> DensityMatrix:
    d = 1 << n
    return DensityMatrix._trusted(np.eye(d, dtype=complex) / d, Kind.TRUE_STATE)


# ---------------------------------------------------------------------------
# structured propagators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rotation:
    """Ideal pulse: the same rotation on every spin in ``targets``."""

    angle: float
    axis: str
    targets: tuple
    n: int
    sign: int = -1

    def matrix(self) -> np.ndarray:
        return rotation(self.angle, self.axis, self.targets, self.n, self.sign)

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        u = spin_rotation(self.angle, self.axis, self.sign)
        m = rho.mat
        for t in self.targets:
            m = _kernels.apply_local(m, u, t, self.n)
        return DensityMatrix._trusted(m, rho.kind)


@dataclass(frozen=True, eq=False)
class PhaseEvolution:
    """Free evolution under a Hamiltonian diagonal in the Zeeman basis."""

    energies: np.ndarray
    t: float
    sign: int = -1

    def __post_init__(self):
        e = np.array(self.energies, dtype=float)
        e.flags.writeable = False
        object.__setattr__(self, "energies", e)
        diagonal_phases(e, self.t, self.sign)  # validates

    @property
    def n(self) -> int:
        return spin_count(self.energies.size)

    def matrix(self) -> np.ndarray:
        return diagonal_propagator(self.energies, self.t, self.sign)

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        ph = diagonal_phases(self.energies, self.t, self.sign)
        return DensityMatrix._trusted(_kernels.apply_phases(rho.mat, ph), rho.kind)

    def __eq__(self, other):
        return (
            isinstance(other, PhaseEvolution)
            and self.t == other.t
            and self.sign == other.sign
            and np.array_equal(self.energies, other.energies)
        )

    def __hash__(self):
        return hash((self.energies.tobytes(), self.t, self.sign))


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int
    n: int

    def matrix(self) -> np.ndarray:
        return cnot(self.control, self.target, self.n)

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        perm = cnot_permutation(self.control, self.target, self.n)
        return DensityMatrix._trusted(_kernels.apply_permutation(rho.mat, perm), rho.kind)


def evolve(rho: DensityMatrix, propagators: Iterable) -> DensityMatrix:
    """Apply propagators in order (first element acts first)."""
    for p in propagators:
        rho = p.apply(rho)
    return rho


def total_unitary(propagators: Iterable, n: int) -> np.ndarray:
    u = np.eye(1 << n, dtype=complex)
    for p in propagators:
        u = p.matrix() @ u
    return u

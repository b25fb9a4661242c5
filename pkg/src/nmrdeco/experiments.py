"""Scenario runners, closed-form coherence laws and parameter sweeps.

Normalisation used for the returned coherences: the reduced one-qubit state is
scaled to trace 2 (unit diagonal), so the coherence is ``2 * rho[0, 1]``;
the two-qubit double-quantum coherence is ``-2 * rho[0, 3]``, which is 1 for
the freshly prepared Bell state.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence

import numpy as np

from . import nmr
from .core import IX, IY, IZ, Cnot, DensityMatrix, embed, evolve, partial_trace
from .nmr import SpinSystem
from .sequence import compile_sequence, load_sequence, parse_text

MAX_ENV_ONE_QUBIT = 11
MAX_ENV_DQ = 9

# Walsh-Hadamard on spin 1 as [pi]x then [pi/2]y (equal to H up to a global
# phase under nmr.PROPAGATOR_SIGN); R(theta) is a y pulse on each environment spin.
HADAMARD = "[pi]x^{1} - [pi/2]y^{1}"


# ---------------------------------------------------------------------------
# closed forms, each in its own normalisation
# ---------------------------------------------------------------------------


def entangled_pair_matrix(a: complex, b: complex) -> np.ndarray:
    """System+environment state after the CNOT, trace 2."""
    v = np.array([a, b, -b, -a], dtype=complex)
    return np.outer(v, v.conj())


def entangled_pair_theta(theta: float) -> np.ndarray:
    return entangled_pair_matrix(math.cos(theta / 2), math.sin(theta / 2))


def one_qubit_reduced(a: complex, b: complex) -> np.ndarray:
    off = -a * np.conj(b) - np.conj(a) * b
    return np.array([[1, off], [np.conj(off), 1]], dtype=complex)


def coherence_closed(theta: float, n_env: int = 1) -> float:
    return -math.sin(theta) ** n_env


def bell_deviation() -> np.ndarray:
    """``Ix1 Ix2 - Iz1 Iz2 - Iy1 Iy2``."""
    e = lambda op, k: embed(op, k, 2)
    return e(IX, 1) @ e(IX, 2) - e(IZ, 1) @ e(IZ, 2) - e(IY, 1) @ e(IY, 2)


def dq_factor(t: float, couplings: Sequence) -> float:
    """``prod_k cos(pi (J1k + J2k) t)`` for environment couplings ``(J1k, J2k)`` in Hz."""
    out = 1.0
    for j1, j2 in couplings:
        out *= math.cos(math.pi * (j1 + j2) * t)
    return out


def dq_reduced_deviation(c: float) -> np.ndarray:
    """Reduced two-carbon state in deviation form, corner ``c``."""
    m = np.diag([-0.5, 0.5, 0.5, -0.5]).astype(complex)
    m[0, 3] = m[3, 0] = c
    return m


def dq_reduced_populations(c: float) -> np.ndarray:
    """The same state written with populations 1, 0, 0, 1 and corner ``-c``."""
    m = np.diag([1, 0, 0, 1]).astype(complex)
    m[0, 3] = m[3, 0] = -c
    return m


def dq_readout_matrix(c: float) -> np.ndarray:
    """State after the [pi/2]x readout on the second carbon."""
    i = 1j
    return np.array(
        [
            [0, i, -i * c, c],
            [-i, 0, c, i * c],
            [i * c, c, 0, -i],
            [c, -i * c, i, 0],
        ]
    )


def dq_product_operator_state(c: float) -> np.ndarray:
    """``Ix1Ix2 * c - Iz1Iz2 - Iy1Iy2 * c`` (multi-environment law)."""
    e = lambda op, k: embed(op, k, 2)
    return c * e(IX, 1) @ e(IX, 2) - e(IZ, 1) @ e(IZ, 2) - c * e(IY, 1) @ e(IY, 2)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def _register(n: int) -> SpinSystem:
    labels = ("S",) + tuple(f"E{k}" for k in range(1, n))
    return SpinSystem(labels, (0.0,) * n, {}, "S")


@dataclass(frozen=True)
class OneQubitResult:
    rho_reduced: DensityMatrix
    coherence: complex

    @property
    def normalized(self) -> np.ndarray:
        """Reduced state scaled to unit diagonal."""
        return 2 * self.rho_reduced.mat


def _network(theta: float, n_env: int, sys: Optional[SpinSystem] = None) -> DensityMatrix:
    n = n_env + 1
    sys = sys or _register(n)
    envs = ",".join(str(k) for k in range(2, n + 1))
    seq = parse_text(f"{HADAMARD} - [theta]y^{{{envs}}}")
    rho = evolve(nmr.pseudo_pure_down(n), compile_sequence(seq, sys, {"theta": theta}))
    return evolve(rho, [Cnot(1, k, n) for k in range(2, n + 1)])


def scenario_one_qubit(theta: float, sys: Optional[SpinSystem] = None) -> OneQubitResult:
    """Hadamard on the system, R(theta) on the environment, CNOT, trace the environment."""
    sys = sys or nmr.chloroform()
    if sys.n != 2:
        raise ValueError("the one-qubit scenario needs a two-spin system")
    red = partial_trace(_network(theta, 1, sys), [1])
    return OneQubitResult(red, complex(2 * red.mat[0, 1]))


@dataclass(frozen=True)
class Comparison:
    closed: float
    bruteforce: complex

    @property
    def deviation(self) -> float:
        return abs(self.closed - self.bruteforce)


def scenario_n_environment(theta: float, n_env: int) -> Comparison:
    if not 1 <= n_env <= MAX_ENV_ONE_QUBIT:
        raise ValueError(f"n_env must be in 1..{MAX_ENV_ONE_QUBIT}, got {n_env}")
    red = partial_trace(_network(theta, n_env), [1])
    return Comparison(coherence_closed(theta, n_env), complex(2 * red.mat[0, 1]))


def _bell_pure(sys: SpinSystem) -> DensityMatrix:
    seq = load_sequence(nmr.bundled_path("bellprep.seq"))
    spare = sys.n - 2
    rho0 = nmr.pseudo_pure_down(2)
    if spare:
        rho0 = nmr.environment_mixed(rho0, spare)
    rho = evolve(rho0, compile_sequence(seq, sys))
    return partial_trace(rho, [1, 2])


def scenario_bell_prep(sys: Optional[SpinSystem] = None) -> DensityMatrix:
    """Run the Bell-state preparation on |down down> (proton decoupled); 4x4 result."""
    return _bell_pure(sys or nmr.tce())


def dq_coherence(rho: DensityMatrix) -> complex:
    """Double-quantum element, normalised to 1 for the prepared Bell state."""
    return complex(-2 * rho.mat[0, 3])


def scenario_dq_evolution(t: float, apply_readout: bool = False, sys: Optional[SpinSystem] = None) -> DensityMatrix:
    """Bell pair + mixed proton, refocused evolution for ``t``, optional readout, trace proton."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    sys = sys or nmr.tce()
    rho = nmr.environment_mixed(_bell_pure(sys), sys.n - 2)
    text = "refocus(t)" + (" - [pi/2]x^{2}" if apply_readout else "")
    rho = evolve(rho, compile_sequence(parse_text(text), sys, {"t": t}))
    return partial_trace(rho, [1, 2])


def multi_env_system(env_couplings: Sequence, j12: float = 103.1) -> SpinSystem:
    k = len(env_couplings)
    labels = ("C1", "C2") + tuple(f"E{i}" for i in range(1, k + 1))
    couplings = {frozenset(("C1", "C2")): j12}
    for i, (j1, j2) in enumerate(env_couplings, start=1):
        if j1:
            couplings[frozenset(("C1", f"E{i}"))] = j1
        if j2:
            couplings[frozenset(("C2", f"E{i}"))] = j2
    return SpinSystem(labels, (0.0,) * len(labels), couplings, "C2")


def scenario_multi_env_dq(t: float, env_couplings: Sequence) -> Comparison:
    """Bell pair coupled to ``k`` mixed environment spins; couplings ``(J1k, J2k)`` in Hz."""
    couplings = [(float(a), float(b)) for a, b in env_couplings]
    if not 1 <= len(couplings) <= MAX_ENV_DQ:
        raise ValueError(f"environment count must be in 1..{MAX_ENV_DQ}")
    sys = multi_env_system(couplings)
    rho = nmr.environment_mixed(scenario_bell_prep(), len(couplings))
    rho = evolve(rho, compile_sequence(parse_text("t"), sys, {"t": t}))
    red = partial_trace(rho, [1, 2])
    return Comparison(dq_factor(t, couplings), dq_coherence(red))


def scenario_product_peaks(theta: float, sys: Optional[SpinSystem] = None) -> nmr.PeakPair:
    sys = sys or nmr.chloroform()
    seq = load_sequence(nmr.bundled_path("product_state.seq"))
    rho = evolve(nmr.pseudo_pure_down(sys.n), compile_sequence(seq, sys, {"theta": theta}))
    return nmr.peak_amplitudes(rho, 1, 2, sys)


def scenario_entangled_peaks(theta: float, sys: Optional[SpinSystem] = None) -> nmr.PeakPair:
    sys = sys or nmr.chloroform()
    seq = load_sequence(nmr.bundled_path("chloroform_entangle.seq"))
    rho = evolve(nmr.pseudo_pure_down(sys.n), compile_sequence(seq, sys, {"theta": theta}))
    return nmr.peak_amplitudes(rho, 1, 2, sys)


def scenario_dq_peak(t: float, sys: Optional[SpinSystem] = None) -> complex:
    """Left (partner-up) peak of the first carbon after readout, scaled to 1 at t = 0."""
    sys = sys or nmr.tce()
    red = scenario_dq_evolution(t, apply_readout=True, sys=sys)
    return 4 * nmr.peak_amplitudes(red, 1, 2, nmr.subsystem(sys, sys.labels[:2])).low


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    step: float

    def points(self) -> np.ndarray:
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.stop < self.start:
            raise ValueError("grid stop lies before start")
        count = int(math.floor((self.stop - self.start) / self.step * (1 + 1e-12) + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    param: str
    default_system: Optional[str]
    sequence: str
    evaluate: Callable


def _sys_or(sys, name):
    return sys if sys is not None else nmr.load_system(nmr.bundled_path(name))


SCENARIOS: Dict[str, ScenarioSpec] = {}


def _scenario(name, param, default_system, sequence):
    def deco(fn):
        SCENARIOS[name] = ScenarioSpec(name, param, default_system, sequence, fn)
        return fn

    return deco


@_scenario("one-qubit", "theta", "chloroform.sys", HADAMARD + " - [theta]y^{2} - cnot(1,2)")
def _sw_one_qubit(x, sys, fixed):
    return scenario_one_qubit(x, sys).coherence


@_scenario("n-env", "theta", None, HADAMARD + " - [theta]y^{2..N+1} - cnot(1,k)")
def _sw_n_env(x, sys, fixed):
    return scenario_n_environment(x, int(fixed.get("n_env", 1))).bruteforce


@_scenario("dq", "t", "tce.sys", "refocus(t)")
def _sw_dq(x, sys, fixed):
    return dq_coherence(scenario_dq_evolution(x, False, sys))


@_scenario("dq-peak", "t", "tce.sys", "refocus(t) - [pi/2]x^{2}")
def _sw_dq_peak(x, sys, fixed):
    return scenario_dq_peak(x, sys)


@_scenario("product-low", "theta", "chloroform.sys", "[theta]x^{2} - [pi/2]x^{1,2}")
def _sw_product_low(x, sys, fixed):
    return scenario_product_peaks(x, sys).low


@_scenario("product-high", "theta", "chloroform.sys", "[theta]x^{2} - [pi/2]x^{1,2}")
def _sw_product_high(x, sys, fixed):
    return scenario_product_peaks(x, sys).high


@_scenario("product-sum", "theta", "chloroform.sys", "[theta]x^{2} - [pi/2]x^{1,2}")
def _sw_product_sum(x, sys, fixed):
    return scenario_product_peaks(x, sys).total


@_scenario(
    "entangled-sum",
    "theta",
    "chloroform.sys",
    "[theta]x^{2} - [pi/2]x^{1,2} - 1/(4J12) - [pi]x^{1,2} - 1/(4J12) - [pi/2]y^{2}",
)
def _sw_entangled_sum(x, sys, fixed):
    return scenario_entangled_peaks(x, sys).total


@dataclass(frozen=True, eq=False)
class SweepResult:
    scenario: str
    param_name: str
    params: np.ndarray
    values: np.ndarray
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        p = np.array(self.params, dtype=float)
        v = np.array(self.values, dtype=complex)
        if p.size == 0:
            raise ValueError("a sweep needs at least one sample")
        if p.shape != v.shape or p.ndim != 1:
            raise ValueError("params and values must be 1-D and of equal length")
        if np.any(np.diff(p) <= 0):
            raise ValueError("sweep parameters must be strictly increasing")
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def samples(self):
        return [(float(p), complex(v)) for p, v in zip(self.params, self.values)]

    def __len__(self):
        return self.params.size


def sweep(
    scenario: str,
    grid: Grid,
    fixed: Optional[Mapping] = None,
    sys: Optional[SpinSystem] = None,
    system_path: Optional[str] = None,
    workers: int = 1,
) -> SweepResult:
    """Evaluate ``scenario`` at each grid point; order is the grid order."""
    if scenario not in SCENARIOS:
        raise KeyError(f"unknown scenario {scenario!r}; known: {', '.join(sorted(SCENARIOS))}")
    spec = SCENARIOS[scenario]
    fixed = dict(fixed or {})
    if sys is None and spec.default_system:
        system_path = system_path or spec.default_system
        sys = nmr.load_system(system_path)
    xs = grid.points()
    run = lambda x: spec.evaluate(float(x), sys, fixed)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(run, xs))
    else:
        values = [run(x) for x in xs]
    meta = {
        "system": system_path,
        "sequence": spec.sequence,
        "bindings": fixed,
        "grid": {"start": grid.start, "stop": grid.stop, "step": grid.step},
    }
    return SweepResult(scenario, spec.param, xs, np.array(values), meta)

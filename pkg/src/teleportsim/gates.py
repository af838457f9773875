"""Standard gate set, gate application and projective measurement."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qmath import DensityMatrix, QubitRegister, State, _check_indices, _frozen

_SQ2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Gate:
    name: str
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"unsupported gate shape {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > 1e-12:
            raise ValueError(f"gate {self.name} is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def arity(self) -> int:
        return 1 if self.matrix.shape[0] == 2 else 2

    def __repr__(self):
        return f"Gate({self.name})"


I = Gate("I", np.eye(2))
X = Gate("X", [[0, 1], [1, 0]])
Y = Gate("Y", [[0, -1j], [1j, 0]])
Z = Gate("Z", [[1, 0], [0, -1]])
H = Gate("H", _SQ2 * np.array([[1, 1], [1, -1]]))
CNOT = Gate("CNOT", [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])

PAULIS = {"I": I, "X": X, "Y": Y, "Z": Z}


def phase_shift(phi: float) -> Gate:
    """R_phi = diag(1, e^{i phi})."""
    return Gate(f"PhaseShift({phi:.17g})", np.diag([1.0, np.exp(1j * phi)]))


def _apply_to_axes(t: np.ndarray, u: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    u_t = u.reshape((2,) * (2 * k))
    # contract the input legs of u with the target axes, then put the output legs back
    out = np.tensordot(u_t, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_unitary(state: State, u: np.ndarray, targets: Sequence[int]) -> State:
    """Apply the matrix ``u`` on ``targets`` (identity elsewhere)."""
    n = state.num_qubits
    targets = _check_indices(targets, n)
    u = np.asarray(u, dtype=complex)
    if u.shape != (1 << len(targets),) * 2:
        raise ValueError(f"operator of shape {u.shape} does not act on {len(targets)} qubit(s)")
    if isinstance(state, QubitRegister):
        t = state.amplitudes.reshape((2,) * n)
        return QubitRegister(_apply_to_axes(t, u, targets).reshape(-1))
    t = state.matrix.reshape((2,) * (2 * n))
    t = _apply_to_axes(t, u, targets)
    t = _apply_to_axes(t, u.conj(), [q + n for q in targets])
    d = 1 << n
    return DensityMatrix(t.reshape(d, d))


def apply_gate(state: State, gate: Gate, targets: Sequence[int]) -> State:
    """Apply ``gate`` to ``targets``; a density matrix transforms as U rho U^dagger.

    For CNOT, ``targets`` is ``[control, target]``.
    """
    if len(targets) != gate.arity:
        raise ValueError(f"{gate.name} acts on {gate.arity} qubit(s), got targets {list(targets)}")
    return apply_unitary(state, gate.matrix, targets)


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    bits: tuple[int, ...]
    probability: float
    post_state: State

    @property
    def label(self) -> str:
        return "".join(map(str, self.bits))


def _branch_weights(state: State, targets: list[int]) -> np.ndarray:
    """Unnormalized probability of every outcome, shape (2,)*k, lexicographic."""
    n = state.num_qubits
    if isinstance(state, QubitRegister):
        probs = np.abs(state.amplitudes.reshape((2,) * n)) ** 2
    else:
        probs = np.real(np.diagonal(state.matrix)).reshape((2,) * n)
    others = tuple(q for q in range(n) if q not in targets)
    marg = probs.sum(axis=others) if others else probs
    # sum leaves the targets in ascending order; reorder to the requested order
    order = np.argsort(np.argsort(targets))
    return np.transpose(marg, order)


def outcome_distribution(state: State, targets: Sequence[int]) -> list[tuple[tuple[int, ...], float]]:
    """Exact Born-rule probabilities of measuring ``targets``, in lexicographic order."""
    targets = _check_indices(targets, state.num_qubits)
    w = _branch_weights(state, targets)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return [(bits, float(w[bits])) for bits in itertools.product((0, 1), repeat=len(targets))]


def project(state: State, targets: Sequence[int], bits: Sequence[int]) -> MeasurementOutcome:
    """Collapse onto a given outcome; raises if that outcome has zero probability."""
    n = state.num_qubits
    targets = _check_indices(targets, n)
    bits = tuple(int(b) for b in bits)
    if len(bits) != len(targets) or set(bits) - {0, 1}:
        raise ValueError(f"bits {bits} do not match targets {targets}")
    if isinstance(state, QubitRegister):
        t = state.amplitudes.reshape((2,) * n).copy()
        for q, b in zip(targets, bits):
            sl = [slice(None)] * n
            sl[q] = 1 - b
            t[tuple(sl)] = 0.0
        p = float(np.vdot(t, t).real)
        if p <= 0.0:
            raise ValueError(f"outcome {bits} has zero probability")
        return MeasurementOutcome(bits, p, QubitRegister(t.reshape(-1) / np.sqrt(p)))
    t = state.matrix.reshape((2,) * (2 * n)).copy()
    for q, b in zip(targets, bits):
        for axis in (q, q + n):
            sl = [slice(None)] * (2 * n)
            sl[axis] = 1 - b
            t[tuple(sl)] = 0.0
    d = 1 << n
    m = t.reshape(d, d)
    p = float(np.trace(m).real)
    if p <= 0.0:
        raise ValueError(f"outcome {bits} has zero probability")
    return MeasurementOutcome(bits, p, DensityMatrix(m / p))


def sample_index(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF pick of an index for a uniform draw ``u`` in [0, 1)."""
    acc = 0.0
    last = None
    for i, p in enumerate(probs):
        if p <= 0.0:
            continue
        acc += p
        last = i
        if u < acc:
            return i
    # rounding left the cumulative sum just below u
    return last


def measure(state: State, targets: Sequence[int], rng: np.random.Generator) -> MeasurementOutcome:
    """Projective computational-basis measurement driven by one uniform draw."""
    dist = outcome_distribution(state, targets)
    i = sample_index([p for _, p in dist], rng.random())
    return project(state, targets, dist[i][0])

"""Dense complex linear algebra for small qubit registers.

Qubit 0 is the leftmost symbol of a ket and the most significant bit of the
amplitude index, so ``|011>`` is amplitude index 3 of a 3-qubit register.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

STRUCT_TOL = 1e-10
MAX_QUBITS = 4


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


@dataclass(frozen=True, eq=False)
class QubitRegister:
    """Pure n-qubit state held as a normalized amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        _num_qubits(amps.size)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > STRUCT_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm:.12g})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def num_qubits(self) -> int:
        return _num_qubits(self.amplitudes.size)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "QubitRegister":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(amps)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """General n-qubit state.

    Construction only checks shape and finiteness; use :func:`validate_density`
    for the full Hermitian / trace-one / PSD check.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix entries must be finite")
        _num_qubits(m.shape[0])
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def num_qubits(self) -> int:
        return _num_qubits(self.matrix.shape[0])

    def density(self) -> "DensityMatrix":
        return self


State = QubitRegister | DensityMatrix


def ket(bits: str) -> QubitRegister:
    """Computational basis state, e.g. ``ket("010")``."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"invalid basis label {bits!r}")
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return QubitRegister(amps)


def as_density(state: State) -> DensityMatrix:
    return state.density()


def tensor_product(a, b):
    """Kronecker product ``a ⊗ b``.

    Registers combine into a register, density matrices (or a register with a
    density matrix) into a density matrix, and raw arrays into an array.
    """
    if isinstance(a, QubitRegister) and isinstance(b, QubitRegister):
        return QubitRegister(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, (QubitRegister, DensityMatrix)) and isinstance(b, (QubitRegister, DensityMatrix)):
        return DensityMatrix(np.kron(a.density().matrix, b.density().matrix))
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("tensor_product operands must be finite")
    return np.kron(a, b)


def tensor_all(items: Iterable):
    items = list(items)
    if not items:
        raise ValueError("nothing to combine")
    out = items[0]
    for item in items[1:]:
        out = tensor_product(out, item)
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(m, dtype=complex)).T


def is_unitary(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("is_unitary expects a square matrix")
    return bool(np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0]))) <= tol)


def validate_density(rho, tol: float = STRUCT_TOL) -> bool:
    """True iff ``rho`` is Hermitian, has unit trace and is PSD, all within ``tol``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("validate_density expects a square matrix")
    if not np.all(np.isfinite(m)):
        return False
    if np.max(np.abs(m - dagger(m))) > tol:
        return False
    if abs(np.trace(m) - 1.0) > tol:
        return False
    # eigvalsh only reads one triangle; hermiticity was checked above
    return bool(np.linalg.eigvalsh(m).min() >= -tol)


def _check_indices(indices: Iterable[int], n: int) -> list[int]:
    idx = [int(i) for i in indices]
    if not idx:
        raise ValueError("qubit index list is empty")
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate qubit indices {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise ValueError(f"qubit index {i} out of range for {n} qubits")
    return idx


def partial_trace(rho: State, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the qubits in ``keep`` (kept in ascending order)."""
    rho = rho.density()
    n = rho.num_qubits
    keep = sorted(_check_indices(keep, n))
    drop = [q for q in range(n) if q not in keep]
    t = rho.matrix.reshape((2,) * (2 * n))
    # trace the highest index first so lower axis numbers stay valid
    for q in reversed(drop):
        t = np.trace(t, axis1=q, axis2=q + t.ndim // 2)
    d = 1 << len(keep)
    return DensityMatrix(t.reshape(d, d))


def hermitize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + dagger(m))


def renormalize(rho, psd_tol: float = STRUCT_TOL) -> DensityMatrix:
    """Project numerically drifted ``rho`` back onto the density-matrix set.

    Hermitizes, clamps eigenvalues in ``[-psd_tol, 0)`` to zero and rescales to
    unit trace. Eigenvalues below ``-psd_tol`` indicate a real defect and raise.
    """
    m = hermitize(rho.matrix if isinstance(rho, DensityMatrix) else rho)
    w, v = np.linalg.eigh(m)
    scale = max(1.0, abs(w).max())
    if w.min() < -psd_tol * scale:
        raise ValueError(f"matrix has a negative eigenvalue {w.min():.3e}")
    if w.min() < 0:
        w = np.clip(w, 0.0, None)
        m = (v * w) @ dagger(v)
    return DensityMatrix(m / np.trace(m).real)


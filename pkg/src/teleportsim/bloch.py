"""Bloch-vector view of single-qubit states."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import gates
from .qmath import STRUCT_TOL, DensityMatrix, QubitRegister, State

SIGMA_X = gates.X.matrix
SIGMA_Y = gates.Y.matrix
SIGMA_Z = gates.Z.matrix


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return float(np.linalg.norm(self))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def density_to_bloch(rho: State) -> BlochVector:
    """r_x = 2 Re rho01, r_y = 2 Im rho10, r_z = rho00 - rho11."""
    m = rho.density().matrix
    if m.shape != (2, 2):
        raise ValueError("density_to_bloch needs a single-qubit state")
    return BlochVector(
        float(2.0 * m[0, 1].real),
        float(2.0 * m[1, 0].imag),
        float((m[0, 0] - m[1, 1]).real),
    )


def bloch_to_density(r) -> DensityMatrix:
    """rho = (I + r_x X + r_y Y + r_z Z) / 2; rejects vectors outside the unit ball."""
    rx, ry, rz = (float(c) for c in r)
    norm = np.sqrt(rx * rx + ry * ry + rz * rz)
    if not np.isfinite(norm) or norm > 1.0 + STRUCT_TOL:
        raise ValueError(f"Bloch vector norm {norm:.12g} exceeds 1")
    m = 0.5 * (np.eye(2) + rx * SIGMA_X + ry * SIGMA_Y + rz * SIGMA_Z)
    return DensityMatrix(m)


def bloch_to_ket(r) -> QubitRegister:
    """Pure state on the sphere surface with real, non-negative |0> amplitude."""
    rx, ry, rz = (float(c) for c in r)
    norm = np.sqrt(rx * rx + ry * ry + rz * rz)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"Bloch vector of norm {norm:.12g} is not a pure state")
    rx, ry, rz = rx / norm, ry / norm, rz / norm
    if rz <= -1.0 + 1e-15:
        return QubitRegister([0.0, 1.0])
    alpha = np.sqrt((1.0 + rz) / 2.0)
    beta = (rx + 1j * ry) / np.sqrt(2.0 * (1.0 + rz))
    return QubitRegister.from_amplitudes([alpha, beta], normalize=True)


def fidelity(rho: State, psi: QubitRegister) -> float:
    """<psi|rho|psi>, clamped to [0, 1]."""
    m = rho.density().matrix
    if m.shape[0] != psi.amplitudes.size:
        raise ValueError(f"dimension mismatch: rho is {m.shape[0]}, psi is {psi.amplitudes.size}")
    f = float(np.real(np.vdot(psi.amplitudes, m @ psi.amplitudes)))
    return min(1.0, max(0.0, f))


def purity(rho: State) -> float:
    """Tr(rho^2)."""
    m = rho.density().matrix
    return float(np.real(np.vdot(m.conj().T, m)))


# Sign pattern and coordinate permutation of U rho U^dagger for each gate.
_GATE_ACTION = {
    "I": ((0, 1, 2), (1, 1, 1)),
    "X": ((0, 1, 2), (1, -1, -1)),
    "Y": ((0, 1, 2), (-1, 1, -1)),
    "Z": ((0, 1, 2), (-1, -1, 1)),
    "H": ((2, 1, 0), (1, -1, 1)),
}


def bloch_gate_action(r, gate: gates.Gate) -> BlochVector:
    try:
        perm, sign = _GATE_ACTION[gate.name]
    except KeyError:
        raise ValueError(f"no Bloch-table entry for gate {gate.name}") from None
    r = tuple(float(c) for c in r)
    return BlochVector(*(s * r[p] for p, s in zip(perm, sign)))

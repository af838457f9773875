"""Single-qubit Lindblad damping with Pauli coupling operators.

The master equation is

    d rho/dt = -i [H, rho] + sum_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})

with H = (omega/2) sigma_z and L_k = sqrt(gamma_k) sigma_k, hbar = 1.
In Bloch coordinates every axis decays exponentially:

    r_x(t) = r_x(0) exp(-2 (gamma_y + gamma_z) t)
    r_y(t) = r_y(0) exp(-2 (gamma_x + gamma_z) t)
    r_z(t) = r_z(0) exp(-2 (gamma_x + gamma_y) t)

"Compensated" results are those with the Hamiltonian's z rotation removed,
which is exactly the dynamics above. Uncompensated results additionally
carry the rotation; when gamma_x != gamma_y the rotation and the damping of
the x/y plane do not commute, so the x/y block is solved as a full 2x2
linear system rather than as a rotation of the damped vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import gates
from .bloch import SIGMA_X, SIGMA_Y, SIGMA_Z, BlochVector, bloch_to_density, density_to_bloch
from .qmath import DensityMatrix, State, _check_indices, hermitize

_PAULI_VECS = np.array([np.eye(2).reshape(-1), SIGMA_X.reshape(-1), SIGMA_Y.reshape(-1), SIGMA_Z.reshape(-1)])


@dataclass(frozen=True)
class NoiseChannel:
    """Decay rates, qubit splitting and exposure time of one damping episode."""

    gamma_x: float = 0.0
    gamma_y: float = 0.0
    gamma_z: float = 0.0
    omega: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        for name in ("gamma_x", "gamma_y", "gamma_z", "duration"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
            object.__setattr__(self, name, v)
        if not math.isfinite(float(self.omega)):
            raise ValueError("omega must be finite")
        object.__setattr__(self, "omega", float(self.omega))

    @classmethod
    def phase_damping(cls, gamma_z: float, duration: float, omega: float = 0.0) -> "NoiseChannel":
        return cls(gamma_z=gamma_z, omega=omega, duration=duration)

    @classmethod
    def yz_damping(cls, gamma_x: float, duration: float, omega: float = 0.0) -> "NoiseChannel":
        return cls(gamma_x=gamma_x, omega=omega, duration=duration)

    @classmethod
    def combined(cls, gamma_x: float, gamma_z: float, duration: float, omega: float = 0.0) -> "NoiseChannel":
        return cls(gamma_x=gamma_x, gamma_z=gamma_z, omega=omega, duration=duration)

    def at(self, duration: float) -> "NoiseChannel":
        return replace(self, duration=duration)

    @property
    def decay_exponents(self) -> tuple[float, float, float]:
        """Per-axis decay constants (2(gy+gz), 2(gx+gz), 2(gx+gy))."""
        gx, gy, gz = self.gamma_x, self.gamma_y, self.gamma_z
        return 2.0 * (gy + gz), 2.0 * (gx + gz), 2.0 * (gx + gy)

    def attenuations(self) -> tuple[float, float, float]:
        t = self.duration
        return tuple(math.exp(-k * t) for k in self.decay_exponents)

    def is_identity(self) -> bool:
        return self.duration == 0.0 or (
            self.gamma_x == self.gamma_y == self.gamma_z == 0.0 and self.omega == 0.0
        )


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step classical RK4; the last step is shortened to land on the end time."""

    step: float = 1e-3

    def __post_init__(self):
        if not math.isfinite(self.step) or self.step <= 0:
            raise ValueError(f"integrator step must be positive, got {self.step}")


def _xy_propagator(a: float, b: float, omega: float, t: float) -> np.ndarray:
    """exp(t [[-a, -omega], [omega, -b]]) in closed form."""
    s = 0.5 * (a + b)
    d = 0.5 * (a - b)
    q = d * d - omega * omega
    n = np.array([[-d, -omega], [omega, d]])
    # n @ n == q * I, so exp(t n) = c I + g n
    if abs(q) * t * t < 1e-6:
        qt2 = q * t * t
        c = 1.0 + qt2 / 2.0 + qt2 * qt2 / 24.0
        g = t * (1.0 + qt2 / 6.0 + qt2 * qt2 / 120.0)
        return math.exp(-s * t) * (c * np.eye(2) + g * n)
    if q > 0:
        k = math.sqrt(q)
        ep, em = math.exp((k - s) * t), math.exp((-k - s) * t)
        return 0.5 * (ep + em) * np.eye(2) + (0.5 * (ep - em) / k) * n
    w = math.sqrt(-q)
    return math.exp(-s * t) * (math.cos(w * t) * np.eye(2) + (math.sin(w * t) / w) * n)


def transfer_matrix(ch: NoiseChannel, compensate: bool = True) -> np.ndarray:
    """Real 3x3 map taking r(0) to r(t)."""
    ax, ay, az = ch.decay_exponents
    t = ch.duration
    m = np.zeros((3, 3))
    if compensate:
        m[0, 0], m[1, 1] = math.exp(-ax * t), math.exp(-ay * t)
    else:
        m[:2, :2] = _xy_propagator(ax, ay, ch.omega, t)
    m[2, 2] = math.exp(-az * t)
    return m


def evolve_closed_form(rho0: State, ch: NoiseChannel, compensate: bool = True) -> DensityMatrix:
    rho0 = rho0.density()
    if rho0.num_qubits != 1:
        raise ValueError("evolve_closed_form acts on a single qubit")
    if ch.duration == 0.0:
        return rho0
    r = transfer_matrix(ch, compensate) @ np.array(density_to_bloch(rho0))
    # contraction can leave the norm a few ulps above 1 for pure inputs
    norm = np.linalg.norm(r)
    if norm > 1.0:
        r = r / norm
    return bloch_to_density(r)


def evolve_bloch(r0, ch: NoiseChannel, compensate: bool = True) -> BlochVector:
    return BlochVector(*(transfer_matrix(ch, compensate) @ np.asarray(r0, dtype=float)))


def channel_superoperator(ch: NoiseChannel, compensate: bool = True) -> np.ndarray:
    """4x4 matrix S with vec(E(m)) = S vec(m) for row-major vec of any 2x2 m.

    Built from the Bloch transfer matrix in the Pauli basis, so it applies
    equally to density matrices and to the off-diagonal blocks that appear
    when the channel acts on one qubit of a larger register.
    """
    t3 = transfer_matrix(ch, compensate)
    t4 = np.zeros((4, 4))
    t4[0, 0] = 1.0
    t4[1:, 1:] = t3
    # m = 1/2 sum_k tr(sigma_k m) sigma_k, with tr(sigma_k m) = conj(vec sigma_k) . vec m
    return 0.5 * _PAULI_VECS.T @ t4 @ _PAULI_VECS.conj()


def apply_superoperator(state: State, s: np.ndarray, qubit: int) -> DensityMatrix:
    rho = state.density()
    n = rho.num_qubits
    (qubit,) = _check_indices([qubit], n)
    t = rho.matrix.reshape((2,) * (2 * n))
    s4 = s.reshape(2, 2, 2, 2)
    out = np.tensordot(s4, t, axes=([2, 3], [qubit, qubit + n]))
    out = np.moveaxis(out, [0, 1], [qubit, qubit + n])
    d = 1 << n
    return DensityMatrix(out.reshape(d, d))


def apply_channel(state: State, ch: NoiseChannel, qubit: int, compensate: bool = True) -> DensityMatrix:
    """Channel on ``qubit``, identity on the rest of the register."""
    if ch.duration == 0.0:
        return state.density()
    return apply_superoperator(state, channel_superoperator(ch, compensate), qubit)


def hamiltonian(ch: NoiseChannel) -> np.ndarray:
    return 0.5 * ch.omega * SIGMA_Z


def lindblad_operators(ch: NoiseChannel) -> list[np.ndarray]:
    return [
        math.sqrt(g) * s
        for g, s in ((ch.gamma_x, SIGMA_X), (ch.gamma_y, SIGMA_Y), (ch.gamma_z, SIGMA_Z))
        if g > 0
    ]


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, ops: list[np.ndarray]) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for op in ops:
        od = op.conj().T
        odo = od @ op
        out += op @ rho @ od - 0.5 * (odo @ rho + rho @ odo)
    return out


def liouvillian(ch: NoiseChannel) -> np.ndarray:
    """Generator of the master equation on row-major vec(rho), column by column."""
    h, ops = hamiltonian(ch), lindblad_operators(ch)
    cols = []
    for k in range(4):
        e = np.zeros(4, dtype=complex)
        e[k] = 1.0
        cols.append(lindblad_rhs(e.reshape(2, 2), h, ops).reshape(-1))
    return np.array(cols).T


def rk4(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray, t_end: float, step: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta from 0 to ``t_end``."""
    if step <= 0:
        raise ValueError("step must be positive")
    y = np.array(y0, dtype=complex)
    if t_end <= 0:
        return y
    n_full = int(math.floor(t_end / step))
    if abs(t_end - (n_full + 1) * step) <= 1e-12 * t_end:
        n_full += 1
    steps = [step] * n_full
    rest = t_end - n_full * step
    if rest > 1e-12 * t_end:
        steps.append(rest)
    t = 0.0
    for h in steps:
        k1 = f(t, y)
        k2 = f(t + h / 2, y + (h / 2) * k1)
        k3 = f(t + h / 2, y + (h / 2) * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def integrate_lindblad(rho0: State, ch: NoiseChannel, cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """Raw RK4 solution of the master equation, without any final correction."""
    rho0 = rho0.density()
    if rho0.num_qubits != 1:
        raise ValueError("integrate_lindblad acts on a single qubit")
    gen = liouvillian(ch)
    step = min(cfg.step, ch.duration) if ch.duration > 0 else cfg.step
    y = rk4(lambda _t, v: gen @ v, rho0.matrix.reshape(-1), ch.duration, step)
    return y.reshape(2, 2)


def evolve_numerical(rho0: State, ch: NoiseChannel, cfg: IntegratorConfig = IntegratorConfig()) -> DensityMatrix:
    """Numerical master-equation solution (uncompensated), re-Hermitized and trace-normalized."""
    m = hermitize(integrate_lindblad(rho0, ch, cfg))
    return DensityMatrix(m / np.trace(m).real)


def compensate_phase(rho: State, omega: float, t: float) -> DensityMatrix:
    """Undo the Hamiltonian's z rotation by conjugating with R(-omega t).

    The rotation multiplies rho01 by exp(-i omega t); R(phi) multiplies it by
    exp(-i phi), so the cancelling phase is phi = -omega t.
    """
    rho = rho.density()
    if rho.num_qubits != 1:
        raise ValueError("compensate_phase acts on a single qubit")
    if omega * t == 0.0:
        return rho
    return gates.apply_gate(rho, gates.phase_shift(-omega * t), [0])


def t2_from_gamma(gamma_z: float) -> float:
    """T2 = -(1/gamma_z) ln((e - 2)/e), i.e. flip probability (1 - exp(-gamma_z T2))/2 = 1/e."""
    if not gamma_z > 0 or not math.isfinite(gamma_z):
        raise ValueError(f"gamma_z must be positive, got {gamma_z}")
    return -math.log((math.e - 2.0) / math.e) / gamma_z

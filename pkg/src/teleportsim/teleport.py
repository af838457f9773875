"""Teleportation of one qubit over a shared Bell pair, plus a single entanglement swap.

Register layout: qubit 0 holds the input, qubit 1 is Alice's half of the
resource pair and qubit 2 is Bob's half. Noise may be injected at five
points of the pipeline; each configured channel acts on one qubit with
identity elsewhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import gates
from .bloch import fidelity
from .decoherence import NoiseChannel, apply_channel
from .gates import CNOT, H, MeasurementOutcome
from .qmath import DensityMatrix, QubitRegister, State, partial_trace, tensor_product

_SQ2 = 1.0 / np.sqrt(2.0)


class BellState(enum.Enum):
    PHI_PLUS = "phi-plus"
    PHI_MINUS = "phi-minus"
    PSI_PLUS = "psi-plus"
    PSI_MINUS = "psi-minus"

    @classmethod
    def parse(cls, name: "str | BellState") -> "BellState":
        if isinstance(name, BellState):
            return name
        key = name.strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.value.replace("-", ""), member.name.lower().replace("_", "-")):
                return member
        raise ValueError(f"unknown Bell state {name!r}")


_BELL_AMPLITUDES = {
    BellState.PHI_PLUS: [_SQ2, 0, 0, _SQ2],
    BellState.PHI_MINUS: [_SQ2, 0, 0, -_SQ2],
    BellState.PSI_PLUS: [0, _SQ2, _SQ2, 0],
    BellState.PSI_MINUS: [0, _SQ2, -_SQ2, 0],
}


def bell_state(kind: "BellState | str") -> QubitRegister:
    return QubitRegister(_BELL_AMPLITUDES[BellState.parse(kind)])


STAGES = ("input", "epr_alice", "epr_bob", "pre_measure", "post_correction")

# qubits each stage's channel acts on
_STAGE_QUBITS = {
    "input": (0,),
    "epr_alice": (1,),
    "epr_bob": (2,),
    "pre_measure": (0, 1),
    "post_correction": (2,),
}


@dataclass(frozen=True)
class TeleportPipeline:
    """Resource pair, per-stage noise and the phase-compensation mode.

    ``classical_latency`` is carried into trial records only; no timing is simulated.
    """

    resource: BellState = BellState.PHI_PLUS
    stage_noise: Mapping[str, NoiseChannel] = field(default_factory=dict)
    compensate: bool = True
    classical_latency: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "resource", BellState.parse(self.resource))
        noise = {}
        for stage, ch in dict(self.stage_noise).items():
            if stage not in STAGES:
                raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
            if ch is not None:
                if not isinstance(ch, NoiseChannel):
                    raise TypeError(f"stage {stage!r} needs a NoiseChannel, got {type(ch).__name__}")
                noise[stage] = ch
        object.__setattr__(self, "stage_noise", MappingProxyType(noise))

    @property
    def noiseless(self) -> bool:
        return all(ch.is_identity() for ch in self.stage_noise.values())


# Bob's corrections per measured (input qubit, Alice's pair qubit) bits,
# applied left to right. Regenerated by derive_correction_table in the tests.
CORRECTIONS: dict[BellState, dict[str, tuple[str, ...]]] = {
    BellState.PHI_PLUS: {"00": (), "01": ("X",), "10": ("Z",), "11": ("X", "Z")},
    BellState.PHI_MINUS: {"00": ("Z",), "01": ("X", "Z"), "10": (), "11": ("X",)},
    BellState.PSI_PLUS: {"00": ("X",), "01": (), "10": ("X", "Z"), "11": ("Z",)},
    BellState.PSI_MINUS: {"00": ("X", "Z"), "01": ("Z",), "10": ("X",), "11": ()},
}

_CANDIDATES = ((), ("X",), ("Z",), ("X", "Z"))


def _bits_label(bits) -> str:
    label = bits if isinstance(bits, str) else "".join(str(int(b)) for b in bits)
    if label not in ("00", "01", "10", "11"):
        raise ValueError(f"invalid classical bits {bits!r}")
    return label


def correction_table(resource: "BellState | str", bits) -> list[gates.Gate]:
    names = CORRECTIONS[BellState.parse(resource)][_bits_label(bits)]
    return [gates.PAULIS[n] for n in names]


# --- pipeline stages -------------------------------------------------------


def _noisy(state: State, pipeline: TeleportPipeline, stage: str) -> State:
    ch = pipeline.stage_noise.get(stage)
    if ch is None or ch.is_identity():
        return state
    for q in _STAGE_QUBITS[stage]:
        state = apply_channel(state, ch, q, pipeline.compensate)
    return state


def prepare(psi: QubitRegister, resource: "BellState | str") -> QubitRegister:
    """psi ⊗ resource, Alice holding qubits 0 and 1."""
    if not isinstance(psi, QubitRegister) or psi.num_qubits != 1:
        raise ValueError("teleport input must be a single-qubit pure state")
    return tensor_product(psi, bell_state(resource))


def alice_entangle(state: State) -> State:
    return gates.apply_gate(state, CNOT, [0, 1])


def alice_rotate(state: State) -> State:
    return gates.apply_gate(state, H, [0])


def bob_correct(state: State, resource: BellState, bits) -> State:
    for g in correction_table(resource, bits):
        state = gates.apply_gate(state, g, [2])
    return state


def protocol_states(psi: QubitRegister, resource: "BellState | str" = BellState.PHI_PLUS) -> dict[str, QubitRegister]:
    """Noiseless global states: prepared (phi1), after the CNOT (phi2) and after the H (phi3)."""
    phi1 = prepare(psi, resource)
    phi2 = alice_entangle(phi1)
    phi3 = alice_rotate(phi2)
    return {"phi1": phi1, "phi2": phi2, "phi3": phi3}


@dataclass(frozen=True, eq=False)
class TeleportResult:
    classical_bits: str
    output_state: DensityMatrix
    fidelity_to_input: float
    probability: float


def _pre_measurement(psi: QubitRegister, pipeline: TeleportPipeline) -> State:
    state: State = prepare(psi, pipeline.resource)
    for stage in ("input", "epr_alice", "epr_bob"):
        state = _noisy(state, pipeline, stage)
    state = alice_rotate(alice_entangle(state))
    return _noisy(state, pipeline, "pre_measure")


def _finish(psi: QubitRegister, pipeline: TeleportPipeline, outcome: MeasurementOutcome) -> TeleportResult:
    bits = outcome.label
    state = bob_correct(outcome.post_state, pipeline.resource, bits)
    state = _noisy(state, pipeline, "post_correction")
    out = partial_trace(state, [2])
    return TeleportResult(bits, out, fidelity(out, psi), outcome.probability)


def teleport(psi: QubitRegister, pipeline: TeleportPipeline, rng: np.random.Generator) -> TeleportResult:
    """Run the protocol once, sampling Alice's measurement with ``rng``."""
    state = _pre_measurement(psi, pipeline)
    return _finish(psi, pipeline, gates.measure(state, [0, 1], rng))


def teleport_branches(psi: QubitRegister, pipeline: TeleportPipeline) -> list[TeleportResult]:
    """Every measurement branch with non-zero probability, in order 00, 01, 10, 11."""
    state = _pre_measurement(psi, pipeline)
    results = []
    for bits, p in gates.outcome_distribution(state, [0, 1]):
        if p > 0:
            results.append(_finish(psi, pipeline, gates.project(state, [0, 1], bits)))
    return results


def derive_correction_table(resource: "BellState | str", samples: int = 8, seed: int = 0) -> dict[str, tuple[str, ...]]:
    """Brute-force the Pauli correction for each outcome over {I, X, Z, XZ}."""
    resource = BellState.parse(resource)
    rng = np.random.default_rng(seed)
    psis = [QubitRegister.from_amplitudes(rng.normal(size=2) + 1j * rng.normal(size=2), normalize=True) for _ in range(samples)]
    table = {}
    for bits in ("00", "01", "10", "11"):
        winners = []
        for cand in _CANDIDATES:
            ok = True
            for psi in psis:
                phi3 = protocol_states(psi, resource)["phi3"]
                post = gates.project(phi3, [0, 1], [int(b) for b in bits]).post_state
                for name in cand:
                    post = gates.apply_gate(post, gates.PAULIS[name], [2])
                if fidelity(partial_trace(post, [2]), psi) < 1 - 1e-10:
                    ok = False
                    break
            if ok:
                winners.append(cand)
        if len(winners) != 1:
            raise RuntimeError(f"expected a unique correction for {resource.value} {bits}, got {winners}")
        table[bits] = winners[0]
    return table


# --- entanglement swapping -------------------------------------------------


def _swap_state(pair_ab: QubitRegister, pair_cd: QubitRegister) -> QubitRegister:
    for name, pair in (("pair_ab", pair_ab), ("pair_cd", pair_cd)):
        if not isinstance(pair, QubitRegister) or pair.num_qubits != 2:
            raise ValueError(f"{name} must be a 2-qubit pure state")
    state = tensor_product(pair_ab, pair_cd)
    # Bell-basis rotation on the repeater's qubits B (1) and C (2)
    state = gates.apply_gate(state, CNOT, [1, 2])
    return gates.apply_gate(state, H, [1])


def entanglement_swap(pair_ab: QubitRegister, pair_cd: QubitRegister, rng: np.random.Generator) -> tuple[str, DensityMatrix]:
    """Bell measurement on B and C; returns the bits and the reduced state of (A, D)."""
    outcome = gates.measure(_swap_state(pair_ab, pair_cd), [1, 2], rng)
    return outcome.label, partial_trace(outcome.post_state, [0, 3])


def swap_branches(pair_ab: QubitRegister, pair_cd: QubitRegister) -> list[tuple[str, float, DensityMatrix]]:
    state = _swap_state(pair_ab, pair_cd)
    out = []
    for bits, p in gates.outcome_distribution(state, [1, 2]):
        if p > 0:
            post = gates.project(state, [1, 2], bits).post_state
            out.append(("".join(map(str, bits)), p, partial_trace(post, [0, 3])))
    return out


def correct_swap(state_ad: DensityMatrix, bits, resource: "BellState | str" = BellState.PHI_PLUS) -> DensityMatrix:
    """Apply the outcome-indexed Pauli correction to D (qubit 1 of the pair)."""
    for g in correction_table(resource, bits):
        state_ad = gates.apply_gate(state_ad, g, [1])
    return state_ad


def identify_bell_state(state: State) -> tuple[BellState, float]:
    """Closest Bell state by fidelity."""
    scores = [(fidelity(state, bell_state(k)), k) for k in BellState]
    f, k = max(scores, key=lambda s: s[0])
    return k, f


def bell_fidelities(state: State) -> dict[BellState, float]:
    return {k: fidelity(state, bell_state(k)) for k in BellState}

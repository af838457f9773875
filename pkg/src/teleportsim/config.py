"""Input-state specs and the JSON experiment-config schema.

An experiment config is a JSON object::

    {
      "input_state": "zero",            # name, "ar,ai,br,bi", [ar, ai, br, bi] or {"bloch": [x, y, z]}
      "resource": "phi-plus",
      "compensate": true,
      "classical_latency": null,
      "stages": {
        "post_correction": {"gamma_x": 0.2, "gamma_y": 0.0, "gamma_z": 0.2, "omega": 0.0, "t": 1.0}
      },
      "trials": 1000,
      "shots": 8192,
      "seed": 2019,
      "gamma_jitter": 0.0,
      "hist_bin_width": 0.01
    }

A stage may give ``"attenuation": {"x": 0.67, "z": 0.67}`` (plus optional
``"model": "combined"``) instead of explicit rates; the rates are then solved
with :func:`teleportsim.experiment.calibrate_rates` at the stage's ``t``.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from .bloch import bloch_to_ket, density_to_bloch
from .decoherence import NoiseChannel
from .experiment import ExperimentConfig, calibrate_rates
from .qmath import QubitRegister
from .teleport import STAGES, BellState, TeleportPipeline

EXAMPLE_BLOCH = (1 / math.sqrt(2), 1 / math.sqrt(6), 1 / math.sqrt(3))


def example_state() -> QubitRegister:
    """The worked-example qubit sitting at Bloch vector [1/sqrt2, 1/sqrt6, 1/sqrt3]."""
    s3 = math.sqrt(3)
    alpha = math.sqrt((1 + s3) / (2 * s3))
    beta = (1j + s3) / (2 * math.sqrt(3 + s3))
    return QubitRegister.from_amplitudes([alpha, beta], normalize=True)


NAMED_STATES = {
    "zero": lambda: QubitRegister([1, 0]),
    "one": lambda: QubitRegister([0, 1]),
    "plus": lambda: QubitRegister([1 / math.sqrt(2), 1 / math.sqrt(2)]),
    "minus": lambda: QubitRegister([1 / math.sqrt(2), -1 / math.sqrt(2)]),
    "paper-fig6": example_state,
}

NORM_TOL = 1e-6


def _numbers(value) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(",") if p]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"cannot parse state {value!r}") from None
    return [float(v) for v in value]


def parse_state(value) -> QubitRegister:
    """Pure input state from a name, four amplitude numbers, or a unit Bloch vector."""
    if isinstance(value, QubitRegister):
        return value
    if isinstance(value, str) and value.strip().lower() in NAMED_STATES:
        return NAMED_STATES[value.strip().lower()]()
    if isinstance(value, dict):
        if set(value) != {"bloch"}:
            raise ValueError(f"unrecognised state object {value!r}")
        return bloch_to_ket(_numbers(value["bloch"]))
    vals = _numbers(value)
    if len(vals) == 3:
        return bloch_to_ket(vals)
    if len(vals) != 4:
        raise ValueError(f"state needs a name, 4 amplitude numbers or 3 Bloch coordinates, got {value!r}")
    amps = np.array([vals[0] + 1j * vals[1], vals[2] + 1j * vals[3]])
    norm2 = float(np.vdot(amps, amps).real)
    if abs(norm2 - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized: |alpha|^2 + |beta|^2 = {norm2:.9g}")
    # leave near-unit vectors untouched so resolved configs re-parse bit-identically
    return QubitRegister.from_amplitudes(amps, normalize=abs(norm2 - 1.0) > 1e-12)


def parse_bloch(value) -> tuple[float, float, float]:
    """Bloch vector (possibly mixed) from a name, 3 coordinates or 4 amplitude numbers."""
    vals = None if isinstance(value, str) and value.strip().lower() in NAMED_STATES else _numbers(value)
    if vals is not None and len(vals) == 3:
        if not all(math.isfinite(v) for v in vals) or math.sqrt(sum(v * v for v in vals)) > 1 + 1e-10:
            raise ValueError(f"Bloch vector {vals} lies outside the unit ball")
        return tuple(vals)
    return tuple(density_to_bloch(parse_state(value)))


def state_to_json(psi: QubitRegister) -> list[float]:
    a, b = psi.amplitudes
    return [float(a.real), float(a.imag), float(b.real), float(b.imag)]


def resolve_stage(raw: dict) -> dict:
    allowed = {"gamma_x", "gamma_y", "gamma_z", "omega", "t", "attenuation", "model"}
    unknown = set(raw) - allowed
    if unknown:
        raise ValueError(f"unknown stage keys {sorted(unknown)}")
    t = float(raw.get("t", 0.0))
    out = {"gamma_x": 0.0, "gamma_y": 0.0, "gamma_z": 0.0, "omega": float(raw.get("omega", 0.0)), "t": t}
    if "attenuation" in raw:
        if any(k in raw for k in ("gamma_x", "gamma_y", "gamma_z")):
            raise ValueError("give either decay rates or attenuation targets, not both")
        cal = calibrate_rates({k: float(v) for k, v in raw["attenuation"].items()}, t, raw.get("model", "general"))
        out.update(gamma_x=cal.gamma_x, gamma_y=cal.gamma_y, gamma_z=cal.gamma_z)
    else:
        for k in ("gamma_x", "gamma_y", "gamma_z"):
            out[k] = float(raw.get(k, 0.0))
    NoiseChannel(out["gamma_x"], out["gamma_y"], out["gamma_z"], out["omega"], out["t"])
    return out


def resolve_config(raw: dict[str, Any], seed: int | None = None) -> dict[str, Any]:
    """Materialize every default; the result round-trips through :func:`build_config`."""
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    allowed = {"input_state", "resource", "compensate", "classical_latency", "stages", "trials",
               "shots", "seed", "gamma_jitter", "hist_bin_width"}
    unknown = set(raw) - allowed
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")
    if seed is None:
        seed = raw.get("seed")
    if seed is None:
        raise ValueError("an explicit seed is required (--seed or \"seed\" in the config)")
    stages = raw.get("stages") or {}
    for stage in stages:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}; expected one of {list(STAGES)}")
    latency = raw.get("classical_latency")
    return {
        "input_state": state_to_json(parse_state(raw.get("input_state", "zero"))),
        "resource": BellState.parse(raw.get("resource", "phi-plus")).value,
        "compensate": bool(raw.get("compensate", True)),
        "classical_latency": None if latency is None else float(latency),
        "stages": {s: resolve_stage(stages[s]) for s in STAGES if s in stages},
        "trials": int(raw.get("trials", 1000)),
        "shots": int(raw.get("shots", 8192)),
        "seed": int(seed),
        "gamma_jitter": float(raw.get("gamma_jitter", 0.0)),
        "hist_bin_width": float(raw.get("hist_bin_width", 0.01)),
    }


def build_pipeline(resource, stages: dict, compensate: bool = True, classical_latency=None) -> TeleportPipeline:
    noise = {
        s: NoiseChannel(v["gamma_x"], v["gamma_y"], v["gamma_z"], v["omega"], v["t"])
        for s, v in stages.items()
    }
    return TeleportPipeline(BellState.parse(resource), noise, compensate, classical_latency)


def build_config(resolved: dict[str, Any]) -> ExperimentConfig:
    return ExperimentConfig(
        input_state=parse_state(resolved["input_state"]),
        pipeline=build_pipeline(resolved["resource"], resolved["stages"], resolved["compensate"],
                                resolved["classical_latency"]),
        trials=resolved["trials"],
        shots_per_basis=resolved["shots"],
        master_seed=resolved["seed"],
        gamma_jitter=resolved["gamma_jitter"],
    )

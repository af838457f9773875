"""Monte Carlo teleportation campaigns with shot-based Bloch tomography."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import nnls

from . import gates
from .bloch import BlochVector, density_to_bloch
from .qmath import QubitRegister, State
from .teleport import TeleportPipeline, teleport

THREADS_ENV = "TELEPORTSIM_THREADS"
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class ExperimentConfig:
    input_state: QubitRegister
    pipeline: TeleportPipeline
    trials: int
    shots_per_basis: int
    master_seed: int
    # std of per-trial normal jitter on every configured decay rate, clipped at 0
    gamma_jitter: float = 0.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.shots_per_basis < 1:
            raise ValueError("shots_per_basis must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not self.gamma_jitter >= 0:
            raise ValueError("gamma_jitter must be non-negative")


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    classical_bits: str
    estimated_bloch: BlochVector
    exact_bloch: BlochVector
    fidelity: float
    classical_latency: float | None = None


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial_index]))


def _z_basis_rotation(axis: str) -> list[gates.Gate]:
    if axis == "x":
        return [gates.H]
    if axis == "y":
        return [gates.phase_shift(-math.pi / 2), gates.H]
    return []


def estimate_bloch_by_shots(rho: State, shots: int, rng: np.random.Generator) -> BlochVector:
    """Estimate each r_k as the mean +-1 outcome of ``shots`` sigma_k measurements.

    Each shot is an independent copy of ``rho``, rotated into the z basis and
    measured with the same inverse-CDF rule as :func:`gates.measure`; draws are
    taken in x, y, z order.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rho = rho.density()
    if rho.num_qubits != 1:
        raise ValueError("estimate_bloch_by_shots needs a single-qubit state")
    est = []
    for axis in AXES:
        rotated = rho
        for g in _z_basis_rotation(axis):
            rotated = gates.apply_gate(rotated, g, [0])
        p_plus = gates.outcome_distribution(rotated, [0])[0][1]
        n_plus = int(np.count_nonzero(rng.random(shots) < p_plus))
        est.append((2 * n_plus - shots) / shots)
    return BlochVector(*est)


def _jittered(pipeline: TeleportPipeline, sigma: float, rng: np.random.Generator) -> TeleportPipeline:
    noise = {}
    for stage, ch in pipeline.stage_noise.items():
        gx, gy, gz = (max(0.0, g + sigma * rng.standard_normal()) for g in (ch.gamma_x, ch.gamma_y, ch.gamma_z))
        noise[stage] = replace(ch, gamma_x=gx, gamma_y=gy, gamma_z=gz)
    return replace(pipeline, stage_noise=noise)


def run_trial(cfg: ExperimentConfig, index: int) -> TrialRecord:
    rng = trial_rng(cfg.master_seed, index)
    pipeline = cfg.pipeline
    if cfg.gamma_jitter > 0:
        pipeline = _jittered(pipeline, cfg.gamma_jitter, rng)
    result = teleport(cfg.input_state, pipeline, rng)
    exact = density_to_bloch(result.output_state)
    estimated = estimate_bloch_by_shots(result.output_state, cfg.shots_per_basis, rng)
    return TrialRecord(index, result.classical_bits, estimated, exact, result.fidelity_to_input, pipeline.classical_latency)


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[TrialRecord]:
    """All trials in index order; results do not depend on ``workers``."""
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or cfg.trials == 1:
        return [run_trial(cfg, i) for i in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_trial(cfg, i), range(cfg.trials)))


@dataclass(frozen=True, eq=False)
class SummaryStats:
    n: int
    mean: np.ndarray
    std: np.ndarray
    cdf: Mapping[str, tuple[np.ndarray, np.ndarray]]
    correlations: Mapping[str, float]
    exact_mean: np.ndarray = field(default_factory=lambda: np.full(3, np.nan))


def empirical_cdf(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    v = np.sort(np.asarray(values, dtype=float))
    return v, np.arange(1, v.size + 1) / v.size


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    return float(da @ db) / denom if denom > 0 else float("nan")


def summarize(records: Sequence[TrialRecord]) -> SummaryStats:
    """Sample statistics of the estimated coordinates (std uses n - 1)."""
    if not records:
        raise ValueError("summarize needs at least one record")
    est = np.array([r.estimated_bloch for r in records], dtype=float)
    exact = np.array([r.exact_bloch for r in records], dtype=float)
    n = est.shape[0]
    # shifting by the first sample keeps constant columns exact (mean = value, std = 0)
    shifted = est - est[0]
    std = shifted.std(axis=0, ddof=1) if n > 1 else np.zeros(3)
    cdf = {axis: empirical_cdf(est[:, k]) for k, axis in enumerate(AXES)}
    corr = {
        f"{AXES[i]}{AXES[j]}": _pearson(est[:, i], est[:, j]) for i, j in ((0, 1), (0, 2), (1, 2))
    }
    return SummaryStats(n, est[0] + shifted.mean(axis=0), std, cdf, corr, exact.mean(axis=0))


def joint_histogram(records: Sequence[TrialRecord], bin_width: float = 0.01) -> list[tuple[float, float, float, float]]:
    """Occupied bins of the 3-D density of estimated Bloch vectors: (cx, cy, cz, density)."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    est = np.array([r.estimated_bloch for r in records], dtype=float)
    idx = np.floor(est / bin_width + 1e-9).astype(np.int64)
    keys, counts = np.unique(idx, axis=0, return_counts=True)
    scale = 1.0 / (len(records) * bin_width**3)
    return [
        tuple(float((k + 0.5) * bin_width) for k in key) + (float(c * scale),)
        for key, c in zip(keys, counts)
    ]


def calibrate_gamma(attenuation: float, t: float) -> float:
    """Rate gamma with exp(-2 gamma t) == attenuation."""
    if not 0.0 < attenuation <= 1.0:
        raise ValueError(f"attenuation must be in (0, 1], got {attenuation}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return -math.log(attenuation) / (2.0 * t)


@dataclass(frozen=True)
class Calibration:
    gamma_x: float
    gamma_y: float
    gamma_z: float
    fitted: dict[str, float]
    residuals: dict[str, float]


# rows: axis decay exponent / 2 as a sum of rates (gamma_x, gamma_y, gamma_z)
_EXPONENT_ROWS = {"x": (0.0, 1.0, 1.0), "y": (1.0, 0.0, 1.0), "z": (1.0, 1.0, 0.0)}


def calibrate_rates(targets: Mapping[str, float], t: float, model: str = "general") -> Calibration:
    """Non-negative decay rates reproducing per-axis attenuations at time ``t``.

    ``model="general"`` fits all three rates; ``"combined"`` pins gamma_y to 0.
    The fit is a non-negative least-squares solve in log-attenuation space, which
    is exact whenever the targets are consistent with the model.
    """
    if model not in ("general", "combined"):
        raise ValueError(f"unknown model {model!r}")
    axes = [a for a in AXES if a in targets]
    if not axes:
        raise ValueError("no attenuation targets given")
    rates = [calibrate_gamma(targets[a], t) for a in axes]
    a_mat = np.array([_EXPONENT_ROWS[a] for a in axes])
    cols = [0, 1, 2] if model == "general" else [0, 2]
    sol, _ = nnls(a_mat[:, cols], np.array(rates))
    gamma = np.zeros(3)
    gamma[cols] = sol
    # nnls leaves ~1e-17 noise on exactly-zero rates
    gamma[np.abs(gamma) < 1e-15] = 0.0
    fitted = {a: math.exp(-2.0 * t * float(np.dot(_EXPONENT_ROWS[a], gamma))) for a in AXES}
    residuals = {a: fitted[a] - targets[a] for a in axes}
    return Calibration(float(gamma[0]), float(gamma[1]), float(gamma[2]), fitted, residuals)

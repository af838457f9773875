"""Command-line front end: ``teleportsim {teleport,evolve,experiment,calibrate,swap}``.

Exit status is 0 on success and 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bloch import bloch_to_density, density_to_bloch, purity
from .config import build_config, build_pipeline, parse_bloch, parse_state, resolve_config
from .decoherence import NoiseChannel, evolve_bloch
from .experiment import AXES, calibrate_rates, default_workers, joint_histogram, run_experiment, summarize
from .teleport import STAGES, BellState, bell_state, correct_swap, entanglement_swap, identify_bell_state, teleport


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_outputs(out_dir: Path, files: dict[str, str]) -> list[str]:
    """Write every file to a scratch directory first, then move them into place."""
    out_dir.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
    try:
        for name, text in files.items():
            with open(scratch / name, "w", newline="") as fh:
                fh.write(text)
        for name in files:
            os.replace(scratch / name, out_dir / name)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return [str(out_dir / name) for name in files]


def _manifest(command: str, config: dict, seed, outputs: Sequence[str]) -> str:
    doc = {
        "command": command,
        "config": config,
        "master_seed": seed,
        "version": __version__,
        "outputs": list(outputs),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _channel_args(args) -> dict:
    return {
        "gamma_x": args.gamma_x,
        "gamma_y": args.gamma_y,
        "gamma_z": args.gamma_z,
        "omega": args.omega,
        "t": args.t,
    }


# --- teleport --------------------------------------------------------------


def cmd_teleport(args) -> int:
    try:
        psi = parse_state(args.state)
    except ValueError as e:
        raise UsageError(str(e)) from None
    stages = {} if args.noiseless else {args.stage: _channel_args(args)}
    try:
        pipeline = build_pipeline(args.resource, stages, args.compensate)
    except ValueError as e:
        raise UsageError(str(e)) from None
    result = teleport(psi, pipeline, np.random.default_rng(args.seed))
    r = density_to_bloch(result.output_state)
    print(f"bits: {result.classical_bits}")
    print(f"bloch: [{r.x:.6f}, {r.y:.6f}, {r.z:.6f}]")
    print(f"fidelity: {result.fidelity_to_input:.12g}")
    if args.json:
        doc = {
            "bits": result.classical_bits,
            "probability": result.probability,
            "bloch": list(r),
            "fidelity": result.fidelity_to_input,
            "resource": pipeline.resource.value,
            "stages": stages,
            "compensate": args.compensate,
            "seed": args.seed,
        }
        path = Path(args.json)
        write_outputs(path.parent if str(path.parent) else Path("."), {path.name: json.dumps(doc, indent=2) + "\n"})
    return 0


# --- evolve ----------------------------------------------------------------


def _t_grid(args) -> list[float]:
    if args.t_grid:
        try:
            grid = [float(v) for v in args.t_grid.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"cannot parse --t-grid {args.t_grid!r}") from None
    else:
        if args.points < 1:
            raise UsageError("--points must be >= 1")
        grid = [0.0] if args.points == 1 else list(np.linspace(0.0, args.t, args.points))
    if any(not math.isfinite(t) or t < 0 for t in grid):
        raise UsageError("times must be finite and non-negative")
    return grid


def cmd_evolve(args) -> int:
    try:
        r0 = np.array(parse_bloch(args.state))
        base = NoiseChannel(args.gamma_x, args.gamma_y, args.gamma_z, args.omega, 0.0)
    except ValueError as e:
        raise UsageError(str(e)) from None
    grid = _t_grid(args)
    pure = abs(np.linalg.norm(r0) - 1.0) <= 1e-9
    rows = []
    for t in grid:
        r = np.array(evolve_bloch(r0, base.at(t), args.compensate)) if t > 0 else r0
        p = purity(bloch_to_density(r))
        fid = 0.5 * (1.0 + float(r0 @ r)) if pure else float("nan")
        rows.append([fmt(t), fmt(r[0]), fmt(r[1]), fmt(r[2]), fmt(p), fmt(fid)])
    text = _csv(["t", "rx", "ry", "rz", "purity", "fidelity"], rows)
    config = {
        "state": list(map(float, r0)),
        "gamma_x": base.gamma_x,
        "gamma_y": base.gamma_y,
        "gamma_z": base.gamma_z,
        "omega": base.omega,
        "t_grid": [float(t) for t in grid],
        "compensate": args.compensate,
    }
    out_dir = Path(args.out_dir)
    write_outputs(out_dir, {
        "trajectory.csv": text,
        "manifest.json": _manifest("evolve", config, None, [str(out_dir / "trajectory.csv")]),
    })
    print(f"wrote {len(rows)} rows to {out_dir / 'trajectory.csv'}")
    return 0


# --- experiment ------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}") from None


def cmd_experiment(args) -> int:
    raw = _load_json(args.config)
    if isinstance(raw, dict) and raw.get("command") == "experiment" and "config" in raw:
        raw = raw["config"]  # re-run from a manifest
    if isinstance(raw, dict):
        raw = dict(raw)
        if args.trials is not None:
            raw["trials"] = args.trials
        if args.shots is not None:
            raw["shots"] = args.shots
    try:
        resolved = resolve_config(raw, seed=args.seed)
        cfg = build_config(resolved)
        workers = args.threads if args.threads is not None else default_workers()
    except ValueError as e:
        raise UsageError(str(e)) from None

    records = run_experiment(cfg, workers=workers)
    stats = summarize(records)

    trial_rows = [
        [r.trial_index, r.classical_bits, *map(fmt, r.estimated_bloch), *map(fmt, r.exact_bloch), fmt(r.fidelity)]
        for r in records
    ]
    trials_csv = _csv(["trial", "bits", "rx_est", "ry_est", "rz_est", "rx_exact", "ry_exact", "rz_exact", "fidelity"], trial_rows)
    cdf_rows = [
        [axis, fmt(v), fmt(p)]
        for axis in AXES
        for v, p in zip(*stats.cdf[axis])
    ]
    cdf_csv = _csv(["coordinate", "value", "cum_prob"], cdf_rows)
    hist_csv = _csv(["rx", "ry", "rz", "density"], [list(map(fmt, row)) for row in joint_histogram(records, resolved["hist_bin_width"])])

    r_in = np.array(density_to_bloch(cfg.input_state))

    def ratio(m):
        return {a: (_json_safe(float(m[k] / r_in[k])) if abs(r_in[k]) > 1e-12 else None) for k, a in enumerate(AXES)}

    exact_att = ratio(stats.exact_mean)
    summary = {
        "trials": stats.n,
        "shots_per_basis": cfg.shots_per_basis,
        "input_bloch": dict(zip(AXES, map(float, r_in))),
        "mean": dict(zip(AXES, map(float, stats.mean))),
        "std": dict(zip(AXES, map(float, stats.std))),
        "correlations": {k: _json_safe(v) for k, v in stats.correlations.items()},
        "exact_mean": dict(zip(AXES, map(float, stats.exact_mean))),
        "attenuation": {
            "estimated": ratio(stats.mean),
            "exact": exact_att,
            "xz_product": (exact_att["x"] * exact_att["z"]) if exact_att["x"] is not None and exact_att["z"] is not None else None,
        },
    }
    summary_json = json.dumps(summary, indent=2, sort_keys=True) + "\n"

    out_dir = Path(args.out_dir)
    names = ["trials.csv", "cdf.csv", "joint_pdf.csv", "summary.json"]
    files = dict(zip(names, [trials_csv, cdf_csv, hist_csv, summary_json]))
    files["manifest.json"] = _manifest("experiment", resolved, resolved["seed"], [str(out_dir / n) for n in names])
    write_outputs(out_dir, files)
    m, s = stats.mean, stats.std
    print(f"trials: {stats.n}  shots/basis: {cfg.shots_per_basis}")
    for k, a in enumerate(AXES):
        print(f"r{a}: mean {m[k]:.6f}  std {s[k]:.6f}  exact mean {stats.exact_mean[k]:.6f}")
    print(f"wrote {out_dir}")
    return 0


# --- calibrate -------------------------------------------------------------


def cmd_calibrate(args) -> int:
    targets = {a: v for a, v in (("x", args.atten_x), ("y", args.atten_y), ("z", args.atten_z)) if v is not None}
    try:
        cal = calibrate_rates(targets, args.t, args.model)
    except ValueError as e:
        raise UsageError(str(e)) from None
    print(f"gamma_x: {cal.gamma_x:.12g}")
    print(f"gamma_y: {cal.gamma_y:.12g}")
    print(f"gamma_z: {cal.gamma_z:.12g}")
    for a in AXES:
        res = cal.residuals.get(a)
        tail = f"  residual {res:+.6g}" if res is not None else ""
        print(f"attenuation {a}: fitted {cal.fitted[a]:.6g}{tail}")
    return 0


# --- swap ------------------------------------------------------------------


def cmd_swap(args) -> int:
    try:
        ab, cd = BellState.parse(args.resource_ab), BellState.parse(args.resource_cd)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    hist = Counter()
    for i in range(args.runs):
        rng = np.random.default_rng(args.seed if args.runs == 1 else np.random.SeedSequence([args.seed, i]))
        bits, state = entanglement_swap(bell_state(ab), bell_state(cd), rng)
        if args.correct:
            state = correct_swap(state, bits)
        hist[bits] += 1
        if args.runs == 1:
            kind, f = identify_bell_state(state)
            print(f"bits: {bits}")
            print(f"state: {kind.value} (fidelity {f:.12g})")
    if args.runs > 1:
        for bits in ("00", "01", "10", "11"):
            print(f"{bits}: {hist[bits]}")
    return 0


# --- parser ----------------------------------------------------------------


def _add_channel_flags(p):
    for name in ("gamma-x", "gamma-y", "gamma-z"):
        p.add_argument(f"--{name}", type=float, default=0.0, help="decay rate (1/time)")
    p.add_argument("--omega", type=float, default=0.0, help="qubit splitting (rad/time)")
    p.add_argument("--compensate", action=argparse.BooleanOptionalAction, default=True,
                   help="remove the Hamiltonian z rotation (default on)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teleportsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("teleport", help="teleport one qubit")
    p.add_argument("--state", default="zero", help="name (zero, one, plus, minus, paper-fig6), 'ar,ai,br,bi' or 'x,y,z'")
    p.add_argument("--resource", default="phi-plus", help="shared Bell pair")
    p.add_argument("--noiseless", action="store_true", help="ignore every noise flag")
    _add_channel_flags(p)
    p.add_argument("--t", type=float, default=0.0, help="channel duration")
    p.add_argument("--stage", choices=STAGES, default="post_correction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the result to this JSON file")
    p.set_defaults(func=cmd_teleport)

    p = sub.add_parser("evolve", help="Bloch trajectory under a damping channel")
    p.add_argument("--state", default="paper-fig6", help="named state, 'x,y,z' (may be mixed) or 'ar,ai,br,bi'")
    _add_channel_flags(p)
    p.add_argument("--t", type=float, default=1.0, help="end of the time grid")
    p.add_argument("--points", type=int, default=101, help="grid points from 0 to --t")
    p.add_argument("--t-grid", help="explicit comma-separated times (overrides --t/--points)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("experiment", help="Monte Carlo campaign from a JSON config")
    p.add_argument("--config", required=True, help="experiment config or a manifest.json")
    p.add_argument("--seed", type=int, help="master seed (required unless the config has one)")
    p.add_argument("--trials", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--threads", type=int, help="worker threads (default: $TELEPORTSIM_THREADS or all cores)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("calibrate", help="decay rates from per-axis attenuations")
    p.add_argument("--atten-x", type=float)
    p.add_argument("--atten-y", type=float)
    p.add_argument("--atten-z", type=float)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--model", choices=("general", "combined"), default="general")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("swap", help="entanglement swap of two Bell pairs")
    p.add_argument("--resource-ab", default="phi-plus")
    p.add_argument("--resource-cd", default="phi-plus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1, help="repeat with derived seeds and print the outcome histogram")
    p.add_argument("--correct", action="store_true", help="apply the outcome-indexed Pauli correction to D")
    p.set_defaults(func=cmd_swap)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"teleportsim {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

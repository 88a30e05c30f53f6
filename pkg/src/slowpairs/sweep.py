"""Power sweeps: simulate and analyse one row per pump power, and CSV I/O."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analysis
from .detection import analytic_car, overall_efficiency
from .errors import SlowPairsError, UndefinedCARError
from .montecarlo import ExperimentSpec, zwm_run

SWEEP_COLUMNS = (
    "power_w",
    "mu_c_true",
    "mu_s_true",
    "n_sig",
    "n_idl",
    "d_c",
    "d_ca",
    "active_gates_sig",
    "active_gates_idl",
    "duration_s",
    "d_s",
    "d_sa",
    "d_i",
    "d_ia",
    "self_duration_s",
    "mu_c_est",
    "mu_c_sigma",
    "mu_s_est",
    "mu_s_sigma",
    "car_mc",
    "car_mc_sigma",
    "car_analytic",
    "v",
    "v_sigma",
    "v_over_sigma",
)
ZWM_COLUMNS = ("power_w", "v", "v_sigma", "v_over_sigma")


class PointError(SlowPairsError):
    """A sweep point failed; carries the offending power."""

    def __init__(self, power, cause):
        self.power = power
        super().__init__(f"sweep point P = {power!r} W failed: {cause}")


@dataclass(frozen=True)
class SweepRow:
    values: dict

    def __getitem__(self, key):
        return self.values[key]


def run_point(spec: ExperimentSpec, power: float, index: int = 0) -> SweepRow:
    """Simulate the coincidence and both self-correlation runs at one power."""
    try:
        return _run_point(spec.with_power(power), index)
    except (SlowPairsError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise PointError(power, exc) from exc


def _run_point(spec: ExperimentSpec, index: int) -> SweepRow:
    rates = spec.source_rates()
    run = zwm_run(spec, stream=(index,))
    pairs = run.pairs
    det_s, det_i = spec.detection_sig, spec.detection_idl
    eta_s, eta_i = overall_efficiency(det_s), overall_efficiency(det_i)
    gate_s, gate_i = analysis.measured_gate_duty(pairs)
    rep = spec.pump.rep_rate
    nan = math.nan

    if gate_s > 0 and gate_i > 0 and eta_s > 0 and eta_i > 0:
        mu_c_est = analysis.net_pair_rate(pairs, eta_s, gate_s, gate_i, rep, eta_idl=eta_i)
        mu_s_est = analysis.net_singles_rate(
            pairs.n_sig, pairs.duration, eta_s, gate_s, det_s.dark_per_gate, rep, pairs.active_gates_sig
        )
    else:
        mu_c_est = mu_s_est = analysis.EstimateWithError(nan, nan)
    try:
        car_mc = analysis.car(pairs)
    except UndefinedCARError:
        car_mc = analysis.EstimateWithError(nan, nan)
    try:
        car_model = analytic_car(
            rates.mu_c,
            rates.mu_s_sig,
            det_s.dark_per_gate,
            eta_s,
            mu_s_idl=rates.mu_s_idl,
            eta_idl=eta_i,
            dark_idl=det_i.dark_per_gate,
        )
    except UndefinedCARError:
        car_model = nan
    v = analysis.zwm_v(pairs, run.self_sig, run.self_idl)
    return SweepRow(
        {
            "power_w": spec.pump.avg_power,
            "mu_c_true": rates.mu_c,
            "mu_s_true": rates.mu_s_sig,
            "n_sig": pairs.n_sig,
            "n_idl": pairs.n_idl,
            "d_c": pairs.d_c,
            "d_ca": pairs.d_ca,
            "active_gates_sig": pairs.active_gates_sig,
            "active_gates_idl": pairs.active_gates_idl,
            "duration_s": pairs.duration,
            "d_s": run.self_sig.d_self,
            "d_sa": run.self_sig.d_self_a,
            "d_i": run.self_idl.d_self,
            "d_ia": run.self_idl.d_self_a,
            "self_duration_s": run.self_sig.duration,
            "mu_c_est": mu_c_est.value,
            "mu_c_sigma": mu_c_est.sigma,
            "mu_s_est": mu_s_est.value,
            "mu_s_sigma": mu_s_est.sigma,
            "car_mc": car_mc.value,
            "car_mc_sigma": car_mc.sigma,
            "car_analytic": car_model,
            "v": v.value,
            "v_sigma": v.sigma,
            "v_over_sigma": v.significance,
        }
    )


def _run_indexed(args):
    spec, power, index = args
    return run_point(spec, power, index)


def run_sweep(spec: ExperimentSpec, powers, jobs: int = 1) -> list[SweepRow]:
    """Rows in the order of ``powers``; each point uses its own seed stream.

    Results do not depend on ``jobs``.
    """
    tasks = [(spec, p, i) for i, p in enumerate(powers)]
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_indexed(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_indexed, tasks))


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    # repr of a Python float is the shortest round-tripping decimal
    return repr(float(value))


def write_csv(path, rows, columns=SWEEP_COLUMNS):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def read_csv(path) -> list[dict[str, float]]:
    """Read a numeric CSV with a header row into dicts of floats."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        for lineno, rec in enumerate(reader, start=2):
            try:
                rows.append({k: float(v) for k, v in rec.items()})
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{lineno}: non-numeric or missing field") from None
    return rows

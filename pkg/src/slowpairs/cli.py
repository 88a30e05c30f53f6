"""Command-line front end: ``slowpairs {device,sweep,fit,zwm}``."""
from __future__ import annotations

import argparse
import math
import sys

from . import analysis, config as cfgmod
from .detection import click_probability, gate_duty, overall_efficiency
from .device import derive
from .errors import ConfigError, FitError, SlowPairsError
from .source import pair_efficiency, pair_rate, peak_power
from .sweep import ZWM_COLUMNS, read_csv, run_sweep, write_csv

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_RUNTIME = 4
EXIT_IO = 5

_STATS = {"poisson": "poisson", "thermal": "multimode_thermal"}


def _load(args) -> cfgmod.ExperimentConfig:
    conf = cfgmod.load(args.config)
    return conf.with_overrides(
        seed=getattr(args, "seed", None),
        pulses=getattr(args, "pulses", None),
        statistics=_STATS.get(getattr(args, "stats", None) or "", None),
        alpha_scaling=getattr(args, "alpha_scaling", None),
    )


def device_report(conf: cfgmod.ExperimentConfig) -> dict[str, float]:
    spec = conf.spec
    wg, pump = spec.waveguide, spec.pump
    dev = derive(wg, spec.alpha_scaling)
    eta_s = overall_efficiency(spec.detection_sig)
    eta_i = overall_efficiency(spec.detection_idl)
    p_peak = peak_power(pump)
    mu_c = pair_rate(wg.gamma_eff, p_peak, dev.effective_length, spec.channel, pump)
    bw_nm = spec.channel.bandwidth_nm(pump.wavelength)
    dark = spec.detection_sig.dark_per_gate
    return {
        "alpha_per_m": dev.alpha_linear,
        "effective_length_m": dev.effective_length,
        "slowdown": dev.slowdown,
        "eta_sig": eta_s,
        "eta_idl": eta_i,
        "eta_gate_dark_only": gate_duty(click_probability(eta_s, 0.0, dark), spec.detection_sig),
        "peak_power_w": p_peak,
        "mu_c_per_pulse": mu_c,
        "bandwidth_nm": bw_nm,
        "pair_efficiency_per_w2_m2_nm": pair_efficiency(mu_c, p_peak, wg.length, bw_nm),
        "temporal_modes": spec.temporal_modes,
    }


def cmd_device(args) -> int:
    conf = _load(args)
    for key, value in device_report(conf).items():
        print(f"{key} = {value!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    conf = _load(args)
    rows = run_sweep(conf.spec, conf.powers, jobs=args.jobs)
    write_csv(args.out, rows)
    return EXIT_OK


def cmd_zwm(args) -> int:
    conf = _load(args)
    rows = run_sweep(conf.spec, conf.powers, jobs=args.jobs)
    write_csv(args.out, rows, ZWM_COLUMNS)
    return EXIT_OK


def _default_y(model: str) -> str:
    return "mu_c_est" if model == "pure_quadratic" else "mu_s_est"


def _sigma_column(ycol: str, header) -> str | None:
    stem = ycol[: -len("_est")] if ycol.endswith("_est") else ycol
    candidate = stem + "_sigma"
    return candidate if candidate in header else None


def fit_report(rows, model, xcol, ycol, sigma_col=None, conf=None) -> dict[str, float]:
    if len(rows) < 2:
        raise FitError("need at least 2 rows to fit")
    header = rows[0].keys()
    for col in (xcol, ycol) + ((sigma_col,) if sigma_col else ()):
        if col not in header:
            raise FitError(f"column {col!r} not in CSV (have {', '.join(header)})")
    sigma_col = sigma_col or _sigma_column(ycol, header)
    if sigma_col:
        points = [(r[xcol], r[ycol], r[sigma_col]) for r in rows]
    else:
        # noiseless model columns carry no uncertainty; weight points equally
        points = [(r[xcol], r[ycol], 1.0) for r in rows]
    result = analysis.fit(points, model)
    report = {}
    names = ["c"] if model == "pure_quadratic" else ["a", "b"]
    for name, (value, sigma) in zip(names, result.coefficients):
        report[name] = value
        report[name + "_sigma"] = sigma
    report["residual_norm"] = result.residual_norm
    report["weighted"] = 1.0 if sigma_col else 0.0
    if model == "pure_quadratic" and ycol.startswith("mu_c") and conf is not None:
        spec = conf.spec
        l_eff = derive(spec.waveguide, spec.alpha_scaling).effective_length
        c, c_sigma = result.coefficients[0]
        gamma = analysis.gamma_from_fit(c, spec.channel, spec.pump, l_eff)
        report["gamma_eff_per_w_m"] = gamma
        report["gamma_eff_sigma"] = analysis.gamma_sigma(gamma, c, c_sigma)
    return report


def cmd_fit(args) -> int:
    rows = read_csv(args.csv)
    conf = _load(args) if args.config else None
    ycol = args.y or _default_y(args.model)
    report = fit_report(rows, args.model, args.x, ycol, args.sigma, conf)
    print(f"model = {args.model}")
    print(f"columns = {args.x} -> {ycol}")
    for key, value in report.items():
        print(f"{key} = {value!r}")
    return EXIT_OK


def _common(p, *, out=False):
    p.add_argument("--config", required=True, help="TOML config path, or 'crow' / 'reference' for the bundled ones")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--pulses", type=int, help="override run.pulses")
    p.add_argument("--stats", choices=sorted(_STATS), help="pair-number statistics")
    p.add_argument("--alpha-scaling", choices=["fixed", "proportional-s"], dest="alpha_scaling")
    if out:
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowpairs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("device", help="print derived device and detection parameters")
    _common(p)
    p.set_defaults(func=cmd_device)

    p = sub.add_parser("sweep", help="simulate a power sweep and write the full CSV")
    _common(p, out=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("zwm", help="simulate a power sweep and write P, V, sigma, V/sigma")
    _common(p, out=True)
    p.set_defaults(func=cmd_zwm)

    p = sub.add_parser("fit", help="fit mu(P) from a sweep CSV")
    p.add_argument("csv", help="CSV with a header row, e.g. sweep output")
    p.add_argument("--model", choices=analysis.FIT_MODELS, default="pure_quadratic")
    p.add_argument("--x", default="power_w", help="abscissa column (W)")
    p.add_argument("--y", help="ordinate column (default mu_c_est or mu_s_est)")
    p.add_argument("--sigma", help="uncertainty column (default <y stem>_sigma if present)")
    p.add_argument("--config", help="config used to convert the P^2 coefficient into gamma_eff")
    p.add_argument("--alpha-scaling", choices=["fixed", "proportional-s"], dest="alpha_scaling")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SlowPairsError, ValueError, ZeroDivisionError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

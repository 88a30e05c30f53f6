"""Estimators that turn raw counts into physical rates, plus the power-law fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FitError, UndefinedCARError
from .montecarlo import RawCounts, SelfCorrCounts
from .source import ChannelSpec, PumpSpec

FIT_MODELS = ("pure_quadratic", "poly2_no_constant")


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0 and not math.isnan(self.sigma):
            raise ValueError("sigma must be >= 0")

    @property
    def negative(self) -> bool:
        """Flag for net rates that came out below zero (kept unclamped)."""
        return self.value < 0

    @property
    def significance(self) -> float:
        if self.sigma == 0:
            return 0.0 if self.value == 0 else math.copysign(math.inf, self.value)
        return self.value / self.sigma


@dataclass(frozen=True)
class FitResult:
    coefficients: list[tuple[float, float]]  # (value, sigma)
    residual_norm: float
    model: str

    def __post_init__(self):
        expected = {"pure_quadratic": 1, "poly2_no_constant": 2}[self.model]
        if len(self.coefficients) != expected:
            raise ValueError(f"{self.model} has {expected} coefficient(s)")


def _duty(active_gates: int, pulses: int) -> float:
    return active_gates / pulses if pulses else 0.0


def measured_gate_duty(counts: RawCounts) -> tuple[float, float]:
    """Active-gate fractions of the signal and idler detectors in this run."""
    return _duty(counts.active_gates_sig, counts.pulses), _duty(counts.active_gates_idl, counts.pulses)


def net_pair_rate(counts: RawCounts, eta, eta_gate_sig, eta_gate_idl, rep_rate, eta_idl=None) -> EstimateWithError:
    """Pairs per pulse from coincidences minus accidentals."""
    if counts.duration <= 0:
        raise ValueError("duration must be > 0")
    eta_i = eta if eta_idl is None else eta_idl
    scale = counts.duration * rep_rate * eta * eta_i * eta_gate_sig * eta_gate_idl
    if scale == 0:
        raise ZeroDivisionError("zero detection efficiency; pair rate undefined")
    return EstimateWithError(
        (counts.d_c - counts.d_ca) / scale,
        math.sqrt(counts.d_c + counts.d_ca) / scale,
    )


def net_singles_rate(n_raw, duration, eta, eta_gate, dark, rep_rate, active_gates=None) -> EstimateWithError:
    """Photons per pulse in one channel, dark counts removed.

    ``active_gates`` defaults to ``eta_gate * rep_rate * duration``.
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if active_gates is None:
        active_gates = eta_gate * rep_rate * duration
    scale = duration * rep_rate * eta * eta_gate
    if scale == 0:
        raise ZeroDivisionError("zero detection efficiency; singles rate undefined")
    return EstimateWithError((n_raw - dark * active_gates) / scale, math.sqrt(n_raw) / scale)


def car(counts: RawCounts) -> EstimateWithError:
    if counts.d_ca == 0:
        raise UndefinedCARError("no accidental coincidences recorded")
    value = counts.d_c / counts.d_ca
    sigma = value * math.sqrt((1.0 / counts.d_c if counts.d_c else 0.0) + 1.0 / counts.d_ca)
    return EstimateWithError(value, sigma)


def zwm_v(pairs: RawCounts, self_sig: SelfCorrCounts, self_idl: SelfCorrCounts) -> EstimateWithError:
    """Zou-Wang-Mandel parameter in counts per second; V > 0 is non-classical.

    Each of the six raw counts is treated as an independent Poisson variable.
    """
    tp, ts, ti = pairs.duration, self_sig.duration, self_idl.duration
    if min(tp, ts, ti) <= 0:
        raise ValueError("all runs need a positive duration")
    value = (pairs.d_c - pairs.d_ca) / tp - 2.0 * (
        (self_sig.d_self - self_sig.d_self_a) / ts + (self_idl.d_self - self_idl.d_self_a) / ti
    )
    var = (
        (pairs.d_c + pairs.d_ca) / tp**2
        + 4.0 * (self_sig.d_self + self_sig.d_self_a) / ts**2
        + 4.0 * (self_idl.d_self + self_idl.d_self_a) / ti**2
    )
    return EstimateWithError(value, math.sqrt(var))


def replicate_estimate(values: Iterable[float]) -> EstimateWithError:
    """Mean and sample standard deviation over independent repetitions (e.g. seeds)."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size < 2:
        raise ValueError("need at least two replicates")
    return EstimateWithError(float(arr.mean()), float(arr.std(ddof=1)))


def _points(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise FitError("points must be (P, mu, sigma) triples")
    x, y, s = arr.T
    if not np.all(np.isfinite(arr)):
        raise FitError("non-finite values in fit input")
    if np.any(s <= 0):
        raise FitError("every point needs a positive sigma")
    return x, y, s


def fit_pure_quadratic(points: Sequence[tuple[float, float, float]]) -> FitResult:
    """Weighted least squares for ``mu = c P**2``."""
    x, y, s = _points(points)
    if len(x) < 2:
        raise FitError("need at least 2 points")
    w = 1.0 / s**2
    sxx = float(np.sum(w * x**4))
    if sxx == 0:
        raise FitError("all abscissae are zero")
    c = float(np.sum(w * y * x**2)) / sxx
    resid = y - c * x**2
    return FitResult([(c, math.sqrt(1.0 / sxx))], float(math.sqrt(np.sum(w * resid**2))), "pure_quadratic")


def fit_poly2(points: Sequence[tuple[float, float, float]]) -> FitResult:
    """Weighted least squares for ``mu = a P + b P**2`` (no constant term)."""
    x, y, s = _points(points)
    if len(np.unique(x[x != 0])) < 2:
        raise FitError("need at least 2 distinct nonzero abscissae")
    w = 1.0 / s**2
    normal = np.array(
        [
            [np.sum(w * x**2), np.sum(w * x**3)],
            [np.sum(w * x**3), np.sum(w * x**4)],
        ]
    )
    rhs = np.array([np.sum(w * y * x), np.sum(w * y * x**2)])
    # column scaling keeps the 2x2 system well conditioned for P ~ 1e-4 W
    scale = np.sqrt(np.diag(normal))
    scaled = normal / np.outer(scale, scale)
    if np.linalg.cond(scaled) > 1e12:
        raise FitError("normal equations are singular")
    coef = np.linalg.solve(scaled, rhs / scale) / scale
    cov = np.linalg.inv(scaled) / np.outer(scale, scale)
    resid = y - coef[0] * x - coef[1] * x**2
    return FitResult(
        [(float(coef[0]), math.sqrt(cov[0, 0])), (float(coef[1]), math.sqrt(cov[1, 1]))],
        float(math.sqrt(np.sum(w * resid**2))),
        "poly2_no_constant",
    )


def fit(points, model: str) -> FitResult:
    if model == "pure_quadratic":
        return fit_pure_quadratic(points)
    if model == "poly2_no_constant":
        return fit_poly2(points)
    raise ValueError(f"unknown model {model!r}; choose from {FIT_MODELS}")


def gamma_from_fit(c: float, channel: ChannelSpec, pump: PumpSpec, l_eff: float) -> float:
    """Nonlinear coefficient (1/W/m) from the P**2 prefactor of the pair rate."""
    if c <= 0:
        raise ValueError(f"quadratic coefficient must be positive, got {c}")
    if l_eff <= 0:
        raise ValueError("effective length must be positive")
    dt = pump.pulse_width
    return math.sqrt(c / (channel.bandwidth_hz * dt)) * pump.rep_rate * dt / l_eff


def gamma_sigma(gamma: float, c: float, c_sigma: float) -> float:
    """Standard error of gamma propagated from that of ``c`` (gamma ~ sqrt(c))."""
    return gamma * c_sigma / (2.0 * c)

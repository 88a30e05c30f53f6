"""Closed-form model of the gated detection chain."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .device import db_to_linear
from .errors import UndefinedCARError, ValidityError

# first-order Poisson expansion is trusted below this per-gate click probability
MAX_ANALYTIC_GATE_PROB = 0.1


@dataclass(frozen=True)
class DetectionSpec:
    coupling_db: float  # output facet, <= 0
    filter_db: float  # filtration stack, <= 0
    quantum_efficiency: float
    gate_rate: float  # Hz, locked to the pump repetition rate
    gate_width: float  # s
    dark_per_gate: float
    dead_time: float  # s

    def __post_init__(self):
        if self.coupling_db > 0 or self.filter_db > 0:
            raise ValidityError("coupling_db and filter_db are efficiencies and must be <= 0 dB")
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise ValidityError("quantum_efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_per_gate < 1.0:
            raise ValidityError("dark_per_gate must lie in [0, 1)")
        if self.dead_time < 0:
            raise ValidityError("dead_time must be >= 0")
        if self.gate_rate <= 0 or self.gate_width <= 0:
            raise ValidityError("gate_rate and gate_width must be positive")
        if self.gate_width * self.gate_rate > 1.0:
            raise ValidityError("gate_width*gate_rate must not exceed 1")

    @property
    def dead_gates(self) -> int:
        """Gates blanked after each detection."""
        return round(self.dead_time * self.gate_rate)

    @property
    def transmission(self) -> float:
        """Coupling times filter transmission, i.e. the efficiency before the detector."""
        return db_to_linear(self.coupling_db) * db_to_linear(self.filter_db)


@dataclass(frozen=True)
class EfficiencyStack:
    eta: float
    eta_gate: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValidityError("eta must lie in [0, 1]")
        if not 0.0 < self.eta_gate <= 1.0:
            raise ValidityError("eta_gate must lie in (0, 1]")


@dataclass(frozen=True)
class ExpectedRates:
    singles_sig: float  # 1/s
    singles_idl: float
    coinc: float  # same-gate, accidentals included
    accidental: float  # +1 gate offset

    @property
    def car(self) -> float:
        if self.accidental == 0:
            raise UndefinedCARError("no accidental coincidences expected")
        return self.coinc / self.accidental


def overall_efficiency(spec: DetectionSpec) -> float:
    return spec.transmission * spec.quantum_efficiency


def gate_duty(fire_prob_per_gate: float, spec: DetectionSpec) -> float:
    """Fraction of gates that are active when every firing blanks the next gates.

    ``fire_prob_per_gate`` is the firing probability of an active gate. Each
    renewal cycle has on average ``1/p`` active gates followed by ``d`` dead ones.
    """
    p = fire_prob_per_gate
    if not 0.0 <= p < 1.0:
        raise ValueError(f"firing probability must lie in [0, 1), got {p}")
    return 1.0 / (1.0 + p * spec.dead_gates)


def click_probability(eta: float, mu: float, dark: float) -> float:
    """First-order per-gate firing probability for ``mu`` photons/pulse."""
    return eta * mu + dark


def efficiency_stack(spec: DetectionSpec, mu_s: float) -> EfficiencyStack:
    """Efficiency stack with the gate duty evaluated at the channel's first-order click rate."""
    eta = overall_efficiency(spec)
    p = click_probability(eta, mu_s, spec.dark_per_gate)
    if p >= 1.0:
        raise ValidityError(f"per-gate click probability {p:.3g} is not below 1")
    return EfficiencyStack(eta, gate_duty(p, spec))


def analytic_rates(
    mu_c,
    mu_s_sig,
    mu_s_idl,
    eff_sig: EfficiencyStack,
    eff_idl: EfficiencyStack,
    dark,
    rep_rate,
    dark_idl=None,
) -> ExpectedRates:
    """First-order expected singles, coincidence and accidental rates per second.

    ``dark`` applies to both channels unless ``dark_idl`` is given.
    """
    dark_sig = dark
    dark_idl = dark if dark_idl is None else dark_idl
    p_sig = click_probability(eff_sig.eta, mu_s_sig, dark_sig)
    p_idl = click_probability(eff_idl.eta, mu_s_idl, dark_idl)
    for name, p in (("signal", p_sig), ("idler", p_idl)):
        if p >= MAX_ANALYTIC_GATE_PROB:
            raise ValidityError(
                f"{name} per-gate click probability {p:.3g} >= {MAX_ANALYTIC_GATE_PROB}; "
                "saturation regime is not covered by the analytic model"
            )
    both_active = rep_rate * eff_sig.eta_gate * eff_idl.eta_gate
    accidental = both_active * p_sig * p_idl
    true = both_active * eff_sig.eta * eff_idl.eta * mu_c
    return ExpectedRates(
        singles_sig=rep_rate * eff_sig.eta_gate * p_sig,
        singles_idl=rep_rate * eff_idl.eta_gate * p_idl,
        coinc=true + accidental,
        accidental=accidental,
    )


def analytic_car(mu_c, mu_s, dark, eta, *, mu_s_idl=None, eta_idl=None, dark_idl=None) -> float:
    """CAR = 1 + eta^2 mu_c / (eta mu_s + mu_d)^2.

    The idler keywords give the two-channel generalisation; by default the
    idler is taken identical to the signal.
    """
    mu_i = mu_s if mu_s_idl is None else mu_s_idl
    eta_i = eta if eta_idl is None else eta_idl
    dark_i = dark if dark_idl is None else dark_idl
    denom = (eta * mu_s + dark) * (eta_i * mu_i + dark_i)
    if denom <= 0:
        raise UndefinedCARError("eta*mu_s + mu_d vanishes; CAR is undefined")
    return 1.0 + eta * eta_i * mu_c / denom

"""Photon generation at the waveguide output.

Correlated pairs follow the spontaneous four-wave-mixing closed form; uncorrelated
noise photons follow a phenomenological ``a P + b P**2`` law in the average
coupled pump power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ValidityError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PumpSpec:
    wavelength: float  # m
    avg_power: float  # W, coupled
    rep_rate: float  # Hz
    pulse_width: float  # s, FWHM

    def __post_init__(self):
        for name in ("wavelength", "avg_power", "rep_rate", "pulse_width"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValidityError(f"pump {name} must be positive and finite, got {v}")
        if self.rep_rate * self.pulse_width >= 1.0:
            raise ValidityError("pump duty cycle rep_rate*pulse_width must be below 1")

    def with_power(self, avg_power: float) -> "PumpSpec":
        return PumpSpec(self.wavelength, avg_power, self.rep_rate, self.pulse_width)


@dataclass(frozen=True)
class ChannelSpec:
    bandwidth_hz: float
    detuning_hz: float
    fwm_half_bandwidth_hz: float

    def __post_init__(self):
        for name in ("bandwidth_hz", "detuning_hz", "fwm_half_bandwidth_hz"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValidityError(f"channel {name} must be positive and finite, got {v}")

    @property
    def within_gain_bandwidth(self) -> bool:
        return self.detuning_hz <= self.fwm_half_bandwidth_hz

    def bandwidth_nm(self, wavelength: float) -> float:
        """Filter bandwidth converted to wavelength units at ``wavelength`` (m)."""
        return wavelength**2 * self.bandwidth_hz / SPEED_OF_LIGHT * 1e9

    def temporal_modes(self, pulse_width: float) -> int:
        return max(1, round(self.bandwidth_hz * pulse_width))


@dataclass(frozen=True)
class NoiseModel:
    linear_coeff: float = 0.0  # photons/pulse per W
    quadratic_coeff: float = 0.0  # photons/pulse per W^2

    def __post_init__(self):
        if not (self.linear_coeff >= 0 and self.quadratic_coeff >= 0):
            raise ValidityError("noise coefficients must be >= 0")


class SinglesRate(NamedTuple):
    total: float  # mu_s, photons/pulse in the channel
    noise: float  # part not belonging to pairs


def peak_power(pump: PumpSpec) -> float:
    return pump.avg_power / (pump.rep_rate * pump.pulse_width)


def pair_rate(gamma_eff, p_peak, l_eff, channel: ChannelSpec, pump: PumpSpec) -> float:
    """Mean number of signal/idler pairs per pulse in the filter band."""
    if not channel.within_gain_bandwidth:
        raise ValidityError(
            f"pump-signal detuning {channel.detuning_hz:g} Hz exceeds the FWM gain "
            f"half-bandwidth {channel.fwm_half_bandwidth_hz:g} Hz; closed form does not apply"
        )
    if gamma_eff < 0 or p_peak < 0 or l_eff <= 0:
        raise ValueError("need gamma_eff >= 0, p_peak >= 0, l_eff > 0")
    return channel.bandwidth_hz * pump.pulse_width * (gamma_eff * p_peak * l_eff) ** 2


def singles_rate(mu_c: float, noise: NoiseModel, avg_power: float) -> SinglesRate:
    if mu_c < 0 or avg_power < 0:
        raise ValueError("mu_c and avg_power must be >= 0")
    total = noise.linear_coeff * avg_power + noise.quadratic_coeff * avg_power**2
    return SinglesRate(total, max(total - mu_c, 0.0))


def pair_efficiency(mu_c: float, p_peak: float, length: float, bandwidth_nm: float) -> float:
    """Pairs per pulse normalised by peak power squared, device length squared and bandwidth."""
    if p_peak <= 0 or length <= 0 or bandwidth_nm <= 0:
        raise ValueError("p_peak, length and bandwidth must be positive")
    return mu_c / (p_peak**2 * length**2 * bandwidth_nm)

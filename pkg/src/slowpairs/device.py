"""Waveguide-level quantities: dB conversions, loss, effective length, slowdown."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidityError

LN10_OVER_10 = math.log(10.0) / 10.0


def _finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def db_to_linear(db: float) -> float:
    """Power ratio for a value in dB (negative dB is a loss)."""
    _finite("db", db)
    return 10.0 ** (db / 10.0)


def attenuation_coefficient(alpha_db: float) -> float:
    """Convert a dB-per-metre power loss to the natural-log coefficient (1/m)."""
    _finite("alpha_db", alpha_db)
    if alpha_db < 0:
        raise ValueError(f"loss must be given as a nonnegative dB/m value, got {alpha_db}")
    return alpha_db * LN10_OVER_10


def effective_length(alpha: float, length: float) -> float:
    """Loss-weighted interaction length (1 - exp(-alpha L)) / alpha.

    The lossless case returns ``length`` exactly.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if length <= 0:
        raise ValueError(f"length must be > 0, got {length}")
    if alpha == 0.0:
        return float(length)
    x = alpha * length
    if x < 1e-6:
        # series form; also safe for subnormal alpha where expm1 underflows
        return length * (1.0 - x / 2.0 + x * x / 6.0)
    return -math.expm1(-x) / alpha


def slowdown_factor(n_g: float, n: float) -> float:
    if not (n_g >= n >= 1.0):
        raise ValidityError(f"need group_index >= phase_index >= 1, got n_g={n_g}, n={n}")
    return n_g / n


def rescale_gamma(gamma_base: float, s_base: float, s_target: float) -> float:
    """Scale a nonlinear coefficient to another slowdown factor at equal mode area."""
    if gamma_base <= 0 or s_base <= 0 or s_target <= 0:
        raise ValueError("gamma and slowdown factors must be positive")
    return gamma_base * (s_target / s_base) ** 2


@dataclass(frozen=True)
class WaveguideSpec:
    length: float  # m
    alpha_db: float  # dB/m, positive loss
    group_index: float
    phase_index: float
    gamma_eff: float  # 1/(W m)
    coupling_db: float = 0.0  # per facet, <= 0
    # group index of the guide on which alpha_db was measured; used by the
    # proportional-S loss variant
    alpha_ref_group_index: float | None = None

    def __post_init__(self):
        for name in ("length", "alpha_db", "group_index", "phase_index", "gamma_eff", "coupling_db"):
            _finite(name, getattr(self, name))
        if self.length <= 0:
            raise ValidityError("waveguide length must be > 0")
        if self.alpha_db < 0:
            raise ValidityError("alpha_db must be >= 0")
        if not (self.group_index >= self.phase_index >= 1.0):
            raise ValidityError("need group_index >= phase_index >= 1")
        if self.gamma_eff < 0:
            raise ValidityError("gamma_eff must be >= 0")
        if self.coupling_db > 0:
            raise ValidityError("coupling_db is an efficiency and must be <= 0 dB")
        if self.alpha_ref_group_index is not None and self.alpha_ref_group_index <= 0:
            raise ValidityError("alpha_ref_group_index must be > 0")


@dataclass(frozen=True)
class DerivedDevice:
    alpha_linear: float  # 1/m
    effective_length: float  # m
    slowdown: float


ALPHA_SCALINGS = ("fixed", "proportional-s")


def scaled_alpha_db(wg: WaveguideSpec, alpha_scaling: str = "fixed") -> float:
    """Loss in dB/m, optionally scaled linearly with the slowdown factor.

    ``proportional-s`` treats ``alpha_db`` as measured on a guide with group
    index ``alpha_ref_group_index`` at the same phase index.
    """
    if alpha_scaling == "fixed":
        return wg.alpha_db
    if alpha_scaling == "proportional-s":
        if wg.alpha_ref_group_index is None:
            raise ValidityError("proportional-s loss scaling needs alpha_ref_group_index")
        return wg.alpha_db * wg.group_index / wg.alpha_ref_group_index
    raise ValueError(f"unknown alpha scaling {alpha_scaling!r}; choose from {ALPHA_SCALINGS}")


def derive(wg: WaveguideSpec, alpha_scaling: str = "fixed") -> DerivedDevice:
    alpha = attenuation_coefficient(scaled_alpha_db(wg, alpha_scaling))
    return DerivedDevice(
        alpha_linear=alpha,
        effective_length=effective_length(alpha, wg.length),
        slowdown=slowdown_factor(wg.group_index, wg.phase_index),
    )

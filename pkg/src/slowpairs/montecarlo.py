"""Pulse-by-pulse Monte Carlo of the coincidence and self-correlation measurements.

Time is discrete: gate ``t`` is the detector gate synchronised with pump pulse
``t``. Each physical detector receives two kinds of firing candidates:

* an uncorrelated background (noise photons plus dark counts), an i.i.d.
  Bernoulli process over gates, generated sparsely from geometric gaps;
* correlated events produced by photon pairs, shared between detectors.

The union of candidates is passed through the dead-time kernel, which keeps a
candidate only if the detector is armed. Click indicators drawn this way have
exactly the distribution obtained by sampling every photon and thinning it
with the detection efficiency, but the cost scales with the number of clicks
rather than the number of pulses.

Determinism: gates are processed in blocks of ``CHUNK_GATES``. Block ``j`` of
stream ``s`` draws from ``SeedSequence(seed, spawn_key=(*prefix, s, j))``, and
dead-time state is carried from block to block, so results depend only on the
seed, the stream prefix and the block size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import kernels
from .detection import DetectionSpec, overall_efficiency
from .device import WaveguideSpec, derive
from .errors import ValidityError
from .source import ChannelSpec, NoiseModel, PumpSpec, pair_rate, peak_power, singles_rate

STATISTICS = ("poisson", "multimode_thermal")
CHUNK_GATES = 1 << 27
MAX_PULSES = 1 << 62

# stream identifiers within one run
_SOURCE_STREAM = 0
# run identifiers within one experiment
PAIRS_RUN, SELF_SIG_RUN, SELF_IDL_RUN = 0, 1, 2


@dataclass(frozen=True)
class SourceRates:
    """Mean photon numbers per pulse at the waveguide output."""

    mu_c: float
    mu_s_sig: float
    mu_s_idl: float

    def __post_init__(self):
        if min(self.mu_c, self.mu_s_sig, self.mu_s_idl) < 0:
            raise ValidityError("photon rates must be >= 0")

    # Channels carry mu_c pair photons plus max(mu_s - mu_c, 0) noise photons.
    @property
    def mu_n_sig(self) -> float:
        return max(self.mu_s_sig - self.mu_c, 0.0)

    @property
    def mu_n_idl(self) -> float:
        return max(self.mu_s_idl - self.mu_c, 0.0)


@dataclass(frozen=True)
class ExperimentSpec:
    waveguide: WaveguideSpec
    pump: PumpSpec
    channel: ChannelSpec
    noise: NoiseModel
    detection_sig: DetectionSpec
    detection_idl: DetectionSpec
    pulses: int
    seed: int = 0
    marginal_statistics: str = "poisson"
    noise_idl: NoiseModel | None = None
    alpha_scaling: str = "fixed"
    self_duration_factor: float = 2.0
    classical_surrogate: bool = False

    def __post_init__(self):
        if not 1 <= self.pulses < MAX_PULSES:
            raise ValidityError(f"pulses must lie in [1, 2**62), got {self.pulses}")
        if self.marginal_statistics not in STATISTICS:
            raise ValidityError(f"marginal_statistics must be one of {STATISTICS}")
        if self.self_duration_factor <= 0:
            raise ValidityError("self_duration_factor must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValidityError("seed must be a 64-bit unsigned integer")

    @property
    def self_pulses(self) -> int:
        return max(1, round(self.pulses * self.self_duration_factor))

    @property
    def temporal_modes(self) -> int:
        return self.channel.temporal_modes(self.pump.pulse_width)

    def with_power(self, avg_power: float) -> "ExperimentSpec":
        return replace(self, pump=self.pump.with_power(avg_power))

    def source_rates(self) -> SourceRates:
        dev = derive(self.waveguide, self.alpha_scaling)
        mu_c = pair_rate(
            self.waveguide.gamma_eff, peak_power(self.pump), dev.effective_length, self.channel, self.pump
        )
        noise_idl = self.noise if self.noise_idl is None else self.noise_idl
        mu_s_sig = singles_rate(mu_c, self.noise, self.pump.avg_power).total
        mu_s_idl = singles_rate(mu_c, noise_idl, self.pump.avg_power).total
        return SourceRates(mu_c, mu_s_sig, mu_s_idl)


@dataclass(frozen=True)
class RawCounts:
    n_sig: int
    n_idl: int
    d_c: int  # same-gate coincidences
    d_ca: int  # signal at t, idler at t+1
    active_gates_sig: int
    active_gates_idl: int
    duration: float  # s
    pulses: int

    def __post_init__(self):
        if min(self.n_sig, self.n_idl, self.d_c, self.d_ca) < 0:
            raise ValueError("counts must be >= 0")
        if max(self.d_c, self.d_ca) > min(self.n_sig, self.n_idl):
            raise ValueError("coincidences cannot exceed singles")
        if max(self.active_gates_sig, self.active_gates_idl) > self.pulses:
            raise ValueError("active gates cannot exceed pulses")


@dataclass(frozen=True)
class SelfCorrCounts:
    d_self: int
    d_self_a: int
    duration: float
    n_a: int = 0
    n_b: int = 0
    active_gates_a: int = 0
    active_gates_b: int = 0
    pulses: int = 0

    def __post_init__(self):
        if min(self.d_self, self.d_self_a, self.n_a, self.n_b) < 0:
            raise ValueError("counts must be >= 0")


@dataclass(frozen=True)
class ZWMRun:
    pairs: RawCounts
    self_sig: SelfCorrCounts
    self_idl: SelfCorrCounts


# --------------------------------------------------------------------------
# sampling helpers


def bernoulli_positions(rng: np.random.Generator, n: int, q: float) -> np.ndarray:
    """Sorted indices in ``range(n)`` of successes of ``n`` Bernoulli(q) trials."""
    if n <= 0 or q <= 0.0:
        return np.empty(0, dtype=np.int64)
    if q >= 1.0:
        return np.arange(n, dtype=np.int64)
    parts = []
    last = -1
    while True:
        expected = (n - 1 - last) * q
        size = int(expected + 6.0 * math.sqrt(expected) + 16)
        idx = last + np.cumsum(rng.geometric(q, size), dtype=np.int64)
        inside = idx[idx < n]
        parts.append(inside)
        if len(inside) < len(idx):
            break
        last = int(idx[-1])
    return np.concatenate(parts)


class ThermalPairCounts:
    """Pair number per pulse: sum of ``modes`` geometric modes of total mean ``mu``.

    ``draw_nonzero`` samples from the distribution conditioned on at least one
    pair, by inverse transform over a tabulated CDF.
    """

    def __init__(self, mu: float, modes: int):
        self.mu = mu
        self.modes = modes
        dist = stats.nbinom(modes, modes / (modes + mu))
        kmax = max(4, int(dist.isf(1e-18)) + 2)
        sf = dist.sf(np.arange(kmax + 1))
        # P(K > j | K >= 1) for j >= 1, decreasing
        self._tail = sf[1:] / sf[0]

    @property
    def p_nonzero(self) -> float:
        return -math.expm1(self.modes * math.log(self.modes / (self.modes + self.mu)))

    def draw_nonzero(self, rng: np.random.Generator, size: int) -> np.ndarray:
        v = 1.0 - rng.random(size)
        return 1 + np.searchsorted(-self._tail, -v, side="right").astype(np.int64)


def _no_click_prob(mu_detected: float, dark: float) -> float:
    return (1.0 - dark) * math.exp(-mu_detected)


@dataclass
class _Arm:
    background: float  # per-gate probability of an uncorrelated firing
    dead_gates: int


# correlated(rng, n) -> (local positions, clicks with shape (n_arms, len(positions)))
Correlated = Callable[[np.random.Generator, int], "tuple[np.ndarray, np.ndarray]"]


def _stream(seed: int, prefix: Sequence[int], stream: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(*prefix, stream, chunk))
    return np.random.default_rng(ss)


def _run_arms(
    n_gates: int,
    arms: list[_Arm],
    correlated: Correlated | None,
    seed: int,
    prefix: Sequence[int],
) -> list[np.ndarray]:
    """Accepted firing gates of each arm after dead time."""
    next_free = [0] * len(arms)
    accepted: list[list[np.ndarray]] = [[] for _ in arms]
    for chunk, start in enumerate(range(0, n_gates, CHUNK_GATES)):
        n = min(CHUNK_GATES, n_gates - start)
        if correlated is not None:
            pos, clicks = correlated(_stream(seed, prefix, _SOURCE_STREAM, chunk), n)
        for a, arm in enumerate(arms):
            rng = _stream(seed, prefix, a + 1, chunk)
            cand = bernoulli_positions(rng, n, arm.background)
            if correlated is not None and len(pos):
                cand = np.union1d(cand, pos[clicks[a]])
            cand = cand + start
            mask, next_free[a] = kernels.dead_time_filter(cand, arm.dead_gates, next_free[a])
            accepted[a].append(cand[mask])
    return [np.concatenate(parts) if parts else np.empty(0, np.int64) for parts in accepted]


def _active_gates(fired: np.ndarray, dead_gates: int, n_gates: int) -> int:
    blanked = int(np.minimum(dead_gates, n_gates - 1 - fired).sum()) if len(fired) else 0
    return n_gates - blanked


# --------------------------------------------------------------------------
# measurements


def simulate_pair_counts(
    rates: SourceRates,
    det_sig: DetectionSpec,
    det_idl: DetectionSpec,
    pulses: int,
    *,
    seed: int = 0,
    stream: Sequence[int] = (PAIRS_RUN,),
    statistics: str = "poisson",
    modes: int = 1,
    classical_surrogate: bool = False,
) -> RawCounts:
    """Coincidence measurement between the signal and idler detectors.

    With ``classical_surrogate`` the pair photons are replaced by independent
    Poisson light of the same mean in each channel.
    """
    if statistics not in STATISTICS:
        raise ValidityError(f"statistics must be one of {STATISTICS}")
    if not 1 <= pulses < MAX_PULSES:
        raise ValidityError("pulses out of range")
    rep_rate = det_sig.gate_rate
    eta_s = overall_efficiency(det_sig)
    eta_i = overall_efficiency(det_idl)
    mu_c = rates.mu_c
    dark_s, dark_i = det_sig.dark_per_gate, det_idl.dark_per_gate
    correlated = None

    if classical_surrogate or mu_c == 0.0:
        q_s = 1 - _no_click_prob(eta_s * (rates.mu_n_sig + mu_c), dark_s)
        q_i = 1 - _no_click_prob(eta_i * (rates.mu_n_idl + mu_c), dark_i)
    elif statistics == "poisson":
        # Poisson splitting: pairs seen by both, by signal only and by idler
        # only are three independent Poisson streams.
        q_s = 1 - _no_click_prob(eta_s * (rates.mu_n_sig + mu_c * (1 - eta_i)), dark_s)
        q_i = 1 - _no_click_prob(eta_i * (rates.mu_n_idl + mu_c * (1 - eta_s)), dark_i)
        q_joint = -math.expm1(-mu_c * eta_s * eta_i)

        def correlated(rng, n):
            pos = bernoulli_positions(rng, n, q_joint)
            return pos, np.ones((2, len(pos)), dtype=bool)

    else:
        q_s = 1 - _no_click_prob(eta_s * rates.mu_n_sig, dark_s)
        q_i = 1 - _no_click_prob(eta_i * rates.mu_n_idl, dark_i)
        pairs = ThermalPairCounts(mu_c, modes)

        def correlated(rng, n):
            pos = bernoulli_positions(rng, n, pairs.p_nonzero)
            k = pairs.draw_nonzero(rng, len(pos))
            cs = rng.binomial(k, eta_s) > 0
            ci = rng.binomial(k, eta_i) > 0
            keep = cs | ci
            return pos[keep], np.vstack([cs[keep], ci[keep]])

    arms = [_Arm(q_s, det_sig.dead_gates), _Arm(q_i, det_idl.dead_gates)]
    sig, idl = _run_arms(pulses, arms, correlated, seed, stream)
    return RawCounts(
        n_sig=len(sig),
        n_idl=len(idl),
        d_c=int(kernels.count_offset_matches(sig, idl, 0)),
        d_ca=int(kernels.count_offset_matches(sig, idl, 1)),
        active_gates_sig=_active_gates(sig, det_sig.dead_gates, pulses),
        active_gates_idl=_active_gates(idl, det_idl.dead_gates, pulses),
        duration=pulses / rep_rate,
        pulses=pulses,
    )


def simulate_selfcorr_counts(
    mu_c: float,
    mu_s: float,
    det: DetectionSpec,
    pulses: int,
    *,
    seed: int = 0,
    stream: Sequence[int] = (SELF_SIG_RUN,),
    statistics: str = "poisson",
    modes: int = 1,
) -> SelfCorrCounts:
    """One channel split 50/50 onto two detectors that share the channel's detection spec.

    ``mu_c`` is the pair-photon part of the channel's ``mu_s``; it only matters
    for non-Poisson pair statistics.
    """
    if statistics not in STATISTICS:
        raise ValidityError(f"statistics must be one of {STATISTICS}")
    if not 1 <= pulses < MAX_PULSES:
        raise ValidityError("pulses out of range")
    p_arm = det.transmission * 0.5 * det.quantum_efficiency
    dark = det.dark_per_gate
    mu_n = max(mu_s - mu_c, 0.0)
    correlated = None
    if statistics == "poisson" or mu_c == 0.0:
        q = 1 - _no_click_prob(p_arm * (mu_n + mu_c), dark)
    else:
        q = 1 - _no_click_prob(p_arm * mu_n, dark)
        pairs = ThermalPairCounts(mu_c, modes)
        p_b_given_not_a = p_arm / (1 - p_arm)

        def correlated(rng, n):
            pos = bernoulli_positions(rng, n, pairs.p_nonzero)
            k = pairs.draw_nonzero(rng, len(pos))
            a = rng.binomial(k, p_arm)
            b = rng.binomial(k - a, p_b_given_not_a)
            ca, cb = a > 0, b > 0
            keep = ca | cb
            return pos[keep], np.vstack([ca[keep], cb[keep]])

    arms = [_Arm(q, det.dead_gates), _Arm(q, det.dead_gates)]
    fa, fb = _run_arms(pulses, arms, correlated, seed, stream)
    return SelfCorrCounts(
        d_self=int(kernels.count_offset_matches(fa, fb, 0)),
        d_self_a=int(kernels.count_offset_matches(fa, fb, 1)),
        duration=pulses / det.gate_rate,
        n_a=len(fa),
        n_b=len(fb),
        active_gates_a=_active_gates(fa, det.dead_gates, pulses),
        active_gates_b=_active_gates(fb, det.dead_gates, pulses),
        pulses=pulses,
    )


def _check_rates(spec: ExperimentSpec):
    for det in (spec.detection_sig, spec.detection_idl):
        if not math.isclose(det.gate_rate, spec.pump.rep_rate, rel_tol=1e-12):
            raise ValidityError("detector gate rate must equal the pump repetition rate")


def simulate_pairs(spec: ExperimentSpec, stream: Sequence[int] = ()) -> RawCounts:
    _check_rates(spec)
    return simulate_pair_counts(
        spec.source_rates(),
        spec.detection_sig,
        spec.detection_idl,
        spec.pulses,
        seed=spec.seed,
        stream=(*stream, PAIRS_RUN),
        statistics=spec.marginal_statistics,
        modes=spec.temporal_modes,
        classical_surrogate=spec.classical_surrogate,
    )


def simulate_selfcorr(spec: ExperimentSpec, channel: str, stream: Sequence[int] = ()) -> SelfCorrCounts:
    _check_rates(spec)
    rates = spec.source_rates()
    if channel == "signal":
        mu_s, det, run = rates.mu_s_sig, spec.detection_sig, SELF_SIG_RUN
    elif channel == "idler":
        mu_s, det, run = rates.mu_s_idl, spec.detection_idl, SELF_IDL_RUN
    else:
        raise ValueError(f"channel must be 'signal' or 'idler', got {channel!r}")
    mu_c = 0.0 if spec.classical_surrogate else rates.mu_c
    return simulate_selfcorr_counts(
        mu_c,
        mu_s,
        det,
        spec.self_pulses,
        seed=spec.seed,
        stream=(*stream, run),
        statistics=spec.marginal_statistics,
        modes=spec.temporal_modes,
    )


def zwm_run(spec: ExperimentSpec, stream: Sequence[int] = ()) -> ZWMRun:
    """Pair coincidences plus both self-correlation runs, on independent streams."""
    return ZWMRun(
        pairs=simulate_pairs(spec, stream),
        self_sig=simulate_selfcorr(spec, "signal", stream),
        self_idl=simulate_selfcorr(spec, "idler", stream),
    )

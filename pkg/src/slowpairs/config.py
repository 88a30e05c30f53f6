"""TOML experiment configuration: loading, validation and dumping.

Keys carry SI units in their suffix (``_m``, ``_w``, ``_hz``, ``_s``); dB-valued
keys end in ``_db``. Detector settings live in ``[detection]`` and may be
overridden per channel in ``[detection_signal]`` / ``[detection_idler]``.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .detection import DetectionSpec
from .device import ALPHA_SCALINGS, WaveguideSpec
from .errors import ConfigError, SlowPairsError
from .montecarlo import STATISTICS, ExperimentSpec
from .source import ChannelSpec, NoiseModel, PumpSpec

BUNDLED = ("crow", "reference")

_SCHEMA: dict[str, dict[str, tuple[type, bool]]] = {
    # key: (type, required)
    "waveguide": {
        "length_m": (float, True),
        "alpha_db_per_m": (float, True),
        "group_index": (float, True),
        "phase_index": (float, True),
        "gamma_eff_per_w_m": (float, True),
        "coupling_db": (float, False),
        "alpha_ref_group_index": (float, False),
    },
    "pump": {
        "wavelength_m": (float, True),
        "avg_power_w": (float, True),
        "rep_rate_hz": (float, True),
        "pulse_width_s": (float, True),
    },
    "channel": {
        "bandwidth_hz": (float, True),
        "detuning_hz": (float, True),
        "fwm_half_bandwidth_hz": (float, True),
    },
    "noise": {"linear_per_w": (float, False), "quadratic_per_w2": (float, False)},
    "noise_idler": {"linear_per_w": (float, False), "quadratic_per_w2": (float, False)},
    "detection": {
        "coupling_db": (float, False),
        "filter_db": (float, False),
        "quantum_efficiency": (float, False),
        "gate_rate_hz": (float, False),
        "gate_width_s": (float, False),
        "dark_per_gate": (float, False),
        "dead_time_s": (float, False),
    },
    "sweep": {
        "powers_w": (list, False),
        "start_w": (float, False),
        "stop_w": (float, False),
        "points": (int, False),
        "spacing": (str, False),
    },
    "run": {
        "pulses": (int, True),
        "seed": (int, False),
        "statistics": (str, False),
        "self_duration_factor": (float, False),
        "classical_surrogate": (bool, False),
        "alpha_scaling": (str, False),
    },
}
_SCHEMA["detection_signal"] = _SCHEMA["detection"]
_SCHEMA["detection_idler"] = _SCHEMA["detection"]
_SECTIONS_REQUIRED = ("waveguide", "pump", "channel", "detection", "run")
# dataclass field -> config key, used to anchor validation errors
_WAVEGUIDE_KEYS = {
    "length": "length_m",
    "alpha_db": "alpha_db_per_m",
    "group_index": "group_index",
    "phase_index": "phase_index",
    "gamma_eff": "gamma_eff_per_w_m",
    "coupling_db": "coupling_db",
    "alpha_ref_group_index": "alpha_ref_group_index",
}
_PUMP_KEYS = {"wavelength": "wavelength_m", "avg_power": "avg_power_w", "rep_rate": "rep_rate_hz", "pulse_width": "pulse_width_s"}
_NOISE_KEYS = {"linear_coeff": "linear_per_w", "quadratic_coeff": "quadratic_per_w2"}
_DETECTION_KEYS = {
    "coupling_db": "coupling_db",
    "filter_db": "filter_db",
    "quantum_efficiency": "quantum_efficiency",
    "gate_rate": "gate_rate_hz",
    "gate_width": "gate_width_s",
    "dark_per_gate": "dark_per_gate",
    "dead_time": "dead_time_s",
}
_RUN_KEYS = {
    "pulses": "pulses",
    "seed": "seed",
    "self_duration_factor": "self_duration_factor",
    "classical_surrogate": "classical_surrogate",
}
_DETECTION_REQUIRED = ("filter_db", "quantum_efficiency", "gate_width_s", "dark_per_gate", "dead_time_s")


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ExperimentSpec
    powers: tuple[float, ...]
    path: Path | None = None

    def with_overrides(self, *, seed=None, pulses=None, statistics=None, alpha_scaling=None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if pulses is not None:
            changes["pulses"] = pulses
        if statistics is not None:
            changes["marginal_statistics"] = statistics
        if alpha_scaling is not None:
            changes["alpha_scaling"] = alpha_scaling
        return replace(self, spec=replace(self.spec, **changes)) if changes else self


def _key_line(text: str, section: str | None, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header if key is None)."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[\s*([A-Za-z0-9_.]+)\s*\]", line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*=", line):
            return lineno
    return None


class _Loader:
    def __init__(self, data: dict, text: str, path):
        self.data = data
        self.text = text
        self.path = path

    def error(self, message, section=None, key=None):
        return ConfigError(message, self.path, _key_line(self.text, section, key) if section else None)

    def check_schema(self):
        for section, body in self.data.items():
            if section not in _SCHEMA:
                raise self.error(f"unknown section [{section}]", section)
            if not isinstance(body, dict):
                raise self.error(f"[{section}] must be a table", section)
            for key, value in body.items():
                if key not in _SCHEMA[section]:
                    raise self.error(f"unknown key {key!r} in [{section}]", section, key)
                kind = _SCHEMA[section][key][0]
                ok = {
                    float: isinstance(value, (int, float)) and not isinstance(value, bool),
                    int: isinstance(value, int) and not isinstance(value, bool),
                    bool: isinstance(value, bool),
                    str: isinstance(value, str),
                    list: isinstance(value, list),
                }[kind]
                if not ok:
                    raise self.error(f"{section}.{key} must be of type {kind.__name__}", section, key)
                if kind is float and not math.isfinite(value):
                    raise self.error(f"{section}.{key} must be finite", section, key)
        for section in _SECTIONS_REQUIRED:
            if section not in self.data:
                raise ConfigError(f"missing section [{section}]", self.path)
        for section, keys in _SCHEMA.items():
            if section not in self.data or section.startswith("detection"):
                continue
            for key, (_, required) in keys.items():
                if required and key not in self.data[section]:
                    raise self.error(f"missing key {key!r} in [{section}]", section)

    def get(self, section, key, default=None):
        value = self.data.get(section, {}).get(key, default)
        if _SCHEMA[section][key][0] is float and value is not None:
            value = float(value)
        return value

    def build(self, section, factory, keys=(), **kwargs):
        """Construct ``factory(**kwargs)``; on failure point at the offending key.

        ``keys`` pairs field names with ``(section, config key)`` locations.
        """
        try:
            return factory(**kwargs)
        except (SlowPairsError, ValueError) as exc:
            message = str(exc)
            # longest names first so "alpha_db" does not shadow "alpha_ref_group_index"
            for field, (where, key) in sorted(keys, key=lambda kv: -len(kv[0])):
                if re.search(rf"\b{re.escape(field)}\b", message) and key in self.data.get(where, {}):
                    raise self.error(message, where, key) from None
            raise self.error(message, section) from None

    def locate(self, section, mapping):
        return [(field, (section, key)) for field, key in mapping.items()]

    def detection(self, which: str, waveguide: WaveguideSpec, pump: PumpSpec) -> DetectionSpec:
        merged = dict(self.data["detection"])
        merged.update(self.data.get(which, {}))
        for key in _DETECTION_REQUIRED:
            if key not in merged:
                raise self.error(f"missing key {key!r} in [detection]", "detection")
        section = which if which in self.data else "detection"
        keys = [
            (field, (which if key in self.data.get(which, {}) else "detection", key))
            for field, key in _DETECTION_KEYS.items()
        ]
        return self.build(
            section,
            DetectionSpec,
            keys,
            coupling_db=float(merged.get("coupling_db", waveguide.coupling_db)),
            filter_db=float(merged["filter_db"]),
            quantum_efficiency=float(merged["quantum_efficiency"]),
            gate_rate=float(merged.get("gate_rate_hz", pump.rep_rate)),
            gate_width=float(merged["gate_width_s"]),
            dark_per_gate=float(merged["dark_per_gate"]),
            dead_time=float(merged["dead_time_s"]),
        )

    def powers(self, pump: PumpSpec) -> tuple[float, ...]:
        sweep = self.data.get("sweep")
        if not sweep:
            return (pump.avg_power,)
        if "powers_w" in sweep:
            values = sweep["powers_w"]
            if not values or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                raise self.error("sweep.powers_w must be a nonempty list of numbers", "sweep", "powers_w")
            powers = [float(v) for v in values]
        else:
            try:
                start, stop, n = sweep["start_w"], sweep["stop_w"], sweep["points"]
            except KeyError as exc:
                raise self.error(f"[sweep] needs powers_w or start_w/stop_w/points (missing {exc})", "sweep")
            spacing = sweep.get("spacing", "log")
            if n < 1 or start <= 0 or stop < start:
                raise self.error("need points >= 1 and 0 < start_w <= stop_w", "sweep")
            if spacing == "log":
                powers = [start * (stop / start) ** (i / max(n - 1, 1)) for i in range(n)]
            elif spacing == "linear":
                powers = [start + (stop - start) * i / max(n - 1, 1) for i in range(n)]
            else:
                raise self.error("sweep.spacing must be 'log' or 'linear'", "sweep", "spacing")
        if any(not (math.isfinite(p) and p > 0) for p in powers):
            raise self.error("sweep powers must be positive", "sweep")
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise self.error("sweep powers must be strictly increasing", "sweep")
        return tuple(powers)

    def load(self) -> ExperimentConfig:
        self.check_schema()
        g = self.get
        waveguide = self.build(
            "waveguide",
            WaveguideSpec,
            self.locate("waveguide", _WAVEGUIDE_KEYS),
            length=g("waveguide", "length_m"),
            alpha_db=g("waveguide", "alpha_db_per_m"),
            group_index=g("waveguide", "group_index"),
            phase_index=g("waveguide", "phase_index"),
            gamma_eff=g("waveguide", "gamma_eff_per_w_m"),
            coupling_db=g("waveguide", "coupling_db", 0.0),
            alpha_ref_group_index=g("waveguide", "alpha_ref_group_index"),
        )
        pump = self.build(
            "pump",
            PumpSpec,
            self.locate("pump", _PUMP_KEYS),
            wavelength=g("pump", "wavelength_m"),
            avg_power=g("pump", "avg_power_w"),
            rep_rate=g("pump", "rep_rate_hz"),
            pulse_width=g("pump", "pulse_width_s"),
        )
        channel = self.build(
            "channel",
            ChannelSpec,
            self.locate("channel", {k: k for k in _SCHEMA["channel"]}),
            bandwidth_hz=g("channel", "bandwidth_hz"),
            detuning_hz=g("channel", "detuning_hz"),
            fwm_half_bandwidth_hz=g("channel", "fwm_half_bandwidth_hz"),
        )
        if not channel.within_gain_bandwidth:
            raise self.error("channel.detuning_hz exceeds fwm_half_bandwidth_hz", "channel", "detuning_hz")
        noise = self.build(
            "noise",
            NoiseModel,
            self.locate("noise", _NOISE_KEYS),
            linear_coeff=g("noise", "linear_per_w", 0.0),
            quadratic_coeff=g("noise", "quadratic_per_w2", 0.0),
        )
        noise_idl = None
        if "noise_idler" in self.data:
            noise_idl = self.build(
                "noise_idler",
                NoiseModel,
                self.locate("noise_idler", _NOISE_KEYS),
                linear_coeff=g("noise_idler", "linear_per_w", noise.linear_coeff),
                quadratic_coeff=g("noise_idler", "quadratic_per_w2", noise.quadratic_coeff),
            )
        det_sig = self.detection("detection_signal", waveguide, pump)
        det_idl = self.detection("detection_idler", waveguide, pump)
        for det, section in ((det_sig, "detection_signal"), (det_idl, "detection_idler")):
            if not math.isclose(det.gate_rate, pump.rep_rate, rel_tol=1e-12):
                raise self.error("detector gate rate must equal pump rep_rate_hz", section if section in self.data else "detection")
        statistics = g("run", "statistics", "poisson")
        if statistics == "thermal":
            statistics = "multimode_thermal"
        if statistics not in STATISTICS:
            raise self.error(f"run.statistics must be one of {STATISTICS + ('thermal',)}", "run", "statistics")
        alpha_scaling = g("run", "alpha_scaling", "fixed")
        if alpha_scaling not in ALPHA_SCALINGS:
            raise self.error(f"run.alpha_scaling must be one of {ALPHA_SCALINGS}", "run", "alpha_scaling")
        if alpha_scaling == "proportional-s" and waveguide.alpha_ref_group_index is None:
            raise self.error("proportional-s loss scaling needs waveguide.alpha_ref_group_index", "run", "alpha_scaling")
        spec = self.build(
            "run",
            ExperimentSpec,
            self.locate("run", _RUN_KEYS),
            waveguide=waveguide,
            pump=pump,
            channel=channel,
            noise=noise,
            detection_sig=det_sig,
            detection_idl=det_idl,
            pulses=g("run", "pulses"),
            seed=g("run", "seed", 0),
            marginal_statistics=statistics,
            noise_idl=noise_idl,
            alpha_scaling=alpha_scaling,
            self_duration_factor=g("run", "self_duration_factor", 2.0),
            classical_surrogate=g("run", "classical_surrogate", False),
        )
        return ExperimentConfig(spec, self.powers(pump), Path(self.path) if self.path else None)


def loads(text: str, path=None) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", path, int(m.group(1)) if m else None) from None
    return _Loader(data, text, path).load()


def load(path) -> ExperimentConfig:
    """Read a config file, or a bundled one by name (``crow`` / ``reference``)."""
    if str(path) in BUNDLED:
        return loads(bundled_text(str(path)), f"<bundled {path}>")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    return loads(text, path)


def bundled_text(name: str) -> str:
    return resources.files("slowpairs").joinpath("data", f"{name}.toml").read_text(encoding="utf-8")


def bundled_path(name: str):
    return resources.files("slowpairs").joinpath("data", f"{name}.toml")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot encode {type(value).__name__}")


def dumps(config: ExperimentConfig) -> str:
    """Serialise with every default resolved; ``loads(dumps(c))`` reproduces ``c.spec``."""
    s = config.spec
    wg, pump, ch = s.waveguide, s.pump, s.channel

    def det_table(d: DetectionSpec):
        return {
            "coupling_db": d.coupling_db,
            "filter_db": d.filter_db,
            "quantum_efficiency": d.quantum_efficiency,
            "gate_rate_hz": d.gate_rate,
            "gate_width_s": d.gate_width,
            "dark_per_gate": d.dark_per_gate,
            "dead_time_s": d.dead_time,
        }

    tables = {
        "waveguide": {
            "length_m": wg.length,
            "alpha_db_per_m": wg.alpha_db,
            "group_index": wg.group_index,
            "phase_index": wg.phase_index,
            "gamma_eff_per_w_m": wg.gamma_eff,
            "coupling_db": wg.coupling_db,
        },
        "pump": {
            "wavelength_m": pump.wavelength,
            "avg_power_w": pump.avg_power,
            "rep_rate_hz": pump.rep_rate,
            "pulse_width_s": pump.pulse_width,
        },
        "channel": {
            "bandwidth_hz": ch.bandwidth_hz,
            "detuning_hz": ch.detuning_hz,
            "fwm_half_bandwidth_hz": ch.fwm_half_bandwidth_hz,
        },
        "noise": {"linear_per_w": s.noise.linear_coeff, "quadratic_per_w2": s.noise.quadratic_coeff},
    }
    if wg.alpha_ref_group_index is not None:
        tables["waveguide"]["alpha_ref_group_index"] = wg.alpha_ref_group_index
    if s.noise_idl is not None:
        tables["noise_idler"] = {
            "linear_per_w": s.noise_idl.linear_coeff,
            "quadratic_per_w2": s.noise_idl.quadratic_coeff,
        }
    tables["detection"] = det_table(s.detection_sig)
    tables["detection_idler"] = det_table(s.detection_idl)
    tables["sweep"] = {"powers_w": list(config.powers)}
    tables["run"] = {
        "pulses": s.pulses,
        "seed": s.seed,
        "statistics": s.marginal_statistics,
        "self_duration_factor": float(s.self_duration_factor),
        "classical_surrogate": s.classical_surrogate,
        "alpha_scaling": s.alpha_scaling,
    }
    out = []
    for name, body in tables.items():
        out.append(f"[{name}]")
        out.extend(f"{k} = {_fmt(v)}" for k, v in body.items())
        out.append("")
    return "\n".join(out)

"""Run configuration: a sectioned ``key = value`` file with units in key names.

A value may repeat its unit after the number (``length_m = 0.019 m``); a
different unit there is an error.  ``#`` and ``;`` start comments.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .apt_core import EP_TOLERANCE, EffectiveModel
from .detection import DetectorPair
from .errors import ConfigError
from .fitting import FREE_PARAMETERS
from .physical import PhysicalParams, calibrate_coupling, effective_from_physical
from .sweeps import AXES, DEFAULT_SEED_PHOTONS

# unit suffix of a key -> spellings accepted after the number
UNIT_ALIASES = {
    "rad_per_m": ("rad/m", "1/m", "m^-1"),
    "m": ("m",),
    "ghz": ("GHz", "ghz"),
    "mhz": ("MHz", "mhz"),
    "cm3": ("cm^-3", "cm-3", "/cm^3", "cm^-3"),
    "c": ("C", "degC"),
    "deg": ("deg",),
    "si": ("SI",),
    "photons2": ("photons^2",),
}

NUMBER, TEXT, BOOL, INT, LIST = "number", "text", "bool", "int", "list"

# section -> key -> (unit suffix or None, kind)
SCHEMA = {
    "model": {
        "delta_k_rad_per_m": ("rad_per_m", NUMBER),
        "kappa_rad_per_m": ("rad_per_m", NUMBER),
        "kappa_imag_rad_per_m": ("rad_per_m", NUMBER),
        "alpha_rad_per_m": ("rad_per_m", NUMBER),
        "alpha_imag_rad_per_m": ("rad_per_m", NUMBER),
        "length_m": ("m", NUMBER),
    },
    "physical": {
        "delta_k_rad_per_m": ("rad_per_m", NUMBER),
        "length_m": ("m", NUMBER),
        "delta1_ghz": ("ghz", NUMBER),
        "delta_2ph_mhz": ("mhz", NUMBER),
        "omega_ghz": ("ghz", NUMBER),
        "n_density_cm3": ("cm3", NUMBER),
        "temperature_c": ("c", NUMBER),
        "theta_deg": ("deg", NUMBER),
        "g_si": ("si", NUMBER),
        "ep_density_cm3": ("cm3", NUMBER),
        "alpha_ref_rad_per_m": ("rad_per_m", NUMBER),
        "n_ref_cm3": ("cm3", NUMBER),
        "omega_ref_ghz": ("ghz", NUMBER),
        "kappa_pump_exponent": (None, NUMBER),
        "loss_pump_exponent": (None, NUMBER),
        "vapor_a": (None, NUMBER),
        "vapor_b": (None, NUMBER),
    },
    "detector": {
        "eta_p": (None, NUMBER),
        "eta_s": (None, NUMBER),
        "dark_variance_photons2": ("photons2", NUMBER),
    },
    "sweep": {
        "axis": (None, TEXT),
        "start_cm3": ("cm3", NUMBER),
        "stop_cm3": ("cm3", NUMBER),
        "start_ghz": ("ghz", NUMBER),
        "stop_ghz": ("ghz", NUMBER),
        "points": (None, INT),
        "spacing": (None, TEXT),
    },
    "run": {
        "seed_photons": (None, NUMBER),
        "workers": (None, INT),
    },
    "fit": {
        "free": (None, LIST),
        "log_scale": (None, BOOL),
        "max_nfev": (None, INT),
    },
    "output": {
        "table": (None, TEXT),
    },
    "tolerances": {
        "ep_tolerance": (None, NUMBER),
        "ep_rtol": (None, NUMBER),
        "optimum_xtol": (None, NUMBER),
    },
}

PHYSICAL_KEYS = {
    "delta_k_rad_per_m": "delta_k",
    "length_m": "length",
    "delta1_ghz": "delta1_ghz",
    "delta_2ph_mhz": "delta_2ph_mhz",
    "omega_ghz": "omega_ghz",
    "n_density_cm3": "n_density",
    "temperature_c": "temperature_c",
    "theta_deg": "theta_deg",
    "g_si": "g",
    "alpha_ref_rad_per_m": "alpha_ref",
    "n_ref_cm3": "n_ref",
    "omega_ref_ghz": "omega_ref_ghz",
    "kappa_pump_exponent": "kappa_pump_exponent",
    "loss_pump_exponent": "loss_pump_exponent",
    "vapor_a": "vapor_a",
    "vapor_b": "vapor_b",
}

AXIS_KEY_UNIT = {"density": "cm3", "rabi": "ghz"}

_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"

    def grid(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class FitSpec:
    free: tuple = ("delta_k", "g")
    log_scale: bool = False
    max_nfev: int = 2000


@dataclass(frozen=True)
class Tolerances:
    ep_tolerance: float = EP_TOLERANCE
    ep_rtol: float = 1e-8
    optimum_xtol: float = 1e-4


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings; exactly one of ``model`` / ``physical`` is set."""

    model: EffectiveModel | None = None
    physical: PhysicalParams | None = None
    detector: DetectorPair = field(default_factory=DetectorPair)
    sweep: SweepSpec | None = None
    fit: FitSpec = field(default_factory=FitSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed_photons: float = DEFAULT_SEED_PHOTONS
    workers: int = 1
    output_table: str | None = None
    source: str | None = None
    calibrated_from: float | None = None

    def __post_init__(self):
        if (self.model is None) == (self.physical is None):
            raise ConfigError("exactly one of a direct [model] or a [physical] parameter set is required")

    def effective(self) -> EffectiveModel:
        if self.model is not None:
            return self.model
        return effective_from_physical(self.physical)

    def echo(self) -> list[str]:
        """The resolved settings as config text; loading it reproduces this config."""
        out = []
        if self.model is not None:
            m = self.model
            kappa, alpha = complex(m.kappa), complex(m.alpha)
            out += ["[model]", _kv("delta_k_rad_per_m", m.delta_k), _kv("kappa_rad_per_m", kappa.real),
                    _kv("alpha_rad_per_m", alpha.real), _kv("length_m", m.length)]
            if kappa.imag:
                out.append(_kv("kappa_imag_rad_per_m", kappa.imag))
            if alpha.imag:
                out.append(_kv("alpha_imag_rad_per_m", alpha.imag))
        else:
            out.append("[physical]")
            swept = AXES[self.sweep.axis] if self.sweep is not None else None
            for key, attr in PHYSICAL_KEYS.items():
                value = getattr(self.physical, attr)
                if value is not None and attr != swept:
                    out.append(_kv(key, value))
            if self.calibrated_from is not None:
                out.append(f"; g_si calibrated from ep_density_cm3 = {self.calibrated_from!r}")
        d = self.detector
        out += ["[detector]", _kv("eta_p", d.eta_p), _kv("eta_s", d.eta_s),
                _kv("dark_variance_photons2", d.dark_variance)]
        if self.sweep is not None:
            s, u = self.sweep, AXIS_KEY_UNIT[self.sweep.axis]
            out += ["[sweep]", f"axis = {s.axis}", _kv(f"start_{u}", s.start), _kv(f"stop_{u}", s.stop),
                    f"points = {s.points}", f"spacing = {s.spacing}"]
        out += ["[run]", _kv("seed_photons", self.seed_photons), f"workers = {self.workers}"]
        f = self.fit
        out += ["[fit]", f"free = {', '.join(f.free)}", f"log_scale = {str(f.log_scale).lower()}",
                f"max_nfev = {f.max_nfev}"]
        t = self.tolerances
        out += ["[tolerances]", _kv("ep_tolerance", t.ep_tolerance), _kv("ep_rtol", t.ep_rtol),
                _kv("optimum_xtol", t.optimum_xtol)]
        if self.output_table is not None:
            out += ["[output]", f"table = {self.output_table}"]
        return out


def _kv(key, value) -> str:
    return f"{key} = {float(value)!r}"


@dataclass
class _Entry:
    value: object
    line: int


def _parse_value(raw: str, unit: str | None, kind: str, line: int):
    if kind == TEXT:
        if not raw:
            raise ConfigError("empty value", line)
        return raw
    if kind == LIST:
        items = tuple(x.strip() for x in raw.split(",") if x.strip())
        if not items:
            raise ConfigError("empty list", line)
        return items
    if kind == BOOL:
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}", line)

    parts = raw.split(None, 1)
    if not parts:
        raise ConfigError("empty value", line)
    number, suffix = parts[0], (parts[1].strip() if len(parts) > 1 else "")
    if suffix:
        if unit is None:
            raise ConfigError(f"dimensionless value carries a unit {suffix!r}", line)
        if suffix not in UNIT_ALIASES[unit]:
            raise ConfigError(f"unit mismatch: got {suffix!r}, key expects {UNIT_ALIASES[unit][0]!r}", line)
    try:
        value = float(number)
    except ValueError:
        raise ConfigError(f"not a number: {number!r}", line) from None
    if not math.isfinite(value):
        raise ConfigError(f"non-finite value {number!r}", line)
    if kind == INT:
        if value != int(value):
            raise ConfigError(f"expected an integer, got {number!r}", line)
        return int(value)
    return value


def parse_config_text(text: str, source: str | None = None) -> RunConfig:
    sections: dict[str, dict[str, _Entry]] = {}
    header_line: dict[str, int] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = re.split(r"\s[#;]", line, maxsplit=1)[0].strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = _SECTION.match(stripped)
        if m:
            current = m.group(1).lower()
            if current not in SCHEMA:
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            header_line[current] = lineno
            continue
        m = _ENTRY.match(stripped)
        if not m:
            raise ConfigError(f"cannot parse line {stripped!r}", lineno)
        if current is None:
            raise ConfigError("key outside any section", lineno)
        key, raw = m.group(1).lower(), m.group(2).strip()
        if key not in SCHEMA[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        unit, kind = SCHEMA[current][key]
        sections[current][key] = _Entry(_parse_value(raw, unit, kind, lineno), lineno)
    return _build(sections, header_line, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def _get(sec, key, default=None):
    entry = sec.get(key)
    return default if entry is None else entry.value


def _require(sec, key, section, header_line):
    if key not in sec:
        raise ConfigError(f"missing required key {key!r} in [{section}]", header_line.get(section))
    return sec[key].value


def _build(sections, header_line, source) -> RunConfig:
    if "model" in sections and "physical" in sections:
        line = max(header_line["model"], header_line["physical"])
        raise ConfigError("conflicting parameterizations: both [model] and [physical] are given", line)
    if "model" not in sections and "physical" not in sections:
        raise ConfigError("missing [model] or [physical] section")

    model = physical = calibrated_from = None
    sweep_sec = sections.get("sweep", {})
    sweep_axis = _get(sweep_sec, "axis")

    if "model" in sections:
        sec = sections["model"]
        if sweep_sec:
            raise ConfigError("a sweep needs a [physical] parameter set", header_line["sweep"])
        try:
            model = EffectiveModel(
                delta_k=_require(sec, "delta_k_rad_per_m", "model", header_line),
                kappa=complex(_require(sec, "kappa_rad_per_m", "model", header_line),
                              _get(sec, "kappa_imag_rad_per_m", 0.0)),
                length=_require(sec, "length_m", "model", header_line),
                alpha=complex(_get(sec, "alpha_rad_per_m", 0.0), _get(sec, "alpha_imag_rad_per_m", 0.0)),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc), header_line["model"]) from None
        if model.kappa.imag == 0 and model.alpha.imag == 0:
            model = dataclasses.replace(model, kappa=model.kappa.real, alpha=model.alpha.real)
    else:
        sec = sections["physical"]
        for a, b in (("n_density_cm3", "temperature_c"), ("g_si", "ep_density_cm3")):
            if a in sec and b in sec:
                raise ConfigError(f"conflicting keys {a!r} and {b!r}", max(sec[a].line, sec[b].line))
        if sweep_axis == "density" and ("n_density_cm3" in sec or "temperature_c" in sec):
            key = "n_density_cm3" if "n_density_cm3" in sec else "temperature_c"
            raise ConfigError(f"{key!r} conflicts with a density sweep", sec[key].line)
        if sweep_axis == "rabi" and "omega_ghz" in sec:
            raise ConfigError("'omega_ghz' conflicts with a rabi sweep", sec["omega_ghz"].line)
        if sweep_axis != "density" and "n_density_cm3" not in sec and "temperature_c" not in sec:
            raise ConfigError("missing required key 'n_density_cm3' (or 'temperature_c') in [physical]",
                              header_line["physical"])
        kwargs = {attr: sec[key].value for key, attr in PHYSICAL_KEYS.items() if key in sec}
        if sweep_axis == "rabi":
            # a placeholder pump for the record; every sweep point overrides it
            kwargs["omega_ghz"] = _get(sweep_sec, "start_ghz", PhysicalParams.omega_ghz)
        try:
            physical = PhysicalParams(**kwargs)
            if "ep_density_cm3" in sec:
                calibrated_from = sec["ep_density_cm3"].value
                # calibrated at the reference pump so that g is independent of the sweep
                ref = physical.replace(omega_ghz=physical.omega_ref_ghz)
                physical = physical.replace(g=calibrate_coupling(ref, calibrated_from))
        except ConfigError as exc:
            if exc.line is not None:
                raise
            raise ConfigError(str(exc), header_line["physical"]) from None
        if physical.g is None:
            raise ConfigError("missing 'g_si' or 'ep_density_cm3' in [physical]", header_line["physical"])

    det_sec = sections.get("detector", {})
    try:
        detector = DetectorPair(_get(det_sec, "eta_p", 1.0), _get(det_sec, "eta_s", 1.0),
                                _get(det_sec, "dark_variance_photons2", 0.0))
    except ValueError as exc:
        raise ConfigError(str(exc), header_line.get("detector")) from None

    sweep = None
    if sweep_sec:
        sweep = _build_sweep(sweep_sec, header_line["sweep"])

    fit_sec = sections.get("fit", {})
    free = _get(fit_sec, "free", FitSpec.free)
    bad = [x for x in free if x not in FREE_PARAMETERS]
    if bad:
        raise ConfigError(f"unknown fit parameter(s) {bad}; choose from {FREE_PARAMETERS}", fit_sec["free"].line)
    fit = FitSpec(tuple(free), _get(fit_sec, "log_scale", False), _get(fit_sec, "max_nfev", 2000))

    tol_sec = sections.get("tolerances", {})
    tolerances = Tolerances(*(_get(tol_sec, f.name, f.default) for f in dataclasses.fields(Tolerances)))
    for f in dataclasses.fields(Tolerances):
        if not getattr(tolerances, f.name) > 0:
            raise ConfigError(f"{f.name} must be positive", tol_sec[f.name].line)

    run_sec = sections.get("run", {})
    seed_photons = _get(run_sec, "seed_photons", DEFAULT_SEED_PHOTONS)
    workers = _get(run_sec, "workers", 1)
    if not seed_photons > 0:
        raise ConfigError("seed_photons must be positive", run_sec["seed_photons"].line)
    if workers < 1:
        raise ConfigError("workers must be at least 1", run_sec["workers"].line)

    return RunConfig(model=model, physical=physical, detector=detector, sweep=sweep, fit=fit,
                     tolerances=tolerances, seed_photons=seed_photons, workers=workers,
                     output_table=_get(sections.get("output", {}), "table"), source=source,
                     calibrated_from=calibrated_from)


def _build_sweep(sec, line) -> SweepSpec:
    axis = _require(sec, "axis", "sweep", {"sweep": line})
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {sorted(AXES)}", sec["axis"].line)
    unit = AXIS_KEY_UNIT[axis]
    for key, entry in sec.items():
        if key.startswith(("start_", "stop_")) and not key.endswith(unit):
            raise ConfigError(f"unit mismatch: {key!r} does not match axis {axis!r} (use *_{unit})", entry.line)
    start = _require(sec, f"start_{unit}", "sweep", {"sweep": line})
    stop = _require(sec, f"stop_{unit}", "sweep", {"sweep": line})
    points = _require(sec, "points", "sweep", {"sweep": line})
    spacing = _get(sec, "spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigError(f"spacing must be 'linear' or 'log', got {spacing!r}", sec["spacing"].line)
    if points < 2:
        raise ConfigError("a sweep needs at least 2 points", sec["points"].line)
    if not stop > start:
        raise ConfigError("sweep stop must exceed start", sec[f"stop_{unit}"].line)
    if spacing == "log" and start <= 0:
        raise ConfigError("log spacing needs a positive start", sec[f"start_{unit}"].line)
    if axis == "rabi" and start <= 0:
        raise ConfigError("Rabi frequencies must be positive", sec[f"start_{unit}"].line)
    if axis == "density" and start < 0:
        raise ConfigError("densities must be non-negative", sec[f"start_{unit}"].line)
    return SweepSpec(axis, start, stop, points, spacing)

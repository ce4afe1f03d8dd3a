"""Scenario documents for the command-line front end.

A scenario is one JSON object::

    {"command": "voltages", "trap": {...}, "ion": {...}, "voltages": {...}}

Only the section named after the command (plus ``trap`` and ``ion``) is
read.  Every physical quantity carries its unit in the key name: ``_mm``,
``_um``, ``_v``, ``_mhz``, ``_us`` for laboratory units, and ``_x0``
(oscillator lengths), ``_hw`` (hbar omega) and ``_inv_omega`` (1/omega) for
the natural units of the quantum modules.  Unknown keys are rejected.
:func:`canonical` fills in every default, so parsing its output gives back
the same object.
"""
from __future__ import annotations

import json
import types
import typing
from dataclasses import asdict, dataclass, fields
from dataclasses import field as _field
from pathlib import Path

from .errors import ConfigError

COMMANDS = ("fields", "trajectory", "voltages", "eigen", "propagate", "optimize-transport", "optimize-gate")
_DC5 = ["dc1", "dc2", "dc3", "dc4", "dc5"]


@dataclass
class TrapSection:
    """Built-in segmented four-rod trap and BEM settings."""

    rod_radius_mm: float = 0.5
    axis_clearance_mm: float = 1.5
    segment_width_mm: float = 2.0
    n_segments: int = 5
    n_phi: int = 12
    n_per_segment: int = 4
    refine: int = 1
    quadrature_points: int = 7


@dataclass
class IonSection:
    mass_amu: float = 40.0
    charge_e: float = 1.0


@dataclass
class FieldsSection:
    voltages_v: dict = _field(default_factory=lambda: {"dc3": -1.0})
    axis_min_mm: float = -5.0
    axis_max_mm: float = 5.0
    axis_points: int = 201
    u_rf_v: float = 200.0
    f_rf_mhz: float = 12.0
    radial_halfwidth_mm: float = 1.0
    radial_points: int = 41


@dataclass
class TrajectorySection:
    """``field`` is "trap" (fitted quadrupole of the BEM trap), "harmonic" or "free"."""

    field: str = "trap"
    method: str = "verlet"
    duration_us: float = 80.0
    steps: int = 4000
    stride: int = 1
    u_rf_v: float = 200.0
    f_rf_mhz: float = 12.0
    dc_voltages_v: dict = _field(default_factory=lambda: {"dc2": 1.0, "dc4": 1.0})
    fit_halfwidth_um: float = 150.0
    fit_points: int = 5
    harmonic_f_khz: float = 1000.0
    x0_um: list = _field(default_factory=lambda: [1.0, 5.0, 5.0])
    v0_m_s: list = _field(default_factory=lambda: [0.0, 0.0, 0.0])


@dataclass
class VoltagesSection:
    electrodes: list = _field(default_factory=lambda: list(_DC5))
    delta_v_per_mm2: float = 0.03
    positions_mm: list = _field(default_factory=lambda: [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5])
    bounds_v: list = _field(default_factory=lambda: [-10.0, 10.0])
    roi_halfwidth_mm: float = 3.0
    max_step_v: float | None = None
    axis_min_mm: float = -6.0
    axis_max_mm: float = 6.0
    axis_points: int = 241


@dataclass
class EigenSection:
    """Potential x^2/2 + quartic_hw x^4 in oscillator units."""

    quartic_hw: float = 0.0
    grid_length_x0: float = 128.0
    grid_points: int | None = None
    beta: float = 0.9
    n_states: int = 6
    method: str = "both"


@dataclass
class PropagateSection:
    """``initial`` is "ground" (oscillator ground state) or "gaussian"."""

    grid_length_x0: float = 20.0
    grid_points: int | None = None
    initial: str = "ground"
    x_initial_x0: float = 0.0
    sigma_x0: float = 0.7071067811865476
    k_initial_inv_x0: float = 0.0
    dt_inv_omega: float = 0.01
    steps: int = 1000
    method: str = "chebyshev"


@dataclass
class TransportSection:
    electrodes: list = _field(default_factory=lambda: list(_DC5))
    delta_v_per_mm2: float = 0.03
    distance_x0: float = 4.5
    duration_periods: float = 1.0
    dt_inv_omega: float = 0.01
    roi_halfwidth_um: float = 20.0
    axis_points: int = 81
    bounds_v: list = _field(default_factory=lambda: [-10.0, 10.0])
    grid_length_x0: float | None = None
    grid_points: int | None = None
    propagator: str = "chebyshev"
    optimizer: str = "krotov"
    iterations: int = 150
    target_fidelity: float | None = 0.999
    krotov_lambda: float = 1e8
    shape: str = "sin2"
    adapt_lambda: bool = True


@dataclass
class GateSection:
    """``rotations_pi``: (angle, phase) pairs of sideband pulses, both in units of pi."""

    eta: float = 0.1
    rabi_over_trap: float = 0.1
    grid_length_x0: float = 16.0
    grid_points: int = 64
    dt_inv_omega: float = 0.5
    propagator: str = "exact"
    stark_compensation: bool = True
    rotations_pi: list = _field(default_factory=lambda: [[0.7071067811865476, 0.0], [1.0, 0.5],
                                                        [0.7071067811865476, 0.0], [1.0, 0.5]])
    optimizer: str = "krotov"
    iterations: int = 50
    target_fidelity: float | None = None
    krotov_lambda: float = 0.1
    adapt_lambda: bool = True


SECTIONS = {
    "fields": ("fields", FieldsSection),
    "trajectory": ("trajectory", TrajectorySection),
    "voltages": ("voltages", VoltagesSection),
    "eigen": ("eigen", EigenSection),
    "propagate": ("propagate", PropagateSection),
    "optimize-transport": ("transport", TransportSection),
    "optimize-gate": ("gate", GateSection),
}

CHOICES = {
    "method": {"trajectory": ("verlet", "euler", "midpoint", "lobatto", "rk45"),
               "eigen": ("both", "fourier", "numerov"), "propagate": ("chebyshev", "split")},
    "field": ("trap", "harmonic", "free"),
    "initial": ("ground", "gaussian"),
    "propagator": {"transport": ("chebyshev", "split"), "gate": ("exact", "chebyshev")},
    "optimizer": ("krotov", "gradient"),
    "shape": ("sin2", "flat"),
}


@dataclass
class ScenarioConfig:
    command: str
    trap: TrapSection = _field(default_factory=TrapSection)
    ion: IonSection = _field(default_factory=IonSection)
    section: object = None

    @property
    def section_name(self) -> str:
        return SECTIONS[self.command][0]


def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer:
        if not float(value).is_integer():
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _coerce(value, tp, where):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return None if value is None else _coerce(value, args[0], where)
    if value is None:
        raise ConfigError(f"{where}: null is not allowed here")
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
        return value
    if tp is int:
        return _number(value, where, integer=True)
    if tp is float:
        return _number(value, where)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object of electrode -> volts")
        return {str(k): _number(v, f"{where}.{k}") for k, v in value.items()}
    if tp is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return [v if isinstance(v, str) else
                [_number(x, f"{where}[{i}]") for x in v] if isinstance(v, list) else _number(v, f"{where}[{i}]")
                for i, v in enumerate(value)]
    raise ConfigError(f"{where}: unsupported field type {tp}")


def _section(cls, data, where):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(names))}")
    kwargs = {k: _coerce(v, hints[k], f"{where}.{k}") for k, v in data.items()}
    obj = cls(**kwargs)
    for key, allowed in CHOICES.items():
        if key in names:
            opts = allowed.get(where, ()) if isinstance(allowed, dict) else allowed
            if opts and getattr(obj, key) not in opts:
                raise ConfigError(f"{where}.{key}: {getattr(obj, key)!r} is not one of {', '.join(opts)}")
    return obj


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a decoded scenario document."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    command = data.get("command")
    if command not in SECTIONS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {command!r}")
    name, cls = SECTIONS[command]
    unknown = sorted(set(data) - {"command", "trap", "ion", name})
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {', '.join(unknown)} for command {command!r}")
    return ScenarioConfig(command, _section(TrapSection, data.get("trap"), "trap"),
                          _section(IonSection, data.get("ion"), "ion"), _section(cls, data.get(name), name))


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {p}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)


def canonical(config: ScenarioConfig) -> dict:
    """Fully expanded document; ``parse_config(canonical(c)) == c``."""
    return {"command": config.command, "trap": asdict(config.trap), "ion": asdict(config.ion),
            config.section_name: asdict(config.section)}


def dumps(config: ScenarioConfig) -> str:
    return json.dumps(canonical(config), indent=2, sort_keys=True) + "\n"


def scenario_path(name: str) -> Path:
    """Path of a shipped scenario, e.g. ``scenario_path("transport")``."""
    p = Path(__file__).parent / "scenarios" / f"{name}.json"
    if not p.is_file():
        known = sorted(q.stem for q in p.parent.glob("*.json"))
        raise ConfigError(f"no shipped scenario {name!r}; available: {', '.join(known)}")
    return p

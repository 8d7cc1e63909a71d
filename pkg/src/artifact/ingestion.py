"""File-based inputs and outputs: scenarios, device repository, schedules.

Scenario files are TOML::

    id = "case-c"
    [grid]       horizon_slots, slot_duration_h, start (ISO-8601)
    [files]      devices, prices, weather (paths relative to the scenario)
    [devices]    include = [...]            optional subset of the repository
    [prices]     normalize, low, high       raw hourly prices are per MWh
    [turbine]    preset = "windspot-1.5" or explicit TurbineSpec fields
    [panel]      preset = "hitech-array" or explicit PanelSpec fields
    [prosumers]  ProsumerModel fields; ``seed`` is accepted for rng_seed
    [battery]    BatterySpec fields; omit the table for no battery

The device repository is a JSON array of
``{device_id, states: [{state_id, power_w}], policy: {variant, ...}}``.
Strict and pattern policies may list ``state_per_slot`` in full or give a
``default`` state plus ``spans`` of ``{state, start, end}`` slot ranges.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from artifact.domain import (
    BatteryAction,
    BatterySpec,
    DeviceSpec,
    DeviceState,
    Schedule,
    ScheduleProblem,
    TimeGrid,
)
from artifact.energy import (
    HITECH_ARRAY,
    WINDSPOT_1_5,
    PanelSpec,
    ProsumerModel,
    TurbineSpec,
    WeatherSample,
    build_sources,
    normalize_grid_prices,
)
from artifact.policies import policy_from_dict
from artifact.units import format_micro, from_micro

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

WEATHER_FIELDS = ("timestamp", "temperature_c", "dew_point_c", "pressure_hpa", "wind_speed_ms", "dni_wm2")
TURBINE_PRESETS = {"windspot-1.5": WINDSPOT_1_5}
PANEL_PRESETS = {"hitech-array": HITECH_ARRAY}
SCHEDULE_FORMAT = 1
BUNDLED_PREFIX = "bundled:"


class InputError(ValueError):
    """A scenario or data file is missing, malformed or inconsistent."""


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def iso(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# -- device repository -------------------------------------------------------


def _expand_column(params: dict, horizon: int, where: str) -> dict:
    if "state_per_slot" in params:
        return params
    params = dict(params)
    try:
        column = [params.pop("default")] * horizon
    except KeyError:
        raise InputError(f"{where}: strict/pattern policy needs state_per_slot or default + spans") from None
    for span in params.pop("spans", []):
        start, end = int(span["start"]), int(span["end"])
        if not 0 <= start <= end <= horizon:
            raise InputError(f"{where}: span {start}..{end} outside 0..{horizon}")
        column[start:end] = [span["state"]] * (end - start)
    params["state_per_slot"] = column
    return params


def device_from_dict(data: dict, horizon: int, where: str = "device") -> DeviceSpec:
    try:
        device_id = data["device_id"]
        states = tuple(DeviceState(s["state_id"], float(s["power_w"])) for s in data["states"])
        policy_data = data["policy"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{where}: missing field {exc}") from None
    if not isinstance(policy_data, dict):
        raise InputError(f"{where}: device {device_id} must have exactly one policy object")
    if str(policy_data.get("variant", "")).lower() in ("strict", "pattern"):
        policy_data = _expand_column(policy_data, horizon, f"{where} ({device_id})")
    if str(policy_data.get("variant", "")).lower() == "battery":
        raise InputError(f"{where}: battery storage is configured in the scenario [battery] table")
    try:
        policy = policy_from_dict(policy_data, default_id=f"{device_id}-policy")
    except TypeError as exc:
        raise InputError(f"{where} ({device_id}): bad policy parameters: {exc}") from None
    return DeviceSpec(device_id, states, policy)


def load_devices(path: Path, horizon: int, include: Optional[Sequence[str]] = None) -> list[DeviceSpec]:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"device repository {path} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, list):
        raise InputError(f"{path}: expected a JSON array of devices")
    devices = [device_from_dict(d, horizon, f"{path}[{i}]") for i, d in enumerate(raw)]
    if include is None:
        return devices
    by_id = {d.device_id: d for d in devices}
    missing = [i for i in include if i not in by_id]
    if missing:
        raise InputError(f"{path}: devices {missing} not in repository")
    return [by_id[i] for i in include]


# -- weather and prices ------------------------------------------------------


def _weather_record(rec: dict, where: str) -> WeatherSample:
    try:
        return WeatherSample(
            parse_timestamp(str(rec["timestamp"])),
            *(float(rec[k]) for k in WEATHER_FIELDS[1:]),
        )
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc}") from None
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def load_weather(path: Path) -> list[WeatherSample]:
    """Weather records from CSV (with header) or a JSON array of objects."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"weather file {path} not found")
    if path.suffix.lower() == ".json":
        try:
            records = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{exc.lineno}: {exc.msg}") from None
        return [_weather_record(r, f"{path}[{i}]") for i, r in enumerate(records)]
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [_weather_record(r, f"{path}:{reader.line_num}") for r in reader]


def load_hourly_prices(path: Path) -> list[tuple[datetime, float]]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"price file {path} not found")
    out = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                out.append((parse_timestamp(row["timestamp"]), float(row["price"])))
            except (KeyError, ValueError) as exc:
                raise InputError(f"{path}:{reader.line_num}: {exc}") from None
    return out


def prices_per_slot(hourly: Sequence[tuple[datetime, float]], grid: TimeGrid, source: str = "prices") -> list[float]:
    """Replicate hourly prices over the slots each hour covers.

    Every hour the grid touches must be present; the first missing hour is
    named in the error.
    """
    by_hour = {ts.replace(minute=0, second=0, microsecond=0): p for ts, p in hourly}
    out = []
    for t in range(grid.horizon_slots):
        hour = grid.slot_start(t).replace(minute=0, second=0, microsecond=0)
        if hour not in by_hour:
            raise InputError(f"{source}: no price for hour {iso(hour)} (needed by slot {t})")
        out.append(by_hour[hour])
    return out


# -- scenarios ---------------------------------------------------------------


@dataclass
class ScenarioConfig:
    scenario_id: str
    grid: TimeGrid
    base_dir: Path
    devices_path: Path
    prices_path: Path
    weather_path: Path
    include: Optional[list[str]] = None
    normalize_prices: bool = True
    price_low: float = 0.40
    price_high: float = 0.60
    turbine: Optional[TurbineSpec] = None
    panel: Optional[PanelSpec] = None
    prosumers: ProsumerModel = field(default_factory=ProsumerModel)
    battery: Optional[BatterySpec] = None


def _spec_from_table(cls, table: dict, presets: dict, where: str):
    table = dict(table)
    preset = table.pop("preset", None)
    if preset is not None:
        if preset not in presets:
            raise InputError(f"{where}: unknown preset {preset!r}")
        base = presets[preset]
        table = {**{f.name: getattr(base, f.name) for f in fields(base)}, **table}
    try:
        return cls(**table)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from None


def read_config(path: Path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"scenario file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    base = path.parent
    g = data.get("grid", {})
    start = parse_timestamp(g["start"]) if "start" in g else TimeGrid(1).start_label
    grid = TimeGrid(int(g.get("horizon_slots", 96)), float(g.get("slot_duration_h", 0.25)), start)
    files = data.get("files", {})
    try:
        devices_path, prices_path, weather_path = (base / files[k] for k in ("devices", "prices", "weather"))
    except KeyError as exc:
        raise InputError(f"{path}: [files] is missing {exc}") from None
    prices = data.get("prices", {})
    pros = dict(data.get("prosumers", {}))
    if "seed" in pros:
        pros["rng_seed"] = pros.pop("seed")
    try:
        prosumers = ProsumerModel(**pros)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: [prosumers]: {exc}") from None
    return ScenarioConfig(
        scenario_id=str(data.get("id", path.stem)),
        grid=grid,
        base_dir=base,
        devices_path=devices_path,
        prices_path=prices_path,
        weather_path=weather_path,
        include=data.get("devices", {}).get("include"),
        normalize_prices=bool(prices.get("normalize", True)),
        price_low=float(prices.get("low", 0.40)),
        price_high=float(prices.get("high", 0.60)),
        turbine=_spec_from_table(TurbineSpec, data["turbine"], TURBINE_PRESETS, f"{path}: [turbine]")
        if "turbine" in data
        else None,
        panel=_spec_from_table(PanelSpec, data["panel"], PANEL_PRESETS, f"{path}: [panel]") if "panel" in data else None,
        prosumers=prosumers,
        battery=_spec_from_table(BatterySpec, data["battery"], {}, f"{path}: [battery]") if "battery" in data else None,
    )


def scenario_inputs(config: ScenarioConfig) -> tuple[list[WeatherSample], list[float]]:
    """Weather records and per-slot grid prices, checked against the grid."""
    grid = config.grid
    weather = load_weather(config.weather_path)
    if len(weather) != grid.horizon_slots:
        raise InputError(
            f"{config.weather_path}: {len(weather)} weather records for a {grid.horizon_slots}-slot horizon"
        )
    raw = prices_per_slot(load_hourly_prices(config.prices_path), grid, str(config.prices_path))
    prices = normalize_grid_prices(raw, config.price_low, config.price_high) if config.normalize_prices else raw
    return weather, prices


def resolve_path(path) -> Path:
    """``bundled:NAME`` names a fixture shipped with the package."""
    text = str(path)
    if text.startswith(BUNDLED_PREFIX):
        return Path(str(resources.files("artifact.data").joinpath(text[len(BUNDLED_PREFIX) :])))
    return Path(path)


def load_scenario(path, with_battery: bool = True, seed: Optional[int] = None) -> ScheduleProblem:
    """Assemble a problem from a scenario file; ``seed`` overrides the prosumer seed."""
    config = read_config(resolve_path(path))
    if seed is not None:
        config.prosumers = replace(config.prosumers, rng_seed=seed)
    devices = load_devices(config.devices_path, config.grid.horizon_slots, config.include)
    weather, prices = scenario_inputs(config)
    sources = build_sources(config.grid, weather, config.turbine, config.panel, config.prosumers, prices)
    battery = config.battery if with_battery else None
    return ScheduleProblem(config.grid, devices, sources, battery, name=config.scenario_id)


# -- schedule output ---------------------------------------------------------


def schedule_to_dict(schedule: Schedule, grid: TimeGrid, metadata: Optional[dict] = None) -> dict:
    has_battery = bool(schedule.battery_trajectory)
    slots = []
    for t, row in enumerate(schedule.assignments):
        rec: dict[str, Any] = {
            "slot_index": t,
            "start": iso(grid.slot_start(t)),
            "states": dict(zip(schedule.device_ids, row)),
            "battery_action": schedule.battery_actions[t].value if schedule.battery_actions else None,
            "battery_charge_kwh": from_micro(schedule.battery_trajectory[t + 1]) if has_battery else None,
            "battery_charge_micro_kwh": schedule.battery_trajectory[t + 1] if has_battery else None,
            "demand_kwh": from_micro(schedule.per_slot_demand[t]),
            "demand_micro_kwh": schedule.per_slot_demand[t],
            "cost_micro": schedule.per_slot_cost[t],
            "cost": format_micro(schedule.per_slot_cost[t]),
        }
        slots.append(rec)
    return {
        "format": SCHEDULE_FORMAT,
        "metadata": {
            "horizon_slots": grid.horizon_slots,
            "slot_duration_h": grid.slot_duration,
            "start": iso(grid.start_label),
            "battery_initial_micro_kwh": schedule.battery_trajectory[0] if has_battery else None,
            **(metadata or {}),
        },
        "devices": list(schedule.device_ids),
        "slots": slots,
        "totals": {
            "total_cost_micro": schedule.total_cost,
            "total_cost": format_micro(schedule.total_cost),
            "demand_micro_kwh": sum(schedule.per_slot_demand),
            "battery_activity": schedule.battery_activity,
        },
    }


def write_schedule(schedule: Schedule, path, grid: TimeGrid, metadata: Optional[dict] = None) -> None:
    doc = schedule_to_dict(schedule, grid, metadata)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def schedule_from_dict(doc: dict) -> Schedule:
    device_ids = tuple(doc["devices"])
    slots = doc["slots"]
    actions = None
    trajectory: tuple[int, ...] = ()
    if slots and slots[0]["battery_action"] is not None:
        actions = tuple(BatteryAction(s["battery_action"]) for s in slots)
        trajectory = (doc["metadata"]["battery_initial_micro_kwh"],) + tuple(
            s["battery_charge_micro_kwh"] for s in slots
        )
    return Schedule(
        device_ids=device_ids,
        assignments=tuple(tuple(s["states"][d] for d in device_ids) for s in slots),
        battery_actions=actions,
        per_slot_cost=tuple(int(s["cost_micro"]) for s in slots),
        total_cost=int(doc["totals"]["total_cost_micro"]),
        battery_trajectory=trajectory,
        per_slot_demand=tuple(int(s["demand_micro_kwh"]) for s in slots),
    )


def read_schedule(path) -> tuple[Schedule, dict]:
    doc = json.loads(Path(path).read_text())
    return schedule_from_dict(doc), doc["metadata"]


# -- device profiling --------------------------------------------------------


@dataclass(frozen=True)
class PowerTrace:
    device_id: str
    timestamps: tuple[datetime, ...]
    watts: tuple[float, ...]

    def __post_init__(self):
        if len(self.timestamps) != len(self.watts):
            raise ValueError("timestamps and watts differ in length")
        if any(w < 0 for w in self.watts):
            raise ValueError("negative power sample")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("timestamps must be strictly increasing")

    @classmethod
    def from_watts(cls, device_id: str, watts: Sequence[float], cadence_s: float = 10.0, start: Optional[datetime] = None):
        start = start or TimeGrid(1).start_label
        ts = tuple(start + timedelta(seconds=cadence_s * i) for i in range(len(watts)))
        return cls(device_id, ts, tuple(float(w) for w in watts))


def load_trace(path) -> PowerTrace:
    """CSV with ``timestamp,watts`` columns; the device id is the file stem."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"power trace {path} not found")
    ts, watts = [], []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                ts.append(parse_timestamp(row["timestamp"]))
                watts.append(float(row["watts"]))
            except (KeyError, ValueError) as exc:
                raise InputError(f"{path}:{reader.line_num}: {exc}") from None
    try:
        return PowerTrace(path.stem, tuple(ts), tuple(watts))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class Clustering:
    centroids: tuple[float, ...]
    boundaries: tuple[float, ...]
    iterations: int

    def states(self, prefix: str = "S") -> list[DeviceState]:
        return [DeviceState(f"{prefix}{i}", c) for i, c in enumerate(self.centroids)]


def kmeans_1d(values: Sequence[float], k: int = 2, tol: float = 1e-6, max_iter: int = 500) -> Clustering:
    """Lloyd's iteration on a line, centres seeded at evenly spaced quantiles."""
    x = np.sort(np.asarray(values, dtype=float))
    if len(np.unique(x)) < k:
        raise ValueError(f"need at least {k} distinct values, got {len(np.unique(x))}")
    centres = np.quantile(x, np.linspace(0.0, 1.0, k)) if k > 1 else np.array([x.mean()])
    it = 0
    for it in range(1, max_iter + 1):
        # on sorted data each cluster is a contiguous run cut at midpoints
        cuts = np.searchsorted(x, (centres[:-1] + centres[1:]) / 2.0, side="right")
        groups = np.split(x, cuts)
        new = np.array([g.mean() if g.size else c for g, c in zip(groups, centres)])
        shift = np.max(np.abs(new - centres))
        centres = np.sort(new)
        if shift < tol:
            break
    bounds = tuple(float(b) for b in (centres[:-1] + centres[1:]) / 2.0)
    return Clustering(tuple(float(c) for c in centres), bounds, it)


def cluster_power_states(trace, k: int = 2) -> list[DeviceState]:
    """Power states of a device from its measured trace, lowest power first."""
    watts = trace.watts if isinstance(trace, PowerTrace) else trace
    return kmeans_1d(watts, k).states()

"""Generation and supply models that turn weather and prices into energy sources."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from artifact.domain import EnergySource, SourceKind, TimeGrid

# Wobus polynomial for saturation vapour pressure over water
ESO = 6.1078
WOBUS_COEFFS = (
    0.99999683,
    -0.90826951e-02,
    0.78736169e-04,
    -0.61117958e-06,
    0.43884187e-08,
    -0.29883885e-10,
    0.21874425e-12,
    -0.17892321e-14,
    0.11112018e-16,
    -0.30994571e-19,
)
WOBUS_RANGE_C = (-50.0, 60.0)

R_DRY_AIR = 287.058  # J/(kg K)
R_WATER_VAPOUR = 461.495  # J/(kg K)
BETZ_LIMIT = 0.59
PV_TEMP_COEFF = 0.005  # 1/K derating above 25 C
MIN_PROSUMER_OFFER_KWH = 1e-6


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class WeatherSample:
    timestamp: datetime
    temperature_c: float
    dew_point_c: float
    pressure_hpa: float
    wind_speed_ms: float
    dni_wm2: float

    @property
    def temperature_k(self) -> float:
        return self.temperature_c + 273.15


@dataclass(frozen=True)
class TurbineSpec:
    swept_area_m2: float
    power_coefficient: float
    cut_in_ms: float
    cut_out_ms: float
    unit_cost: float = 0.08

    def __post_init__(self):
        if not 0 < self.power_coefficient <= BETZ_LIMIT:
            raise ValueError(f"power coefficient {self.power_coefficient} outside (0, {BETZ_LIMIT}]")
        if not 0 <= self.cut_in_ms < self.cut_out_ms:
            raise ValueError("need 0 <= cut_in < cut_out")


@dataclass(frozen=True)
class PanelSpec:
    area_m2: float
    efficiency: float
    unit_cost: float = 0.06

    def __post_init__(self):
        if not 0 < self.efficiency < 1:
            raise ValueError(f"panel efficiency {self.efficiency} outside (0, 1)")
        if not self.area_m2 > 0:
            raise ValueError("panel area must be positive")


@dataclass(frozen=True)
class ProsumerModel:
    count: int = 10
    cost_mean_divisor: float = 1.5
    cost_sigma: float = 0.025
    energy_min: float = 0.0
    energy_max: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("prosumer count must be >= 0")
        if self.energy_min > self.energy_max:
            raise ValueError("energy_min > energy_max")
        if self.cost_sigma < 0:
            raise ValueError("cost_sigma must be >= 0")


# Reference Windspot 1.5 and 6 x HiTech 250 Wp array used by the bundled scenarios.
WINDSPOT_1_5 = TurbineSpec(swept_area_m2=12.88, power_coefficient=0.11, cut_in_ms=3.0, cut_out_ms=60.0)
HITECH_ARRAY = PanelSpec(area_m2=9.9, efficiency=0.153)


def saturation_vapour_pressure(dew_point_c: float) -> float:
    """Saturation vapour pressure in hPa at ``dew_point_c``.

    Evaluates the Wobus tenth-order polynomial ``C`` in Horner form and
    returns ``ESO / C**8``. Valid from -50 to 60 degrees C.
    """
    lo, hi = WOBUS_RANGE_C
    if not lo <= dew_point_c <= hi:
        raise DomainError(f"dew point {dew_point_c} C outside [{lo}, {hi}]")
    c = 0.0
    for coeff in reversed(WOBUS_COEFFS):
        c = coeff + dew_point_c * c
    return ESO / c**8


def air_density(pressure_hpa: float, temperature_k: float, dew_point_c: Optional[float]) -> float:
    """Moist-air density in kg/m^3.

    Parameters
    ----------
    pressure_hpa : float
        Station air pressure [hPa].
    temperature_k : float
        Air temperature [K].
    dew_point_c : float or None
        Dew point [C]. ``None`` or a dew point below the polynomial's
        range (-50 C) treats the air as dry.

    Returns
    -------
    float
        Sum of the dry-air and water-vapour partial densities.
    """
    if not temperature_k > 0:
        raise DomainError(f"temperature {temperature_k} K must be positive")
    if dew_point_c is None or dew_point_c < WOBUS_RANGE_C[0]:
        p_s = 0.0
    else:
        p_s = saturation_vapour_pressure(dew_point_c)
    p_d = pressure_hpa - p_s
    if p_d < 0:
        raise DomainError(f"vapour pressure {p_s:.2f} hPa exceeds air pressure {pressure_hpa} hPa")
    return 100.0 * p_d / (R_DRY_AIR * temperature_k) + 100.0 * p_s / (R_WATER_VAPOUR * temperature_k)


def wind_power(turbine: TurbineSpec, rho: float, wind_speed_ms: float) -> float:
    """Turbine output in W: ``0.5 rho Cp A v^3`` between cut-in and cut-out, else 0."""
    v = wind_speed_ms
    if not turbine.cut_in_ms <= v <= turbine.cut_out_ms:
        return 0.0
    return 0.5 * rho * turbine.power_coefficient * turbine.swept_area_m2 * v**3


def pv_power(panel: PanelSpec, dni_wm2: float, temperature_c: float) -> float:
    """Array output in W for a two-axis tracker seeing direct normal irradiance."""
    derate = 1.0 - PV_TEMP_COEFF * (temperature_c - 25.0)
    return max(0.0, panel.efficiency * panel.area_m2 * dni_wm2 * derate)


def normalize_grid_prices(raw: Sequence[float], low: float = 0.40, high: float = 0.60) -> list[float]:
    """Min-max rescale of a raw day-ahead series onto ``[low, high]`` per kWh."""
    if not len(raw):
        raise ValueError("empty price series")
    if not low < high:
        raise ValueError("need low < high")
    lo, hi = min(raw), max(raw)
    if hi == lo:
        return [(low + high) / 2.0] * len(raw)
    scale = (high - low) / (hi - lo)
    return [low + (x - lo) * scale for x in raw]


def generate_prosumers(model: ProsumerModel, grid_prices: Sequence[float]) -> list[list[EnergySource]]:
    """Sample ``model.count`` prosumer offers for every slot.

    Cost ~ Normal(price / divisor, sigma), clamped at 0; energy ~ Uniform[a, b].
    Offers with (almost) no energy are dropped. Deterministic in ``rng_seed``.
    """
    if not len(grid_prices):
        raise ValueError("empty grid price series")
    rng = np.random.default_rng(model.rng_seed)
    n_slots, n = len(grid_prices), model.count
    mean_cost = np.asarray(grid_prices, dtype=float)[:, None] / model.cost_mean_divisor
    costs = np.maximum(0.0, rng.normal(mean_cost, model.cost_sigma, size=(n_slots, n)))
    energies = rng.uniform(model.energy_min, model.energy_max, size=(n_slots, n))
    out = []
    for t in range(n_slots):
        slot = []
        for k in range(n):
            e = float(energies[t, k])
            if e < MIN_PROSUMER_OFFER_KWH:
                continue
            slot.append(EnergySource(f"prosumer-{k:02d}", SourceKind.PROSUMER, float(costs[t, k]), e))
        out.append(slot)
    return out


def grid_source(price: float) -> EnergySource:
    return EnergySource("grid", SourceKind.GRID, price, None)


@dataclass(frozen=True)
class GenerationEstimate:
    """Per-slot renewable estimate, the numbers behind a generation plot."""

    slot: int
    wind_w: float
    pv_w: float
    wind_kwh: float
    pv_kwh: float
    air_density: float


def estimate_generation(
    grid: TimeGrid,
    weather: Sequence[WeatherSample],
    turbine: Optional[TurbineSpec],
    panel: Optional[PanelSpec],
) -> list[GenerationEstimate]:
    if len(weather) != grid.horizon_slots:
        raise ValueError(f"{len(weather)} weather records for a {grid.horizon_slots}-slot grid")
    out = []
    for t, w in enumerate(weather):
        density = air_density(w.pressure_hpa, w.temperature_k, w.dew_point_c)
        pw = wind_power(turbine, density, w.wind_speed_ms) if turbine else 0.0
        pp = pv_power(panel, w.dni_wm2, w.temperature_c) if panel else 0.0
        dt = grid.slot_duration
        out.append(GenerationEstimate(t, pw, pp, pw * dt / 1000.0, pp * dt / 1000.0, density))
    return out


def build_sources(
    grid: TimeGrid,
    weather: Sequence[WeatherSample],
    turbine: Optional[TurbineSpec],
    panel: Optional[PanelSpec],
    prosumers: ProsumerModel,
    grid_prices: Sequence[float],
) -> list[list[EnergySource]]:
    """Assemble each slot's offers: wind, PV, prosumers and one unbounded grid source."""
    if len(grid_prices) != grid.horizon_slots:
        raise ValueError(f"{len(grid_prices)} grid prices for a {grid.horizon_slots}-slot grid")
    generation = estimate_generation(grid, weather, turbine, panel)
    offers = generate_prosumers(prosumers, grid_prices)
    out = []
    for t, gen in enumerate(generation):
        slot: list[EnergySource] = []
        if turbine is not None:
            slot.append(EnergySource("wind", SourceKind.WIND, turbine.unit_cost, gen.wind_kwh))
        if panel is not None:
            slot.append(EnergySource("pv", SourceKind.PV, panel.unit_cost, gen.pv_kwh))
        slot.extend(offers[t])
        slot.append(grid_source(grid_prices[t]))
        out.append(slot)
    return out

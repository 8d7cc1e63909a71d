"""Fixed-point conversions shared by every module.

Money is carried as integer micro-currency-units and energy as integer
micro-kWh (equivalently milli-watt-hours). Every float-to-integer
conversion in the package goes through this module so that rounding is
applied exactly once and in one place.
"""

from __future__ import annotations

MICRO = 1_000_000


def to_micro(value: float) -> int:
    """Currency (or currency per kWh) as a float -> integer micro-units."""
    return int(round(value * MICRO))


def kwh_to_micro(kwh: float) -> int:
    return int(round(kwh * MICRO))


def energy_micro_kwh(power_w: float, duration_h: float) -> int:
    """Energy drawn at ``power_w`` watts for ``duration_h`` hours, in micro-kWh."""
    # W * h = Wh; 1 Wh = 1000 micro-kWh
    return int(round(power_w * duration_h * 1000.0))


def pico_to_micro(pico: int) -> int:
    """Round a product of micro-kWh and micro-currency/kWh to micro-currency.

    Half-up rounding on non-negative integers keeps the map monotone.
    """
    return (pico + MICRO // 2) // MICRO


def from_micro(value: int) -> float:
    return value / MICRO


def format_micro(value: int) -> str:
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), MICRO)
    return f"{sign}{whole}.{frac:06d}"

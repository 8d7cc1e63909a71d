"""Regenerate the synthetic weather and price fixtures in src/artifact/data.

The weather days are invented, shaped only to make each case distinctive:
case A is overcast with strong wind all day, case B is windy until midday
then calm with an evening price peak, case C is calm and sunny with an
evening price peak.
"""

import csv
import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "artifact" / "data"
START = datetime(2022, 2, 8, tzinfo=timezone.utc)
SLOTS = 96


def stamp(ts):
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def sun(t, peak):
    # daylight from 06:30 to 19:30
    if not 26 <= t < 78:
        return 0.0
    return round(peak * math.sin(math.pi * (t - 26) / 52), 1)


def case_a(t):
    wind = 24.0 + 2.0 * math.sin(2 * math.pi * t / 96)
    return 8.0, 5.5, 1003.0, round(wind, 2), 0.0


def case_b(t):
    wind = max(0.0, 20.0 * (1 - t / 52)) if t < 52 else 0.0
    return 9.0, 4.0, 1010.0, round(wind, 2), sun(t, 600)


def case_c(t):
    return 12.0 + 4.0 * math.sin(math.pi * max(0, t - 30) / 66), 2.0, 1021.0, 0.0, sun(t, 1000)


# hourly day-ahead prices per MWh, before normalisation
PRICES = {
    "a": [205, 200, 198, 196, 198, 210, 240, 280, 300, 285, 270, 262, 255, 250, 252, 260, 280, 320, 340, 330, 300, 270, 240, 220],
    "b": [200, 200, 200, 200, 200, 200, 200, 250, 300, 280, 250, 240, 230, 230, 240, 280, 350, 400, 400, 400, 380, 320, 250, 220],
    "c": [200, 200, 200, 200, 200, 200, 200, 250, 300, 280, 250, 240, 230, 230, 240, 300, 380, 400, 400, 400, 400, 400, 350, 300],
}


def main():
    for name, fn in (("a", case_a), ("b", case_b), ("c", case_c)):
        with (DATA / f"weather_case_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "temperature_c", "dew_point_c", "pressure_hpa", "wind_speed_ms", "dni_wm2"])
            for t in range(SLOTS):
                temp, dew, p, v, dni = fn(t)
                w.writerow([stamp(START + timedelta(minutes=15 * t)), round(temp, 2), dew, p, v, dni])
        with (DATA / f"prices_case_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "price"])
            for h, price in enumerate(PRICES[name]):
                w.writerow([stamp(START + timedelta(hours=h)), price])


if __name__ == "__main__":
    main()

"""Freeze sun/moon positions from PyEphem for the ephemeris checks.

Run once with ``pip install ephem``; the package itself never imports it.
Writes tests/data/ephemeris_reference.json.
"""
import json
import math
from datetime import datetime, timedelta
from pathlib import Path

import ephem
import numpy as np

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "ephemeris_reference.json"
N = 24
SEED = 1950


def sample_tuples(rng):
    t0, t1 = datetime(1950, 1, 1), datetime(2050, 12, 31)
    span = (t1 - t0).total_seconds()
    for k in range(N):
        # stratify across the century so both ends are covered
        u = (k + rng.random()) / N
        when = t0 + timedelta(seconds=round(u * span / 60.0) * 60.0)
        lat = float(np.round(rng.uniform(-65.0, 65.0), 3))
        lon = float(np.round(rng.uniform(-180.0, 180.0), 3))
        yield when, lat, lon


def observe(when, lat, lon):
    obs = ephem.Observer()
    obs.lat, obs.lon = str(lat), str(lon)
    obs.elevation = 0.0
    obs.pressure = 0.0  # geometric altitudes, no refraction
    obs.date = ephem.Date(when)
    sun, moon = ephem.Sun(obs), ephem.Moon(obs)
    return {
        "utc": when.strftime("%Y-%m-%d %H:%M"),
        "latitude": lat,
        "longitude": lon,
        "sun_azimuth": math.degrees(sun.az),
        "sun_elevation": math.degrees(sun.alt),
        "moon_azimuth": math.degrees(moon.az),
        "moon_elevation": math.degrees(moon.alt),
        "moon_illuminated": moon.moon_phase,
    }


def new_moons(start, count):
    d = ephem.Date(start)
    out = []
    for _ in range(count):
        d = ephem.next_new_moon(d)
        out.append(datetime(*d.tuple()[:5]).strftime("%Y-%m-%d %H:%M"))
        d = ephem.Date(d + 1)
    return out


# clock-span checks: sun every 60 game seconds over 8 game minutes
SPANS = (("2010-06-21 20:30", 17.94, -76.84), ("1987-12-02 07:10", 51.48, 0.0), ("2031-03-20 23:45", -33.87, 151.21))


def span(start, lat, lon):
    t0 = datetime.strptime(start, "%Y-%m-%d %H:%M")
    out = []
    for k in range(9):
        obs = observe(t0 + timedelta(seconds=60 * k), lat, lon)
        out.append({"game_seconds": 60 * k, "sun_azimuth": obs["sun_azimuth"], "sun_elevation": obs["sun_elevation"]})
    return {"utc": start, "latitude": lat, "longitude": lon, "samples": out}


def main():
    rng = np.random.default_rng(SEED)
    samples = [observe(*t) for t in sample_tuples(rng)]
    doc = {"source": f"PyEphem {ephem.__version__}, pressure 0", "samples": samples,
           "new_moons_2000": new_moons(datetime(2000, 1, 1), 13), "clock_spans": [span(*a) for a in SPANS]}
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT} ({len(samples)} samples)")


if __name__ == "__main__":
    main()

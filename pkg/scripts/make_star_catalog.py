"""Regenerate src/outdoorsim/data/stars.txt from PyEphem's bundled star list.

Dev-time only (``pip install ephem``); the runtime never imports ephem.
Positions are J2000 right ascension / declination in degrees.
"""
from pathlib import Path

import ephem.stars

OUT = Path(__file__).resolve().parents[1] / "src" / "outdoorsim" / "data" / "stars.txt"


def main():
    rows = []
    for line in ephem.stars.db.strip().splitlines():
        name, _kind, ra, dec, mag = line.split(",")[:5]
        ra_h = float(ra.split("|")[0])
        dec_d = float(dec.split("|")[0])
        rows.append((float(mag), ra_h * 15.0, dec_d, name))
    rows.sort()
    with OUT.open("w") as f:
        f.write("# ra_deg dec_deg vmag name  (J2000, brightest first)\n")
        for mag, ra, dec, name in rows:
            f.write(f"{ra:.6f} {dec:.6f} {mag:.2f} {name.replace(' ', '_')}\n")
    print(f"wrote {len(rows)} stars to {OUT}")


if __name__ == "__main__":
    main()

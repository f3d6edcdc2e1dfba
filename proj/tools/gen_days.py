#!/usr/bin/env python3
"""Generate the bundled sample-day profiles (5 min resolution, 39 h).

Each file covers one simulated day plus the 15 h planning horizon of the
last MPC iteration. Shapes are synthetic: a two-peak household/commercial
demand curve and a clear-sky PV curve with seeded cloud noise.
"""

import argparse
import math
import random
from pathlib import Path

DT = 5
ROWS = 39 * 60 // DT
DEMAND_MAX = 50.0
RES_MAX = 30.0
NET_MAX = 28.0  # CHP 20 kW + grid 10 kW, minus headroom
# The CHP starts the day off; the grid alone must carry the first 30 min.
START_WINDOW = 30
START_NET_MAX = 9.5

SEASONS = {
    # name: (demand scale, sunrise h, sunset h, pv peak kW, cloudiness, seed)
    "summer": (0.85, 5.5, 21.0, 27.0, 0.15, 11),
    "transition": (1.0, 7.0, 19.0, 16.0, 0.45, 22),
    "winter": (1.15, 8.5, 16.5, 7.0, 0.35, 33),
}


def demand_shape(h):
    return (8.0
            + 10.0 * math.exp(-((h - 7.5) / 1.5) ** 2)
            + 6.0 * math.exp(-((h - 13.0) / 3.0) ** 2)
            + 16.0 * math.exp(-((h - 19.0) / 2.2) ** 2))


def pv_shape(h, sunrise, sunset):
    if h <= sunrise or h >= sunset:
        return 0.0
    return math.sin(math.pi * (h - sunrise) / (sunset - sunrise)) ** 1.3


def generate(name):
    scale, sunrise, sunset, peak, cloud, seed = SEASONS[name]
    rng = random.Random(seed)
    noise = 0.0
    shade = 0.0
    rows = []
    for i in range(ROWS):
        t = i * DT
        h = (t / 60.0) % 24.0
        noise = 0.85 * noise + rng.gauss(0.0, 0.6)
        shade = 0.9 * shade + rng.gauss(0.0, cloud * 0.25)
        shade = min(max(shade, -cloud), cloud)
        res = peak * pv_shape(h, sunrise, sunset) * (1.0 - abs(shade))
        res = min(max(res, 0.0), RES_MAX)
        demand = scale * demand_shape(h) + noise
        demand = min(max(demand, 0.0), DEMAND_MAX, res + NET_MAX)
        if t < START_WINDOW:
            demand = min(demand, res + START_NET_MAX)
        rows.append((t, round(demand, 3), round(res, 3)))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "days")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in SEASONS:
        path = args.out / f"{name}.csv"
        with path.open("w") as f:
            f.write("time_min,demand_kw,res_kw\n")
            for t, d, r in generate(name):
                f.write(f"{t},{d:g},{r:g}\n")
        print(path)


if __name__ == "__main__":
    main()

"""Regenerate src/gridsched/data/rts24.json from the public IEEE RTS-24 tables.

Network, unit sizes, unit locations and bus load shares follow the
MATPOWER/PYPOWER ``case24_ieee_rts`` data.  Unit-type operating parameters
(ramps, minimum up/down, startup costs) are approximations of the RTS-96
unit data.  Energy cost is the quadratic cost curve linearised at the middle
of the operating range, and its constant term becomes the no-load cost.

Run:  python3 scripts/build_rts24.py
"""
from __future__ import annotations

import json
from pathlib import Path

# (bus, unit type) in case24_ieee_rts order
UNITS = [
    (1, "U20"), (1, "U20"), (1, "U76"), (1, "U76"),
    (2, "U20"), (2, "U20"), (2, "U76"), (2, "U76"),
    (7, "U100"), (7, "U100"), (7, "U100"),
    (13, "U197"), (13, "U197"), (13, "U197"),
    (14, "SC"),
    (15, "U12"), (15, "U12"), (15, "U12"), (15, "U12"), (15, "U12"), (15, "U143"),
    (16, "U155"), (18, "U400"), (21, "U400"),
    (22, "U50"), (22, "U50"), (22, "U50"), (22, "U50"), (22, "U50"), (22, "U50"),
    (23, "U155"), (23, "U155"), (23, "U350"),
]

# type: pmin, pmax, (c2, c1, c0), MW/min, min_up, min_down, startup $, initially on
TYPES = {
    "U12": (2.4, 12, (0.328412, 56.564, 86.3852), 1, 2, 2, 700.0, False),
    "U20": (16, 20, (0.0, 130.0, 400.6849), 3, 1, 1, 50.0, False),
    "U50": (10, 50, (0.0, 0.001, 0.001), 5, 1, 1, 0.0, True),
    "U76": (15.2, 76, (0.014142, 16.0811, 212.3076), 2, 8, 4, 1400.0, True),
    "U100": (25, 100, (0.052672, 43.6615, 781.521), 7, 8, 8, 4000.0, False),
    # the 155 MW unit at bus 15 is derated so installed capacity totals 3,393 MW
    "U143": (54.3, 143, (0.008342, 12.3883, 382.2391), 3, 8, 8, 3000.0, True),
    "U155": (54.3, 155, (0.008342, 12.3883, 382.2391), 3, 8, 8, 3000.0, True),
    "U197": (69, 197, (0.00717, 48.5804, 832.7575), 3, 12, 10, 6000.0, False),
    "U350": (140, 350, (0.004895, 11.8495, 665.1094), 4, 24, 48, 8000.0, True),
    "U400": (100, 400, (0.000213, 4.4231, 395.3749), 20, 1, 1, 0.0, True),
    "SC": (0, 0, (0.0, 0.0, 0.0), 0, 1, 1, 0.0, False),
}

BUS_PEAK = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
            13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}

# winter weekday hourly load, percent of daily peak
PROFILE = [67, 63, 60, 59, 59, 60, 74, 86, 95, 96, 96, 95, 95, 95, 93, 94, 99, 100, 100, 96, 91, 83, 73, 63]
SYSTEM_PEAK = 2281.0

# from, to, reactance (p.u. on 100 MVA), normal rating, emergency rating
BRANCHES = [
    (1, 2, 0.0139, 175, 250), (1, 3, 0.2112, 175, 208), (1, 5, 0.0845, 175, 208),
    (2, 4, 0.1267, 175, 208), (2, 6, 0.192, 175, 208), (3, 9, 0.119, 175, 208),
    (3, 24, 0.0839, 400, 510), (4, 9, 0.1037, 175, 208), (5, 10, 0.0883, 175, 208),
    (6, 10, 0.0605, 175, 193), (7, 8, 0.0614, 175, 208), (8, 9, 0.1651, 175, 208),
    (8, 10, 0.1651, 175, 208), (9, 11, 0.0839, 400, 510), (9, 12, 0.0839, 400, 510),
    (10, 11, 0.0839, 400, 510), (10, 12, 0.0839, 400, 510), (11, 13, 0.0476, 500, 600),
    (11, 14, 0.0418, 500, 625), (12, 13, 0.0476, 500, 625), (12, 23, 0.0966, 500, 625),
    (13, 23, 0.0865, 500, 625), (14, 16, 0.0389, 500, 625), (15, 16, 0.0173, 500, 600),
    (15, 21, 0.049, 500, 600), (15, 21, 0.049, 500, 600), (15, 24, 0.0519, 500, 600),
    (16, 17, 0.0259, 500, 600), (16, 19, 0.0231, 500, 600), (17, 18, 0.0144, 500, 600),
    (17, 22, 0.1053, 500, 600), (18, 21, 0.0259, 500, 600), (18, 21, 0.0259, 500, 600),
    (19, 20, 0.0396, 500, 600), (19, 20, 0.0396, 500, 600), (20, 23, 0.0216, 500, 600),
    (20, 23, 0.0216, 500, 600), (21, 22, 0.0678, 500, 600),
]


def generator(gid, bus, kind):
    pmin, pmax, (c2, c1, c0), per_min, up, down, su, on = TYPES[kind]
    hourly = min(pmax, 60.0 * per_min)
    return {
        "id": gid, "bus": bus,
        "energy_cost": round(c1 + c2 * (pmin + pmax), 4),
        "no_load_cost": c0, "startup_cost": su,
        "p_min": pmin, "p_max": pmax,
        "ramp_hourly": hourly,
        "ramp_startup": max(pmin, hourly), "ramp_shutdown": max(pmin, hourly),
        "ramp_10min": min(pmax, 10.0 * per_min),
        "min_up": up, "min_down": down, "initial_on": on,
    }


def build() -> dict:
    share = SYSTEM_PEAK / sum(BUS_PEAK.values())
    load = {str(b): [peak * share * p / 100.0 for p in PROFILE] for b, peak in BUS_PEAK.items()}
    return {
        "name": "IEEE RTS-24 (reconstruction)",
        "reference_bus": 13,
        "horizon": len(PROFILE),
        "buses": [{"id": b, "name": f"bus{b}"} for b in range(1, 25)],
        "generators": [generator(i + 1, bus, kind) for i, (bus, kind) in enumerate(UNITS)],
        "lines": [{"id": i + 1, "from": a, "to": b, "susceptance": round(100.0 / x, 6),
                   "rate_normal": float(rn), "rate_emergency": float(re)}
                  for i, (a, b, x, rn, re) in enumerate(BRANCHES)],
        "load": load,
        "cdr": {"cap_fraction": 0.3, "penalty": {}, "default_penalty": 1.0},
    }


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "gridsched" / "data" / "rts24.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {out}")

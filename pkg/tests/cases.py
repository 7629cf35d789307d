"""Programmatic builders for the small cases used across the suite."""
from __future__ import annotations

import json

import numpy as np

from gridsched.case_model import parse_case


def gen(gid, bus, *, cost=10.0, nl=0.0, su=0.0, pmin=0.0, pmax=100.0, hr=None, su_ramp=None,
        sd_ramp=None, r10=None, up=1, down=1, on=False):
    return {
        "id": gid, "bus": bus, "energy_cost": cost, "no_load_cost": nl, "startup_cost": su,
        "p_min": pmin, "p_max": pmax,
        "ramp_hourly": pmax if hr is None else hr,
        "ramp_startup": pmax if su_ramp is None else su_ramp,
        "ramp_shutdown": pmax if sd_ramp is None else sd_ramp,
        "ramp_10min": pmax if r10 is None else r10,
        "min_up": up, "min_down": down, "initial_on": on,
    }


def line(lid, a, b, *, x=0.1, rate=100.0, emergency=None):
    return {"id": lid, "from": a, "to": b, "susceptance": 100.0 / x,
            "rate_normal": rate, "rate_emergency": rate if emergency is None else emergency}


def document(buses, gens, lines, load, *, ref=1, cap=0.3, penalty=0.0, participating=None, name="tiny"):
    horizon = len(next(iter(load.values())))
    cdr = {"cap_fraction": cap, "penalty": {}, "default_penalty": penalty}
    if participating is not None:
        cdr["participating_buses"] = participating
    return {
        "name": name, "reference_bus": ref, "horizon": horizon,
        "buses": [{"id": b, "name": f"b{b}"} for b in buses],
        "generators": gens, "lines": lines,
        "load": {str(k): v for k, v in load.items()}, "cdr": cdr,
    }


def build(doc):
    return parse_case(json.dumps(doc))


def triangle(load3=(80.0,), *, rate13=100.0, emerg=None, penalty=0.0, cheap_r10=None, cap=0.3,
             exp_nl=50.0, exp_su=0.0):
    """Buses 1-2-3 in a ring; cheap unit at bus 1, expensive unit at bus 2, load at bus 3."""
    emerg = rate13 if emerg is None else emerg
    gens = [gen(1, 1, cost=10.0, nl=5.0, su=20.0, pmax=150.0, r10=cheap_r10),
            gen(2, 2, cost=40.0, nl=exp_nl, su=exp_su, pmax=150.0)]
    lines = [line(1, 1, 2, rate=100.0, emergency=120.0),
             line(2, 1, 3, rate=rate13, emergency=emerg),
             line(3, 2, 3, rate=100.0, emergency=120.0)]
    return build(document([1, 2, 3], gens, lines, {3: list(load3)}, cap=cap, penalty=penalty))


def random_tiny(seed):
    """Random case within the oracle limits: <=3 buses, <=2 units, T<=2."""
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 3))
    G = 2
    gens = []
    for g in range(G):
        pmax = float(rng.choice([60.0, 80.0, 120.0]))
        gens.append(gen(g + 1, g + 1, cost=float(rng.integers(5, 50)), nl=float(rng.integers(0, 60)),
                        su=float(rng.integers(0, 100)), pmin=float(rng.choice([0.0, 10.0])), pmax=pmax,
                        hr=pmax, r10=float(rng.choice([20.0, 40.0, pmax])), up=int(rng.integers(1, 3)),
                        down=int(rng.integers(1, 3))))
    rates = [float(rng.choice([40.0, 60.0, 100.0])) for _ in range(3)]
    lines = [line(1, 1, 2, x=float(rng.choice([0.05, 0.1])), rate=rates[0], emergency=rates[0] * 1.2),
             line(2, 1, 3, x=float(rng.choice([0.05, 0.1])), rate=rates[1], emergency=rates[1] * 1.2),
             line(3, 2, 3, x=float(rng.choice([0.05, 0.1])), rate=rates[2], emergency=rates[2] * 1.2)]
    load = {3: [float(rng.integers(20, 70)) for _ in range(T)],
            2: [float(rng.integers(0, 20)) for _ in range(T)]}
    return build(document([1, 2, 3], gens, lines, load, penalty=float(rng.choice([0.0, 30.0, 300.0]))))


def corridor(**kw):
    return build(corridor_document(**kw))


def corridor_document(*, penalty=0.0, e12=60.0, r10_2=10.0, load3=80.0):
    """Three units; losing line 1-3 squeezes bus-1 output through line 1-2.

    Without curtailment the bus-2 unit must carry (load3 - e12) after the
    outage, and its 10-minute ramp forces it to be dispatched beforehand.
    Curtailment at bus 3 removes that need, so the CDR variants are strictly
    cheaper while curtailment costs less than the redispatch it replaces.
    """
    gens = [gen(1, 1, cost=10.0, nl=5.0, su=20.0, pmax=150.0),
            gen(2, 2, cost=40.0, pmax=150.0, r10=r10_2),
            gen(3, 1, cost=20.0, pmax=150.0)]
    lines = [line(1, 1, 2, rate=e12, emergency=e12),
             line(2, 1, 3, rate=100.0, emergency=120.0),
             line(3, 2, 3, rate=100.0, emergency=120.0)]
    return document([1, 2, 3], gens, lines, {3: [load3]}, penalty=penalty, name="corridor")


def boundary(factor=1.0):
    """Ring with 100 MW at bus 3 and 84 MW emergency ratings into it.

    Losing either line into bus 3 leaves 84 MW of import capacity.  With the
    0.3 cap, curtailment exactly covers the shortfall at factor 1.2.
    """
    gens = [gen(1, 1, cost=10.0, nl=5.0, su=20.0, pmax=150.0),
            gen(2, 2, cost=40.0, nl=5.0, pmax=150.0)]
    lines = [line(1, 1, 2, rate=100.0, emergency=120.0),
             line(2, 1, 3, rate=80.0, emergency=84.0),
             line(3, 2, 3, rate=80.0, emergency=84.0)]
    return build(document([1, 2, 3], gens, lines, {3: [100.0 * factor]}, name="boundary"))

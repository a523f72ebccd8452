"""Regenerate the shipped topology and demand fixtures.

Link lengths are great-circle distances between the city coordinates below,
scaled by one factor per network so the mean shortest-path length hits the
target. Demands form a full mesh with gravity-model rates from seeded node
weights.

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from qotplan.netmodel import Demand, LinkSpec, Topology, save_demands, save_topology

OUT = Path(__file__).resolve().parents[1] / "src" / "qotplan" / "data"

GERMANY = {
    "coords": {
        "Berlin": (13.40, 52.52), "Bremen": (8.80, 53.08), "Dortmund": (7.47, 51.51),
        "Duesseldorf": (6.78, 51.22), "Essen": (7.01, 51.46), "Frankfurt": (8.68, 50.11),
        "Hamburg": (9.99, 53.55), "Hannover": (9.73, 52.37), "Karlsruhe": (8.40, 49.01),
        "Koeln": (6.96, 50.94), "Leipzig": (12.37, 51.34), "Mannheim": (8.47, 49.49),
        "Muenchen": (11.58, 48.14), "Norden": (7.21, 53.60), "Nuernberg": (11.08, 49.45),
        "Stuttgart": (9.18, 48.78), "Ulm": (9.99, 48.40),
    },
    "links": [
        ("Berlin", "Hamburg"), ("Berlin", "Hannover"), ("Berlin", "Leipzig"),
        ("Bremen", "Hamburg"), ("Bremen", "Hannover"), ("Bremen", "Norden"),
        ("Dortmund", "Essen"), ("Dortmund", "Hannover"), ("Dortmund", "Koeln"),
        ("Dortmund", "Norden"), ("Duesseldorf", "Essen"), ("Duesseldorf", "Koeln"),
        ("Frankfurt", "Hannover"), ("Frankfurt", "Koeln"), ("Frankfurt", "Leipzig"),
        ("Frankfurt", "Mannheim"), ("Frankfurt", "Nuernberg"), ("Hamburg", "Hannover"),
        ("Hannover", "Leipzig"), ("Karlsruhe", "Mannheim"), ("Karlsruhe", "Stuttgart"),
        ("Leipzig", "Nuernberg"), ("Muenchen", "Nuernberg"), ("Muenchen", "Ulm"),
        ("Nuernberg", "Stuttgart"), ("Stuttgart", "Ulm"),
    ],
    "target_km": 420.0,
    "art0_gbps": 30000.0,
}

SPAIN = {
    "coords": {
        "Madrid": (-3.70, 40.42), "Barcelona": (2.17, 41.39), "Valencia": (-0.38, 39.47),
        "Sevilla": (-5.98, 37.39), "Zaragoza": (-0.89, 41.65), "Bilbao": (-2.93, 43.26),
        "Malaga": (-4.42, 36.72), "Murcia": (-1.13, 37.99), "Valladolid": (-4.72, 41.65),
        "Santiago": (-8.54, 42.88), "Oviedo": (-5.85, 43.36), "Pamplona": (-1.64, 42.81),
        "Badajoz": (-6.97, 38.88), "Granada": (-3.60, 37.18), "Salamanca": (-5.66, 40.97),
        "Albacete": (-1.86, 38.99),
    },
    "links": [
        ("Madrid", "Zaragoza"), ("Madrid", "Valencia"), ("Madrid", "Valladolid"),
        ("Madrid", "Albacete"), ("Madrid", "Badajoz"), ("Madrid", "Granada"),
        ("Madrid", "Salamanca"), ("Madrid", "Bilbao"), ("Madrid", "Sevilla"),
        ("Zaragoza", "Barcelona"), ("Zaragoza", "Pamplona"), ("Zaragoza", "Valencia"),
        ("Barcelona", "Valencia"), ("Valencia", "Murcia"), ("Albacete", "Murcia"),
        ("Murcia", "Granada"), ("Granada", "Malaga"), ("Malaga", "Sevilla"),
        ("Sevilla", "Badajoz"), ("Badajoz", "Salamanca"), ("Salamanca", "Valladolid"),
        ("Valladolid", "Oviedo"), ("Oviedo", "Santiago"), ("Santiago", "Salamanca"),
        ("Bilbao", "Pamplona"), ("Bilbao", "Oviedo"), ("Valladolid", "Bilbao"),
    ],
    "target_km": 610.0,
    "art0_gbps": 20000.0,
}

SWEDEN = {
    "coords": {
        "Malmo": (13.00, 55.60), "Lund": (13.19, 55.70), "Helsingborg": (12.69, 56.05),
        "Kristianstad": (14.16, 56.03), "Karlskrona": (15.59, 56.16), "Vaxjo": (14.81, 56.88),
        "Kalmar": (16.36, 56.66), "Halmstad": (12.86, 56.67), "Goteborg": (11.97, 57.71),
        "Jonkoping": (14.16, 57.78), "Linkoping": (15.62, 58.41), "Norrkoping": (16.19, 58.59),
        "Orebro": (15.21, 59.27), "Karlstad": (13.50, 59.40), "Vasteras": (16.54, 59.61),
        "Stockholm": (18.07, 59.33), "Uppsala": (17.64, 59.86), "Gavle": (17.14, 60.67),
        "Falun": (15.63, 60.61), "Sundsvall": (17.31, 62.39), "Ostersund": (14.64, 63.18),
        "Umea": (20.26, 63.83), "Skelleftea": (20.95, 64.75), "Lulea": (22.15, 65.58),
        "Kiruna": (20.23, 67.86),
    },
    "links": [
        ("Malmo", "Lund"), ("Lund", "Helsingborg"), ("Helsingborg", "Halmstad"),
        ("Halmstad", "Goteborg"), ("Lund", "Kristianstad"), ("Kristianstad", "Karlskrona"),
        ("Karlskrona", "Kalmar"), ("Kalmar", "Vaxjo"), ("Vaxjo", "Jonkoping"),
        ("Kalmar", "Linkoping"), ("Goteborg", "Jonkoping"), ("Jonkoping", "Linkoping"),
        ("Linkoping", "Norrkoping"), ("Norrkoping", "Stockholm"), ("Goteborg", "Karlstad"),
        ("Karlstad", "Orebro"), ("Orebro", "Linkoping"), ("Orebro", "Vasteras"),
        ("Vasteras", "Stockholm"), ("Stockholm", "Uppsala"), ("Uppsala", "Gavle"),
        ("Gavle", "Falun"), ("Falun", "Vasteras"), ("Gavle", "Sundsvall"),
        ("Sundsvall", "Ostersund"), ("Sundsvall", "Umea"), ("Umea", "Skelleftea"),
        ("Skelleftea", "Lulea"), ("Lulea", "Kiruna"),
    ],
    "target_km": 760.0,
    "art0_gbps": 15000.0,
}

# small ring-with-chords network loaded so that the yearly RCSA ends a 10-year
# study underprovisioned while most years remain fully provisioned by both
# yearly and EoL planning
STRESS = {
    "coords": {
        "A": (0.0, 50.0), "B": (2.5, 50.6), "C": (5.0, 50.0),
        "D": (5.0, 48.6), "E": (2.5, 48.0), "F": (0.0, 48.6),
    },
    "links": [
        ("A", "B"), ("B", "C"), ("C", "D"), ("D", "E"), ("E", "F"), ("F", "A"),
        ("A", "D"), ("B", "E"),
    ],
    "target_km": 420.0,
    "art0_gbps": 3000.0,
}


def great_circle_km(a, b) -> float:
    lon1, lat1, lon2, lat2 = map(math.radians, (*a, *b))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6371.0 * math.asin(math.sqrt(h))


def build(name: str, spec: dict, seed: int) -> tuple[Topology, list[Demand]]:
    coords = spec["coords"]
    nodes = tuple(coords)
    raw = [(u, v, great_circle_km(coords[u], coords[v])) for u, v in spec["links"]]
    base = Topology(name, nodes, tuple(LinkSpec(u, v, d) for u, v, d in raw))
    scale = spec["target_km"] / base.average_shortest_path_km()
    topo = Topology(name, nodes, tuple(LinkSpec(u, v, round(d * scale, 1)) for u, v, d in raw))

    rng = np.random.default_rng(seed)
    weight = dict(zip(nodes, rng.uniform(0.5, 2.0, len(nodes))))
    pairs = [(u, v) for i, u in enumerate(nodes) for v in nodes[i + 1:]]
    raw_rates = np.array([weight[u] * weight[v] for u, v in pairs])
    rates = raw_rates * spec["art0_gbps"] / raw_rates.sum()
    demands = [Demand(i, u, v, round(float(r), 1)) for i, ((u, v), r) in enumerate(zip(pairs, rates))]
    return topo, demands


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for seed, (name, spec) in enumerate(
            [("germany17", GERMANY), ("spain16", SPAIN), ("sweden25", SWEDEN), ("stress6", STRESS)]):
        topo, demands = build(name, spec, seed)
        save_topology(topo, OUT / f"{name}.json")
        save_demands(demands, OUT / f"{name}_demands.csv")
        print(f"{name}: {topo.n_nodes} nodes, {topo.n_links} links, {len(demands)} demands, "
              f"degree {topo.average_degree():.2f}, mean path {topo.average_shortest_path_km():.0f} km")


if __name__ == "__main__":
    main()

"""Network topology, span expansion and demand growth.

Topology files are JSON::

    {"name": "germany17",
     "nodes": ["Berlin", "Bremen", ...],
     "links": [{"source": "Berlin", "target": "Hamburg", "length_km": 306.2}, ...]}

Links are undirected, carry one fibre pair and must form a connected graph.
Demand files are CSV with the header ``src,dst,rate_gbps`` giving the
requested rate of each node pair in the first planning period.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import networkx as nx

from qotplan.config import FiberSettings
from qotplan.errors import TopologyError
from qotplan.phys import FiberLink

logger = logging.getLogger(__name__)

YEARLY = "yearly"
MONTHLY = "monthly"
SPAN_RANGE_KM = (40.0, 130.0)


@dataclass(frozen=True)
class LinkSpec:
    source: str
    target: str
    length_km: float

    @property
    def link_id(self) -> str:
        a, b = sorted((self.source, self.target))
        return f"{a}--{b}"


@dataclass
class Topology:
    name: str
    nodes: tuple[str, ...]
    links: tuple[LinkSpec, ...]
    graph: nx.Graph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        self.links = tuple(self.links)
        self.graph = nx.Graph()
        self.graph.add_nodes_from(self.nodes)
        for link in self.links:
            self.graph.add_edge(link.source, link.target, length_km=link.length_km, spec=link)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def link(self, u: str, v: str) -> LinkSpec:
        try:
            return self.graph.edges[u, v]["spec"]
        except KeyError:
            raise TopologyError(f"no link between {u!r} and {v!r}") from None

    def neighbors(self, node: str) -> list[str]:
        return sorted(self.graph.neighbors(node))

    def path_length(self, path: Sequence[str]) -> float:
        return sum(self.link(u, v).length_km for u, v in zip(path, path[1:]))

    def path_links(self, path: Sequence[str]) -> list[LinkSpec]:
        return [self.link(u, v) for u, v in zip(path, path[1:])]

    def average_degree(self) -> float:
        return 2.0 * self.n_links / self.n_nodes

    def average_shortest_path_km(self) -> float:
        """Mean shortest-path length in km over all unordered node pairs."""
        if self.n_nodes < 2:
            return 0.0
        dist = dict(nx.all_pairs_dijkstra_path_length(self.graph, weight="length_km"))
        total = sum(dist[u][v] for i, u in enumerate(self.nodes) for v in self.nodes[i + 1:])
        return total / (self.n_nodes * (self.n_nodes - 1) / 2)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": list(self.nodes),
            "links": [{"source": l.source, "target": l.target, "length_km": l.length_km}
                      for l in self.links],
        }


def topology_from_dict(raw: object, origin: str = "<topology>") -> Topology:
    if not isinstance(raw, dict):
        raise TopologyError(f"{origin}: top level must be an object")
    for key in ("nodes", "links"):
        if not isinstance(raw.get(key), list):
            raise TopologyError(f"{origin}: missing or non-list {key!r}")
    nodes = raw["nodes"]
    seen = set()
    for i, node in enumerate(nodes):
        if not isinstance(node, str) or not node:
            raise TopologyError(f"{origin}: nodes[{i}] must be a non-empty string")
        if node in seen:
            raise TopologyError(f"{origin}: nodes[{i}] duplicates {node!r}")
        seen.add(node)
    links = []
    pairs = set()
    for i, item in enumerate(raw["links"]):
        where = f"{origin}: links[{i}]"
        if not isinstance(item, dict):
            raise TopologyError(f"{where} must be an object")
        try:
            u, v, length = item["source"], item["target"], item["length_km"]
        except KeyError as exc:
            raise TopologyError(f"{where} lacks {exc.args[0]!r}") from None
        if u not in seen or v not in seen:
            raise TopologyError(f"{where} references unknown node")
        if u == v:
            raise TopologyError(f"{where} is a self-loop at {u!r}")
        if isinstance(length, bool) or not isinstance(length, (int, float)) \
                or not math.isfinite(length) or length <= 0:
            raise TopologyError(f"{where} has non-positive or invalid length {length!r}")
        pair = frozenset((u, v))
        if pair in pairs:
            raise TopologyError(f"{where} duplicates the link {u!r}-{v!r}")
        pairs.add(pair)
        links.append(LinkSpec(u, v, float(length)))
    topo = Topology(str(raw.get("name", "")), tuple(nodes), tuple(links))
    if topo.n_nodes == 0 or not nx.is_connected(topo.graph):
        raise TopologyError(f"{origin}: graph is empty or not connected")
    return topo


def load_topology(path: str | Path) -> Topology:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TopologyError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None
    except OSError as exc:
        raise TopologyError(f"{path}: {exc.strerror}") from None
    return topology_from_dict(raw, str(path))


def save_topology(topo: Topology, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(topo.to_dict(), fh, indent=2)
        fh.write("\n")


def span_count(length_km: float, target_span_km: float) -> int:
    # round half up, never fewer than one span
    return max(1, int(math.floor(length_km / target_span_km + 0.5)))


def expand_spans(length_km: float, target_span_km: float = 80.0,
                 fiber: Optional[FiberSettings] = None) -> FiberLink:
    """Split a link into equal spans of roughly ``target_span_km``."""
    if not length_km > 0:
        raise TopologyError("link length must be positive")
    if not 60.0 <= target_span_km <= 120.0:
        raise ValueError("target span length must lie in [60, 120] km")
    fiber = FiberSettings() if fiber is None else fiber
    n = span_count(length_km, target_span_km)
    span = length_km / n
    if not SPAN_RANGE_KM[0] <= span <= SPAN_RANGE_KM[1]:
        logger.warning("link of %.1f km expands to %d spans of %.1f km", length_km, n, span)
    return FiberLink(span, n, alpha_db_km=fiber.alpha_db_km, beta2_ps2_km=fiber.beta2_ps2_km,
                     gamma_w_km=fiber.gamma_w_km, noise_figure_db=fiber.noise_figure_db)


@dataclass(frozen=True)
class Demand:
    demand_id: int
    source: str
    destination: str
    rate_gbps: float


@dataclass(frozen=True)
class DemandSeries:
    demand: Demand
    rates: tuple[float, ...]


def load_demands(path: str | Path, topology: Optional[Topology] = None) -> list[Demand]:
    demands = []
    pairs = set()
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise TopologyError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"src", "dst", "rate_gbps"}:
            raise TopologyError(f"{path}: expected header src,dst,rate_gbps")
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            src, dst = row["src"], row["dst"]
            try:
                rate = float(row["rate_gbps"])
            except (TypeError, ValueError):
                raise TopologyError(f"{where}: rate is not a number") from None
            if not src or not dst or src == dst:
                raise TopologyError(f"{where}: source and destination must differ")
            if not (math.isfinite(rate) and rate > 0):
                raise TopologyError(f"{where}: rate must be positive")
            if topology is not None and (src not in topology.graph or dst not in topology.graph):
                raise TopologyError(f"{where}: unknown node")
            pair = frozenset((src, dst))
            if pair in pairs:
                raise TopologyError(f"{where}: duplicate demand {src}-{dst}")
            pairs.add(pair)
            demands.append(Demand(len(demands), src, dst, rate))
    return demands


def save_demands(demands: Sequence[Demand], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "rate_gbps"])
        for d in demands:
            w.writerow([d.source, d.destination, repr(d.rate_gbps)])


def growth_factor(annual_rate: float, period: int, granularity: str = YEARLY) -> float:
    if granularity == YEARLY:
        return (1.0 + annual_rate) ** period
    if granularity == MONTHLY:
        return (1.0 + annual_rate) ** (period / 12.0)
    raise ValueError(f"unknown granularity {granularity!r}")


def grow_demands(demands: Sequence[Demand], annual_rate: float, periods: int,
                 granularity: str = YEARLY) -> list[DemandSeries]:
    """Rate of every demand in periods 0..periods-1 under compound growth."""
    if annual_rate < 0:
        raise ValueError("annual growth rate must be non-negative")
    factors = [growth_factor(annual_rate, k, granularity) for k in range(periods)]
    return [DemandSeries(d, tuple(d.rate_gbps * f for f in factors)) for d in demands]

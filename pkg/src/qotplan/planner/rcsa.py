"""Multi-period routing, configuration and spectrum assignment.

Each period grows the demands, provisions every demand's unmet remainder with
new lightpaths (k shortest paths, first-fit spectrum, fewest lightpaths first)
and, for the yearly and monthly studies, runs a downgrade pass in which the
path computation element (PCE) evaluates every link and infeasible lightpaths
step down to a more robust configuration or are removed.

Three studies differ in how configurations are screened before placement:

* ``eol``: feasible against a fully loaded C-band on every link; placements
  are final.
* ``yearly`` / ``monthly``: feasible on ASE-only SNR, then corrected by the
  downgrade pass. Monthly splits the annual growth into 12 compound steps.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from qotplan.config import Settings
from qotplan.errors import QotPlanError
from qotplan.grid import ChannelConfig, FlexGrid, common_first_fit, slot_center_frequency
from qotplan.netmodel import MONTHLY, YEARLY, Demand, Topology, expand_spans, grow_demands
from qotplan.phys import (
    FiberLink,
    TransceiverMode,
    ase_variance,
    launch_power_for,
    snr_sum_db,
    transceiver_menu,
)
from qotplan.planner.paths import Path as NodePath
from qotplan.planner.paths import k_shortest_paths

logger = logging.getLogger(__name__)

EOL = "eol"
RCSA_MODES = (EOL, YEARLY, MONTHLY)

ACTIVE = "active"
DOWNGRADED = "downgraded"
REMOVED = "removed"

REPORT_FIELDS = ["period", "art_gbps", "throughput_gbps", "n_lightpaths", "up",
                 "mean_snr_db", "pce_calls"]
TIMING_FIELDS = ["period", "wall_time_s"]

_RATE_STEP = 50


class Pce(Protocol):
    name: str
    calls: int

    def evaluate(self, link: FiberLink, spectrum: Sequence[ChannelConfig],
                 link_id: Optional[str] = None) -> list[float]: ...


@dataclass
class Lightpath:
    lp_id: int
    demand_id: int
    path: NodePath
    link_ids: tuple[str, ...]
    start: int
    mode: TransceiverMode
    channel: ChannelConfig
    status: str = ACTIVE
    snr_db: float = math.nan
    period: int = 0

    @property
    def data_rate(self) -> int:
        return self.mode.data_rate

    @property
    def n_slots(self) -> int:
        return self.mode.slots


@dataclass(frozen=True)
class PeriodReport:
    period: int
    art_gbps: float
    throughput_gbps: float
    n_lightpaths: int
    up: float
    mean_snr_db: float
    pce_calls: int
    wall_time_s: float = 0.0

    def row(self) -> list[str]:
        return [str(self.period), repr(self.art_gbps), repr(self.throughput_gbps),
                str(self.n_lightpaths), repr(self.up), repr(self.mean_snr_db), str(self.pce_calls)]


@dataclass
class PlanState:
    """Per-link grids, lightpaths and the caches the RCSA keeps between periods."""

    topology: Topology
    settings: Settings = field(default_factory=Settings)
    menu: Optional[list[TransceiverMode]] = None
    sci: object = None
    period: int = 0

    def __post_init__(self):
        s = self.settings
        if self.menu is None:
            tr = s.transceiver
            self.menu = transceiver_menu(tr.min_symbol_rate_gbd, tr.max_symbol_rate_gbd,
                                         tr.clip_symbol_rate, s.grid.guard_ghz)
        self.thresholds = s.transceiver.threshold_table()
        self.fibers: dict[str, FiberLink] = {
            l.link_id: expand_spans(l.length_km, s.planner.target_span_km, s.fiber)
            for l in self.topology.links
        }
        self.link_order = sorted(self.fibers)
        self.grids = {lid: FlexGrid(s.grid.n_slots, s.grid.slot_width_ghz) for lid in self.link_order}
        self.lightpaths: dict[int, Lightpath] = {}
        self.removed: list[Lightpath] = []
        self.unroutable: set[int] = set()
        self._next_id = 0
        self._paths: dict[tuple[str, str], list[NodePath]] = {}
        self._feasible: dict[tuple[str, NodePath], list[TransceiverMode]] = {}
        self._eol_snr: dict[tuple[str, str, float], float] = {}

    def threshold(self, mode: TransceiverMode) -> float:
        return self.thresholds[mode.modulation]

    def paths(self, src: str, dst: str) -> list[NodePath]:
        key = (src, dst)
        if key not in self._paths:
            self._paths[key] = k_shortest_paths(self.topology, src, dst, self.settings.planner.k_paths)
        return self._paths[key]

    def link_ids(self, path: NodePath) -> tuple[str, ...]:
        return tuple(l.link_id for l in self.topology.path_links(path))

    def channel_for(self, mode: TransceiverMode, start: int) -> ChannelConfig:
        g = self.settings.grid
        center = slot_center_frequency(start, mode.slots, g.anchor_thz * 1e12, g.slot_width_ghz)
        return ChannelConfig(center, mode.symbol_rate, mode.modulation, mode.data_rate,
                             launch_power_for(mode.symbol_rate))

    def link_spectrum(self, link_id: str) -> tuple[list[int], list[ChannelConfig]]:
        """Active lightpaths on a link and their channels, lowest frequency first."""
        claims = sorted(self.grids[link_id].claims().items(), key=lambda item: item[1][0])
        ids = [lp_id for lp_id, _ in claims]
        return ids, [self.lightpaths[i].channel for i in ids]

    def provisioned(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for lp in self.lightpaths.values():
            out[lp.demand_id] = out.get(lp.demand_id, 0) + lp.data_rate
        return out

    def throughput(self) -> int:
        return sum(lp.data_rate for lp in self.lightpaths.values())

    def new_id(self) -> int:
        self._next_id += 1
        return self._next_id


def order_demands(demands: Iterable[Demand], state: PlanState,
                  rates: Optional[Mapping[int, float]] = None) -> list[Demand]:
    """Longest first shortest path first, then larger requested rate, then id.

    Demands without any path are recorded in ``state.unroutable`` and dropped.
    """
    keyed = []
    for d in demands:
        paths = state.paths(d.source, d.destination)
        if not paths:
            state.unroutable.add(d.demand_id)
            continue
        rate = d.rate_gbps if rates is None else rates[d.demand_id]
        keyed.append(((-round(state.topology.path_length(paths[0]), 6), -rate, d.demand_id), d))
    keyed.sort(key=lambda item: item[0])
    return [d for _, d in keyed]


def _best_mode_per_rate(modes: Iterable[TransceiverMode], thresholds: Mapping[str, float]
                        ) -> dict[int, TransceiverMode]:
    best: dict[int, TransceiverMode] = {}
    for m in modes:
        cur = best.get(m.data_rate)
        key = (m.slots, thresholds[m.modulation], m.symbol_rate, m.modulation)
        if cur is None or key < (cur.slots, thresholds[cur.modulation], cur.symbol_rate, cur.modulation):
            best[m.data_rate] = m
    return best


def plan_rates(gap: float, rates: Iterable[int]) -> list[int]:
    """Fewest lightpaths covering ``gap``, then least total, then largest rates first.

    Rates are multiples of 50 Gb/s. Returns an empty list if ``rates`` is empty.
    """
    units = sorted({r // _RATE_STEP for r in rates}, reverse=True)
    if not units or gap <= 0:
        return []
    need = math.ceil(gap / _RATE_STEP - 1e-9)
    n = math.ceil(gap / (units[0] * _RATE_STEP) - 1e-9)
    # reachable[j] = totals (in units) reachable with exactly j lightpaths
    reachable = [{0}]
    for _ in range(n):
        reachable.append({t + u for t in reachable[-1] for u in units})
    total = min(t for t in reachable[n] if t >= need)
    out = []
    for j in range(n, 0, -1):
        for u in units:
            if total - u in reachable[j - 1]:
                out.append(u * _RATE_STEP)
                total -= u
                break
    return out


def ase_snr(state: PlanState, link_ids: Sequence[str], mode: TransceiverMode) -> float:
    p = 1e-3 * 10.0 ** (launch_power_for(mode.symbol_rate) / 10.0)
    b = mode.symbol_rate * 1e9
    return snr_sum_db([10.0 * math.log10(p / ase_variance(state.fibers[lid], b)) for lid in link_ids])


def eol_spectrum(state: PlanState, symbol_rate: float) -> tuple[list[ChannelConfig], int]:
    """Comb filling the band with the CUT of ``symbol_rate`` in the middle.

    Comb carriers overlapping the CUT are left out. Returns (spectrum, cut index).
    """
    s = state.settings
    spacing = s.planner.eol_comb_spacing_ghz * 1e9
    comb_rate = s.planner.eol_comb_symbol_rate_gbd
    lo = s.grid.anchor_thz * 1e12
    n = int(s.grid.n_slots * s.grid.slot_width_ghz * 1e9 // spacing)
    centers = [lo + spacing * (j + 0.5) for j in range(n)]
    fc = centers[n // 2]
    half = symbol_rate * 1e9 / 2
    spectrum = []
    for f in centers:
        if f == fc or (abs(f - fc) < half + comb_rate * 1e9 / 2 - 1.0):
            continue
        spectrum.append(ChannelConfig(f, comb_rate, "QPSK", 100, launch_power_for(comb_rate)))
    cut = ChannelConfig(fc, symbol_rate, "QPSK", 100, launch_power_for(symbol_rate))
    spectrum.append(cut)
    spectrum.sort(key=lambda ch: ch.center_frequency)
    return spectrum, spectrum.index(cut)


def eol_link_snr(state: PlanState, link_id: str, symbol_rate: float, pce: Pce) -> float:
    key = (pce.name, link_id, round(symbol_rate, 6))
    if key not in state._eol_snr:
        spectrum, cut = eol_spectrum(state, symbol_rate)
        state._eol_snr[key] = pce.evaluate(state.fibers[link_id], spectrum, link_id)[cut]
    return state._eol_snr[key]


def feasible_modes(path: NodePath, rcsa: str, pce: Pce, state: PlanState) -> list[TransceiverMode]:
    """Menu entries that pass the study's screening on ``path`` (state independent)."""
    key = (rcsa, path) if rcsa != EOL else (f"{rcsa}:{pce.name}", path)
    if key not in state._feasible:
        link_ids = state.link_ids(path)
        out = []
        for mode in state.menu:
            if rcsa == EOL:
                snr = snr_sum_db([eol_link_snr(state, lid, mode.symbol_rate, pce) for lid in link_ids])
            else:
                snr = ase_snr(state, link_ids, mode)
            if snr >= state.threshold(mode):
                out.append(mode)
        state._feasible[key] = out
    return state._feasible[key]


def select_candidates(gap: float, path: NodePath, rcsa: str, pce: Pce, state: PlanState
                      ) -> list[tuple[TransceiverMode, int]]:
    """Configurations and counts that cover ``gap`` on ``path``, largest rate first."""
    if rcsa not in RCSA_MODES:
        raise ValueError(f"unknown RCSA {rcsa!r}")
    if gap <= 0:
        return []
    best = _best_mode_per_rate(feasible_modes(path, rcsa, pce, state), state.thresholds)
    plan = []
    for rate in plan_rates(gap, best):
        if plan and plan[-1][0].data_rate == rate:
            plan[-1] = (plan[-1][0], plan[-1][1] + 1)
        else:
            plan.append((best[rate], 1))
    return plan


def place_lightpath(state: PlanState, demand_id: int, path: NodePath, mode: TransceiverMode
                    ) -> Optional[Lightpath]:
    """First-fit the mode on every link of ``path``; None if spectrum is blocked."""
    link_ids = state.link_ids(path)
    hit = common_first_fit([state.grids[lid] for lid in link_ids], mode.slots)
    if hit is None:
        return None
    start = hit[0]
    lp = Lightpath(state.new_id(), demand_id, path, link_ids, start, mode,
                   state.channel_for(mode, start), period=state.period)
    for lid in link_ids:
        state.grids[lid].claim(lp.lp_id, start, mode.slots)
    state.lightpaths[lp.lp_id] = lp
    return lp


def remove_lightpath(state: PlanState, lp: Lightpath) -> None:
    for lid in lp.link_ids:
        state.grids[lid].release(lp.lp_id)
    del state.lightpaths[lp.lp_id]
    lp.status = REMOVED
    state.removed.append(lp)


def upgrade_options(state: PlanState, lp: Lightpath, rcsa: str, pce: Pce) -> list[TransceiverMode]:
    """Higher-rate modes on the same carrier (symbol rate), lowest rate first.

    The carrier on the fibre is unchanged, so the last evaluated SNR of the
    lightpath still holds and must clear the new threshold. For the end-of-life
    study the static fully-loaded screening is enough.
    """
    screened = feasible_modes(lp.path, rcsa, pce, state)
    out = []
    for m in screened:
        if m.symbol_rate != lp.mode.symbol_rate or m.data_rate <= lp.data_rate:
            continue
        if rcsa != EOL and not lp.snr_db >= state.threshold(m):
            continue
        out.append(m)
    return sorted(out, key=lambda m: (m.data_rate, state.threshold(m), m.modulation))


def upgrade_existing(state: PlanState, demand: Demand, gap: float, rcsa: str, pce: Pce) -> float:
    """Raise the rate of the demand's lightpaths in place; returns the gap left."""
    remaining = gap
    for lp in sorted((lp for lp in state.lightpaths.values() if lp.demand_id == demand.demand_id),
                     key=lambda lp: lp.lp_id):
        if remaining <= 1e-9:
            break
        options = upgrade_options(state, lp, rcsa, pce)
        if not options:
            continue
        covering = [m for m in options if m.data_rate - lp.data_rate >= remaining - 1e-9]
        mode = covering[0] if covering else options[-1]
        remaining -= mode.data_rate - lp.data_rate
        _apply_mode(state, lp, mode)
    return max(remaining, 0.0)


def provision(state: PlanState, demand: Demand, gap: float, rcsa: str, pce: Pce) -> float:
    """Cover ``gap`` by in-place upgrades, then new lightpaths; returns the unmet rest."""
    remaining = upgrade_existing(state, demand, gap, rcsa, pce)
    paths = state.paths(demand.source, demand.destination)
    while remaining > 1e-9:
        options = []
        for idx, path in enumerate(paths):
            plan = select_candidates(remaining, path, rcsa, pce, state)
            if plan:
                rates = tuple(-m.data_rate for m, c in plan for _ in range(c))
                options.append((len(rates), rates, idx, plan[0][0]))
        options.sort(key=lambda o: o[:3])
        for _, _, idx, mode in options:
            lp = place_lightpath(state, demand.demand_id, paths[idx], mode)
            if lp is not None:
                remaining -= mode.data_rate
                break
        else:
            break
    return max(remaining, 0.0)


def evaluate_links(state: PlanState, pce: Pce, link_ids: Iterable[str]) -> dict[str, dict[int, float]]:
    out = {}
    for lid in link_ids:
        ids, spectrum = state.link_spectrum(lid)
        snrs = pce.evaluate(state.fibers[lid], spectrum, lid) if ids else []
        out[lid] = dict(zip(ids, snrs))
    return out


def path_snr(lp: Lightpath, link_snr: Mapping[str, Mapping[int, float]]) -> float:
    return snr_sum_db([link_snr[lid][lp.lp_id] for lid in lp.link_ids])


def _apply_mode(state: PlanState, lp: Lightpath, mode: TransceiverMode) -> None:
    if mode.slots != lp.mode.slots:
        for lid in lp.link_ids:
            state.grids[lid].shrink(lp.lp_id, mode.slots)
    lp.mode = mode
    lp.channel = state.channel_for(mode, lp.start)


def _restore_mode(state: PlanState, lp: Lightpath, mode: TransceiverMode,
                  channel: ChannelConfig) -> None:
    if mode.slots != lp.mode.slots:
        for lid in lp.link_ids:
            state.grids[lid].release(lp.lp_id)
            state.grids[lid].claim(lp.lp_id, lp.start, mode.slots)
    lp.mode = mode
    lp.channel = channel


def downgrade_options(state: PlanState, lp: Lightpath) -> list[TransceiverMode]:
    """Modes that fit the current slots and need strictly less SNR, best rate first."""
    cur = state.threshold(lp.mode)
    options = [m for m in state.menu if m.slots <= lp.mode.slots and state.threshold(m) < cur]
    return sorted(options, key=lambda m: (-m.data_rate, m.slots, state.threshold(m), m.modulation))


@dataclass
class DowngradeSummary:
    downgraded: int = 0
    removed: int = 0
    evaluations: int = 0


def downgrade_pass(state: PlanState, pce: Pce) -> DowngradeSummary:
    """Make every lightpath SNR-feasible by stepping down or removing it.

    The worst-margin infeasible lightpath is handled first; links are
    re-evaluated whenever their spectrum changes until no lightpath is below
    its threshold. Each step lowers a threshold or removes a lightpath, so the
    loop terminates.
    """
    summary = DowngradeSummary()
    calls0 = pce.calls
    active_links = [lid for lid in state.link_order if state.grids[lid].claims()]
    link_snr = evaluate_links(state, pce, active_links)
    dirty: set[str] = set()
    while True:
        if dirty:
            link_snr.update(evaluate_links(state, pce, sorted(dirty)))
            dirty.clear()
        snr = {lp_id: path_snr(lp, link_snr) for lp_id, lp in state.lightpaths.items()}
        bad = [(snr[i] - state.threshold(lp.mode), i) for i, lp in state.lightpaths.items()
               if snr[i] < state.threshold(lp.mode)]
        if not bad:
            break
        _, worst_id = min(bad)
        lp = state.lightpaths[worst_id]
        old_mode, old_channel = lp.mode, lp.channel
        accepted = False
        for mode in downgrade_options(state, lp):
            if mode.symbol_rate == old_mode.symbol_rate:
                # same carrier on the fibre, so the SNR is unchanged
                if snr[worst_id] >= state.threshold(mode):
                    _apply_mode(state, lp, mode)
                    accepted = True
                    break
                continue
            saved = {lid: link_snr[lid] for lid in lp.link_ids}
            _apply_mode(state, lp, mode)
            link_snr.update(evaluate_links(state, pce, lp.link_ids))
            if path_snr(lp, link_snr) >= state.threshold(mode):
                accepted = True
                break
            _restore_mode(state, lp, old_mode, old_channel)
            link_snr.update(saved)
        if accepted:
            lp.status = DOWNGRADED
            summary.downgraded += 1
        else:
            remove_lightpath(state, lp)
            summary.removed += 1
            dirty.update(lp.link_ids)
    for lp_id, lp in state.lightpaths.items():
        lp.snr_db = snr[lp_id]
    summary.evaluations = pce.calls - calls0
    return summary


def up_ratio(requested: Mapping[int, float], lightpaths: Iterable[Lightpath]) -> float:
    """Unmet share of the requested traffic; oversupplied demands count as zero."""
    art = sum(requested.values())
    if art <= 0:
        return 0.0
    supplied: dict[int, float] = {}
    for lp in lightpaths:
        if lp.status != REMOVED:
            supplied[lp.demand_id] = supplied.get(lp.demand_id, 0.0) + lp.data_rate
    short = sum(max(0.0, rate - supplied.get(d, 0.0)) for d, rate in requested.items())
    return short / art


def audit(state: PlanState) -> list[str]:
    """Consistency problems between grids and lightpaths (empty when sound)."""
    problems = []
    for lp in state.lightpaths.values():
        if lp.link_ids != state.link_ids(lp.path):
            problems.append(f"lightpath {lp.lp_id}: link list does not match its path")
        for lid in lp.link_ids:
            grid = state.grids[lid]
            if grid.claim_of(lp.lp_id) != (lp.start, lp.n_slots):
                problems.append(f"lightpath {lp.lp_id}: claim on {lid} differs from its slot range")
                continue
            if any(grid.occupancy[s] != lp.lp_id for s in range(lp.start, lp.start + lp.n_slots)):
                problems.append(f"lightpath {lp.lp_id}: slots on {lid} not contiguous")
        lo = lp.channel.low_edge
        hi = lp.channel.high_edge
        g = state.settings.grid
        slot_lo = g.anchor_thz * 1e12 + lp.start * g.slot_width_ghz * 1e9
        slot_hi = slot_lo + lp.n_slots * g.slot_width_ghz * 1e9
        if lo < slot_lo - 1.0 or hi > slot_hi + 1.0:
            problems.append(f"lightpath {lp.lp_id}: channel band exceeds its slots")
    for lid, grid in state.grids.items():
        for lp_id, (start, n) in grid.claims().items():
            lp = state.lightpaths.get(lp_id)
            if lp is None or lid not in lp.link_ids:
                problems.append(f"{lid}: slots [{start}, {start + n}) held by unknown lightpath {lp_id}")
        held = sum(n for _, n in grid.claims().values())
        if held != grid.n_occupied:
            problems.append(f"{lid}: occupancy does not match claims")
    return problems


def run_study(topology: Topology, demands: Sequence[Demand], rcsa: str, pce: Pce, periods: int,
              settings: Optional[Settings] = None, menu: Optional[list[TransceiverMode]] = None,
              state: Optional[PlanState] = None) -> list[PeriodReport]:
    """Plan ``periods`` periods (years, or months for the monthly study)."""
    if rcsa not in RCSA_MODES:
        raise ValueError(f"unknown RCSA {rcsa!r}")
    settings = Settings() if settings is None else settings
    if state is None:
        state = PlanState(topology, settings, menu, sci=getattr(pce, "sci", None))
    granularity = MONTHLY if rcsa == MONTHLY else YEARLY
    series = grow_demands(demands, settings.planner.annual_growth, periods, granularity)
    reports = []
    for k in range(periods):
        t0 = time.perf_counter()
        calls0 = pce.calls
        state.period = k
        requested = {s.demand.demand_id: s.rates[k] for s in series}
        have = state.provisioned()
        for d in order_demands([s.demand for s in series], state, requested):
            gap = requested[d.demand_id] - have.get(d.demand_id, 0)
            if gap > 1e-9:
                provision(state, d, gap, rcsa, pce)
        if rcsa == EOL:
            rcsa_calls = pce.calls - calls0
            # SNR for the report only; not part of the planning work
            active = [lid for lid in state.link_order if state.grids[lid].claims()]
            link_snr = evaluate_links(state, pce, active)
            for lp in state.lightpaths.values():
                lp.snr_db = path_snr(lp, link_snr)
        else:
            downgrade_pass(state, pce)
            # demands left short by the downgrade pass get another attempt in
            # the same period, screened the same way, then a fresh pass
            for _ in range(settings.planner.repair_rounds):
                have = state.provisioned()
                short = [d for d in order_demands([s.demand for s in series], state, requested)
                         if requested[d.demand_id] - have.get(d.demand_id, 0) > 1e-9]
                before = {lp_id: lp.mode for lp_id, lp in state.lightpaths.items()}
                for d in short:
                    provision(state, d, requested[d.demand_id] - have.get(d.demand_id, 0), rcsa, pce)
                if {lp_id: lp.mode for lp_id, lp in state.lightpaths.items()} == before:
                    break
                downgrade_pass(state, pce)
            rcsa_calls = pce.calls - calls0
        problems = audit(state)
        if problems:
            raise QotPlanError(f"period {k}: plan state inconsistent: {problems[0]}")
        snrs = [lp.snr_db for lp in state.lightpaths.values()]
        reports.append(PeriodReport(
            period=k,
            art_gbps=sum(requested.values()),
            throughput_gbps=float(state.throughput()),
            n_lightpaths=len(state.lightpaths),
            up=up_ratio(requested, state.lightpaths.values()),
            mean_snr_db=sum(snrs) / len(snrs) if snrs else math.nan,
            pce_calls=rcsa_calls,
            wall_time_s=time.perf_counter() - t0,
        ))
        logger.info("%s/%s period %d: %d lightpaths, UP %.4f", rcsa, pce.name, k,
                    reports[-1].n_lightpaths, reports[-1].up)
    return reports


def study_periods(rcsa: str, years: int) -> int:
    """Planning periods covering ``years`` yearly snapshots (monthly: 12 per year)."""
    if years < 1:
        raise ValueError("years must be at least 1")
    return 12 * (years - 1) + 1 if rcsa == MONTHLY else years


def timing_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".timing.csv")


def write_report(reports: Sequence[PeriodReport], path: str | Path,
                 header: Optional[Mapping[str, object]] = None) -> None:
    """Deterministic report CSV; wall times go to a ``.timing.csv`` sidecar."""
    with open(path, "w", newline="") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key} = {value}\n")
        w = csv.writer(fh)
        w.writerow(REPORT_FIELDS)
        for r in reports:
            w.writerow(r.row())
    with open(timing_path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMING_FIELDS)
        for r in reports:
            w.writerow([r.period, f"{r.wall_time_s:.6f}"])


def read_report(path: str | Path) -> list[PeriodReport]:
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        try:
            columns = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty report") from None
        if columns != REPORT_FIELDS:
            raise ValueError(f"{path}: not a plan report (columns {columns})")
        out = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                out.append(PeriodReport(int(rec[0]), float(rec[1]), float(rec[2]), int(rec[3]),
                                        float(rec[4]), float(rec[5]), int(rec[6])))
            except (ValueError, IndexError):
                raise ValueError(f"{path}: malformed report record {lineno}") from None
    return out

from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import channel
from oracles import best_rate_plans
from qotplan import gbt, qot
from qotplan.cli import fixture_path
from qotplan.netmodel import Demand, LinkSpec, Topology, load_demands, load_topology
from qotplan.phys import FiberLink
from qotplan.planner import rcsa
from qotplan.planner.rcsa import (
    DOWNGRADED,
    EOL,
    MONTHLY,
    YEARLY,
    Lightpath,
    PeriodReport,
    PlanState,
    audit,
    downgrade_pass,
    eol_spectrum,
    order_demands,
    place_lightpath,
    plan_rates,
    provision,
    read_report,
    run_study,
    select_candidates,
    study_periods,
    timing_path,
    up_ratio,
    write_report,
)


def line(lengths=(300.0, 300.0)):
    nodes = [chr(ord("A") + i) for i in range(len(lengths) + 1)]
    links = [LinkSpec(u, v, w) for u, v, w in zip(nodes, nodes[1:], lengths)]
    return Topology("line", tuple(nodes), tuple(links))


def mode(state, modulation, rate):
    return next(m for m in state.menu if m.modulation == modulation and m.data_rate == rate)


class FixedPce:
    """PCE returning one SNR for every channel."""

    name = "fixed"

    def __init__(self, snr):
        self.snr = snr
        self.calls = 0

    def evaluate(self, link, spectrum, link_id=None):
        self.calls += 1
        return [self.snr] * len(spectrum)


# ---- configuration choice ---------------------------------------------------------

def test_plan_rates_examples():
    rates = list(range(100, 601, 50))
    assert plan_rates(550, rates) == [550]
    assert plan_rates(700, rates) == [600, 100]
    assert plan_rates(130, rates) == [150]
    assert plan_rates(0, rates) == []
    assert plan_rates(100, []) == []


@given(st.floats(1.0, 2000.0), st.sets(st.sampled_from(range(100, 601, 50)), min_size=1))
def test_plan_rates_against_enumeration(gap, rates):
    got = plan_rates(gap, rates)
    assert tuple(got) == best_rate_plans(gap, rates)[0]


def test_select_candidates_respects_thresholds():
    long = line((1500.0, 1500.0))
    state = PlanState(long)
    plan = select_candidates(400, ("A", "B", "C"), YEARLY, qot.GnPce(), state)
    assert plan and all(m.modulation not in ("64QAM", "32QAM") for m, _ in plan)
    short = PlanState(line((80.0,)))
    plan = select_candidates(550, ("A", "B"), YEARLY, qot.GnPce(), short)
    assert [(m.modulation, m.data_rate, n) for m, n in plan] == [("64QAM", 550, 1)]
    assert select_candidates(0, ("A", "B"), YEARLY, qot.GnPce(), short) == []
    with pytest.raises(ValueError):
        select_candidates(100, ("A", "B"), "weekly", qot.GnPce(), short)


def test_eol_screening_is_stricter_than_ase_only():
    state = PlanState(line((600.0, 600.0)))
    path = ("A", "B", "C")
    eol = rcsa.feasible_modes(path, EOL, qot.GnPce(), state)
    ase = rcsa.feasible_modes(path, YEARLY, qot.GnPce(), state)
    assert set(eol) < set(ase)


def test_eol_spectrum_layout():
    state = PlanState(line())
    for b in (35.0, 52.5, 69.0):
        spec, cut = eol_spectrum(state, b)
        assert spec[cut].symbol_rate == b
        freqs = [c.center_frequency for c in spec]
        assert freqs == sorted(freqs)
        from qotplan.grid import check_non_overlapping
        check_non_overlapping(spec)
        others = [c for i, c in enumerate(spec) if i != cut]
        assert all(c.symbol_rate == 35.0 for c in others)
    spec, _ = eol_spectrum(state, 35.0)
    assert len(spec) == 100  # 5 THz / 50 GHz


# ---- ordering and placement ---------------------------------------------------------

def ordering_topology():
    return Topology("o", ("a", "b", "c", "d"), (
        LinkSpec("a", "b", 610.0), LinkSpec("c", "d", 420.0), LinkSpec("b", "c", 1000.0)))


def test_order_longest_path_first_then_rate():
    state = PlanState(ordering_topology())
    d1, d2 = Demand(0, "c", "d", 100.0), Demand(1, "a", "b", 100.0)
    assert order_demands([d1, d2], state) == [d2, d1]
    same = Topology("s", ("a", "b", "c"), (LinkSpec("a", "b", 5.0), LinkSpec("b", "c", 5.0)))
    state = PlanState(same)
    small, big = Demand(0, "a", "b", 100.0), Demand(1, "b", "c", 200.0)
    assert order_demands([small, big], state) == [big, small]


def test_order_is_permutation_invariant():
    topo = load_topology(fixture_path("germany17", ".json"))
    demands = load_demands(fixture_path("germany17", "_demands.csv"), topo)[:30]
    state = PlanState(topo)
    first = order_demands(demands, state)
    for perm in (demands[::-1], demands[10:] + demands[:10]):
        assert order_demands(perm, state) == first


def test_place_on_empty_network():
    state = PlanState(line())
    m = mode(state, "QPSK", 100)
    lp = place_lightpath(state, 0, ("A", "B", "C"), m)
    assert lp.start == 0 and lp.n_slots == 3
    for lid in lp.link_ids:
        assert state.grids[lid].claim_of(lp.lp_id) == (0, 3)


def test_place_follows_congested_link():
    state = PlanState(line())
    m = mode(state, "QPSK", 100)
    place_lightpath(state, 0, ("B", "C"), m)
    lp = place_lightpath(state, 1, ("A", "B", "C"), m)
    assert lp.start == 3


def test_place_blocked_when_no_common_run():
    state = PlanState(line((100.0,)))
    grid = state.grids["A--B"]
    # free runs of 4 slots only
    for i, start in enumerate(range(4, 400, 5)):
        grid.claim(("blk", i), start, 1)
    wide = mode(state, "16QAM", 350)
    assert wide.slots > 4
    assert place_lightpath(state, 0, ("A", "B"), wide) is None
    assert place_lightpath(state, 0, ("A", "B"), mode(state, "QPSK", 100)) is not None


# ---- downgrade ----------------------------------------------------------------------

def placed(state, modulation, rate, demand=0):
    return place_lightpath(state, demand, ("A", "B"), mode(state, modulation, rate))


def test_downgrade_nothing_to_do():
    state = PlanState(line((100.0,)))
    lp = placed(state, "16QAM", 200)
    summary = downgrade_pass(state, FixedPce(30.0))
    assert (summary.downgraded, summary.removed) == (0, 0)
    assert lp.mode.modulation == "16QAM" and lp.snr_db == 30.0


def test_downgrade_once_to_lower_threshold():
    state = PlanState(line((100.0,)))
    lp = placed(state, "16QAM", 200)
    snr = state.thresholds["16QAM"] - 0.1
    summary = downgrade_pass(state, FixedPce(snr))
    assert (summary.downgraded, summary.removed) == (1, 0)
    assert (lp.mode.modulation, lp.data_rate, lp.status) == ("QPSK", 100, DOWNGRADED)
    assert lp.snr_db - state.thresholds["QPSK"] > 2.0
    assert not audit(state)


def test_downgrade_removes_when_nothing_fits():
    state = PlanState(line((100.0,)))
    placed(state, "16QAM", 200)
    placed(state, "QPSK", 100, demand=1)
    before = state.grids["A--B"].n_occupied
    summary = downgrade_pass(state, FixedPce(5.0))
    assert summary.removed == 2 and not state.lightpaths
    assert state.grids["A--B"].n_occupied < before
    assert len(state.removed) == 2


class LoadPce:
    """SNR falls with the number of channels on the link."""

    name = "load"

    def __init__(self):
        self.calls = 0

    def evaluate(self, link, spectrum, link_id=None):
        self.calls += 1
        return [25.0 - 2.0 * len(spectrum)] * len(spectrum)


def test_downgrade_removal_releases_others():
    state = PlanState(line((100.0,)))
    for d in range(5):
        placed(state, "64QAM", 300, demand=d)
    # 5 channels -> 15 dB: every 64QAM fails; QPSK/16QAM fit
    summary = downgrade_pass(state, LoadPce())
    assert summary.removed == 0
    assert all(state.threshold(lp.mode) <= lp.snr_db for lp in state.lightpaths.values())
    assert not audit(state)


@given(st.lists(st.integers(0, 70), min_size=2, max_size=10, unique=True), st.data())
def test_removing_a_channel_never_lowers_gn_snr(slots, data):
    link = FiberLink(90.0, 8)
    spec = [channel(62.5 * s, data.draw(st.sampled_from([35.0, 49.0, 61.25]))) for s in sorted(slots)]
    drop = data.draw(st.integers(0, len(spec) - 1))
    before = qot.pce_gn(link, spec)
    rest = [c for i, c in enumerate(spec) if i != drop]
    after = qot.pce_gn(link, rest)
    kept = [s for i, s in enumerate(before) if i != drop]
    assert all(a >= b - 1e-12 for a, b in zip(after, kept))


# ---- provisioning ----------------------------------------------------------------------

def test_in_place_upgrade_covers_small_growth():
    state = PlanState(line((80.0,)))
    d = Demand(0, "A", "B", 100.0)
    lp = placed(state, "QPSK", 100)
    lp.snr_db = 30.0
    assert provision(state, d, 60.0, YEARLY, qot.GnPce()) == 0.0
    assert len(state.lightpaths) == 1
    assert lp.data_rate == 200 and lp.mode.symbol_rate == 35.0


def test_provision_stops_when_blocked():
    state = PlanState(line((80.0,)))
    grid = state.grids["A--B"]
    grid.claim("wall", 0, 398)
    left = provision(state, Demand(0, "A", "B", 1000.0), 1000.0, YEARLY, qot.GnPce())
    assert left == 1000.0 and not state.lightpaths


# ---- metrics -----------------------------------------------------------------------------

def lp_for(demand, rate, lp_id):
    m = rcsa.TransceiverMode("QPSK", rate, 35.0, 3)
    return Lightpath(lp_id, demand, ("A", "B"), ("A--B",), 0, m, channel())


def test_up_ratio_examples():
    assert up_ratio({0: 100.0}, [lp_for(0, 100, 1)]) == 0.0
    requested = {0: 200.0, 1: 200.0}
    assert up_ratio(requested, [lp_for(0, 150, 1), lp_for(1, 200, 2)]) == 0.125
    # oversupply on one demand does not offset another's shortfall
    assert up_ratio(requested, [lp_for(0, 150, 1), lp_for(1, 550, 2)]) == 0.125
    assert up_ratio({}, []) == 0.0


@given(st.lists(st.tuples(st.floats(1.0, 1000.0), st.lists(st.sampled_from([100, 150, 200, 550]),
                                                            max_size=3)), min_size=1, max_size=8))
def test_up_ratio_arithmetic(cases):
    requested = {d: r for d, (r, _) in enumerate(cases)}
    lps = [lp_for(d, rate, 10 * d + k) for d, (_, rates) in enumerate(cases) for k, rate in enumerate(rates)]
    short = sum(max(0.0, r - sum(rates)) for r, rates in cases)
    assert up_ratio(requested, lps) == pytest.approx(short / sum(requested.values()), abs=1e-15)


# ---- whole studies -------------------------------------------------------------------------

def small_study():
    topo = load_topology(fixture_path("stress6", ".json"))
    return topo, load_demands(fixture_path("stress6", "_demands.csv"), topo)


def test_zero_periods():
    topo, demands = small_study()
    assert run_study(topo, demands, YEARLY, qot.GnPce(), 0) == []


def test_study_periods():
    assert study_periods(MONTHLY, 1) == 1
    assert study_periods(MONTHLY, 2) == 13
    assert study_periods(YEARLY, 10) == 10
    assert study_periods(EOL, 3) == 3
    with pytest.raises(ValueError):
        study_periods(YEARLY, 0)


def test_monthly_growth_and_period_count():
    topo, demands = small_study()
    reports = run_study(topo, demands, MONTHLY, qot.GnPce(), 12)
    assert len(reports) == 12
    growth = [b.art_gbps / a.art_gbps for a, b in zip(reports, reports[1:])]
    assert all(g == pytest.approx(1.3 ** (1 / 12)) for g in growth)
    assert growth[0] == pytest.approx(1.0221, abs=1e-4)


@pytest.mark.parametrize("study", [EOL, YEARLY, MONTHLY])
def test_study_conservation_and_audit(study):
    topo, demands = small_study()
    state = PlanState(topo)
    periods = 13 if study == MONTHLY else 4
    reports = run_study(topo, demands, study, qot.GnPce(), periods, state=state)
    assert not audit(state)
    last = reports[-1]
    assert last.throughput_gbps == sum(lp.data_rate for lp in state.lightpaths.values())
    assert last.n_lightpaths == len(state.lightpaths)
    requested = {d.demand_id: d.rate_gbps * (1.3 ** (periods - 1) if study != MONTHLY else 1.3)
                 for d in demands}
    assert last.up == pytest.approx(up_ratio(requested, state.lightpaths.values()), abs=1e-12)
    assert all(lp.snr_db >= state.threshold(lp.mode) for lp in state.lightpaths.values())
    assert all(0.0 <= r.up <= 1.0 for r in reports)


def test_pce_substitutability():
    topo, demands = small_study()
    model = gbt.GbtModel((), 0.1, 33.0, qot.N_FEATURES)
    a = run_study(topo, demands, YEARLY, qot.GnPce(), 2)
    b = run_study(topo, demands, YEARLY, qot.MlPce(model), 2)
    assert [r.period for r in a] == [r.period for r in b]
    assert all(isinstance(r, PeriodReport) for r in a + b)


def test_unknown_study():
    topo, demands = small_study()
    with pytest.raises(ValueError):
        run_study(topo, demands, "weekly", qot.GnPce(), 1)


def test_report_round_trip_and_determinism(tmp_path):
    topo, demands = small_study()
    paths = []
    for name in ("a.csv", "b.csv"):
        reports = run_study(topo, demands, YEARLY, qot.GnPce(), 3)
        write_report(reports, tmp_path / name, {"rcsa": YEARLY})
        paths.append(tmp_path / name)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    again = read_report(paths[0])
    assert [r.row() for r in again] == [r.row() for r in reports]
    assert timing_path(paths[0]).read_text().startswith("period,wall_time_s\n")
    (tmp_path / "bad.csv").write_text("x,y\n")
    with pytest.raises(ValueError):
        read_report(tmp_path / "bad.csv")


def test_demand_without_path_is_recorded():
    topo = Topology("t", ("a", "b"), (LinkSpec("a", "b", 10.0),))
    state = PlanState(topo)
    state._paths[("a", "b")] = []
    assert order_demands([Demand(0, "a", "b", 10.0)], state) == []
    assert state.unroutable == {0}


def test_menu_lookup_helpers_consistent():
    state = PlanState(line())
    rates = sorted({m.data_rate for m in state.menu})
    assert rates == list(range(100, 551, 50))
    for m, k in itertools.product(state.menu, [0, 5]):
        ch = state.channel_for(m, k)
        assert ch.symbol_rate == m.symbol_rate
        assert math.isclose(ch.launch_power, 10 * math.log10(m.symbol_rate / 35.0), abs_tol=1e-12)

"""Random link/spectrum scenarios and the labeled NLI dataset built from them.

Each scenario draws a span length, a span count and a random mix of
transceiver modes packed first-fit from the low end of the grid until a target
fill ratio is reached. Every channel of a scenario then becomes one training
row: features from the SCI cache, label from the full GN integral.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from qotplan import qot
from qotplan.config import Settings
from qotplan.errors import QotPlanError
from qotplan.grid import ChannelConfig, slot_center_frequency
from qotplan.phys import (
    FiberLink,
    gn_closed_all,
    gn_oracle_eta,
    launch_power_for,
    transceiver_menu,
)

logger = logging.getLogger(__name__)

SPAN_LENGTHS_KM = (60, 80, 100, 120)
MAX_SPANS = 50

LABEL_COLUMN = "eta_db"
EXTRA_COLUMNS = ["symbol_rate_gbd", "eta_gn_db"]
CSV_COLUMNS = ["scenario_id", "cut_index"] + qot.FEATURE_NAMES + [LABEL_COLUMN] + EXTRA_COLUMNS


@dataclass(frozen=True)
class Scenario:
    scenario_id: int
    link: FiberLink
    spectrum: tuple[ChannelConfig, ...]
    fill_ratio: float
    target_fill: float


@dataclass(frozen=True)
class LabeledRow:
    """One CUT of one scenario.

    ``eta_gn_db`` is the closed-form GN coefficient of the same CUT, kept so the
    baseline can be scored on exactly the same rows without the spectrum.
    """

    scenario_id: int
    cut_index: int
    features: np.ndarray
    label: float
    symbol_rate: float
    eta_gn_db: float

    @property
    def n_spans(self) -> int:
        return int(self.features[qot.IDX_N_SPAN])

    @property
    def span_length(self) -> float:
        return float(self.features[qot.IDX_L_SPAN])

    @property
    def launch_power(self) -> float:
        return float(self.features[qot.IDX_P_CUT])


@dataclass
class BuildStats:
    scenarios: int = 0
    rows: int = 0
    skipped: int = 0
    spot_checks: int = 0
    max_spot_check_db: float = 0.0
    sci_misses: int = 0
    seconds: float = 0.0
    failures: list[str] = field(default_factory=list)

    def merge(self, other: "BuildStats") -> None:
        self.scenarios += other.scenarios
        self.rows += other.rows
        self.skipped += other.skipped
        self.spot_checks += other.spot_checks
        self.max_spot_check_db = max(self.max_spot_check_db, other.max_spot_check_db)
        self.sci_misses += other.sci_misses
        self.failures.extend(other.failures)


def scenario_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per scenario so results do not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _link_for(settings: Settings, span_length: float, n_spans: int) -> FiberLink:
    f = settings.fiber
    return FiberLink(span_length, n_spans, alpha_db_km=f.alpha_db_km, beta2_ps2_km=f.beta2_ps2_km,
                     gamma_w_km=f.gamma_w_km, noise_figure_db=f.noise_figure_db)


def sample_scenario(seed: int, index: int = 0, settings: Optional[Settings] = None) -> Scenario:
    settings = Settings() if settings is None else settings
    rng = scenario_rng(seed, index)
    span_length = float(SPAN_LENGTHS_KM[rng.integers(len(SPAN_LENGTHS_KM))])
    n_spans = int(rng.integers(1, MAX_SPANS + 1))
    lo, hi = settings.datagen.fill_min, settings.datagen.fill_max
    target = float(rng.uniform(lo, hi))

    tr = settings.transceiver
    menu = transceiver_menu(tr.min_symbol_rate_gbd, tr.max_symbol_rate_gbd, tr.clip_symbol_rate,
                            settings.grid.guard_ghz)
    n_slots = settings.grid.n_slots
    cap = math.floor(hi * n_slots + 1e-9)
    spectrum = []
    used = 0
    while used < target * n_slots:
        mode = menu[rng.integers(len(menu))]
        if used + mode.slots > cap:
            # the next carrier would overshoot the fill ceiling; stop here
            break
        center = slot_center_frequency(used, mode.slots, settings.grid.anchor_thz * 1e12,
                                       settings.grid.slot_width_ghz)
        spectrum.append(ChannelConfig(center, mode.symbol_rate, mode.modulation, mode.data_rate,
                                      launch_power_for(mode.symbol_rate)))
        used += mode.slots
    return Scenario(index, _link_for(settings, span_length, n_spans), tuple(spectrum),
                    used / n_slots, target)


def label_scenario(scenario: Scenario, seed: int, settings: Optional[Settings] = None
                   ) -> tuple[list[LabeledRow], BuildStats]:
    """Rows for every CUT of ``scenario``; numerical failures are skipped and counted."""
    settings = Settings() if settings is None else settings
    q = settings.quadrature
    stats = BuildStats(scenarios=1)
    # a separate stream from sampling, still keyed on (seed, index)
    check_rng = np.random.default_rng(np.random.SeedSequence([seed, scenario.scenario_id, 1]))
    sci = qot.SciCache(points_per_decade=q.points_per_decade)
    link_id = f"scenario-{scenario.scenario_id}"
    link, spectrum = scenario.link, list(scenario.spectrum)
    gn_sci, gn_xci = gn_closed_all(link, spectrum)
    rows = []
    for i, ch in enumerate(spectrum):
        check = check_rng.random() < settings.datagen.spot_check_fraction
        try:
            x = qot.features_for(link, spectrum, i, sci, link_id)
            eta = gn_oracle_eta(link, spectrum, i, points_per_decade=q.points_per_decade,
                                p_min_ratio=q.p_min_ratio).eta_db
            if check:
                fine = gn_oracle_eta(link, spectrum, i, points_per_decade=2 * q.points_per_decade,
                                     p_min_ratio=q.p_min_ratio).eta_db
                delta = abs(fine - eta)
                stats.spot_checks += 1
                stats.max_spot_check_db = max(stats.max_spot_check_db, delta)
                if delta > q.tolerance_db:
                    raise QotPlanError(f"label moved {delta:.3f} dB on grid doubling")
            if not (np.all(np.isfinite(x)) and math.isfinite(eta)):
                raise QotPlanError("non-finite feature or label")
        except (QotPlanError, ArithmeticError, ValueError) as exc:
            msg = f"scenario {scenario.scenario_id} cut {i}: {exc}"
            logger.warning("skipping row: %s", msg)
            stats.skipped += 1
            stats.failures.append(msg)
            continue
        eta_gn = 10.0 * math.log10((gn_sci[i] + gn_xci[i]) / ch.power_w ** 3)
        rows.append(LabeledRow(scenario.scenario_id, i, x, eta, ch.symbol_rate, eta_gn))
    stats.rows = len(rows)
    stats.sci_misses = sci.misses
    return rows, stats


def _scenario_job(args):
    seed, index, settings = args
    return label_scenario(sample_scenario(seed, index, settings), seed, settings)


def build_dataset(n_scenarios: int, seed: int, settings: Optional[Settings] = None,
                  workers: int = 1, stats: Optional[BuildStats] = None) -> list[LabeledRow]:
    """Label ``n_scenarios`` random scenarios; rows come out in scenario order."""
    if n_scenarios < 1:
        raise ValueError("n_scenarios must be at least 1")
    settings = Settings() if settings is None else settings
    stats = BuildStats() if stats is None else stats
    t0 = time.perf_counter()
    jobs = [(seed, i, settings) for i in range(n_scenarios)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scenario_job, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_scenario_job(job))
            logger.info("scenario %d/%d: %d rows", job[1] + 1, n_scenarios, results[-1][1].rows)
    rows = []
    for part, part_stats in results:
        rows.extend(part)
        stats.merge(part_stats)
    stats.seconds = time.perf_counter() - t0
    logger.info("built %d rows from %d scenarios (%d skipped) in %.1f s",
                stats.rows, stats.scenarios, stats.skipped, stats.seconds)
    return rows


def split_dataset(rows: Sequence[LabeledRow], seed: int,
                  fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)
                  ) -> tuple[list[LabeledRow], list[LabeledRow], list[LabeledRow]]:
    """Partition by scenario id (never by row) into train/validation/test."""
    if len(rows) < 10:
        raise ValueError("need at least 10 rows to split")
    ids = sorted({r.scenario_id for r in rows})
    order = np.random.default_rng(seed).permutation(len(ids))
    n = len(ids)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    train_ids = {ids[k] for k in order[:n_train]}
    val_ids = {ids[k] for k in order[n_train:n_train + n_val]}
    parts: tuple[list, list, list] = ([], [], [])
    for r in rows:
        if r.scenario_id in train_ids:
            parts[0].append(r)
        elif r.scenario_id in val_ids:
            parts[1].append(r)
        else:
            parts[2].append(r)
    return parts


def as_arrays(rows: Sequence[LabeledRow]) -> tuple[np.ndarray, np.ndarray]:
    if not rows:
        return np.zeros((0, qot.N_FEATURES)), np.zeros(0)
    return np.vstack([r.features for r in rows]), np.array([r.label for r in rows])


def save_rows(rows: Iterable[LabeledRow], path: str | Path,
              header: Optional[dict[str, object]] = None) -> None:
    """CSV with optional ``# key = value`` comment lines before the column header."""
    with open(path, "w", newline="") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key} = {value}\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([r.scenario_id, r.cut_index] + [repr(float(v)) for v in r.features]
                            + [repr(r.label), repr(r.symbol_rate), repr(r.eta_gn_db)])


def read_header(path: str | Path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition("=")
            out[key.strip()] = value.strip()
    return out


def load_rows(path: str | Path) -> list[LabeledRow]:
    with open(path, newline="") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(lines)
        try:
            columns = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty dataset file") from None
        if columns != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns; expected {CSV_COLUMNS}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_COLUMNS):
                raise ValueError(f"{path}: record {lineno} has {len(rec)} fields")
            try:
                vals = [float(v) for v in rec[2:]]
                rows.append(LabeledRow(
                    int(rec[0]), int(rec[1]), np.array(vals[:qot.N_FEATURES]),
                    vals[qot.N_FEATURES], vals[qot.N_FEATURES + 1], vals[qot.N_FEATURES + 2]))
            except ValueError:
                raise ValueError(f"{path}: record {lineno} is not numeric") from None
    return rows

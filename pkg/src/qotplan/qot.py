"""Divide-and-conquer QoT estimation.

Per channel the SCI comes from the GN integral (computed once, cached); the
total NLI is predicted by a boosted-tree model from the SCI of the CUT and its
nearest neighbours; ASE is analytic. The trees are fitted to the total NLI
coefficient relative to the CUT's own SCI coefficient (see ``training_target``),
which is known exactly from the first feature. The closed-form GN estimator exposes the
same ``evaluate`` interface so the planner can use either.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from qotplan import gbt
from qotplan.errors import CacheMissError, ModelError
from qotplan.grid import MAX_NEIGHBORS, ChannelConfig, neighbors_by_distance
from qotplan.phys import (
    FiberLink,
    NoiseBreakdown,
    ase_variance,
    combine_snr,
    gn_closed_all,
    sci_power,
)

logger = logging.getLogger(__name__)

N_FEATURES = 3 + 2 * MAX_NEIGHBORS + 2
FEATURE_NAMES = (
    ["sci_cut_db"]
    + [f"sci_n{i}_db" for i in range(1, MAX_NEIGHBORS + 1)]
    + [f"df_n{i}_ghz" for i in range(1, MAX_NEIGHBORS + 1)]
    + ["p_cut_dbm", "n_ch", "l_span_km", "n_span"]
)
assert len(FEATURE_NAMES) == 25

IDX_SCI_CUT = 0
IDX_P_CUT = 21
IDX_N_CH = 22
IDX_L_SPAN = 23
IDX_N_SPAN = 24

CACHE_FIELDS = ["link_id", "center_freq_hz", "symbol_rate_gbd", "launch_power_dbm", "sci_db"]

CacheKey = tuple[str, int, float, float]


class SciCache:
    """Whole-link oracle SCI (dB re 1 W) per (link, channel identity).

    SCI of a channel does not depend on the other channels, so entries never go
    stale when lightpaths are added or removed. ``misses`` counts new channel
    identities. Without frequency-dependent fibre parameters the SCI integral
    is also independent of the centre frequency, so the integral itself runs
    once per (link, symbol rate, power); ``integrals`` counts those runs.
    """

    def __init__(self, compute_on_miss: bool = True, points_per_decade: int = 24):
        self.compute_on_miss = compute_on_miss
        self.points_per_decade = points_per_decade
        self._values: dict[CacheKey, float] = {}
        self._by_shape: dict[tuple[str, float, float], float] = {}
        self.misses = 0
        self.integrals = 0

    @staticmethod
    def key(link_id: str, channel: ChannelConfig) -> CacheKey:
        return (link_id, int(round(channel.center_frequency)),
                round(channel.symbol_rate, 6), round(channel.launch_power, 6))

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, key: CacheKey) -> bool:
        return key in self._values

    def get(self, link: FiberLink, channel: ChannelConfig, link_id: Optional[str] = None) -> float:
        link_id = link.key() if link_id is None else link_id
        k = self.key(link_id, channel)
        try:
            return self._values[k]
        except KeyError:
            pass
        if not self.compute_on_miss:
            raise CacheMissError(f"no SCI cached for {k}")
        self.misses += 1
        shape = (link_id, k[2], k[3])
        value = self._by_shape.get(shape)
        if value is None:
            self.integrals += 1
            value = 10.0 * math.log10(sci_power(link, channel, self.points_per_decade))
            self._by_shape[shape] = value
        self._values[k] = value
        return value

    def put(self, link_id: str, channel: ChannelConfig, sci_db: float) -> None:
        # identical key -> identical value, so overwriting is harmless
        k = self.key(link_id, channel)
        self._values[k] = float(sci_db)
        self._by_shape.setdefault((link_id, k[2], k[3]), float(sci_db))

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CACHE_FIELDS)
            for (link_id, f, b, p), v in sorted(self._values.items()):
                writer.writerow([link_id, f, repr(b), repr(p), repr(v)])

    @classmethod
    def load(cls, path: str | Path, **kwargs) -> "SciCache":
        cache = cls(**kwargs)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CACHE_FIELDS:
                raise ValueError(f"{path}: expected columns {CACHE_FIELDS}")
            for row in reader:
                key = (row["link_id"], int(row["center_freq_hz"]),
                       float(row["symbol_rate_gbd"]), float(row["launch_power_dbm"]))
                cache._values[key] = float(row["sci_db"])
                cache._by_shape.setdefault((key[0], key[2], key[3]), float(row["sci_db"]))
        return cache


def features_for(link: FiberLink, spectrum: Sequence[ChannelConfig], cut_index: int,
                 sci: SciCache, link_id: Optional[str] = None) -> np.ndarray:
    """The 25-entry model input for one CUT.

    Layout: SCI of the CUT; SCI of the 10 nearest neighbours (nearest first);
    their |Δf| in GHz; CUT launch power (dBm); channel count; span length (km);
    span count. Absent neighbours are zero in both SCI and distance slots.
    """
    x = np.zeros(N_FEATURES)
    cut = spectrum[cut_index]
    x[IDX_SCI_CUT] = sci.get(link, cut, link_id)
    for rank, j in enumerate(neighbors_by_distance(spectrum, cut_index)):
        x[1 + rank] = sci.get(link, spectrum[j], link_id)
        x[1 + MAX_NEIGHBORS + rank] = abs(spectrum[j].center_frequency - cut.center_frequency) / 1e9
    x[IDX_P_CUT] = cut.launch_power
    x[IDX_N_CH] = len(spectrum)
    x[IDX_L_SPAN] = link.span_length
    x[IDX_N_SPAN] = link.n_spans
    return x


def feature_matrix(link: FiberLink, spectrum: Sequence[ChannelConfig], sci: SciCache,
                   link_id: Optional[str] = None) -> np.ndarray:
    return np.array([features_for(link, spectrum, i, sci, link_id) for i in range(len(spectrum))])


def sci_eta_db(x: np.ndarray) -> np.ndarray:
    """SCI-only NLI coefficient of the CUT (dB re 1/W^2) for feature rows."""
    x = np.atleast_2d(x)
    return x[:, IDX_SCI_CUT] - 3.0 * (x[:, IDX_P_CUT] - 30.0)


def training_target(x: np.ndarray, eta_db: np.ndarray) -> np.ndarray:
    """What the trees learn: 10 log10((SCI + XCI) / SCI) of the CUT."""
    return np.asarray(eta_db, dtype=float) - sci_eta_db(x)


def predict_eta(model: gbt.GbtModel, x: np.ndarray) -> np.ndarray:
    """Total NLI coefficient (dB) of each feature row."""
    if model.n_features != N_FEATURES:
        raise ModelError(f"model expects {model.n_features} features, estimator builds {N_FEATURES}")
    x = np.atleast_2d(x)
    return gbt.predict_batch(model, x) + sci_eta_db(x)


def _snr_from_nli(link: FiberLink, channel: ChannelConfig, p_nli: float) -> float:
    ase = ase_variance(link, channel.bandwidth_hz)
    # the SNR only needs SCI + XCI jointly, so book the whole NLI as SCI
    return combine_snr(channel.power_w, NoiseBreakdown(sigma2_ase=ase, sigma2_sci=p_nli))


def pce_ml(link: FiberLink, spectrum: Sequence[ChannelConfig], model: gbt.GbtModel,
           sci: SciCache, link_id: Optional[str] = None) -> list[float]:
    """Per-channel SNR (dB) with the boosted-tree NLI solver."""
    if not spectrum:
        return []
    if model.n_features != N_FEATURES:
        raise ModelError(f"model expects {model.n_features} features, estimator builds {N_FEATURES}")
    eta = predict_eta(model, feature_matrix(link, spectrum, sci, link_id))
    out = []
    for ch, e in zip(spectrum, eta):
        p_nli = 10.0 ** (e / 10.0) * ch.power_w ** 3
        out.append(_snr_from_nli(link, ch, p_nli))
    return out


def pce_gn(link: FiberLink, spectrum: Sequence[ChannelConfig]) -> list[float]:
    """Per-channel SNR (dB) with the closed-form GN model."""
    if not spectrum:
        return []
    sci, xci = gn_closed_all(link, spectrum)
    out = []
    for ch, s, x in zip(spectrum, sci, xci):
        ase = ase_variance(link, ch.bandwidth_hz)
        out.append(combine_snr(ch.power_w, NoiseBreakdown(ase, float(s), float(x))))
    return out


@dataclass
class GnPce:
    """Closed-form GN path computation element."""

    name: str = "GN"
    calls: int = 0

    def evaluate(self, link: FiberLink, spectrum: Sequence[ChannelConfig],
                 link_id: Optional[str] = None) -> list[float]:
        self.calls += 1
        return pce_gn(link, spectrum)


class MlPce:
    """Boosted-tree path computation element with a persistent SCI cache."""

    name = "ML"

    def __init__(self, model: gbt.GbtModel, sci: Optional[SciCache] = None):
        self.model = model
        self.sci = SciCache() if sci is None else sci
        self.calls = 0

    def evaluate(self, link: FiberLink, spectrum: Sequence[ChannelConfig],
                 link_id: Optional[str] = None) -> list[float]:
        self.calls += 1
        return pce_ml(link, spectrum, self.model, self.sci, link_id)


def snr_from_eta_db(eta_db: float, launch_power_dbm: float, symbol_rate_gbd: float,
                    link: FiberLink) -> float:
    """SNR (dB) of a CUT whose total NLI coefficient is ``eta_db`` (dB re 1/W^2)."""
    p = 1e-3 * 10.0 ** (launch_power_dbm / 10.0)
    p_nli = 10.0 ** (eta_db / 10.0) * p ** 3
    return combine_snr(p, NoiseBreakdown(sigma2_ase=ase_variance(link, symbol_rate_gbd * 1e9),
                                         sigma2_sci=p_nli))

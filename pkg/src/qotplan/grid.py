"""Flex-grid spectrum bookkeeping.

The C-band is modelled as ``n_slots`` contiguous 12.5 GHz slots. Slot 0 starts
at the anchor frequency; a channel occupying slots ``[start, start + n)`` is
centred in the middle of that range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import numpy as np

from qotplan.errors import DomainError

SLOT_WIDTH_GHZ = 12.5
N_SLOTS = 400
ANCHOR_HZ = 191.325e12
MAX_NEIGHBORS = 10

MODULATION_BITS = {"QPSK": 2, "16QAM": 4, "32QAM": 5, "64QAM": 6}


@dataclass(frozen=True)
class ChannelConfig:
    """One carrier: centre frequency in Hz, symbol rate in GBd, power in dBm."""

    center_frequency: float
    symbol_rate: float
    modulation: str
    data_rate: int
    launch_power: float

    @property
    def bandwidth_hz(self) -> float:
        return self.symbol_rate * 1e9

    @property
    def power_w(self) -> float:
        return 1e-3 * 10.0 ** (self.launch_power / 10.0)

    @property
    def bits_per_symbol(self) -> int:
        return MODULATION_BITS[self.modulation]

    @property
    def low_edge(self) -> float:
        return self.center_frequency - self.bandwidth_hz / 2

    @property
    def high_edge(self) -> float:
        return self.center_frequency + self.bandwidth_hz / 2


def slots_needed(symbol_rate_gbd: float, guard_ghz: float = 0.0,
                 slot_width_ghz: float = SLOT_WIDTH_GHZ) -> int:
    if symbol_rate_gbd <= 0 or guard_ghz < 0:
        raise DomainError("symbol rate must be positive and guard non-negative")
    # tolerance absorbs float noise such as 37.5000000001 / 12.5
    return math.ceil((symbol_rate_gbd + guard_ghz) / slot_width_ghz - 1e-9)


def slot_center_frequency(start: int, n: int, anchor_hz: float = ANCHOR_HZ,
                          slot_width_ghz: float = SLOT_WIDTH_GHZ) -> float:
    return anchor_hz + (start + n / 2.0) * slot_width_ghz * 1e9


class FlexGrid:
    """Per-slot occupancy of one fibre, each slot holding a lightpath id or None."""

    def __init__(self, n_slots: int = N_SLOTS, slot_width_ghz: float = SLOT_WIDTH_GHZ):
        if n_slots < 1:
            raise DomainError("grid needs at least one slot")
        self.n_slots = n_slots
        self.slot_width_ghz = slot_width_ghz
        self.occupancy: list[Optional[Hashable]] = [None] * n_slots
        self._claims: dict[Hashable, tuple[int, int]] = {}

    def copy(self) -> "FlexGrid":
        other = FlexGrid(self.n_slots, self.slot_width_ghz)
        other.occupancy = list(self.occupancy)
        other._claims = dict(self._claims)
        return other

    @property
    def n_occupied(self) -> int:
        return self.n_slots - self.occupancy.count(None)

    def free_mask(self) -> np.ndarray:
        return np.array([slot is None for slot in self.occupancy], dtype=bool)

    def is_free(self, start: int, n: int) -> bool:
        if start < 0 or start + n > self.n_slots:
            return False
        return all(slot is None for slot in self.occupancy[start:start + n])

    def claim(self, lp_id: Hashable, start: int, n: int) -> None:
        if lp_id is None:
            raise DomainError("lightpath id must not be None")
        if lp_id in self._claims:
            raise DomainError(f"lightpath {lp_id!r} already placed on this grid")
        if not self.is_free(start, n):
            raise DomainError(f"slots [{start}, {start + n}) are not free")
        for s in range(start, start + n):
            self.occupancy[s] = lp_id
        self._claims[lp_id] = (start, n)

    def release(self, lp_id: Hashable) -> tuple[int, int]:
        start, n = self._claims.pop(lp_id)
        for s in range(start, start + n):
            self.occupancy[s] = None
        return start, n

    def shrink(self, lp_id: Hashable, n_new: int) -> None:
        """Keep the lowest ``n_new`` slots of a claim and free the rest."""
        start, n = self._claims[lp_id]
        if not 1 <= n_new <= n:
            raise DomainError("shrink must keep between 1 and the current slot count")
        for s in range(start + n_new, start + n):
            self.occupancy[s] = None
        self._claims[lp_id] = (start, n_new)

    def claim_of(self, lp_id: Hashable) -> Optional[tuple[int, int]]:
        return self._claims.get(lp_id)

    def claims(self) -> dict[Hashable, tuple[int, int]]:
        return dict(self._claims)


def first_fit_mask(free: np.ndarray, n: int) -> Optional[tuple[int, int]]:
    """Lowest-index run of ``n`` True values in a boolean mask."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if n > len(free):
        return None
    # run length of free slots ending at each index
    run = 0
    for i, ok in enumerate(free):
        run = run + 1 if ok else 0
        if run == n:
            return (i - n + 1, i)
    return None


def first_fit(grid: FlexGrid, n: int) -> Optional[tuple[int, int]]:
    """Lowest contiguous free slot range of length ``n`` as inclusive (first, last)."""
    return first_fit_mask(grid.free_mask(), n)


def common_first_fit(grids: Sequence[FlexGrid], n: int) -> Optional[tuple[int, int]]:
    """First fit honouring spectrum continuity over several grids."""
    mask = np.ones(grids[0].n_slots, dtype=bool)
    for g in grids:
        mask &= g.free_mask()
    return first_fit_mask(mask, n)


def neighbors_by_distance(spectrum: Sequence[ChannelConfig], cut_index: int,
                          max_neighbors: int = MAX_NEIGHBORS) -> list[int]:
    """Indices of the channels closest in centre frequency to the CUT.

    Ties in distance go to the lower-frequency channel first.
    """
    if not 0 <= cut_index < len(spectrum):
        raise IndexError(f"cut_index {cut_index} out of range")
    f_cut = spectrum[cut_index].center_frequency
    others = [
        (abs(ch.center_frequency - f_cut), ch.center_frequency, i)
        for i, ch in enumerate(spectrum)
        if i != cut_index
    ]
    others.sort()
    return [i for _, _, i in others[:max_neighbors]]


def check_non_overlapping(spectrum: Sequence[ChannelConfig]) -> None:
    ordered = sorted(spectrum, key=lambda ch: ch.center_frequency)
    for a, b in zip(ordered, ordered[1:]):
        # 1 Hz slack for float rounding of abutting channels
        if b.low_edge < a.high_edge - 1.0:
            raise DomainError(
                f"channels at {a.center_frequency:.6e} Hz and {b.center_frequency:.6e} Hz overlap"
            )

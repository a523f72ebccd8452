"""Small builders shared by several test modules."""

from __future__ import annotations

from qotplan.grid import ChannelConfig
from qotplan.phys import launch_power_for

F0 = 193.0e12


def channel(offset_ghz: float = 0.0, symbol_rate: float = 35.0, power_dbm: float | None = None,
            modulation: str = "QPSK", data_rate: int = 100) -> ChannelConfig:
    p = launch_power_for(symbol_rate) if power_dbm is None else power_dbm
    return ChannelConfig(F0 + offset_ghz * 1e9, symbol_rate, modulation, data_rate, p)


def comb(n: int, spacing_ghz: float = 50.0, symbol_rate: float = 35.0,
         power_dbm: float | None = None) -> list[ChannelConfig]:
    return [channel(i * spacing_ghz, symbol_rate, power_dbm) for i in range(n)]

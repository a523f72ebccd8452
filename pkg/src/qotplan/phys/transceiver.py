"""Bandwidth-variable transceiver configurations and SNR thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from scipy.optimize import brentq
from scipy.special import erfc

from qotplan.errors import DomainError
from qotplan.grid import MODULATION_BITS, slots_needed

MODULATIONS = ("QPSK", "16QAM", "32QAM", "64QAM")
DATA_RATES = tuple(range(100, 601, 50))
PRE_FEC_BER = 2e-2
IMPLEMENTATION_MARGIN_DB = 2.0
# chosen so that 100G QPSK runs at 35 GBd
CODE_RATE = 100.0 / (2 * 2 * 35.0)

DEFAULT_THRESHOLDS = {
    "QPSK": 8.25,
    "16QAM": 14.71,
    "32QAM": 17.60,
    "64QAM": 20.43,
}


@dataclass(frozen=True)
class TransceiverMode:
    modulation: str
    data_rate: int
    symbol_rate: float  # GBd
    slots: int

    @property
    def bits_per_symbol(self) -> int:
        return MODULATION_BITS[self.modulation]


def qfunc(x: float) -> float:
    return 0.5 * erfc(x / math.sqrt(2.0))


def qam_ber(snr_linear: float, order: int) -> float:
    """Gray-coded M-QAM bit error rate approximation on an AWGN channel."""
    k = math.log2(order)
    return 4.0 / k * (1.0 - 1.0 / math.sqrt(order)) * qfunc(math.sqrt(3.0 * snr_linear / (order - 1)))


def awgn_snr_for_ber(modulation: str, ber: float = PRE_FEC_BER) -> float:
    """SNR in dB at which ``modulation`` reaches ``ber``."""
    order = 2 ** MODULATION_BITS[modulation]
    root = brentq(lambda x: qam_ber(10.0 ** (x / 10.0), order) - ber, -10.0, 40.0, xtol=1e-10)
    return root


def derive_threshold_table(ber: float = PRE_FEC_BER,
                           margin_db: float = IMPLEMENTATION_MARGIN_DB) -> dict[str, float]:
    return {m: awgn_snr_for_ber(m, ber) + margin_db for m in MODULATIONS}


def required_snr(modulation: str, table: Optional[Mapping[str, float]] = None) -> float:
    table = DEFAULT_THRESHOLDS if table is None else table
    try:
        return table[modulation]
    except KeyError:
        raise DomainError(f"unsupported modulation {modulation!r}") from None


def transceiver_menu(min_symbol_rate: float = 35.0, max_symbol_rate: float = 69.0,
                     clip: bool = False, guard_ghz: float = 0.0) -> list[TransceiverMode]:
    """All (modulation, data rate) pairs whose symbol rate fits the allowed range.

    With ``clip`` a pair just above the cap (within 2 GBd) is kept at the cap
    instead of dropped.
    """
    menu = []
    for modulation in MODULATIONS:
        m = MODULATION_BITS[modulation]
        for rate in DATA_RATES:
            baud = rate / (2.0 * m * CODE_RATE)
            baud = round(baud, 9)
            if baud > max_symbol_rate and clip and baud - max_symbol_rate <= 2.0:
                baud = max_symbol_rate
            if min_symbol_rate <= baud <= max_symbol_rate:
                menu.append(TransceiverMode(modulation, rate, baud, slots_needed(baud, guard_ghz)))
    return menu

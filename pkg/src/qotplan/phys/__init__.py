"""Physical-layer models: ASE, closed-form GN, GN integral oracle, thresholds."""

from qotplan.phys.closed_form import gn_closed_all, gn_closed_eta
from qotplan.phys.fiber import (
    EtaNli,
    FiberLink,
    NoiseBreakdown,
    ase_variance,
    combine_snr,
    launch_power_for,
    snr_sum_db,
)
from qotplan.phys.oracle import SCI_ONLY, TOTAL, gn_oracle_eta, sci_power
from qotplan.phys.transceiver import (
    TransceiverMode,
    derive_threshold_table,
    required_snr,
    transceiver_menu,
)

__all__ = [
    "EtaNli",
    "FiberLink",
    "NoiseBreakdown",
    "SCI_ONLY",
    "TOTAL",
    "TransceiverMode",
    "ase_variance",
    "combine_snr",
    "derive_threshold_table",
    "gn_closed_all",
    "gn_closed_eta",
    "gn_oracle_eta",
    "launch_power_for",
    "required_snr",
    "sci_power",
    "snr_sum_db",
    "transceiver_menu",
]

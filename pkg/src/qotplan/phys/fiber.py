"""Fibre link description, ASE noise and SNR bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass

from qotplan.errors import DomainError

PLANCK = 6.62607015e-34
REFERENCE_FREQUENCY_HZ = 193.4e12
DB_PER_NEPER = 10.0 * math.log10(math.e)


@dataclass(frozen=True)
class FiberLink:
    """Homogeneous-span SSMF link. Units follow the usual datasheet conventions."""

    span_length: float  # km
    n_spans: int
    alpha_db_km: float = 0.2
    beta2_ps2_km: float = -21.3
    gamma_w_km: float = 1.3
    noise_figure_db: float = 5.0

    def __post_init__(self):
        if self.span_length <= 0:
            raise DomainError("span length must be positive")
        if self.n_spans < 0:
            raise DomainError("span count must be non-negative")

    @property
    def length_m(self) -> float:
        return self.span_length * 1e3

    @property
    def alpha_field(self) -> float:
        """Field attenuation in 1/m (half the power attenuation in nepers)."""
        return self.alpha_db_km / DB_PER_NEPER / 1e3 / 2.0

    @property
    def beta2(self) -> float:
        """Group velocity dispersion in s^2/m."""
        return self.beta2_ps2_km * 1e-24 / 1e3

    @property
    def gamma(self) -> float:
        """Nonlinear coefficient in 1/(W m)."""
        return self.gamma_w_km / 1e3

    @property
    def effective_length(self) -> float:
        a2 = 2.0 * self.alpha_field
        return (1.0 - math.exp(-a2 * self.length_m)) / a2

    @property
    def asymptotic_length(self) -> float:
        return 1.0 / (2.0 * self.alpha_field)

    @property
    def span_loss_db(self) -> float:
        return self.alpha_db_km * self.span_length

    def key(self) -> str:
        """Stable identity string, used as link id for cached per-link values."""
        return (f"L{self.span_length:.6g}_N{self.n_spans}_a{self.alpha_db_km:.6g}"
                f"_b{self.beta2_ps2_km:.6g}_g{self.gamma_w_km:.6g}_nf{self.noise_figure_db:.6g}")


@dataclass(frozen=True)
class NoiseBreakdown:
    """Noise variances in W, referred to the CUT bandwidth."""

    sigma2_ase: float = 0.0
    sigma2_sci: float = 0.0
    sigma2_xci: float = 0.0

    def __post_init__(self):
        if min(self.sigma2_ase, self.sigma2_sci, self.sigma2_xci) < 0:
            raise DomainError("noise variances must be non-negative")

    @property
    def total(self) -> float:
        return self.sigma2_ase + self.sigma2_sci + self.sigma2_xci

    @property
    def nli(self) -> float:
        return self.sigma2_sci + self.sigma2_xci


@dataclass(frozen=True)
class EtaNli:
    """NLI power normalised by the cube of the launch power, in dB re 1/W^2."""

    eta_db: float

    def nli_power(self, p_tx_w: float) -> float:
        return 10.0 ** (self.eta_db / 10.0) * p_tx_w ** 3

    @classmethod
    def from_power(cls, p_nli_w: float, p_tx_w: float) -> "EtaNli":
        return cls(10.0 * math.log10(p_nli_w / p_tx_w ** 3))


def ase_variance(link: FiberLink, bandwidth_hz: float,
                 frequency_hz: float = REFERENCE_FREQUENCY_HZ) -> float:
    """ASE power in ``bandwidth_hz`` after ``n_spans`` loss-compensating amplifiers."""
    if bandwidth_hz <= 0:
        raise DomainError("reference bandwidth must be positive")
    gain = 10.0 ** (link.span_loss_db / 10.0)
    nf = 10.0 ** (link.noise_figure_db / 10.0)
    return link.n_spans * (gain * nf - 1.0) * PLANCK * frequency_hz * bandwidth_hz


def combine_snr(p_tx_w: float, nb: NoiseBreakdown) -> float:
    total = nb.total
    if total <= 0:
        raise DomainError("SNR undefined: all noise variances are zero")
    return 10.0 * math.log10(p_tx_w / total)


def snr_sum_db(snrs_db) -> float:
    """Combine cascaded per-link SNRs by adding inverse linear SNRs."""
    inv = sum(10.0 ** (-s / 10.0) for s in snrs_db)
    return -10.0 * math.log10(inv)


def launch_power_for(symbol_rate_gbd: float, reference_gbd: float = 35.0,
                     reference_dbm: float = 0.0) -> float:
    """PSD-equalised launch power: a 35 GBd carrier gets 0 dBm."""
    if symbol_rate_gbd <= 0:
        raise DomainError("symbol rate must be positive")
    return reference_dbm + 10.0 * math.log10(symbol_rate_gbd / reference_gbd)

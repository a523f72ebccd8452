"""Closed-form GN model for SCI and XCI with the standard span-coherence factor.

SCI accumulates coherently over the channel's own bandwidth. For XCI the
coherence exponent is evaluated once per link over the whole grid band rather
than over the currently lit channels, so NLI of a channel is a sum of
non-negative per-interferer terms and removing or narrowing a neighbour can
only lower it.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from qotplan.errors import DomainError
from qotplan.grid import N_SLOTS, SLOT_WIDTH_GHZ, ChannelConfig, check_non_overlapping
from qotplan.phys.fiber import FiberLink, NoiseBreakdown

GRID_BANDWIDTH_HZ = N_SLOTS * SLOT_WIDTH_GHZ * 1e9


def coherence_exponent(link: FiberLink, bandwidth_hz: float) -> float:
    """Span-coherence exponent eps for NLI accumulation N^(1+eps) over ``bandwidth_hz``."""
    l_a = link.asymptotic_length
    x = 0.5 * math.pi ** 2 * abs(link.beta2) * l_a * bandwidth_hz ** 2
    return 0.3 * math.log(1.0 + 6.0 / link.length_m * l_a / math.asinh(x))


def _span_scale(link: FiberLink, bandwidths_hz: np.ndarray, coherent: bool,
                coherence_bandwidth_hz: float) -> tuple[np.ndarray, float]:
    """Span accumulation factors: one per channel for SCI, one shared for XCI."""
    n = link.n_spans
    if not coherent or n == 0:
        return np.full(len(bandwidths_hz), float(n)), float(n)
    sci = np.array([n ** (1.0 + coherence_exponent(link, b)) for b in bandwidths_hz])
    return sci, n ** (1.0 + coherence_exponent(link, coherence_bandwidth_hz))


def occupied_bandwidth(spectrum: Sequence[ChannelConfig]) -> float:
    lo = min(ch.low_edge for ch in spectrum)
    hi = max(ch.high_edge for ch in spectrum)
    return hi - lo


def gn_closed_eta(link: FiberLink, spectrum: Sequence[ChannelConfig], cut_index: int,
                  coherent: bool = True,
                  coherence_bandwidth_hz: float = GRID_BANDWIDTH_HZ) -> NoiseBreakdown:
    """SCI and XCI noise of the CUT from the closed-form GN model (ASE left at zero).

    Per span:
      SCI = 8/27 g^2 P_i^3 Leff^2 asinh(pi^2/2 |b2| La B_i^2) / (pi |b2| La B_i^2)
      XCI = sum_k 8/27 g^2 Leff^2 P_k^2 P_i ln((df+B_k/2)/(df-B_k/2)) / (pi |b2| La B_k^2)
    Spans accumulate as N^(1+eps), with eps over B_i for SCI and over
    ``coherence_bandwidth_hz`` for XCI, or linearly when ``coherent`` is False.
    """
    if not spectrum:
        raise DomainError("spectrum is empty")
    check_non_overlapping(spectrum)
    cut = spectrum[cut_index]
    gamma = link.gamma
    b2 = abs(link.beta2)
    l_eff = link.effective_length
    l_a = link.asymptotic_length
    b_i = cut.bandwidth_hz
    p_i = cut.power_w
    common = 8.0 / 27.0 * gamma ** 2 * l_eff ** 2 / (math.pi * b2 * l_a)

    sci = common * p_i ** 3 * math.asinh(0.5 * math.pi ** 2 * b2 * l_a * b_i ** 2) / b_i ** 2

    others = [ch for i, ch in enumerate(spectrum) if i != cut_index]
    xci = 0.0
    if others:
        df = np.abs(np.array([ch.center_frequency for ch in others]) - cut.center_frequency)
        b_k = np.array([ch.bandwidth_hz for ch in others])
        p_k = np.array([ch.power_w for ch in others])
        xci = float(np.sum(common * p_k ** 2 * p_i * np.log((df + b_k / 2) / (df - b_k / 2)) / b_k ** 2))

    sci_scale, xci_scale = _span_scale(link, np.array([b_i]), coherent, coherence_bandwidth_hz)
    return NoiseBreakdown(sigma2_ase=0.0, sigma2_sci=float(sci_scale[0]) * sci, sigma2_xci=xci_scale * xci)


def gn_closed_all(link: FiberLink, spectrum: Sequence[ChannelConfig], coherent: bool = True,
                  coherence_bandwidth_hz: float = GRID_BANDWIDTH_HZ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised SCI and XCI (W) for every channel of a spectrum."""
    if not spectrum:
        return np.zeros(0), np.zeros(0)
    check_non_overlapping(spectrum)
    f = np.array([ch.center_frequency for ch in spectrum])
    b = np.array([ch.bandwidth_hz for ch in spectrum])
    p = np.array([ch.power_w for ch in spectrum])
    b2 = abs(link.beta2)
    l_a = link.asymptotic_length
    common = 8.0 / 27.0 * link.gamma ** 2 * link.effective_length ** 2 / (math.pi * b2 * l_a)
    sci = common * p ** 3 * np.arcsinh(0.5 * math.pi ** 2 * b2 * l_a * b ** 2) / b ** 2
    df = np.abs(f[:, None] - f[None, :])
    np.fill_diagonal(df, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (df + b[None, :] / 2) / (df - b[None, :] / 2)
        term = np.where(np.isfinite(df), np.log(ratio) * p[None, :] ** 2 / b[None, :] ** 2, 0.0)
    xci = common * p * term.sum(axis=1)
    sci_scale, xci_scale = _span_scale(link, b, coherent, coherence_bandwidth_hz)
    return sci_scale * sci, xci_scale * xci

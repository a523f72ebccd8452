"""Runtime settings: defaults, INI-style config files and environment overrides.

The config file is plain ``key = value`` text grouped in sections::

    [fiber]
    alpha_db_km = 0.2
    noise_figure_db = 5

Every key can also be overridden with an environment variable named
``QOTPLAN_<SECTION>_<KEY>`` (upper case), e.g. ``QOTPLAN_FIBER_ALPHA_DB_KM``.
Environment overrides are applied after the file.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from qotplan.errors import ConfigError

ENV_PREFIX = "QOTPLAN_"


@dataclass(frozen=True)
class FiberSettings:
    alpha_db_km: float = 0.2
    beta2_ps2_km: float = -21.3
    gamma_w_km: float = 1.3
    noise_figure_db: float = 5.0
    reference_frequency_thz: float = 193.4


@dataclass(frozen=True)
class GridSettings:
    n_slots: int = 400
    slot_width_ghz: float = 12.5
    anchor_thz: float = 191.325
    guard_ghz: float = 0.0


@dataclass(frozen=True)
class TransceiverSettings:
    # AWGN SNR at pre-FEC BER 2e-2 plus 2 dB implementation margin,
    # frozen from phys.transceiver.derive_threshold_table().
    threshold_qpsk_db: float = 8.25
    threshold_16qam_db: float = 14.71
    threshold_32qam_db: float = 17.60
    threshold_64qam_db: float = 20.43
    min_symbol_rate_gbd: float = 35.0
    max_symbol_rate_gbd: float = 69.0
    clip_symbol_rate: bool = False

    def threshold_table(self) -> dict[str, float]:
        return {
            "QPSK": self.threshold_qpsk_db,
            "16QAM": self.threshold_16qam_db,
            "32QAM": self.threshold_32qam_db,
            "64QAM": self.threshold_64qam_db,
        }


@dataclass(frozen=True)
class QuadratureSettings:
    points_per_decade: int = 24
    tolerance_db: float = 0.05
    p_min_ratio: float = 1e-6


@dataclass(frozen=True)
class GbtSettings:
    n_trees: int = 400
    max_depth: int = 6
    learning_rate: float = 0.1
    lambda_l2: float = 1.0
    min_child_weight: float = 1.0
    feature_subsample: float = 0.8
    row_subsample: float = 1.0
    patience: int = 30


@dataclass(frozen=True)
class DatagenSettings:
    n_scenarios: int = 200
    fill_min: float = 0.75
    fill_max: float = 0.95
    spot_check_fraction: float = 0.01


@dataclass(frozen=True)
class PlannerSettings:
    k_paths: int = 3
    target_span_km: float = 80.0
    annual_growth: float = 0.30
    eol_comb_spacing_ghz: float = 50.0
    eol_comb_symbol_rate_gbd: float = 35.0
    repair_rounds: int = 0


@dataclass(frozen=True)
class Settings:
    fiber: FiberSettings = field(default_factory=FiberSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    transceiver: TransceiverSettings = field(default_factory=TransceiverSettings)
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    gbt: GbtSettings = field(default_factory=GbtSettings)
    datagen: DatagenSettings = field(default_factory=DatagenSettings)
    planner: PlannerSettings = field(default_factory=PlannerSettings)

    def as_flat_dict(self) -> dict[str, Any]:
        """Return ``{"section.key": value}`` for every setting, sorted by key."""
        out = {}
        for section in fields(self):
            sub = getattr(self, section.name)
            for f in fields(sub):
                out[f"{section.name}.{f.name}"] = getattr(sub, f.name)
        return dict(sorted(out.items()))


def _coerce(raw: str, target_type: Any, where: str) -> Any:
    text = raw.strip()
    try:
        if target_type in (bool, "bool"):
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if target_type in (int, "int"):
            return int(text)
        if target_type in (float, "float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {target_type}") from None
    return text


def _apply(settings: Settings, overrides: Mapping[tuple[str, str], str], origin: str) -> Settings:
    sections = {f.name: getattr(settings, f.name) for f in fields(settings)}
    for (section, key), raw in overrides.items():
        if section not in sections:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        sub = sections[section]
        known = {f.name: f for f in fields(sub)}
        if key not in known:
            raise ConfigError(f"{origin}: unknown key {key!r} in [{section}]")
        value = _coerce(raw, known[key].type, f"{origin} [{section}] {key}")
        sections[section] = dataclasses.replace(sub, **{key: value})
    return Settings(**sections)


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[tuple[str, str], str]:
    environ = os.environ if environ is None else environ
    section_names = [f.name for f in fields(Settings)]
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        for section in section_names:
            if rest.startswith(section + "_"):
                out[(section, rest[len(section) + 1:])] = value
                break
    return out


def load_settings(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> Settings:
    """Build settings from defaults, an optional config file, then env vars."""
    settings = Settings()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        file_overrides = {
            (section, key): value
            for section in parser.sections()
            for key, value in parser.items(section)
        }
        settings = _apply(settings, file_overrides, str(path))
    return _apply(settings, env_overrides(environ), "environment")


def write_settings(settings: Settings, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    for section in fields(settings):
        sub = getattr(settings, section.name)
        parser[section.name] = {f.name: str(getattr(sub, f.name)) for f in fields(sub)}
    with open(path, "w") as fh:
        parser.write(fh)

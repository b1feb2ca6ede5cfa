"""Run configuration (YAML).

Example::

    inputs:
      links: links.csv
      counties: counties.json
      tracts: tracts.json
      county_covariates: county_covariates.csv
      tract_covariates: tract_covariates.csv
      msc_grid: msc_grid.csv
      msc_grid_header: msc_grid.json
      sr_matrix: sr_matrix.csv
      shipments: shipments.csv
      emission_factors: null        # optional YAML of extra factor sets
    emission_factor_set: greet
    vmt: {diesel_fraction: 0.98, truck_fraction: 0.99, cagr: 0.02,
          base_year: 2012, target_year: 2017, days_per_year: 365}
    vsl: {income_factor_target: 1.174, income_factor_base: 1.010,
          cpi_target: 245, cpi_base: 218, target_dollar_year: 2017}
    scc: {value: 51, dollar_year: 2020}
    modal_shift: {distance_threshold: 300, payload: 20, co2_rounding: exact}
    output_dir: out
    workers: 1

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from freightej.damages import SocialCostOfCarbon, VslAdjustment
from freightej.errors import ConfigError
from freightej.modalshift import (CO2_PER_C_EXACT, CO2_PER_C_ROUNDED, DEFAULT_FRACTIONS,
                                  RailFuelParams)
from freightej.network import VmtParams

INPUT_KEYS = ("links", "counties", "tracts", "county_covariates", "tract_covariates",
              "msc_grid", "msc_grid_header", "sr_matrix", "shipments", "emission_factors")
# execution-only settings; excluded from the config hash
_UNHASHED = ("workers", "output_dir")


@dataclass
class ModalShiftConfig:
    distance_threshold: float = 300.0
    payload: float = 20.0
    fractions: tuple = DEFAULT_FRACTIONS
    rail: RailFuelParams = field(default_factory=RailFuelParams)
    rail_override: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    inputs: dict
    emission_factor_set: str = "greet"
    vmt: VmtParams = field(default_factory=VmtParams)
    vsl: VslAdjustment = field(default_factory=VslAdjustment)
    scc: SocialCostOfCarbon = field(default_factory=SocialCostOfCarbon)
    modal_shift: ModalShiftConfig = field(default_factory=ModalShiftConfig)
    conservation_tolerance: float = 1e-9
    output_dir: Path | None = None
    workers: int = 1
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def path(self, key) -> Path | None:
        return self.inputs.get(key)

    def require(self, *keys) -> None:
        """Fail unless each named input is configured and exists on disk."""
        for key in keys:
            p = self.inputs.get(key)
            if p is None:
                raise ConfigError(f"config has no inputs.{key}")
            if not p.exists():
                raise ConfigError(f"{key.replace('_', ' ')} file not found: {p}")

    def hashable(self) -> dict:
        return {k: v for k, v in self.raw.items() if k not in _UNHASHED}


def _build(cls, data, where):
    data = dict(data or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(raw, base=path.parent)


def config_from_dict(raw: dict, base=".") -> RunConfig:
    base = Path(base)
    known = {"inputs", "emission_factor_set", "vmt", "vsl", "scc", "modal_shift",
             "conservation_tolerance", "output_dir", "workers"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    inputs = {}
    for key, val in (raw.get("inputs") or {}).items():
        if key not in INPUT_KEYS:
            raise ConfigError(f"unknown input {key!r}")
        if val is not None:
            p = Path(val)
            inputs[key] = p if p.is_absolute() else (base / p)

    ms_raw = dict(raw.get("modal_shift") or {})
    rail_raw = dict(ms_raw.pop("rail", None) or {})
    rounding = ms_raw.pop("co2_rounding", "exact")
    if rounding not in ("exact", "published"):
        raise ConfigError("modal_shift.co2_rounding must be 'exact' or 'published'")
    rail_raw.setdefault("co2_per_c", CO2_PER_C_EXACT if rounding == "exact" else CO2_PER_C_ROUNDED)
    if "fractions" in ms_raw:
        ms_raw["fractions"] = tuple(float(f) for f in ms_raw["fractions"])
    ms = _build(ModalShiftConfig, {**ms_raw, "rail": _build(RailFuelParams, rail_raw,
                                                             "modal_shift.rail")}, "modal_shift")

    out = raw.get("output_dir")
    out = None if out is None else (Path(out) if Path(out).is_absolute() else base / out)
    return RunConfig(
        inputs=inputs,
        emission_factor_set=str(raw.get("emission_factor_set", "greet")),
        vmt=_build(VmtParams, raw.get("vmt"), "vmt"),
        vsl=_build(VslAdjustment, raw.get("vsl"), "vsl"),
        scc=_build(SocialCostOfCarbon, raw.get("scc"), "scc"),
        modal_shift=ms,
        conservation_tolerance=float(raw.get("conservation_tolerance", 1e-9)),
        output_dir=out,
        workers=int(raw.get("workers", 1)),
        raw=raw,
    )

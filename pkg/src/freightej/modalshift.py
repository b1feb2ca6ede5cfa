"""Truck-to-rail modal shift scenarios.

Shipment ton-miles are weight-expanded survey records. Rail emission
factors are derived per gallon from fuel chemistry and converted to
g/ton-mile with the class-1 fuel efficiency. Trucks are compared per
ton-mile as the combination-truck g/mile factor over the payload.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from freightej.errors import ConfigError, DataError
from freightej.inventory import POLLUTANTS, EmissionFactorSet, canonical_pollutant

LB_PER_TON = 2000.0
CO2_PER_C_EXACT = 44.0 / 12.0
CO2_PER_C_ROUNDED = 3.67  # the rounding used in the published rail CO2 factor
DEFAULT_FRACTIONS = tuple(k / 20 for k in range(11))  # 0, 0.05, ..., 0.50


@dataclass(frozen=True)
class ShipmentRecord:
    shipment_id: str
    weight: float  # pounds
    routed_distance: float  # miles
    weighting_factor: float

    def __post_init__(self):
        for name in ("weight", "routed_distance", "weighting_factor"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise DataError(f"shipment {self.shipment_id}: {name} must be finite and >= 0")

    def eligible(self, threshold: float) -> bool:
        return self.routed_distance > threshold


def load_shipments(path) -> list:
    """Shipments CSV: id, weight_lb, distance_mi, weighting_factor."""
    out = []
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataError(f"shipments file not found: {path}") from None
    with fh:
        for lineno, rec in enumerate(csv.DictReader(fh), start=2):
            try:
                out.append(ShipmentRecord(str(rec["id"]).strip(), float(rec["weight_lb"]),
                                          float(rec["distance_mi"]),
                                          float(rec["weighting_factor"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad shipment record ({exc})") from None
    return out


def shipment_tonmiles(rec: ShipmentRecord) -> float:
    return rec.weighting_factor * (rec.weight / LB_PER_TON) * rec.routed_distance


def total_tonmiles(shipments, threshold: float | None = None) -> float:
    """Sum of ton-miles, optionally only over shipments longer than ``threshold``."""
    return math.fsum(shipment_tonmiles(s) for s in shipments
                     if threshold is None or s.eligible(threshold))


@dataclass(frozen=True)
class RailFuelParams:
    fuel_density: float = 3200.0  # g/gal
    sulfur_fraction: float = 15e-6  # 15 ppm by mass
    s_to_so2_fraction: float = 0.978
    carbon_mass_fraction: float = 0.87
    so2_per_s: float = 2.0  # 64 g SO2 / 32 g S
    co2_per_c: float = CO2_PER_C_EXACT
    fuel_efficiency: float = 472.0  # ton-miles/gal
    pm10_per_gal: float = 3.944
    pm25_of_pm10: float = 0.97
    nox_per_gal: float = 134.770

    def __post_init__(self):
        for name in ("fuel_density", "sulfur_fraction", "s_to_so2_fraction",
                     "carbon_mass_fraction", "so2_per_s", "co2_per_c", "fuel_efficiency",
                     "pm10_per_gal", "pm25_of_pm10", "nox_per_gal"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"rail parameter {name} must be finite and >= 0")
        for name in ("s_to_so2_fraction", "carbon_mass_fraction", "pm25_of_pm10",
                     "sulfur_fraction"):
            if getattr(self, name) > 1:
                raise ConfigError(f"rail parameter {name} is a fraction and must be <= 1")
        if not self.fuel_efficiency > 0:
            raise ConfigError("fuel_efficiency must be positive")


def rail_ef_so2(params: RailFuelParams) -> float:
    """g SO2 per gallon."""
    return params.fuel_density * params.s_to_so2_fraction * params.so2_per_s * params.sulfur_fraction


def rail_ef_co2(params: RailFuelParams) -> float:
    """g CO2 per gallon."""
    return params.fuel_density * params.co2_per_c * params.carbon_mass_fraction


def rail_ef_pm25(params: RailFuelParams) -> float:
    """g PM2.5 per gallon."""
    return params.pm10_per_gal * params.pm25_of_pm10


def rail_ef_per_gallon(params: RailFuelParams) -> dict:
    return {"PM2.5": rail_ef_pm25(params), "SO2": rail_ef_so2(params),
            "NOx": params.nox_per_gal, "CO2": rail_ef_co2(params)}


def rail_ef_per_tonmile(params: RailFuelParams, override: dict | None = None) -> dict:
    """g per ton-mile by pollutant; ``override`` entries replace derived values."""
    out = {p: v / params.fuel_efficiency for p, v in rail_ef_per_gallon(params).items()}
    for p, v in (override or {}).items():
        out[canonical_pollutant(p)] = float(v)
    return out


@dataclass(frozen=True)
class ShiftScenario:
    fraction_shifted: float = 0.0
    distance_threshold: float = 300.0
    payload: float = 20.0  # tons per truck

    def __post_init__(self):
        if not 0.0 <= self.fraction_shifted <= 1.0:
            raise ConfigError("fraction_shifted must lie in [0, 1]")
        if not self.payload > 0:
            raise ConfigError("payload must be positive")


@dataclass
class ShiftResult:
    fraction: float
    eligible_tonmiles: float
    delta_grams: dict
    baseline_grams: dict
    pct_change: dict = field(default_factory=dict)


def truck_ef_per_tonmile(truck_efs: EmissionFactorSet, payload: float) -> dict:
    if not payload > 0:
        raise ConfigError("payload must be positive")
    return {p: truck_efs.get("combination", p) / payload for p in POLLUTANTS}


def shift_scenario(shipments, scenario: ShiftScenario, truck_efs: EmissionFactorSet,
                   rail_efs: dict, baseline_grams: dict | None = None) -> ShiftResult:
    """Emission change from moving a fraction of long-distance ton-miles to rail.

    change(p) = f * (TM * rail(p) - TM / payload * truck(p)), TM = eligible
    ton-miles. Percent change is relative to ``baseline_grams``; by default
    all shipment ton-miles hauled by truck.
    """
    if not scenario.payload > 0:
        raise ConfigError("payload must be positive")
    tm = total_tonmiles(shipments, scenario.distance_threshold)
    truck_vmt = tm / scenario.payload
    if baseline_grams is None:
        all_vmt = total_tonmiles(shipments) / scenario.payload
        baseline_grams = {p: all_vmt * truck_efs.get("combination", p) for p in POLLUTANTS}
    f = scenario.fraction_shifted
    delta, pct = {}, {}
    for p in POLLUTANTS:
        per_unit = tm * rail_efs[p] - truck_vmt * truck_efs.get("combination", p)
        delta[p] = f * per_unit
        base = baseline_grams.get(p, 0.0)
        pct[p] = 100.0 * f * (per_unit / base) if base > 0 else math.nan
    return ShiftResult(f, tm, delta, dict(baseline_grams), pct)


def sweep(shipments, truck_efs, rail_efs, fractions=DEFAULT_FRACTIONS,
          distance_threshold=300.0, payload=20.0, baseline_grams=None) -> list:
    """(fraction, pollutant, pct_change) rows for each fraction."""
    rows = []
    for f in fractions:
        res = shift_scenario(shipments, ShiftScenario(f, distance_threshold, payload),
                             truck_efs, rail_efs, baseline_grams)
        for p in POLLUTANTS:
            rows.append((f, p, res.pct_change[p]))
    return rows


def sweep_array(rows) -> np.ndarray:
    """pct_change as a (n_fractions, n_pollutants) array, pollutants in POLLUTANTS order."""
    return np.array([r[2] for r in rows]).reshape(-1, len(POLLUTANTS))

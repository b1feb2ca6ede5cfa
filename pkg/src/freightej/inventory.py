"""Link emissions, zone aggregation and emission-factor sets.

Tons are metric tons throughout (grams / 1e6). PM2.5 factors already
include tire and brake wear.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from freightej.errors import ConfigError, DataError

POLLUTANTS = ("PM2.5", "SO2", "NOx", "CO2")
CRITERIA_POLLUTANTS = ("PM2.5", "SO2", "NOx")
VEHICLE_CLASSES = ("combination", "single_unit")
GRAMS_PER_TON = 1.0e6
MASS_UNIT = "t_metric"

_POLLUTANT_ALIASES = {
    "pm2.5": "PM2.5", "pm25": "PM2.5", "pm2_5": "PM2.5",
    "so2": "SO2", "nox": "NOx", "co2": "CO2",
}


def canonical_pollutant(name: str) -> str:
    try:
        return _POLLUTANT_ALIASES[str(name).strip().lower()]
    except KeyError:
        raise DataError(f"unknown pollutant {name!r}") from None


@dataclass(frozen=True)
class EmissionFactorSet:
    """Grams per vehicle-mile keyed by (vehicle_class, pollutant)."""

    name: str
    factors: dict

    def __post_init__(self):
        clean = {}
        for (cls, pol), v in self.factors.items():
            pol = canonical_pollutant(pol)
            if cls not in VEHICLE_CLASSES:
                raise ConfigError(f"factor set {self.name}: unknown vehicle class {cls!r}")
            v = float(v)
            if not (v >= 0 and math.isfinite(v)):
                raise ConfigError(f"factor set {self.name}: {cls}/{pol} must be >= 0")
            clean[(cls, pol)] = v
        object.__setattr__(self, "factors", clean)

    def missing(self) -> list:
        return [(c, p) for c in VEHICLE_CLASSES for p in POLLUTANTS if (c, p) not in self.factors]

    def validate(self) -> "EmissionFactorSet":
        miss = self.missing()
        if miss:
            raise ConfigError(f"factor set {self.name} is missing {miss}")
        return self

    def get(self, vehicle_class: str, pollutant: str) -> float:
        try:
            return self.factors[(vehicle_class, pollutant)]
        except KeyError:
            raise ConfigError(
                f"factor set {self.name} has no {vehicle_class}/{pollutant} entry") from None


# Lifetime-mileage weighted diesel truck factors, g/mile (GREET).
GREET = EmissionFactorSet("greet", {
    ("combination", "PM2.5"): 0.086, ("single_unit", "PM2.5"): 0.0467,
    ("combination", "SO2"): 0.0149, ("single_unit", "SO2"): 0.0070,
    ("combination", "NOx"): 4.585, ("single_unit", "NOx"): 0.9383,
    ("combination", "CO2"): 1588.0, ("single_unit", "CO2"): 1414.0,
})

# Long-haul sensitivity set. Only national long-haul totals are published
# for it (PM2.5 5.5K, SO2 80, NOx 108K, CO2 32M t against 17K, 3K, 920K,
# 31M t with GREET), so each GREET factor is scaled by that ratio; the
# single-unit column is scaled the same way.
_TONG_RATIO = {"PM2.5": 5.5e3 / 17e3, "SO2": 80.0 / 3e3, "NOx": 108e3 / 920e3, "CO2": 32e6 / 31e6}
TONG_DERIVED = EmissionFactorSet("tong_derived", {
    (c, p): GREET.factors[(c, p)] * _TONG_RATIO[p] for c in VEHICLE_CLASSES for p in POLLUTANTS
})

BUILTIN_FACTOR_SETS = {fs.name: fs for fs in (GREET, TONG_DERIVED)}


def load_factor_sets(path) -> dict:
    """Read factor sets from YAML/JSON keyed by set name.

    Layout::

        greet:
          combination: {PM2.5: 0.086, SO2: 0.0149, NOx: 4.585, CO2: 1588}
          single_unit: {PM2.5: 0.0467, SO2: 0.0070, NOx: 0.9383, CO2: 1414}
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"emission factor file not found: {path}") from None
    doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping of factor-set name to factors")
    out = {}
    for name, table in doc.items():
        factors = {}
        for cls, row in (table or {}).items():
            for pol, v in (row or {}).items():
                factors[(cls, pol)] = v
        out[str(name)] = EmissionFactorSet(str(name), factors).validate()
    return out


def link_emissions(vmt_long, vmt_nonlong, efs: EmissionFactorSet) -> dict:
    """Grams per year by pollutant; scalar or array VMT inputs."""
    out = {}
    for p in POLLUTANTS:
        out[p] = (np.multiply(vmt_long, efs.get("combination", p))
                  + np.multiply(vmt_nonlong, efs.get("single_unit", p)))
    return out


# --- centroid assignment ---------------------------------------------------


def _zone_hits(zone, x, y):
    return zone.locate(x, y)


def assign_links_to_zones(x, y, zones, workers: int = 1) -> np.ndarray:
    """Zone id for each centroid (object array; None when unassigned).

    A point on a shared boundary lies in several zones; the lexicographically
    smallest id wins. Result is independent of ``workers``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ordered = sorted(zones, key=lambda z: z.zone_id)
    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(lambda z: _zone_hits(z, x, y), ordered))
    else:
        hits = [_zone_hits(z, x, y) for z in ordered]
    out = np.full(x.shape[0], None, dtype=object)
    free = np.ones(x.shape[0], dtype=bool)
    for zone, hit in zip(ordered, hits):
        take = hit & free
        out[take] = zone.zone_id
        free &= ~take
    return out


# --- ledger ----------------------------------------------------------------


@dataclass(frozen=True)
class EmissionsLedger:
    entries: dict  # (zone_id, pollutant) -> metric tons / year
    zone_kind: str
    factor_set_name: str
    zone_ids: tuple = ()
    unassigned: int = 0
    unassigned_tons: dict = field(default_factory=dict)

    def tons(self, zone_id, pollutant) -> float:
        return self.entries.get((zone_id, pollutant), 0.0)

    def total(self, pollutant) -> float:
        return math.fsum(self.tons(z, pollutant) for z in self.zone_ids)

    def rows(self):
        """(zone_id, pollutant, tons, unit) in zone-then-pollutant order."""
        return [(z, p, self.tons(z, p), MASS_UNIT) for z in self.zone_ids for p in POLLUTANTS]

    def check_zones(self, registry) -> None:
        unknown = sorted(set(self.zone_ids) - set(registry))
        if unknown:
            raise DataError(f"ledger references unknown zones: {unknown[:5]}")


def aggregate_zone_emissions(link_ids, vmt_long, vmt_nonlong, assignment, efs,
                             zone_ids, zone_kind="county") -> EmissionsLedger:
    """Sum link emissions into zones.

    Links with no zone (``None`` in ``assignment``) are excluded and
    counted. Sums use ``math.fsum`` over links sorted by id, so the ledger is
    bitwise independent of input order.
    """
    link_ids = np.asarray(link_ids, dtype=object)
    assignment = np.asarray(assignment, dtype=object)
    grams = link_emissions(np.asarray(vmt_long, float), np.asarray(vmt_nonlong, float), efs)
    zone_ids = tuple(sorted(set(zone_ids)))
    known = set(zone_ids)

    order = sorted(range(len(link_ids)), key=lambda i: str(link_ids[i]))
    members = {z: [] for z in zone_ids}
    unassigned = []
    for i in order:
        z = assignment[i]
        if z is None:
            unassigned.append(i)
        elif z in known:
            members[z].append(i)
        else:
            raise DataError(f"link {link_ids[i]} assigned to unknown zone {z!r}")

    entries = {}
    for z in zone_ids:
        idx = members[z]
        for p in POLLUTANTS:
            entries[(z, p)] = math.fsum(grams[p][idx]) / GRAMS_PER_TON
    lost = {p: math.fsum(grams[p][unassigned]) / GRAMS_PER_TON for p in POLLUTANTS}
    return EmissionsLedger(entries, zone_kind, efs.name, zone_ids, len(unassigned), lost)


# --- NEI comparison --------------------------------------------------------

NEI_DIESEL_CATEGORIES = (
    "passenger truck", "light commercial truck", "single unit short-haul truck",
    "single unit long-haul truck", "refuse truck", "combination short-haul truck",
    "combination long-haul truck", "truck", "tank cars and trucks",
    "automobiles/truck assembly operations", "automobiles and light trucks",
    "tank truck cleaning", "intercity bus", "transit bus", "school bus", "motor home",
)
NEI_FREIGHT_TRUCKS = frozenset({
    "single unit short-haul truck", "single unit long-haul truck",
    "combination short-haul truck", "combination long-haul truck",
})


@dataclass
class NeiFilterResult:
    kept: list
    dropped: int
    unknown: int


def _norm_label(s) -> str:
    return " ".join(str(s).replace("_", " ").lower().split())


def nei_truck_filter(records, label_key="scc_level_three") -> NeiFilterResult:
    """Keep only the four heavy-duty freight truck categories."""
    kept, dropped, unknown = [], 0, 0
    known = {_norm_label(c) for c in NEI_DIESEL_CATEGORIES}
    for rec in records:
        label = _norm_label(rec.get(label_key, ""))
        if label in NEI_FREIGHT_TRUCKS:
            kept.append(rec)
            continue
        dropped += 1
        if label not in known:
            unknown += 1
    return NeiFilterResult(kept, dropped, unknown)

"""Monetized damages from zone emissions.

Grid marginal social costs ($/ton, ground-level, annual) are adjusted to
the analysis year by a VSL factor, apportioned to zones by overlay area
weights, and multiplied by zone emissions. CO2 is valued at a single
social cost of carbon regardless of location.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from freightej.errors import ConfigError, DataError
from freightej.geometry import GridSpec, Point, overlay_weights
from freightej.inventory import CRITERIA_POLLUTANTS, canonical_pollutant


@dataclass(frozen=True, eq=False)
class MSCGrid:
    grid: GridSpec
    values: dict  # pollutant -> (n_rows, n_cols) array of $/ton
    dollar_year: int = 2010
    base_vsl: float = 8.6e6
    population_year: int = 2017
    elevation: str = "ground"

    def __post_init__(self):
        if self.elevation != "ground":
            raise ConfigError("only ground-level MSC grids are supported")
        shape = (self.grid.n_rows, self.grid.n_cols)
        vals = {}
        for pol, arr in self.values.items():
            pol = canonical_pollutant(pol)
            if pol not in CRITERIA_POLLUTANTS:
                raise DataError(f"MSC grid cannot carry {pol}")
            arr = np.array(arr, dtype=float)
            if arr.shape != shape:
                raise DataError(f"MSC grid {pol}: shape {arr.shape} != {shape}")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise DataError(f"MSC grid {pol}: values must be finite and >= 0")
            arr.setflags(write=False)
            vals[pol] = arr
        object.__setattr__(self, "values", vals)

    def value(self, pollutant, col, row) -> float:
        return float(self.values[pollutant][row, col])


def load_msc_grid(values_path, header_path) -> MSCGrid:
    """Read an MSC grid from its CSV (pollutant,col,row,usd_per_ton) and JSON header."""
    try:
        head = json.loads(Path(header_path).read_text())
    except FileNotFoundError:
        raise DataError(f"MSC grid header not found: {header_path}") from None
    grid = GridSpec(Point(*head.get("origin", (0.0, 0.0))), float(head.get("cell_size", 36_000.0)),
                    int(head.get("n_cols", 148)), int(head.get("n_rows", 112)))
    values = {}
    try:
        fh = open(values_path, newline="")
    except FileNotFoundError:
        raise DataError(f"MSC grid file not found: {values_path}") from None
    with fh:
        for lineno, rec in enumerate(csv.DictReader(fh), start=2):
            try:
                pol = canonical_pollutant(rec["pollutant"])
                col, row = int(rec["col"]), int(rec["row"])
                v = float(rec["usd_per_ton"])
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{values_path}:{lineno}: bad MSC record ({exc})") from None
            if not (0 <= col < grid.n_cols and 0 <= row < grid.n_rows):
                raise DataError(f"{values_path}:{lineno}: cell ({col}, {row}) outside grid")
            arr = values.setdefault(pol, np.full((grid.n_rows, grid.n_cols), np.nan))
            arr[row, col] = v
    for pol, arr in values.items():
        if np.isnan(arr).any():
            raise DataError(f"MSC grid {pol}: {int(np.isnan(arr).sum())} cells missing")
    return MSCGrid(grid, values, int(head.get("dollar_year", 2010)),
                   float(head.get("base_vsl", 8.6e6)), int(head.get("population_year", 2017)),
                   head.get("elevation", "ground"))


@dataclass(frozen=True)
class VslAdjustment:
    income_factor_target: float = 1.174
    income_factor_base: float = 1.010
    cpi_target: float = 245.0
    cpi_base: float = 218.0
    target_dollar_year: int = 2017

    def __post_init__(self):
        for name in ("income_factor_target", "income_factor_base", "cpi_target", "cpi_base"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"VSL adjustment {name} must be positive")


@dataclass(frozen=True)
class SocialCostOfCarbon:
    value: float = 51.0
    dollar_year: int = 2020

    def __post_init__(self):
        if not self.value >= 0:
            raise ConfigError("social cost of carbon must be >= 0")


def vsl_factor(adj: VslAdjustment) -> float:
    """Income-growth ratio times CPI ratio."""
    return (adj.income_factor_target / adj.income_factor_base) * (adj.cpi_target / adj.cpi_base)


def adjusted_vsl(base_vsl: float, adj: VslAdjustment) -> float:
    return base_vsl * vsl_factor(adj)


def scale_msc(grid: MSCGrid, factor: float, dollar_year: int | None = None) -> MSCGrid:
    if not factor > 0:
        raise ConfigError("MSC scale factor must be positive")
    return replace(grid, values={p: v * factor for p, v in grid.values.items()},
                   dollar_year=grid.dollar_year if dollar_year is None else dollar_year)


def zone_msc(zone, grid: MSCGrid) -> dict:
    """Area-weighted average $/ton per pollutant over the cells a zone covers.

    Weights are renormalized over the covered cells, so a zone partly
    outside the grid takes the average of the cells it does touch.
    """
    w = overlay_weights(zone, grid.grid)
    keys = list(w)
    wts = np.array([w[k] for k in keys])
    cols = np.array([k[0] for k in keys])
    rows = np.array([k[1] for k in keys])
    wsum = math.fsum(wts)
    return {p: math.fsum(wts * grid.values[p][rows, cols]) / wsum for p in sorted(grid.values)}


def zone_mscs(zones, grid: MSCGrid, workers: int = 1) -> dict:
    """zone_id -> {pollutant: $/ton} for every zone, in sorted-id order."""
    ordered = sorted(zones, key=lambda z: z.zone_id)

    def one(z):
        return zone_msc(z.parts, grid)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(one, ordered))
    else:
        vals = [one(z) for z in ordered]
    return {z.zone_id: v for z, v in zip(ordered, vals)}


@dataclass(frozen=True)
class DamageTable:
    by_zone: dict  # (zone_id, pollutant) -> $/yr
    national: dict  # pollutant -> $/yr
    dollar_year: int
    zone_ids: tuple

    def rows(self):
        pols = sorted({p for _, p in self.by_zone})
        return [(z, p, self.by_zone[(z, p)]) for z in self.zone_ids for p in pols
                if (z, p) in self.by_zone]


def zone_damages(ledger, mscs: dict, pollutants=CRITERIA_POLLUTANTS,
                 dollar_year: int = 2017) -> DamageTable:
    """Per-zone damage = zone MSC x zone tons; national total per pollutant."""
    by_zone = {}
    for z in ledger.zone_ids:
        for p in pollutants:
            tons = ledger.tons(z, p)
            m = mscs.get(z, {}).get(p)
            if m is None:
                if tons != 0.0:
                    raise DataError(f"no MSC for zone {z} ({p}) with nonzero emissions")
                m = 0.0
            by_zone[(z, p)] = m * tons
    national = {p: math.fsum(by_zone[(z, p)] for z in ledger.zone_ids) for p in pollutants}
    return DamageTable(by_zone, national, dollar_year, tuple(ledger.zone_ids))


def co2_damages(ledger, scc: SocialCostOfCarbon) -> dict:
    """zone_id -> $/yr of CO2 damage at the social cost of carbon."""
    return {z: ledger.tons(z, "CO2") * scc.value for z in ledger.zone_ids}

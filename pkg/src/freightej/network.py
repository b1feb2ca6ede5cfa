"""Road-link ingestion and annual truck VMT.

Per link::

    daily trucks  = ADTT * diesel_fraction * truck_fraction
    annual VMT    = daily trucks * road_length * days_per_year * growth_factor
    growth_factor = (1 + cagr) ** (target_year - base_year)

Long-haul counts are carried as combination-truck VMT and non-long-haul
counts as single-unit VMT; the two channels are scaled identically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from freightej.errors import ConfigError, DataError
from freightej.geometry import Point

ROUTE_TYPES = (
    "interstate",
    "freeway_expressway",
    "other_principal_arterial",
    "minor_arterial",
    "major_collector",
    "minor_collector",
)
# FAF4 codes route type 1-6 in the order above
_ROUTE_CODES = {str(i + 1): name for i, name in enumerate(ROUTE_TYPES)}

LINK_FIELDS = ("link_id", "mp_start", "mp_end", "adtt_long", "adtt_nonlong",
               "route_type", "centroid_x", "centroid_y", "county_id")
REJECT_PARSE = "parse"
REJECT_LENGTH = "negative-or-zero length"
REJECT_ADTT = "negative adtt"


@dataclass(frozen=True)
class RoadLink:
    link_id: str
    milepost_start: float
    milepost_end: float
    adtt_longhaul: float
    adtt_nonlonghaul: float
    route_type: str
    centroid: Point
    county_id: str | None = None

    @property
    def road_length(self) -> float:
        return self.milepost_end - self.milepost_start


@dataclass(frozen=True)
class VmtParams:
    diesel_fraction: float = 0.98
    # applied multiplicatively; identical to removing 1% of the counts
    truck_fraction: float = 0.99
    cagr: float = 0.02
    base_year: int = 2012
    target_year: int = 2017
    days_per_year: float = 365.0

    def __post_init__(self):
        for name in ("diesel_fraction", "truck_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.target_year < self.base_year:
            raise ConfigError("target_year must not precede base_year")
        if self.days_per_year <= 0:
            raise ConfigError("days_per_year must be positive")


@dataclass
class LoadResult:
    accepted: list
    rejected: list  # (raw record, reason)
    rejected_rows: list  # 1-based input record number of each rejection

    @property
    def n_input(self) -> int:
        return len(self.accepted) + len(self.rejected)


def _parse_route(value: str) -> str:
    v = value.strip().lower().replace(" ", "_").replace("/", "_")
    if v in _ROUTE_CODES:
        return _ROUTE_CODES[v]
    if v in ROUTE_TYPES:
        return v
    raise ValueError(f"unknown route_type {value!r}")


def _parse_float(rec, key) -> float:
    raw = rec.get(key)
    if raw is None or str(raw).strip() == "":
        raise ValueError(f"missing {key}")
    v = float(raw)
    if not math.isfinite(v):
        raise ValueError(f"non-finite {key}")
    return v


def parse_link(rec: dict) -> RoadLink:
    """Build a RoadLink from one raw record; raises ValueError on malformed input."""
    link_id = str(rec.get("link_id") or "").strip()
    if not link_id:
        raise ValueError("missing link_id")
    county = rec.get("county_id")
    county = str(county).strip() if county is not None and str(county).strip() else None
    return RoadLink(
        link_id=link_id,
        milepost_start=_parse_float(rec, "mp_start"),
        milepost_end=_parse_float(rec, "mp_end"),
        adtt_longhaul=_parse_float(rec, "adtt_long"),
        adtt_nonlonghaul=_parse_float(rec, "adtt_nonlong"),
        route_type=_parse_route(str(rec.get("route_type") or "")),
        centroid=Point(_parse_float(rec, "centroid_x"), _parse_float(rec, "centroid_y")),
        county_id=county,
    )


def load_links(source) -> LoadResult:
    """Parse and validate link records.

    ``source`` is a path to a CSV with the documented header or an iterable
    of dict records. Rejected records keep their input order and carry a
    reason: ``parse``, ``negative-or-zero length`` or ``negative adtt``.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            with path.open(newline="") as fh:
                records = list(csv.DictReader(fh))
        except FileNotFoundError:
            raise DataError(f"links file not found: {path}") from None
        except OSError as exc:
            raise DataError(f"cannot read links file {path}: {exc}") from None
    else:
        records = list(source)

    accepted, rejected, rows = [], [], []
    for i, rec in enumerate(records, start=1):
        try:
            link = parse_link(rec)
        except (ValueError, TypeError):
            reason = REJECT_PARSE
        else:
            if not link.road_length > 0:
                reason = REJECT_LENGTH
            elif link.adtt_longhaul < 0 or link.adtt_nonlonghaul < 0:
                reason = REJECT_ADTT
            else:
                accepted.append(link)
                continue
        rejected.append((rec, reason))
        rows.append(i)
    return LoadResult(accepted, rejected, rows)


def rejection_rows(result: LoadResult) -> list:
    """Rows for the sidecar rejection report: (record number, link_id, reason)."""
    return [[row, str(rec.get("link_id") or ""), reason]
            for row, (rec, reason) in zip(result.rejected_rows, result.rejected)]


class DailyCounts(NamedTuple):
    longhaul: float
    nonlonghaul: float

    @property
    def total(self) -> float:
        return self.longhaul + self.nonlonghaul


def daily_mhdv(link: RoadLink, params: VmtParams) -> DailyCounts:
    scale = params.diesel_fraction * params.truck_fraction
    return DailyCounts(link.adtt_longhaul * scale, link.adtt_nonlonghaul * scale)


def growth_factor(params: VmtParams) -> float:
    return (1.0 + params.cagr) ** (params.target_year - params.base_year)


def annual_vmt(link: RoadLink, params: VmtParams, gf: float | None = None):
    """(long-haul, non-long-haul) vehicle miles per year for one link."""
    if gf is None:
        gf = growth_factor(params)
    daily = daily_mhdv(link, params)
    per_vehicle = link.road_length * params.days_per_year * gf
    return daily.longhaul * per_vehicle, daily.nonlonghaul * per_vehicle


@dataclass(frozen=True)
class LinkTable:
    """Column view of accepted links with their VMT channels."""

    link_id: np.ndarray
    route_type: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vmt_long: np.ndarray
    vmt_nonlong: np.ndarray
    county_id: np.ndarray

    def __len__(self):
        return self.link_id.shape[0]


def link_table(links: Iterable[RoadLink], params: VmtParams) -> LinkTable:
    links = list(links)
    gf = growth_factor(params)
    vmt = np.array([annual_vmt(lk, params, gf) for lk in links], dtype=float).reshape(-1, 2)
    return LinkTable(
        link_id=np.array([lk.link_id for lk in links], dtype=object),
        route_type=np.array([lk.route_type for lk in links], dtype=object),
        x=np.array([lk.centroid.x for lk in links], dtype=float),
        y=np.array([lk.centroid.y for lk in links], dtype=float),
        vmt_long=vmt[:, 0].copy(),
        vmt_nonlong=vmt[:, 1].copy(),
        county_id=np.array([lk.county_id for lk in links], dtype=object),
    )


def vmt_share_by_route_type(table: LinkTable) -> dict:
    """Percent of combination and single-unit VMT on each route type."""
    tot_c = math.fsum(table.vmt_long)
    tot_s = math.fsum(table.vmt_nonlong)
    out = {}
    for rt in ROUTE_TYPES:
        m = table.route_type == rt
        c = math.fsum(table.vmt_long[m])
        s = math.fsum(table.vmt_nonlong[m])
        out[rt] = (100.0 * c / tot_c if tot_c else 0.0,
                   100.0 * s / tot_s if tot_s else 0.0)
    return out

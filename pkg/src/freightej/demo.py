"""Deterministic demo fixture: five counties, twenty tracts, twenty link records.

Layout, in metres on a 6 x 4 grid of 36 km cells:

* counties C1..C5 are jittered quads that tile a strip exactly; C3 has a
  lake (hole) and C5 owns a small island part east of the strip;
* each county splits 2 x 2 into tracts through shared edge midpoints;
* links: 18 valid (one centroid in the lake, so unassigned, one on the
  C1/C2 boundary, one on the island), one with a negative length and
  one malformed record.

Everything is drawn from a fixed seed, so the files are byte-stable.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import yaml

from freightej._io import write_csv
from freightej.geometry import Polygon, Zone, dump_zones
from freightej.network import LINK_FIELDS, ROUTE_TYPES as ROUTES

SEED = 20170101
CELL = 36_000.0
N_COLS, N_ROWS = 6, 4
Y0, Y1 = 8_000.0, 136_000.0
BOTTOM_X = (6_000.0, 44_000.0, 79_000.0, 121_000.0, 158_000.0, 196_000.0)
TOP_X = (10_000.0, 38_000.0, 84_000.0, 116_000.0, 163_000.0, 192_000.0)
ISLAND = ((200_000.0, 20_000.0), (212_000.0, 20_000.0), (212_000.0, 30_000.0),
          (200_000.0, 30_000.0))
LAKE_UV = (0.2, 0.35)  # lake spans this (u, v) square of C3


def county_corners(i):
    """(bottom-left, bottom-right, top-right, top-left) of county i (0-based)."""
    return (np.array([BOTTOM_X[i], Y0]), np.array([BOTTOM_X[i + 1], Y0]),
            np.array([TOP_X[i + 1], Y1]), np.array([TOP_X[i], Y1]))


def bilinear(corners, u, v):
    a, b, c, d = corners
    return (1 - u) * (1 - v) * a + u * (1 - v) * b + u * v * c + (1 - u) * v * d


def _quad(*pts):
    return [[float(p[0]), float(p[1])] for p in pts]


def lake_ring():
    lo, hi = LAKE_UV
    cs = county_corners(2)
    return _quad(*(bilinear(cs, u, v) for u, v in ((lo, lo), (hi, lo), (hi, hi), (lo, hi))))


def build_zones():
    counties, tracts = [], []
    for i in range(5):
        cid = f"C{i + 1}"
        cs = county_corners(i)
        a, b, c, d = cs
        rings = [_quad(a, b, c, d)]
        if cid == "C3":
            rings.append(lake_ring())
        parts = [Polygon(tuple(rings))]
        if cid == "C5":
            parts.append(Polygon((list(map(list, ISLAND)),)))
        counties.append(Zone(cid, tuple(parts)))

        mab, mbc, mcd, mda = (a + b) / 2, (b + c) / 2, (c + d) / 2, (d + a) / 2
        ctr = (a + b + c + d) / 4
        quads = [(a, mab, ctr, mda), (mab, b, mbc, ctr), (ctr, mbc, c, mcd), (mda, ctr, mcd, d)]
        for j, q in enumerate(quads):
            rings = [_quad(*q)]
            if cid == "C3" and j == 0:
                rings.append(lake_ring())
            tparts = [Polygon(tuple(rings))]
            if cid == "C5" and j == 1:
                tparts.append(Polygon((list(map(list, ISLAND)),)))
            tracts.append(Zone(f"{cid}-{j + 1}", tuple(tparts), {"county_id": cid}))
    return counties, tracts


# (u, v) inside each tract quadrant, chosen clear of the lake
_TRACT_UV = ((0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75))


def build_links(rng, scale=1):
    rows = []

    def add(lid, county, xy, route=None, mp=None, adtt=None):
        start = float(rng.uniform(0, 100)) if mp is None else mp[0]
        length = float(rng.uniform(0.5, 12.0)) if mp is None else mp[1] - mp[0]
        long_, short = adtt if adtt is not None else (float(rng.uniform(200, 4000)),
                                                      float(rng.uniform(100, 2500)))
        rows.append({
            "link_id": lid, "mp_start": round(start, 3), "mp_end": round(start + length, 3),
            "adtt_long": round(long_, 1), "adtt_nonlong": round(short, 1),
            "route_type": route or ROUTES[int(rng.integers(len(ROUTES)))],
            "centroid_x": round(float(xy[0]), 3), "centroid_y": round(float(xy[1]), 3),
            "county_id": county,
        })

    # 15 interior links, one per tract; C3-1 holds the lake and the island
    # tract C5-2 gets its link on the island instead
    skip = {("C3", 0), ("C5", 1), ("C1", 2), ("C4", 2), ("C2", 3)}
    n = 0
    for i in range(5):
        cid = f"C{i + 1}"
        for j, (u, v) in enumerate(_TRACT_UV):
            if (cid, j) in skip:
                continue
            jitter = rng.uniform(-0.08, 0.08, size=2)
            n += 1
            add(f"L{n:03d}", cid, bilinear(county_corners(i), u + jitter[0], v + jitter[1]))
    # centroid in the lake: a valid link that no zone claims
    lo, hi = LAKE_UV
    add("L016", "C3", bilinear(county_corners(2), (lo + hi) / 2, (lo + hi) / 2))
    # centroid exactly on the shared C1/C2 edge midpoint
    a, b, c, d = county_corners(0)
    add("L017", "C1", (b + c) / 2, route="interstate")
    add("L018", "C5", (206_000.0, 25_000.0), route="minor_collector")
    # invalid records
    add("L019", "C2", bilinear(county_corners(1), 0.5, 0.5), mp=(50.0, 42.0))
    rows.append({**rows[1], "link_id": "L020", "adtt_long": "n/a"})

    for k in range(max(scale, 1) - 1):
        for m in range(18):
            i = int(rng.integers(5))
            u, v = rng.uniform(0.4, 0.95, size=2)
            add(f"X{k:04d}{m:02d}", f"C{i + 1}", bilinear(county_corners(i), u, v))
    return rows


def build_msc(rng):
    base = {"PM2.5": 90_000.0, "SO2": 35_000.0, "NOx": 9_000.0}
    rows = []
    for p, b in base.items():
        for row in range(N_ROWS):
            for col in range(N_COLS):
                # an east-west gradient plus noise, like an urban corridor
                v = b * (0.5 + 0.25 * col + 0.1 * row) * float(rng.uniform(0.8, 1.2))
                rows.append([p, col, row, round(v, 2)])
    header = {"origin": [0.0, 0.0], "cell_size": CELL, "n_cols": N_COLS, "n_rows": N_ROWS,
              "dollar_year": 2010, "base_vsl": 8.6e6, "population_year": 2017,
              "elevation": "ground"}
    return rows, header


def build_sr(rng, county_ids):
    rows = []
    scale = {"PM2.5": 60_000.0, "SO2": 20_000.0, "NOx": 5_000.0}
    for p, s in scale.items():
        for i, src in enumerate(county_ids):
            for j, rec in enumerate(county_ids):
                if i != j and rng.uniform() < 0.3:
                    continue  # sparse off-diagonal
                v = s * (0.6 if i == j else 0.1) * float(rng.uniform(0.3, 1.7))
                rows.append([p, src, rec, round(v, 2)])
    return rows


def covariate_row(rng, zone_id, area_km2, county_id=None):
    props = rng.dirichlet([6, 1.5, 0.3, 0.2, 0.8, 0.5, 1.5])  # first share: everyone else
    row = [zone_id, round(area_km2, 6)]
    # order: black, amerind, haw, asian, hisp, twomore
    row += [round(float(x), 6) for x in (props[1], props[2], props[3], props[4], props[6],
                                         props[5])]
    row += [int(rng.integers(2_000, 90_000)), round(float(rng.uniform(28_000, 95_000)), 2)]
    if county_id is not None:
        row.append(county_id)
    return row


def build_shipments(rng, n):
    rows = []
    for i in range(n):
        dist = float(rng.choice([rng.uniform(10, 300), rng.uniform(300.5, 2500)]))
        rows.append([f"S{i:05d}", round(float(rng.uniform(500, 80_000)), 1), round(dist, 1),
                     round(float(rng.uniform(1, 500)), 3)])
    # pin the threshold semantics: exactly 300 miles is not eligible
    rows[0][2] = 300.0
    return rows


def write_demo(directory, scale: int = 1) -> Path:
    """Write every demo input plus ``config.yaml`` into ``directory``; return the config path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    counties, tracts = build_zones()
    dump_zones(counties, d / "counties.json")
    dump_zones(tracts, d / "tracts.json")

    links = build_links(rng, scale)
    write_csv(d / "links.csv", LINK_FIELDS, [[r[k] for k in LINK_FIELDS] for r in links])

    msc_rows, header = build_msc(rng)
    write_csv(d / "msc_grid.csv", ["pollutant", "col", "row", "usd_per_ton"], msc_rows)
    (d / "msc_grid.json").write_text(json.dumps(header, indent=1, sort_keys=True))

    ids = [z.zone_id for z in counties]
    write_csv(d / "sr_matrix.csv", ["pollutant", "source_id", "receptor_id", "usd_per_ton"],
              build_sr(rng, ids))

    cov_head = ["zone_id", "area", "prop_black", "prop_amerind", "prop_haw", "prop_asian",
                "prop_hisp", "prop_twomore", "total_pop", "med_income"]
    write_csv(d / "county_covariates.csv", cov_head,
              [covariate_row(rng, z.zone_id, z.area / 1e6) for z in counties])
    write_csv(d / "tract_covariates.csv", cov_head + ["county_id"],
              [covariate_row(rng, z.zone_id, z.area / 1e6, z.attrs["county_id"]) for z in tracts])

    write_csv(d / "shipments.csv", ["id", "weight_lb", "distance_mi", "weighting_factor"],
              build_shipments(rng, 100 * max(scale, 1)))

    cfg = {
        "inputs": {"links": "links.csv", "counties": "counties.json", "tracts": "tracts.json",
                   "county_covariates": "county_covariates.csv",
                   "tract_covariates": "tract_covariates.csv",
                   "msc_grid": "msc_grid.csv", "msc_grid_header": "msc_grid.json",
                   "sr_matrix": "sr_matrix.csv", "shipments": "shipments.csv"},
        "emission_factor_set": "greet",
        "vmt": {"diesel_fraction": 0.98, "truck_fraction": 0.99, "cagr": 0.02,
                "base_year": 2012, "target_year": 2017, "days_per_year": 365},
        "vsl": {"income_factor_target": 1.174, "income_factor_base": 1.010,
                "cpi_target": 245.0, "cpi_base": 218.0, "target_dollar_year": 2017},
        "scc": {"value": 51.0, "dollar_year": 2020},
        "modal_shift": {"distance_threshold": 300.0, "payload": 20.0, "co2_rounding": "exact"},
        "output_dir": "out",
        "workers": 1,
    }
    path = d / "config.yaml"
    path.write_text(yaml.safe_dump(cfg, sort_keys=False))
    return path

import csv
import json
import math

import numpy as np
import pytest
import shapely

from freightej.damages import (MSCGrid, SocialCostOfCarbon, VslAdjustment, adjusted_vsl,
                               co2_damages, load_msc_grid, scale_msc, vsl_factor, zone_damages,
                               zone_msc, zone_mscs)
from freightej.errors import ConfigError, DataError, EmptyOverlayError
from freightej.geometry import GridSpec, Point, Polygon, load_zones
from freightej.inventory import CRITERIA_POLLUTANTS, EmissionsLedger

from test_inventory import demo_ledger

G = GridSpec(Point(0, 0), 1.0, 2, 1)


def grid(nox=(100_000.0, 200_000.0)):
    vals = {p: np.array([list(nox)]) for p in CRITERIA_POLLUTANTS}
    return MSCGrid(G, vals)


def box(x0, x1, y0=0.0, y1=1.0):
    return Polygon(([(x0, y0), (x1, y0), (x1, y1), (x0, y1)],))


def ledger(tons: dict, zones=None):
    zones = tuple(sorted(zones or {z for z, _ in tons}))
    return EmissionsLedger(dict(tons), "county", "test", zones)


def test_vsl_factor_examples():
    assert vsl_factor(VslAdjustment(1, 1, 1, 1)) == 1.0
    assert vsl_factor(VslAdjustment(1, 1, 2, 1)) == 2.0
    # printed inputs multiply out to about $11.23M, not the stated $10.3M
    assert adjusted_vsl(8.6e6, VslAdjustment()) == pytest.approx(
        8.6e6 * (1.174 / 1.010) * (245 / 218), rel=1e-15)
    assert adjusted_vsl(8.6e6, VslAdjustment()) == pytest.approx(11_234_526.3, abs=0.1)
    with pytest.raises(ConfigError):
        VslAdjustment(cpi_base=0)


def test_scale_msc():
    g = grid()
    same = scale_msc(g, 1.0)
    assert all(np.array_equal(same.values[p], g.values[p]) for p in g.values)
    f = 10.3 / 8.6
    s = scale_msc(g, f, 2017)
    assert s.dollar_year == 2017
    np.testing.assert_array_equal(s.values["NOx"], g.values["NOx"] * f)
    back = scale_msc(scale_msc(g, 2.0), 0.5)
    np.testing.assert_allclose(back.values["NOx"], g.values["NOx"], rtol=1e-12)


def test_zone_msc_examples():
    assert zone_msc(box(0.2, 0.8, 0.2, 0.8), grid((20_000.0, 1.0)))["NOx"] == 20_000.0
    assert zone_msc(box(0.5, 1.5), grid())["NOx"] == pytest.approx(150_000.0, rel=1e-15)
    assert zone_msc(box(0.4, 1.4), grid())["NOx"] == pytest.approx(140_000.0, rel=1e-12)


def test_zone_msc_outside_grid():
    with pytest.raises(EmptyOverlayError):
        zone_msc(box(5, 6), grid())


def test_zone_msc_convex_bound(rng):
    vals = {p: rng.uniform(1e3, 1e5, (6, 6)) for p in CRITERIA_POLLUTANTS}
    g = MSCGrid(GridSpec(Point(0, 0), 1.0, 6, 6), vals)
    for _ in range(30):
        x0, y0 = rng.uniform(0, 4, 2)
        w, h = rng.uniform(0.1, 2, 2)
        poly = box(x0, x0 + w, y0, y0 + h)
        m = zone_msc(poly, g)
        c0, r0 = int(x0), int(y0)
        c1, r1 = int(math.ceil(x0 + w)), int(math.ceil(y0 + h))
        for p in CRITERIA_POLLUTANTS:
            block = vals[p][r0:r1, c0:c1]
            assert block.min() - 1e-9 <= m[p] <= block.max() + 1e-9


def test_zone_damages_examples():
    led = ledger({("A", "NOx"): 2.0, ("B", "NOx"): 0.0})
    d = zone_damages(led, {"A": {"NOx": 15_000.0}}, ["NOx"])
    assert d.by_zone[("A", "NOx")] == 30_000.0
    assert d.by_zone[("B", "NOx")] == 0.0
    assert d.national["NOx"] == 30_000.0
    with pytest.raises(DataError, match="zone B"):
        zone_damages(ledger({("B", "NOx"): 1.0}), {}, ["NOx"])


def test_damages_scale_exactly_with_grid():
    led = ledger({("A", "NOx"): 3.7, ("B", "NOx"): 1.3})
    m = {"A": {"NOx": 1234.5}, "B": {"NOx": 777.0}}
    d1 = zone_damages(led, m, ["NOx"])
    d2 = zone_damages(led, {z: {"NOx": v["NOx"] * 4} for z, v in m.items()}, ["NOx"])
    assert d2.national["NOx"] == 4 * d1.national["NOx"]


def test_co2_damages():
    led = ledger({("A", "CO2"): 1000.0, ("B", "CO2"): 0.0, ("C", "CO2"): 12.5})
    d = co2_damages(led, SocialCostOfCarbon())
    assert d == {"A": 51_000.0, "B": 0.0, "C": 637.5}
    assert math.fsum(d.values()) == 51 * led.total("CO2")


def test_msc_grid_file(tmp_path):
    head = {"origin": [0, 0], "cell_size": 1.0, "n_cols": 2, "n_rows": 1, "dollar_year": 2010}
    (tmp_path / "h.json").write_text(json.dumps(head))
    rows = ["pollutant,col,row,usd_per_ton", "NOx,0,0,1", "NOx,1,0,2"]
    (tmp_path / "g.csv").write_text("\n".join(rows) + "\n")
    g = load_msc_grid(tmp_path / "g.csv", tmp_path / "h.json")
    assert g.value("NOx", 1, 0) == 2.0
    (tmp_path / "g.csv").write_text("\n".join(rows[:2]) + "\n")
    with pytest.raises(DataError, match="missing"):
        load_msc_grid(tmp_path / "g.csv", tmp_path / "h.json")
    with pytest.raises(DataError):
        MSCGrid(G, {"NOx": np.array([[1.0, -1.0]])})
    with pytest.raises(ConfigError):
        MSCGrid(G, {}, elevation="150m")


def test_demo_damages_match_spreadsheet(demo_dir):
    _, _, _, led = demo_ledger(demo_dir)
    g = load_msc_grid(demo_dir / "msc_grid.csv", demo_dir / "msc_grid.json")
    f = vsl_factor(VslAdjustment())
    mscs = zone_mscs(load_zones(demo_dir / "counties.json"), scale_msc(g, f, 2017), workers=3)
    table = zone_damages(led, mscs)

    # oracle: shapely cell intersections, plain loops
    raw = {}
    with open(demo_dir / "msc_grid.csv") as fh:
        for r in csv.DictReader(fh):
            raw[(r["pollutant"], int(r["col"]), int(r["row"]))] = float(r["usd_per_ton"])
    zones = json.loads((demo_dir / "counties.json").read_text())["zones"]
    for z in zones:
        shape = shapely.MultiPolygon([(p[0], p[1:]) for p in z["polygons"]])
        for p in CRITERIA_POLLUTANTS:
            num = 0.0
            for col in range(6):
                for row in range(4):
                    cell = shapely.box(col * 36e3, row * 36e3, (col + 1) * 36e3, (row + 1) * 36e3)
                    num += shape.intersection(cell).area * raw[(p, col, row)]
            msc = f * num / shape.area
            want = msc * led.tons(z["id"], p)
            assert table.by_zone[(z["id"], p)] == pytest.approx(want, rel=1e-9)

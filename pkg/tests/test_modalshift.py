import csv
import math

import numpy as np
import pytest

from freightej.errors import ConfigError, DataError
from freightej.inventory import GREET, POLLUTANTS
from freightej.modalshift import (CO2_PER_C_ROUNDED, DEFAULT_FRACTIONS, RailFuelParams,
                                  ShiftScenario, ShipmentRecord, load_shipments, rail_ef_co2,
                                  rail_ef_pm25, rail_ef_per_tonmile, rail_ef_so2, shift_scenario,
                                  shipment_tonmiles, sweep, sweep_array, total_tonmiles,
                                  truck_ef_per_tonmile)

P = RailFuelParams()
RAIL = rail_ef_per_tonmile(P)


def test_shipment_tonmiles():
    assert shipment_tonmiles(ShipmentRecord("a", 4000, 500, 10)) == 10_000.0
    assert shipment_tonmiles(ShipmentRecord("b", 0, 500, 10)) == 0.0
    with pytest.raises(DataError):
        ShipmentRecord("c", -1, 1, 1)


def test_threshold_is_strict():
    s = [ShipmentRecord("a", 2000, 300, 1), ShipmentRecord("b", 2000, 300.1, 1)]
    assert total_tonmiles(s, 300) == pytest.approx(300.1)


def test_demo_shipments_match_spreadsheet(demo_dir):
    ships = load_shipments(demo_dir / "shipments.csv")
    assert len(ships) == 100
    total = eligible = 0.0
    with open(demo_dir / "shipments.csv") as fh:
        for r in csv.DictReader(fh):
            tm = float(r["weighting_factor"]) * float(r["weight_lb"]) / 2000 * float(r["distance_mi"])
            total += tm
            if float(r["distance_mi"]) > 300:
                eligible += tm
    assert total_tonmiles(ships) == pytest.approx(total, rel=1e-9)
    assert total_tonmiles(ships, 300) == pytest.approx(eligible, rel=1e-9)


def test_rail_so2():
    assert rail_ef_so2(P) == 0.093888
    assert rail_ef_so2(RailFuelParams(sulfur_fraction=0.0)) == 0.0
    assert rail_ef_so2(RailFuelParams(sulfur_fraction=30e-6)) == 2 * rail_ef_so2(P)


def test_rail_co2():
    assert rail_ef_co2(P) == pytest.approx(10_208.0, rel=1e-12)
    assert abs(rail_ef_co2(P) / 10_217 - 1) < 0.002
    assert rail_ef_co2(RailFuelParams(carbon_mass_fraction=0.0)) == 0.0
    assert rail_ef_co2(RailFuelParams(co2_per_c=CO2_PER_C_ROUNDED)) == pytest.approx(10_217.28, abs=1e-9)


def test_rail_pm25_and_per_tonmile():
    assert rail_ef_pm25(P) == pytest.approx(3.82568, abs=1e-12)
    assert RAIL["PM2.5"] == pytest.approx(8.105e-3, abs=5e-7)
    assert RAIL["SO2"] == pytest.approx(1.989e-4, abs=5e-8)
    assert RAIL["NOx"] == pytest.approx(134.770 / 472, rel=1e-15)
    published = rail_ef_per_tonmile(RailFuelParams(co2_per_c=CO2_PER_C_ROUNDED))
    assert 10_217 / 472 == pytest.approx(21.65, abs=5e-3)
    assert published["CO2"] == pytest.approx(10_217.28 / 472, rel=1e-12)
    assert rail_ef_per_tonmile(P, {"nox": 0.5})["NOx"] == 0.5


def test_rail_params_validation():
    with pytest.raises(ConfigError):
        RailFuelParams(fuel_efficiency=0)
    with pytest.raises(ConfigError):
        RailFuelParams(carbon_mass_fraction=1.2)


def fixture_ships():
    # 1e6 eligible ton-miles plus 2.5e5 short-haul ton-miles
    return [ShipmentRecord("long", 2000.0, 1000.0, 1000.0), ShipmentRecord("short", 2000.0, 250.0, 1000.0)]


def test_zero_shift_and_linearity():
    ships = fixture_ships()
    assert all(v == 0.0 for v in shift_scenario(ships, ShiftScenario(0.0), GREET, RAIL).pct_change.values())
    a = shift_scenario(ships, ShiftScenario(0.05), GREET, RAIL)
    b = shift_scenario(ships, ShiftScenario(0.5), GREET, RAIL)
    for p in POLLUTANTS:
        assert b.delta_grams[p] == pytest.approx(10 * a.delta_grams[p], rel=1e-15)


def test_sweep_midpoint_exactly_linear():
    rows = sweep(fixture_ships(), GREET, RAIL)
    arr = sweep_array(rows)
    fr = list(DEFAULT_FRACTIONS)
    i1, i3, i5 = fr.index(0.1), fr.index(0.3), fr.index(0.5)
    assert np.all(np.abs(arr[i3] - (arr[i1] + arr[i5]) / 2) < 1e-12)
    assert [r[0] for r in rows[::4]] == fr


def test_spreadsheet_oracle():
    ships = fixture_ships()
    res = shift_scenario(ships, ShiftScenario(0.25), GREET, RAIL)
    assert res.eligible_tonmiles == 1e6
    for p in POLLUTANTS:
        truck = GREET.get("combination", p)
        delta = 0.25 * (1e6 * RAIL[p] - 1e6 / 20 * truck)
        base = 1.25e6 / 20 * truck
        assert res.delta_grams[p] == pytest.approx(delta, rel=1e-9)
        assert res.pct_change[p] == pytest.approx(100 * delta / base, rel=1e-9)


def test_direction_consistency():
    truck = truck_ef_per_tonmile(GREET, 20.0)
    for f in DEFAULT_FRACTIONS[1:]:
        res = shift_scenario(fixture_ships(), ShiftScenario(f), GREET, RAIL)
        for p in POLLUTANTS:
            if RAIL[p] < truck[p]:
                assert res.delta_grams[p] < 0


def test_payload_must_be_positive():
    with pytest.raises(ConfigError):
        ShiftScenario(0.1, payload=0)
    with pytest.raises(ConfigError):
        truck_ef_per_tonmile(GREET, -1)
    with pytest.raises(ConfigError):
        ShiftScenario(1.5)

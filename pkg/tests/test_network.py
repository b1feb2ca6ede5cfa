import csv
import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from freightej.errors import ConfigError, DataError
from freightej.geometry import Point
from freightej.network import (LINK_FIELDS, REJECT_LENGTH, REJECT_PARSE, ROUTE_TYPES, RoadLink,
                               VmtParams, annual_vmt, daily_mhdv, growth_factor, link_table,
                               load_links, rejection_rows, vmt_share_by_route_type)

P = VmtParams()


def link(adtt_long=1000.0, adtt_short=0.0, start=0.0, end=10.0, route="interstate", lid="a"):
    return RoadLink(lid, start, end, adtt_long, adtt_short, route, Point(0.0, 0.0))


def rec(**kw):
    base = dict(link_id="x", mp_start="10.0", mp_end="12.5", adtt_long="100", adtt_nonlong="50",
                route_type="interstate", centroid_x="0", centroid_y="0", county_id="C1")
    base.update(kw)
    return base


def test_accept_positive_length():
    res = load_links([rec()])
    assert len(res.accepted) == 1 and res.accepted[0].road_length == 2.5


def test_reject_negative_length():
    res = load_links([rec(mp_start="12.5", mp_end="10.0")])
    assert res.accepted == [] and res.rejected[0][1] == REJECT_LENGTH


def test_reject_zero_length():
    res = load_links([rec(mp_start="3", mp_end="3")])
    assert res.rejected[0][1] == REJECT_LENGTH


def test_twenty_rows_two_malformed():
    rows = [rec(link_id=f"L{i}") for i in range(18)]
    rows.append(rec(link_id="bad1", adtt_long="abc"))
    bad2 = rec(link_id="bad2")
    del bad2["mp_end"]
    rows.append(bad2)
    res = load_links(rows)
    assert len(res.accepted) == 18 and len(res.rejected) == 2
    assert [r for _, r in res.rejected] == [REJECT_PARSE, REJECT_PARSE]
    assert res.n_input == 20
    assert rejection_rows(res) == [[19, "bad1", "parse"], [20, "bad2", "parse"]]


def test_route_codes_and_unknown_route():
    res = load_links([rec(route_type="2"), rec(route_type="Minor Arterial"), rec(route_type="bus")])
    assert [lk.route_type for lk in res.accepted] == ["freeway_expressway", "minor_arterial"]
    assert res.rejected[0][1] == REJECT_PARSE


def test_negative_adtt_rejected():
    res = load_links([rec(adtt_nonlong="-1")])
    assert res.rejected[0][1] == "negative adtt"


def test_csv_file_and_missing(tmp_path):
    p = tmp_path / "links.csv"
    buf = io.StringIO()
    w = csv.DictWriter(buf, LINK_FIELDS)
    w.writeheader()
    w.writerow(rec())
    p.write_text(buf.getvalue())
    assert len(load_links(p).accepted) == 1
    with pytest.raises(DataError, match="links file not found"):
        load_links(tmp_path / "nope.csv")


def test_daily_mhdv_examples():
    assert daily_mhdv(link(1000.0), P).total == pytest.approx(970.2, abs=1e-12)
    assert daily_mhdv(link(0.0), P).total == 0.0
    d = daily_mhdv(link(600.0, 400.0), P)
    assert d.longhaul == pytest.approx(582.12, abs=1e-12)
    assert d.nonlonghaul == pytest.approx(388.08, abs=1e-12)
    assert d.total == pytest.approx(970.2, abs=1e-12)


def test_growth_factor_examples():
    assert abs(growth_factor(P) - 1.1040808032) < 1e-12
    assert growth_factor(VmtParams(cagr=0.0)) == 1.0
    assert growth_factor(VmtParams(base_year=2012, target_year=2012)) == 1.0


def test_annual_vmt_examples():
    long_, short = annual_vmt(link(1000.0, 0.0, 0.0, 10.0), P)
    # hand oracle: 970.2 veh/day * 10 mi * 365 d * 1.02**5
    assert long_ == pytest.approx(970.2 * 10 * 365 * 1.1040808032, rel=1e-12)
    assert abs(long_ - 3_909_804.06) < 0.01
    assert short == 0.0
    assert annual_vmt(link(0.0, 0.0), P) == (0.0, 0.0)
    flat = VmtParams(diesel_fraction=1.0, truck_fraction=1.0)
    assert annual_vmt(link(100.0, 0.0, 0.0, 1.0), flat, gf=1.0) == (36_500.0, 0.0)


COUNTS = st.one_of(st.just(0.0), st.floats(1e-3, 1e5))


@given(COUNTS, COUNTS, st.floats(0.01, 500))
def test_vmt_linear_and_channels_add(a, b, length):
    l1 = link(a, b, 0.0, length)
    long_, short = annual_vmt(l1, P)
    assert annual_vmt(link(2 * a, 2 * b, 0.0, length), P) == (2 * long_, 2 * short)
    assert annual_vmt(link(a, b, 0.0, 2 * length), P) == (2 * long_, 2 * short)
    summed = annual_vmt(link(a + b, 0.0, 0.0, length), P)[0]
    assert long_ + short == pytest.approx(summed, rel=1e-9, abs=1e-9)


def test_vmt_share_matches_oracle():
    links = [link(100, 50, 0, 1, "interstate", "a"), link(300, 0, 0, 2, "minor_arterial", "b"),
             link(0, 150, 0, 4, "interstate", "c")]
    t = link_table(links, P)
    share = vmt_share_by_route_type(t)
    # spreadsheet: combination VMT proportional to 100*1 and 300*2
    assert share["interstate"][0] == pytest.approx(100 * 100 / 700, rel=1e-12)
    assert share["minor_arterial"][0] == pytest.approx(100 * 600 / 700, rel=1e-12)
    assert share["interstate"][1] == pytest.approx(100.0, rel=1e-12)
    assert math.fsum(s[0] for s in share.values()) == pytest.approx(100.0)
    assert set(share) == set(ROUTE_TYPES)


def test_params_validation():
    with pytest.raises(ConfigError):
        VmtParams(diesel_fraction=1.5)
    with pytest.raises(ConfigError):
        VmtParams(base_year=2017, target_year=2012)

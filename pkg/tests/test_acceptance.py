"""Acceptance criteria, one check per criterion.

Each check returns (passed, detail). Under pytest every criterion is a
separate test and a PASS/FAIL line per criterion is printed in the
terminal summary; ``python3 tests/test_acceptance.py`` prints the same
lines without pytest.
"""

import math
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from freightej.damages import VslAdjustment, adjusted_vsl  # noqa: E402
from freightej.econometrics import effect_percent, logit_fit, ols_fit  # noqa: E402
from freightej.geometry import GridSpec, Point, Polygon, overlay_weights  # noqa: E402
from freightej.inventory import GREET, POLLUTANTS, link_emissions  # noqa: E402
from freightej.modalshift import (CO2_PER_C_ROUNDED, RailFuelParams, ShiftScenario,  # noqa: E402
                                  rail_ef_co2, rail_ef_pm25, rail_ef_per_tonmile, rail_ef_so2,
                                  shift_scenario, sweep, sweep_array)
from freightej.network import VmtParams, growth_factor  # noqa: E402
from freightej.srledger import SRMatrix, conservation, decompose, receptor_damages  # noqa: E402

RESULTS = {}


def crit_vsl():
    v = adjusted_vsl(8.6e6, VslAdjustment(1.174, 1.010, 245.0, 218.0))
    return 10.25e6 <= v <= 10.35e6, f"adjusted VSL = {v:,.0f} (window 10,250,000..10,350,000)"


def crit_rail_factors():
    p = RailFuelParams()
    so2 = rail_ef_so2(p)
    co2 = rail_ef_co2(p)
    co2_pub = rail_ef_co2(RailFuelParams(co2_per_c=CO2_PER_C_ROUNDED))
    pm = rail_ef_pm25(p)
    ok = (so2 == 0.093888 and abs(co2 / 10_217 - 1) <= 0.002 and abs(pm - 3.82568) <= 1e-12)
    return ok, (f"SO2 {so2!r} g/gal; CO2 {co2:.2f} g/gal with 44/12 "
                f"({100 * (co2 / 10_217 - 1):+.3f}% vs 10,217; {co2_pub:.2f} with 3.67); "
                f"PM2.5 {pm!r} (|diff| {abs(pm - 3.82568):.1e})")


def crit_growth():
    gf = growth_factor(VmtParams())
    return abs(gf - 1.1040808032) <= 1e-12, f"1.02^5 = {gf!r}"


def crit_overlay():
    from conftest import random_star
    from test_geometry import L_SHAPE, raster_fractions

    rng = np.random.default_rng(2024)
    g = GridSpec(Point(0, 0), 36_000.0, 20, 20)
    worst = 0.0
    for _ in range(50):
        c = rng.uniform(150_000, 570_000, 2)
        ring = random_star(rng, int(rng.integers(4, 40)), rng.uniform(5_000, 140_000), *c)
        worst = max(worst, abs(sum(overlay_weights(Polygon((ring,)), g).values()) - 1.0))
    lg = GridSpec(Point(0, 0), 1.0, 2, 2)
    w = overlay_weights(Polygon((L_SHAPE,)), lg)
    oracle = raster_fractions(np.array(L_SHAPE), lg)
    lerr = max(abs(w[k] - oracle.get(k, 0.0)) for k in set(w) | set(oracle))
    return worst <= 1e-9 and lerr <= 1e-3, (f"max |sum w - 1| = {worst:.1e} over 50 polygons; "
                                            f"L-shape vs raster max err {lerr:.1e}")


def crit_inventory():
    from test_inventory import demo_ledger, spreadsheet_oracle
    from freightej.demo import write_demo

    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        write_demo(d)
        res, t, assign, led = demo_ledger(d)
        oracle = spreadsheet_oracle(d)
    g = link_emissions(t.vmt_long, t.vmt_nonlong, GREET)
    cons = max(abs(led.total(p) + led.unassigned_tons[p] - math.fsum(g[p]) / 1e6)
               / (math.fsum(g[p]) / 1e6) for p in POLLUTANTS)
    orc = max(abs(led.tons(z, p) - v) / v for (z, p), v in oracle.items() if v)
    n_links = len(res.accepted) + len(res.rejected)
    ok = cons <= 1e-9 and orc <= 1e-9 and n_links == 20 and len(led.zone_ids) == 5
    return ok, (f"{n_links} links / {len(led.zone_ids)} counties; conservation rel gap {cons:.1e}; "
                f"spreadsheet rel err {orc:.1e}")


def crit_sr():
    from test_srledger import brute_force, random_case

    worst = 0.0
    for seed in range(100):
        zones, dense, led = random_case(seed)
        flows = receptor_damages(led, SRMatrix.from_dense(zones, dense))
        c = conservation(decompose(flows), flows)
        src, rec = c["source_total"], c["receptor_total"]
        worst = max(worst, abs(src - rec) / src, c["export_import_gap"])
    zones = ["A", "B", "C"]
    rng = np.random.default_rng(3)
    dense = {p: rng.uniform(0, 10, (3, 3)) for p in ("PM2.5", "SO2", "NOx")}
    from test_srledger import ledger
    led = ledger({(z, p): float(rng.uniform(0, 5)) for z in zones for p in dense}, zones)
    got = decompose(receptor_damages(led, SRMatrix.from_dense(zones, dense)))
    bf = brute_force(zones, dense, led)
    exact = ([e.internal for e in got], [e.exported for e in got], [e.imported for e in got]) == tuple(bf)
    return worst <= 1e-9 and exact, (f"max relative gap {worst:.1e} over 100 seeds; "
                                     f"3-zone brute force {'exact' if exact else 'MISMATCH'}")


def crit_ols():
    from test_econometrics import planted_fixture

    beta_err = ortho = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = np.column_stack([np.ones(50), rng.normal(size=(50, 5))])
        y = X @ rng.normal(size=6) + rng.normal(size=50)
        fit = ols_fit(X, y)
        ne = np.linalg.solve(X.T @ X, X.T @ y)
        beta_err = max(beta_err, float(np.max(np.abs(fit.coefficients - ne))))
        ortho = max(ortho, float(np.max(np.abs(X.T @ fit.residuals))))
    X, y, beta = planted_fixture()
    fit = ols_fit(X, y)
    z = np.max(np.abs(fit.coefficients - beta) / fit.standard_errors)
    ok = beta_err < 1e-8 and ortho < 1e-8 and z < 2
    return ok, (f"max |beta - normal eq| {beta_err:.1e}; max |X'e| {ortho:.1e}; "
                f"planted recovery max {z:.2f} SE")


def crit_logit():
    from freightej.errors import SeparationError
    from test_econometrics import overlap_fixture

    y = np.array([1.0] * 25 + [0.0] * 75)
    b0 = logit_fit(np.ones((100, 1)), y).coefficients[0]
    e0 = abs(b0 - math.log(0.25 / 0.75))
    X, y2 = overlap_fixture()
    fit = logit_fit(X, y2)
    score = abs(fit.fitted.sum() - y2.sum())
    x = np.linspace(-1, 1, 40)
    try:
        logit_fit(np.column_stack([np.ones(40), x]), (x > 0).astype(float))
        sep = False
    except SeparationError:
        sep = True
    return e0 <= 1e-8 and score <= 1e-6 and sep, (
        f"intercept err {e0:.1e}; |sum p - sum y| {score:.1e}; separation "
        f"{'detected' if sep else 'NOT detected'}")


def crit_modal():
    from test_modalshift import fixture_ships

    rail = rail_ef_per_tonmile(RailFuelParams())
    arr = sweep_array(sweep(fixture_ships(), GREET, rail, fractions=(0.1, 0.3, 0.5)))
    mid = float(np.max(np.abs(arr[1] - (arr[0] + arr[2]) / 2)))
    res = shift_scenario(fixture_ships(), ShiftScenario(0.25), GREET, rail)
    err = 0.0
    for p in POLLUTANTS:
        truck = GREET.get("combination", p)
        pct = 100 * 0.25 * (1e6 * rail[p] - 1e6 / 20 * truck) / (1.25e6 / 20 * truck)
        err = max(err, abs(res.pct_change[p] - pct) / abs(pct))
    return mid < 1e-12 and err <= 1e-9, f"midpoint residual {mid:.1e}; spreadsheet rel err {err:.1e}"


def crit_determinism():
    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        cli = [sys.executable, "-m", "freightej.cli"]
        subprocess.run([*cli, "make-demo", str(d / "in")], check=True, capture_output=True)
        t0 = time.perf_counter()
        subprocess.run([*cli, "all", "--config", str(d / "in" / "config.yaml"), "--out",
                        str(d / "w1"), "--workers", "1"], check=True, capture_output=True)
        elapsed = time.perf_counter() - t0
        subprocess.run([*cli, "all", "--config", str(d / "in" / "config.yaml"), "--out",
                        str(d / "w8"), "--workers", "8"], check=True, capture_output=True)
        names = sorted(p.name for p in (d / "w1").glob("*.csv"))
        same = all((d / "w1" / n).read_bytes() == (d / "w8" / n).read_bytes() for n in names)
    return same and elapsed < 10.0, (f"{len(names)} CSVs {'identical' if same else 'DIFFER'} "
                                     f"at 1 vs 8 workers; end-to-end {elapsed:.2f} s")


def crit_effect():
    a, b = effect_percent(1.055), effect_percent(3.054)
    return abs(a - 187.2) <= 0.1 and abs(b - 2020) <= 1, f"{a:.2f}% and {b:.1f}%"


CRITERIA = {
    "vsl_adjustment": crit_vsl,
    "rail_emission_factors": crit_rail_factors,
    "growth_factor": crit_growth,
    "overlay_weights": crit_overlay,
    "inventory_conservation": crit_inventory,
    "sr_conservation": crit_sr,
    "ols_oracle": crit_ols,
    "logit": crit_logit,
    "modal_shift_linearity": crit_modal,
    "determinism_and_runtime": crit_determinism,
    "effect_transformation": crit_effect,
}


def report_line(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("name", list(CRITERIA))
def test_criterion(name):
    ok, detail = CRITERIA[name]()
    RESULTS[name] = (ok, detail)
    print(report_line(name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for name, fn in CRITERIA.items():
        ok, detail = fn()
        failed += not ok
        print(report_line(name, ok, detail))
    sys.exit(1 if failed else 0)

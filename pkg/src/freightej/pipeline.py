"""Pipeline stages behind the CLI subcommands.

A ``Run`` holds one configuration and caches intermediate products, so
``all`` computes the inventory once and every later stage reuses it.
Each stage writes its CSVs atomically into the output directory and adds
its counts to ``run.counts`` for the manifest.
"""

from __future__ import annotations

import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from pathlib import Path

import numpy as np

from freightej import __version__, kernels
from freightej._io import sha256_file, sha256_json, write_csv, write_json
from freightej.config import RunConfig
from freightej.damages import (adjusted_vsl, co2_damages, load_msc_grid, scale_msc, vsl_factor,
                               zone_damages, zone_msc)
from freightej.econometrics import (FitResult, binary_design, build_design, coefficient_rows,
                                    diagnostics, load_covariates, logit_fit, ols_fit,
                                    regression_table)
from freightej.errors import (ConfigError, ConsistencyError, DataError, EmptyOverlayError,
                              InsufficientObservationsError, SeparationError)
from freightej.geometry import load_zones
from freightej.inventory import (BUILTIN_FACTOR_SETS, CRITERIA_POLLUTANTS, MASS_UNIT, POLLUTANTS,
                                 aggregate_zone_emissions, assign_links_to_zones,
                                 load_factor_sets)
from freightej.modalshift import (load_shipments, rail_ef_per_gallon, rail_ef_per_tonmile,
                                  sweep, total_tonmiles, truck_ef_per_tonmile)
from freightej.network import link_table, load_links, rejection_rows
from freightej.srledger import (classify_and_ratio, conservation, decompose, load_sr_matrix,
                                ratio_label, receptor_damages)

log = logging.getLogger(__name__)


class Run:
    def __init__(self, config: RunConfig, out_dir, workers: int | None = None):
        self.config = config
        self.out = Path(out_dir)
        self.workers = workers or config.workers
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.counts = {}
        self.outputs = []
        self.stages = []
        self.t0 = time.perf_counter()

    # -- helpers -----------------------------------------------------------

    def emit(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        if name not in self.outputs:
            self.outputs.append(name)

    @cached_property
    def factor_set(self):
        sets = dict(BUILTIN_FACTOR_SETS)
        extra = self.config.path("emission_factors")
        if extra is not None:
            sets.update(load_factor_sets(extra))
        name = self.config.emission_factor_set
        if name not in sets:
            raise ConfigError(f"unknown emission factor set {name!r}; have {sorted(sets)}")
        return sets[name].validate()

    @cached_property
    def counties(self):
        self.config.require("counties")
        return load_zones(self.config.path("counties"))

    @cached_property
    def tracts(self):
        p = self.config.path("tracts")
        return load_zones(p) if p is not None else None

    # -- inventory -----------------------------------------------------------

    @cached_property
    def links(self):
        self.config.require("links")
        res = load_links(self.config.path("links"))
        table = link_table(res.accepted, self.config.vmt)
        self.counts["links_input"] = res.n_input
        self.counts["links_accepted"] = len(res.accepted)
        self.counts["links_rejected"] = len(res.rejected)
        self.emit("links_rejected.csv", ["record", "link_id", "reason"], rejection_rows(res))
        return table

    def _assign(self, zones, kind):
        t = self.links
        if zones is None:
            return None
        assign = assign_links_to_zones(t.x, t.y, zones, workers=self.workers)
        self.counts[f"links_unassigned_{kind}"] = int(sum(a is None for a in assign))
        return assign

    @cached_property
    def county_assignment(self):
        if self.config.path("counties") is not None:
            assign = self._assign(self.counties, "county")
            given = self.links.county_id
            self.counts["links_county_id_mismatch"] = int(sum(
                g is not None and a is not None and g != a for g, a in zip(given, assign)))
            return assign
        # no county geometry: fall back to the county ids carried on the links
        assign = self.links.county_id.copy()
        self.counts["links_unassigned_county"] = int(sum(a is None for a in assign))
        return assign

    @cached_property
    def tract_assignment(self):
        return self._assign(self.tracts, "tract")

    def _ledger(self, assign, zone_ids, kind):
        t = self.links
        return aggregate_zone_emissions(t.link_id, t.vmt_long, t.vmt_nonlong, assign,
                                        self.factor_set, zone_ids, kind)

    @cached_property
    def county_ledger(self):
        assign = self.county_assignment
        if self.config.path("counties") is not None:
            ids = [z.zone_id for z in self.counties]
        else:
            ids = sorted({a for a in assign if a is not None})
        return self._ledger(assign, ids, "county")

    @cached_property
    def tract_ledger(self):
        if self.tract_assignment is None:
            return None
        return self._ledger(self.tract_assignment, [z.zone_id for z in self.tracts], "tract")

    def build_inventory(self):
        t = self.links
        county = self.county_ledger
        tract = self.tract_ledger
        header = ["zone_id", "pollutant", "tons", "unit"]
        self.emit("county_emissions.csv", header, county.rows())
        if tract is not None:
            self.emit("tract_emissions.csv", header, tract.rows())
        tract_assign = self.tract_assignment
        rows = []
        for i in np.argsort(t.link_id.astype(str), kind="stable"):
            rows.append([t.link_id[i], self.county_assignment[i] or "",
                         (tract_assign[i] or "") if tract_assign is not None else "",
                         t.route_type[i], t.vmt_long[i], t.vmt_nonlong[i]])
        self.emit("link_vmt.csv", ["link_id", "county_id", "tract_id", "route_type",
                                   "vmt_combination", "vmt_single_unit"], rows)
        self.counts["counties"] = len(county.zone_ids)
        if tract is not None:
            self.counts["tracts"] = len(tract.zone_ids)
        self.counts["emission_factor_set"] = county.factor_set_name
        self.stages.append("build-inventory")

    # -- damages -------------------------------------------------------------

    @cached_property
    def base_msc_grid(self):
        self.config.require("msc_grid", "msc_grid_header")
        return load_msc_grid(self.config.path("msc_grid"), self.config.path("msc_grid_header"))

    @cached_property
    def msc_grid(self):
        """The MSC grid rescaled to the configured VSL and dollar year."""
        return scale_msc(self.base_msc_grid, vsl_factor(self.config.vsl),
                         self.config.vsl.target_dollar_year)

    @cached_property
    def county_mscs(self):
        grid = self.msc_grid
        ledger = self.county_ledger
        ordered = sorted(self.counties, key=lambda z: z.zone_id)

        def one(z):
            try:
                return zone_msc(z.parts, grid)
            except EmptyOverlayError:
                if any(ledger.tons(z.zone_id, p) != 0.0 for p in CRITERIA_POLLUTANTS):
                    raise DataError(f"zone {z.zone_id} has emissions but lies outside "
                                    "the MSC grid") from None
                return None

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                vals = list(pool.map(one, ordered))
        else:
            vals = [one(z) for z in ordered]
        return {z.zone_id: v for z, v in zip(ordered, vals) if v is not None}

    def damages(self):
        ledger = self.county_ledger
        mscs = self.county_mscs
        year = self.config.vsl.target_dollar_year
        table = zone_damages(ledger, mscs, CRITERIA_POLLUTANTS, year)
        co2 = co2_damages(ledger, self.config.scc)
        scc = self.config.scc

        self.emit("zone_msc.csv", ["zone_id", "pollutant", "usd_per_ton", "dollar_year"],
                  [[z, p, v[p], year] for z, v in mscs.items() for p in CRITERIA_POLLUTANTS])
        self.emit("county_damages.csv",
                  ["zone_id", "pollutant", "tons", "unit", "usd_per_ton", "damage_usd",
                   "dollar_year"],
                  [[z, p, ledger.tons(z, p), MASS_UNIT, mscs.get(z, {}).get(p, 0.0), d, year]
                   for z, p, d in table.rows()])
        self.emit("co2_damages.csv", ["zone_id", "tons", "unit", "scc_usd_per_ton",
                                      "damage_usd", "dollar_year"],
                  [[z, ledger.tons(z, "CO2"), MASS_UNIT, scc.value, co2[z], scc.dollar_year]
                   for z in ledger.zone_ids])
        nat = [[p, ledger.total(p), MASS_UNIT, table.national[p], year]
               for p in CRITERIA_POLLUTANTS]
        nat.append(["CO2", ledger.total("CO2"), MASS_UNIT,
                    math.fsum(co2.values()), scc.dollar_year])
        self.emit("national_damages.csv",
                  ["pollutant", "tons", "unit", "damage_usd", "dollar_year"], nat)
        base = self.base_msc_grid
        adj = self.config.vsl
        self.emit("vsl_adjustment.csv",
                  ["base_vsl_usd", "base_dollar_year", "vsl_factor", "adjusted_vsl_usd",
                   "dollar_year"],
                  [[base.base_vsl, base.dollar_year, vsl_factor(adj),
                    adjusted_vsl(base.base_vsl, adj), year]])
        self.counts["zones_with_msc"] = len(mscs)
        self.stages.append("damages")

    # -- source-receptor ledger ----------------------------------------------

    @cached_property
    def sr_entries(self):
        self.config.require("sr_matrix")
        ledger = self.county_ledger
        sr = load_sr_matrix(self.config.path("sr_matrix"), ledger.zone_ids)
        pols = [p for p in CRITERIA_POLLUTANTS if p in sr.triplets]
        flows = receptor_damages(ledger, sr, pols)
        entries = decompose(flows)
        check = conservation(entries, flows)
        self.sr_check = check
        tol = self.config.conservation_tolerance
        worst = max(check["source_gap"], check["receptor_gap"], check["export_import_gap"])
        if worst > tol:
            raise ConsistencyError(f"S-R conservation violated: relative gap {worst:.3e} > {tol}")
        return entries

    def importer_flags(self, pollutant=None) -> dict:
        """zone_id -> net importer flag, pollutant-summed or for one pollutant."""
        out = {}
        for e in self.sr_entries:
            if pollutant is None:
                out[e.zone_id] = e.net_importer
            elif pollutant in e.by_pollutant:
                _, ex, im = e.by_pollutant[pollutant]
                out[e.zone_id] = classify_and_ratio(ex, im)[0]
        return out

    def sr_ledger(self):
        entries = self.sr_entries
        year = self.config.vsl.target_dollar_year
        rows = []
        for e in entries:
            r = e.ratio
            rows.append([e.zone_id, e.internal, e.exported, e.imported, e.source_total,
                         e.receptor_total, int(e.net_importer),
                         "" if math.isnan(r) or math.isinf(r) else r, ratio_label(r), year])
        self.emit("sr_ledger.csv", ["zone_id", "internal_usd", "exported_usd", "imported_usd",
                                    "source_total_usd", "receptor_total_usd", "net_importer",
                                    "ratio", "ratio_status", "dollar_year"], rows)
        rows = []
        for e in entries:
            for p, (i, ex, im) in e.by_pollutant.items():
                flag, r = classify_and_ratio(ex, im)
                rows.append([e.zone_id, p, i, ex, im, int(flag),
                             "" if math.isnan(r) or math.isinf(r) else r, ratio_label(r), year])
        self.emit("sr_ledger_by_pollutant.csv",
                  ["zone_id", "pollutant", "internal_usd", "exported_usd", "imported_usd",
                   "net_importer", "ratio", "ratio_status", "dollar_year"], rows)
        c = self.sr_check
        self.emit("sr_conservation.csv", ["quantity", "value"], [[k, c[k]] for k in sorted(c)])
        self.counts["sr_zones"] = len(entries)
        self.counts["net_importers"] = sum(e.net_importer for e in entries)
        print(f"S-R conservation: sources {c['source_total']:.6g} receptors "
              f"{c['receptor_total']:.6g} flows {c['flow_total']:.6g} "
              f"(max relative gap {max(c['source_gap'], c['receptor_gap']):.2e}); "
              f"exported {c['exported_total']:.6g} imported {c['imported_total']:.6g}")
        self.stages.append("sr-ledger")

    # -- regressions ---------------------------------------------------------

    def _fit(self, kind, design, label, fits, diag_rows, qq_rows):
        dropped = {k: len(v) for k, v in sorted(design.dropped.items())}
        self.counts[f"regression_dropped[{label}]"] = dropped
        try:
            fit = (ols_fit if kind == "ols" else logit_fit)(design.X, design.y, design.columns)
        except (InsufficientObservationsError, SeparationError) as exc:
            fits[label] = f"not estimated: {exc}"
            return None
        fits[label] = fit
        d = diagnostics(fit)
        for zid, res, s in zip(design.zone_ids, fit.residuals, d.studentized):
            diag_rows.append([label, zid, res, s])
        for i, (t, q) in enumerate(d.qq, start=1):
            qq_rows.append([label, i, t, q])
        return fit

    def ej_regress(self):
        cfg = self.config
        levels = []
        if cfg.path("county_covariates") is not None:
            cfg.require("county_covariates")
            levels.append(("county", load_covariates(cfg.path("county_covariates")),
                           self.county_ledger))
        if cfg.path("tract_covariates") is not None and self.tract_ledger is not None:
            cfg.require("tract_covariates")
            levels.append(("tract", load_covariates(cfg.path("tract_covariates")),
                           self.tract_ledger))
        if not levels:
            raise ConfigError("ej-regress needs county_covariates and/or tract_covariates")
        have_sr = cfg.path("sr_matrix") is not None

        long_rows, diag_rows, qq_rows = [], [], []
        for level, covs, ledger in levels:
            fits = {}
            for p in CRITERIA_POLLUTANTS:
                label = f"ols_{level}_{p}"
                fit = self._fit("ols", build_design(covs, ledger, p), label, fits,
                                diag_rows, qq_rows)
                if isinstance(fit, FitResult):
                    long_rows.extend(coefficient_rows(label, fit))
            self.emit(f"ols_{level}.csv", None, regression_table(
                {k.rsplit("_", 1)[-1]: v for k, v in fits.items()}))
            if have_sr:
                lfits = {}
                for p in CRITERIA_POLLUTANTS:
                    label = f"logit_{level}_{p}"
                    flags = self.importer_flags(p)
                    fit = self._fit("logit", binary_design(covs, flags), label, lfits,
                                    diag_rows, qq_rows)
                    if isinstance(fit, FitResult):
                        long_rows.extend(coefficient_rows(label, fit))
                self.emit(f"logit_{level}.csv", None, regression_table(
                    {k.rsplit("_", 1)[-1]: v for k, v in lfits.items()}))
        self.emit("regression_coefficients.csv",
                  ["model", "term", "estimate", "std_error", "z", "p_value", "stars"], long_rows)
        self.emit("diagnostics_studentized.csv",
                  ["model", "zone_id", "residual", "studentized_residual"], diag_rows)
        self.emit("diagnostics_qq.csv", ["model", "rank", "theoretical", "sample"], qq_rows)
        self.stages.append("ej-regress")

    # -- modal shift ---------------------------------------------------------

    def modal_shift(self):
        cfg = self.config
        cfg.require("shipments")
        ms = cfg.modal_shift
        ships = load_shipments(cfg.path("shipments"))
        rail_gal = rail_ef_per_gallon(ms.rail)
        rail_tm = rail_ef_per_tonmile(ms.rail, ms.rail_override)
        truck_tm = truck_ef_per_tonmile(self.factor_set, ms.payload)
        rows = sweep(ships, self.factor_set, rail_tm, ms.fractions, ms.distance_threshold,
                     ms.payload)
        self.emit("modal_shift_sweep.csv", ["fraction", "pollutant", "pct_change"], rows)
        self.emit("modal_shift_factors.csv",
                  ["pollutant", "rail_g_per_gal", "rail_g_per_ton_mile", "truck_g_per_ton_mile"],
                  [[p, rail_gal[p], rail_tm[p], truck_tm[p]] for p in POLLUTANTS])
        self.counts["shipments"] = len(ships)
        self.counts["eligible_ton_miles"] = total_tonmiles(ships, ms.distance_threshold)
        self.counts["total_ton_miles"] = total_tonmiles(ships)
        self.stages.append("modal-shift")

    # -- manifest ------------------------------------------------------------

    def write_manifest(self, command):
        import numpy
        import scipy

        cfg = self.config
        inputs = {}
        for key, p in sorted(cfg.inputs.items()):
            if p is not None and p.exists():
                inputs[key] = {"file": p.name, "sha256": sha256_file(p)}
        manifest = {
            "command": command,
            "stages": self.stages,
            "config_hash": sha256_json(cfg.hashable()),
            "inputs": inputs,
            "versions": {"freightej": __version__, "numpy": numpy.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version(),
                         "kernel_backend": kernels.BACKEND},
            "counts": self.counts,
            "outputs": {name: sha256_file(self.out / name) for name in sorted(self.outputs)},
            "wall_time_s": round(time.perf_counter() - self.t0, 6),
        }
        write_json(self.out / "manifest.json", manifest)
        return manifest

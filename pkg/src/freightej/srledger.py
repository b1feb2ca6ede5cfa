"""Source-receptor damage accounting.

A source-receptor matrix gives $ of damage at receptor r per ton emitted at
source s. Applying it to zone emissions yields damage flows, which are
split per zone into internal (s == r), exported (s == zone, r != zone) and
imported (r == zone, s != zone) components.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from freightej.errors import DataError
from freightej.inventory import canonical_pollutant

PURE_EXPORTER = math.inf


@dataclass(frozen=True, eq=False)
class SRMatrix:
    """Sparse per-pollutant triplets over a fixed zone universe.

    Triplets are stored sorted by (source, receptor) with duplicates summed;
    pairs not listed are zero.
    """

    zones: tuple
    triplets: dict  # pollutant -> (src_idx, rec_idx, usd_per_ton)

    def __post_init__(self):
        given = tuple(str(z) for z in self.zones)
        zones = tuple(sorted(set(given)))
        if len(zones) != len(given):
            raise DataError("duplicate zone ids in S-R universe")
        n = len(zones)
        # triplet indices refer to the given order; remap to sorted order
        pos = {z: i for i, z in enumerate(zones)}
        remap = np.array([pos[z] for z in given], dtype=np.int64)
        clean = {}
        for pol, (s, r, v) in self.triplets.items():
            s = np.asarray(s, dtype=np.int64)
            r = np.asarray(r, dtype=np.int64)
            v = np.asarray(v, dtype=float)
            if s.size and (s.min() < 0 or s.max() >= n or r.min() < 0 or r.max() >= n):
                raise DataError(f"S-R {pol}: index outside zone universe")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise DataError(f"S-R {pol}: entries must be finite and >= 0")
            s = remap[s]
            r = remap[r]
            key = s * n + r
            uniq, inv = np.unique(key, return_inverse=True)
            summed = np.zeros(uniq.shape[0])
            np.add.at(summed, inv, v)
            clean[pol] = (uniq // n, uniq % n, summed)
        object.__setattr__(self, "zones", zones)
        object.__setattr__(self, "triplets", clean)

    @property
    def index(self) -> dict:
        return {z: i for i, z in enumerate(self.zones)}

    @property
    def pollutants(self) -> tuple:
        return tuple(sorted(self.triplets))

    @classmethod
    def from_dense(cls, zones, dense: dict) -> "SRMatrix":
        trip = {}
        for pol, m in dense.items():
            m = np.asarray(m, dtype=float)
            s, r = np.nonzero(m)
            trip[pol] = (s, r, m[s, r])
        return cls(tuple(zones), trip)

    def dense(self, pollutant) -> np.ndarray:
        n = len(self.zones)
        out = np.zeros((n, n))
        s, r, v = self.triplets[pollutant]
        out[s, r] = v
        return out


def load_sr_matrix(path, zones=None) -> SRMatrix:
    """Read CSV triplets (pollutant, source_id, receptor_id, usd_per_ton).

    The zone universe is every id appearing in the file plus ``zones``.
    """
    rows = []
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataError(f"S-R matrix file not found: {path}") from None
    with fh:
        for lineno, rec in enumerate(csv.DictReader(fh), start=2):
            try:
                rows.append((canonical_pollutant(rec["pollutant"]), str(rec["source_id"]).strip(),
                             str(rec["receptor_id"]).strip(), float(rec["usd_per_ton"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad S-R record ({exc})") from None
    universe = sorted({r[1] for r in rows} | {r[2] for r in rows} | set(zones or ()))
    idx = {z: i for i, z in enumerate(universe)}
    acc = {}
    for pol, s, r, v in rows:
        t = acc.setdefault(pol, ([], [], []))
        t[0].append(idx[s])
        t[1].append(idx[r])
        t[2].append(v)
    return SRMatrix(tuple(universe), acc)


@dataclass(frozen=True, eq=False)
class Flows:
    """Damage flows d(p, s, r) = E(s, p) * SR(p, s, r) as sparse triplets."""

    zones: tuple
    triplets: dict  # pollutant -> (src_idx, rec_idx, usd)

    def get(self, pollutant, source, receptor) -> float:
        idx = {z: i for i, z in enumerate(self.zones)}
        s, r, v = self.triplets[pollutant]
        hit = (s == idx[source]) & (r == idx[receptor])
        return float(v[hit].sum())

    def total(self) -> float:
        return math.fsum(math.fsum(t[2]) for t in self.triplets.values())


def receptor_damages(ledger, sr: SRMatrix, pollutants=None) -> Flows:
    """Apply the S-R matrix to zone emissions for each pollutant."""
    index = sr.index
    missing = [z for z in ledger.zone_ids if z not in index]
    pols = sr.pollutants if pollutants is None else tuple(pollutants)
    emitting = [z for z in missing if any(ledger.tons(z, p) != 0.0 for p in pols)]
    if emitting:
        raise DataError(f"emission zones absent from S-R matrix: {emitting[:5]}")
    out = {}
    for p in pols:
        if p not in sr.triplets:
            raise DataError(f"S-R matrix has no {p} entries")
        e = np.array([ledger.tons(z, p) for z in sr.zones])
        s, r, v = sr.triplets[p]
        out[p] = (s, r, e[s] * v)
    return Flows(sr.zones, out)


@dataclass
class LedgerEntry:
    zone_id: str
    internal: float
    exported: float
    imported: float
    by_pollutant: dict = field(default_factory=dict)  # p -> (internal, exported, imported)

    @property
    def source_total(self) -> float:
        return self.internal + self.exported

    @property
    def receptor_total(self) -> float:
        return self.internal + self.imported

    @property
    def net_importer(self) -> bool:
        return classify_and_ratio(self.exported, self.imported)[0]

    @property
    def ratio(self) -> float:
        return classify_and_ratio(self.exported, self.imported)[1]

    def pollutant_flags(self) -> dict:
        return {p: classify_and_ratio(v[1], v[2]) for p, v in self.by_pollutant.items()}


def _group_fsum(n, keys, v):
    """Exactly rounded sum of ``v`` per key in [0, n)."""
    out = np.zeros(n)
    if keys.size == 0:
        return out
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    vs = v[order]
    cuts = np.flatnonzero(np.diff(ks)) + 1
    for grp_k, grp_v in zip(np.split(ks, cuts), np.split(vs, cuts)):
        out[grp_k[0]] = math.fsum(grp_v)
    return out


def _split(n, s, r, v):
    diag = s == r
    off = ~diag
    return (_group_fsum(n, s[diag], v[diag]),
            _group_fsum(n, s[off], v[off]),
            _group_fsum(n, r[off], v[off]))


def decompose(flows: Flows) -> list:
    """Per-zone internal/exported/imported, summed over pollutants, sorted by zone.

    Every field is an exactly rounded sum of its flow terms.
    """
    n = len(flows.zones)
    pols = sorted(flows.triplets)
    parts = {p: _split(n, *flows.triplets[p]) for p in pols}
    if pols:
        allt = [np.concatenate([flows.triplets[p][k] for p in pols]) for k in range(3)]
    else:
        allt = [np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)]
    internal, exported, imported = _split(n, *allt)
    out = []
    for i, z in enumerate(flows.zones):
        per = {p: (float(a[i]), float(b[i]), float(c[i])) for p, (a, b, c) in parts.items()}
        out.append(LedgerEntry(z, float(internal[i]), float(exported[i]), float(imported[i]), per))
    return out


def classify_and_ratio(exported: float, imported: float):
    """(net_importer, exported / imported).

    Zero imports with positive exports give ``inf`` (pure exporter); a zone
    with no flows at all gets ``nan`` and is left out of ratio reports.
    """
    net_importer = imported > exported
    if imported > 0:
        return net_importer, exported / imported
    if exported > 0:
        return net_importer, PURE_EXPORTER
    return net_importer, math.nan


def ratio_label(ratio: float) -> str:
    if math.isnan(ratio):
        return "undefined"
    if math.isinf(ratio):
        return "pure-exporter"
    return "finite"


def conservation(entries, flows: Flows) -> dict:
    """Totals for the two accounting identities and their relative gaps."""
    src = math.fsum(e.source_total for e in entries)
    rec = math.fsum(e.receptor_total for e in entries)
    exp = math.fsum(e.exported for e in entries)
    imp = math.fsum(e.imported for e in entries)
    total = flows.total()
    scale = max(abs(total), 1e-300)
    return {
        "flow_total": total,
        "source_total": src,
        "receptor_total": rec,
        "exported_total": exp,
        "imported_total": imp,
        "source_gap": abs(src - total) / scale,
        "receptor_gap": abs(rec - total) / scale,
        "export_import_gap": abs(exp - imp) / max(abs(exp), abs(imp), 1e-300),
    }


def write_ledger_csv(entries, path, dollar_year) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["zone_id", "internal_usd", "exported_usd", "imported_usd", "source_total_usd",
                    "receptor_total_usd", "net_importer", "ratio", "ratio_status", "dollar_year"])
        for e in entries:
            ratio = e.ratio
            w.writerow([e.zone_id, repr(e.internal), repr(e.exported), repr(e.imported),
                        repr(e.source_total), repr(e.receptor_total), int(e.net_importer),
                        "" if math.isnan(ratio) or math.isinf(ratio) else repr(ratio),
                        ratio_label(ratio), dollar_year])

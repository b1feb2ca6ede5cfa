"""Log-linear OLS and logit models of zone emissions on demographics.

Design columns, in order::

    const, log_area, prop_black, prop_amerind, prop_haw, prop_asian,
    prop_twomore, prop_hisp, log_med_income, log_total_pop

Proportions enter un-logged; area, income and population enter logged.
Standard errors are classical (homoskedastic).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist

import numpy as np
import scipy.linalg

from freightej.errors import (DataError, InsufficientObservationsError, SeparationError,
                              SingularDesignError)

DESIGN_COLUMNS = ("const", "log_area", "prop_black", "prop_amerind", "prop_haw", "prop_asian",
                  "prop_twomore", "prop_hisp", "log_med_income", "log_total_pop")
COVARIATE_FIELDS = ("area", "prop_black", "prop_amerind", "prop_haw", "prop_asian",
                    "prop_hisp", "prop_twomore", "total_pop", "med_income")
PROPORTIONS = ("prop_black", "prop_amerind", "prop_haw", "prop_asian", "prop_hisp",
               "prop_twomore")

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class ZoneCovariates:
    zone_id: str
    area: float
    prop_black: float
    prop_amerind: float
    prop_haw: float
    prop_asian: float
    prop_hisp: float
    prop_twomore: float
    total_pop: float
    med_income: float
    parent_id: str | None = None  # county of a tract, when known

    def check(self) -> None:
        props = [getattr(self, p) for p in PROPORTIONS]
        if any(not 0.0 <= v <= 1.0 for v in props):
            raise DataError(f"zone {self.zone_id}: proportions must lie in [0, 1]")
        if sum(props) > 1.0 + 1e-9:
            raise DataError(f"zone {self.zone_id}: group proportions sum above 1")
        if self.total_pop < 0:
            raise DataError(f"zone {self.zone_id}: negative population")


def load_covariates(path) -> dict:
    """zone_id -> ZoneCovariates from a CSV with zone_id plus the nine fields.

    An optional ``county_id`` column links tracts to their county.
    """
    out = {}
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataError(f"covariates file not found: {path}") from None
    with fh:
        for lineno, rec in enumerate(csv.DictReader(fh), start=2):
            try:
                zc = ZoneCovariates(
                    zone_id=str(rec["zone_id"]).strip(),
                    **{f: float(rec[f]) for f in COVARIATE_FIELDS},
                    parent_id=(rec.get("county_id") or "").strip() or None,
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad covariate record ({exc})") from None
            zc.check()
            out[zc.zone_id] = zc
    return out


@dataclass
class Design:
    X: np.ndarray
    y: np.ndarray
    zone_ids: list
    columns: tuple = DESIGN_COLUMNS
    dropped: dict = field(default_factory=dict)  # reason -> [zone ids]

    @property
    def n_dropped(self) -> int:
        return sum(len(v) for v in self.dropped.values())


def design_row(c: ZoneCovariates) -> list:
    return [1.0, math.log(c.area), c.prop_black, c.prop_amerind, c.prop_haw, c.prop_asian,
            c.prop_twomore, c.prop_hisp, math.log(c.med_income), math.log(c.total_pop)]


def _covariate_problem(c: ZoneCovariates):
    if not c.area > 0:
        return "nonpositive area"
    if not c.med_income > 0:
        return "nonpositive median income"
    if not c.total_pop > 0:
        return "zero population"
    return None


def build_design(covariates: dict, ledger, pollutant) -> Design:
    """log-emissions on the design columns; zero-emission zones are dropped and counted."""
    rows, y, ids = [], [], []
    dropped = {}
    for z in ledger.zone_ids:
        c = covariates.get(z)
        if c is None:
            dropped.setdefault("no covariates", []).append(z)
            continue
        e = ledger.tons(z, pollutant)
        if not e > 0:
            dropped.setdefault("zero emissions", []).append(z)
            continue
        problem = _covariate_problem(c)
        if problem:
            dropped.setdefault(problem, []).append(z)
            continue
        rows.append(design_row(c))
        y.append(math.log(e))
        ids.append(z)
    X = np.array(rows, dtype=float).reshape(-1, len(DESIGN_COLUMNS))
    return Design(X, np.array(y, dtype=float), ids, DESIGN_COLUMNS, dropped)


def binary_design(covariates: dict, flags: dict, zone_ids=None) -> Design:
    """Design for the importer logit; ``flags`` maps zone_id -> bool."""
    rows, y, ids = [], [], []
    dropped = {}
    for z in sorted(covariates if zone_ids is None else zone_ids):
        c = covariates.get(z)
        if c is None:
            dropped.setdefault("no covariates", []).append(z)
            continue
        key = c.parent_id if c.parent_id is not None and z not in flags else z
        if key not in flags:
            dropped.setdefault("no importer flag", []).append(z)
            continue
        problem = _covariate_problem(c)
        if problem:
            dropped.setdefault(problem, []).append(z)
            continue
        rows.append(design_row(c))
        y.append(1.0 if flags[key] else 0.0)
        ids.append(z)
    X = np.array(rows, dtype=float).reshape(-1, len(DESIGN_COLUMNS))
    return Design(X, np.array(y), ids, DESIGN_COLUMNS, dropped)


@dataclass
class FitResult:
    kind: str  # "ols" or "logit"
    columns: tuple
    coefficients: np.ndarray
    standard_errors: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    leverage: np.ndarray
    nobs: int
    dof: int
    r2: float | None = None
    adj_r2: float | None = None
    f_statistic: float | None = None
    residual_std_error: float | None = None
    log_likelihood: float | None = None
    aic: float | None = None
    iterations: int = 0

    @property
    def k(self) -> int:
        return self.coefficients.shape[0]

    @property
    def z_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coefficients / self.standard_errors

    @property
    def p_values(self) -> np.ndarray:
        """Two-sided, normal approximation."""
        return np.array([two_sided_p(z) for z in self.z_values])


def two_sided_p(z: float) -> float:
    if math.isnan(z):
        return math.nan
    return math.erfc(abs(z) / math.sqrt(2.0))


def stars(p: float) -> str:
    if math.isnan(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def _check_rank(X, columns):
    n, k = X.shape
    if n <= k:
        raise InsufficientObservationsError(
            f"need more observations than parameters (n={n}, k={k})")
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(n, k) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < k:
        bad = [columns[i] for i in sorted(piv[rank:])]
        raise SingularDesignError(f"design is rank deficient; collinear columns: {bad}", bad)


def ols_fit(X, y, columns=None) -> FitResult:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    columns = tuple(columns or (f"x{i}" for i in range(k)))
    _check_rank(X, columns)

    Q, R = np.linalg.qr(X, mode="reduced")
    beta = scipy.linalg.solve_triangular(R, Q.T @ y)
    fitted = X @ beta
    resid = y - fitted
    dof = n - k
    rss = float(resid @ resid)
    sigma2 = rss / dof
    Rinv = scipy.linalg.solve_triangular(R, np.eye(k))
    se = np.sqrt(sigma2 * np.sum(Rinv * Rinv, axis=1))
    leverage = np.sum(Q * Q, axis=1)

    has_const = bool(np.any(np.all(X == X[0], axis=0) & (X[0] != 0)))
    centre = y.mean() if has_const else 0.0
    tss = float(np.sum((y - centre) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    df_model = k - 1 if has_const else k
    adj = 1.0 - (1.0 - r2) * (n - (1 if has_const else 0)) / dof
    if df_model > 0 and r2 < 1.0:
        fstat = (r2 / df_model) / ((1.0 - r2) / dof)
    else:
        fstat = math.inf if df_model > 0 else math.nan
    return FitResult("ols", columns, beta, se, resid, fitted, leverage, n, dof,
                     r2=r2, adj_r2=min(adj, r2), f_statistic=fstat,
                     residual_std_error=math.sqrt(sigma2))


def _loglik(y, eta):
    # log(1 + exp(eta)) computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logit_fit(X, y, columns=None, tol=1e-8, max_iter=100) -> FitResult:
    """Maximum likelihood logit by iteratively reweighted least squares.

    Raises SeparationError when the fit runs off to infinity: fitted
    probabilities saturate, the weighted design turns singular, or the
    iteration fails to converge.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    columns = tuple(columns or (f"x{i}" for i in range(k)))
    if not np.all((y == 0) | (y == 1)):
        raise DataError("logit outcome must be 0/1")
    _check_rank(X, columns)
    if y.min() == y.max():
        raise SeparationError("outcome is constant; the likelihood has no finite maximum")

    beta = np.zeros(k)
    ybar = y.mean()
    if np.all(X[:, 0] == 1.0):
        beta[0] = math.log(ybar / (1.0 - ybar))
    it = 0
    for it in range(1, max_iter + 1):
        eta = X @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        w = p * (1.0 - p)
        if np.any(w < 1e-10):
            raise SeparationError(
                f"fitted probabilities saturate at iteration {it}; outcome looks separable")
        z = eta + (y - p) / w
        sw = np.sqrt(w)
        try:
            new, *_ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
        except np.linalg.LinAlgError as exc:
            raise SeparationError(f"weighted design became singular ({exc})") from None
        step = np.max(np.abs(new - beta))
        beta = new
        if step < tol:
            break
    else:
        raise SeparationError(f"IRLS did not converge in {max_iter} iterations")

    eta = X @ beta
    p = 1.0 / (1.0 + np.exp(-eta))
    w = p * (1.0 - p)
    info = X.T @ (X * w[:, None])
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    ll = _loglik(y, eta)
    Xw = X * np.sqrt(w)[:, None]
    leverage = np.einsum("ij,jk,ik->i", Xw, cov, Xw)
    return FitResult("logit", columns, beta, se, y - p, p, leverage, n, n - k,
                     log_likelihood=ll, aic=2 * k - 2 * ll, iterations=it)


def effect_percent(beta) -> float:
    """Percent change in emissions for a one-unit change of a non-logged predictor."""
    return 100.0 * math.expm1(beta)


def qq_points(sample) -> np.ndarray:
    """(theoretical, sample) quantile pairs against N(0, 1), positions (i - 0.5) / n."""
    s = np.sort(np.asarray(sample, dtype=float))
    n = s.shape[0]
    theo = np.array([_STD_NORMAL.inv_cdf((i - 0.5) / n) for i in range(1, n + 1)])
    return np.column_stack([theo, s])


@dataclass
class Diagnostics:
    qq: np.ndarray
    studentized: np.ndarray
    degenerate: bool


def diagnostics(fit: FitResult) -> Diagnostics:
    """Q-Q pairs of the studentized residuals and the residuals themselves.

    Internally studentized: r_i / (sigma * sqrt(1 - h_ii)). When the
    residuals have no spread the result is flagged ``degenerate``: all-zero
    residuals studentize to 0, anything else to NaN.
    """
    r = np.asarray(fit.residuals, dtype=float)
    scale = max(float(np.max(np.abs(fit.fitted))) if r.size else 0.0, 1.0)
    spread = float(np.max(r) - np.min(r)) if r.size else 0.0
    if fit.dof <= 0 or spread <= 1e-12 * scale:
        if np.all(np.abs(r) <= 1e-12 * scale):
            stud = np.zeros_like(r)
        else:
            stud = np.full_like(r, np.nan)
        return Diagnostics(qq_points(stud), stud, True)
    sigma = math.sqrt(float(r @ r) / fit.dof)
    with np.errstate(divide="ignore", invalid="ignore"):
        stud = r / (sigma * np.sqrt(1.0 - fit.leverage))
    stud[fit.leverage >= 1.0 - 1e-12] = np.nan
    finite = stud[np.isfinite(stud)]
    return Diagnostics(qq_points(finite), stud, False)


def format_cell(beta, se, p) -> str:
    return f"{beta:.3f}{stars(p)} ({se:.3f})"


def regression_table(fits: dict) -> list:
    """Rows shaped like a published regression table; one column per model.

    ``fits`` maps a column label to a FitResult (or an error string for a
    model that could not be estimated).
    """
    labels = list(fits)
    cols = None
    for f in fits.values():
        if isinstance(f, FitResult):
            cols = f.columns
            break
    rows = [["term", *labels]]
    for i, term in enumerate(cols or ()):
        row = [term]
        for lab in labels:
            f = fits[lab]
            row.append(format_cell(f.coefficients[i], f.standard_errors[i], f.p_values[i])
                       if isinstance(f, FitResult) else "")
        rows.append(row)

    def stat(name, fn):
        row = [name]
        for lab in labels:
            f = fits[lab]
            row.append(fn(f) if isinstance(f, FitResult) else "")
        rows.append(row)

    stat("observations", lambda f: str(f.nobs))
    if any(isinstance(f, FitResult) and f.kind == "ols" for f in fits.values()):
        stat("r2", lambda f: f"{f.r2:.3f}" if f.r2 is not None else "")
        stat("adj_r2", lambda f: f"{f.adj_r2:.3f}" if f.adj_r2 is not None else "")
        stat("residual_std_error", lambda f: f"{f.residual_std_error:.3f} (df = {f.dof})"
             if f.residual_std_error is not None else "")
        stat("f_statistic", lambda f: f"{f.f_statistic:.3f} (df = {f.k - 1}; {f.dof})"
             if f.f_statistic is not None else "")
    if any(isinstance(f, FitResult) and f.kind == "logit" for f in fits.values()):
        stat("log_likelihood", lambda f: f"{f.log_likelihood:.3f}"
             if f.log_likelihood is not None else "")
        stat("aic", lambda f: f"{f.aic:.3f}" if f.aic is not None else "")
    rows.append(["status", *("ok" if isinstance(fits[lab], FitResult) else str(fits[lab])
                             for lab in labels)])
    return rows


def coefficient_rows(label, fit: FitResult) -> list:
    """Long-format numeric rows: (model, term, estimate, std_error, z, p, stars)."""
    return [[label, t, repr(float(b)), repr(float(s)), repr(float(z)), repr(float(p)), stars(p)]
            for t, b, s, z, p in zip(fit.columns, fit.coefficients, fit.standard_errors,
                                     fit.z_values, fit.p_values)]


def write_rows(rows, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)

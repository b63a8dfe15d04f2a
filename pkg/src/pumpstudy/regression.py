"""Cross-sectional OLS and the five event-study regression specifications."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg, stats

from .errors import DegenerateRegressorError, DomainError, InsufficientEventsError, PumpStudyError, SingularDesignError
from .eventstudy import DEFAULT_WINDOWS, AbnormalPanel, WindowSet, cumulative

RANK_TOL = 1e-10
MIN_EVENTS = 20

POLICIES = ("car-raw", "dep-raw")
RESULTS_HEADER = ["column", "term", "coef", "se", "t", "p", "stars"]


@dataclass
class RegressionResult:
    terms: list[str]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r2: float
    adj_r2: float
    n: int
    rss: float = 0.0
    dropped_events: int = 0
    name: str = ""
    dependent: str = ""

    def coef(self, term: str) -> float:
        return float(self.coefficients[self.terms.index(term)])

    def se(self, term: str) -> float:
        return float(self.standard_errors[self.terms.index(term)])

    def t(self, term: str) -> float:
        return float(self.t_stats[self.terms.index(term)])

    def p(self, term: str) -> float:
        return float(self.p_values[self.terms.index(term)])


@dataclass
class ColumnFailure:
    name: str
    dependent: str
    error: str
    dropped_events: int = 0


ColumnOutcome = Union[RegressionResult, ColumnFailure]


def standardize(x, name: str = "x") -> np.ndarray:
    """Z-score with the sample (n-1) standard deviation."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise DomainError(f"standardize needs a vector of length >= 2 for {name!r}")
    sd = np.std(x, ddof=1)
    if not sd > 0:
        raise DegenerateRegressorError(name)
    return (x - x.mean()) / sd


def _t_and_p(beta: np.ndarray, se: np.ndarray, df: int) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    # a zero standard error only arises from an exact fit
    t = np.where(se > 0, t, np.where(beta == 0, 0.0, np.copysign(np.inf, beta)))
    p = 2.0 * stats.t.sf(np.abs(t), df)
    return t, np.clip(p, 0.0, 1.0)


def ols(y, X, names: Optional[Sequence[str]] = None, robust: bool = False) -> RegressionResult:
    """Least squares via a QR factorisation of the design.

    ``X`` must already include the intercept column.  Standard errors are
    classical (s^2 (X'X)^-1) unless ``robust`` is set, in which case HC1
    heteroskedasticity-consistent errors are used.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if names is None:
        names = [f"x{j}" for j in range(k)]
    names = list(names)
    if len(y) != n:
        raise DomainError(f"y has {len(y)} rows but X has {n}")
    if n <= k:
        raise DomainError(f"need more observations than terms (n={n}, k={k})")

    Q, R = np.linalg.qr(X, mode="reduced")
    col_norms = np.linalg.norm(X, axis=0)
    diag = np.abs(np.diag(R))
    bad = [names[j] for j in range(k) if col_norms[j] == 0 or diag[j] <= RANK_TOL * col_norms[j]]
    if bad:
        raise SingularDesignError(bad)

    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - k
    r_inv = linalg.solve_triangular(R, np.eye(k))
    xtx_inv = r_inv @ r_inv.T
    if robust:
        meat = (X * resid[:, None] ** 2).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / df)
    else:
        cov = xtx_inv * (rss / df)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    t, p = _t_and_p(beta, se, df)

    tss = float(np.sum((y - y.mean()) ** 2))
    if tss > 0:
        r2 = 1.0 - rss / tss
        adj = 1.0 - (1.0 - r2) * (n - 1) / df
    else:
        r2 = adj = float("nan")
    return RegressionResult(names, beta, se, t, p, r2, adj, n, rss)


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


@dataclass(frozen=True)
class RegressionSpec:
    name: str
    dependent: str  # window key
    regressors: tuple[tuple[str, str], ...]  # (kind, window key)

    def __post_init__(self):
        for kind, _ in self.regressors:
            if kind not in ("CAT", "CAR", "CAV"):
                raise DomainError(f"unknown variable kind {kind!r}")


# window keys refer to WindowSet attributes
TABLE3_SPECS = (
    RegressionSpec("(1)", "pre_event_late", (("CAT", "pre_event_late"),)),
    RegressionSpec("(2)", "dump", (("CAT", "pre_event_late"),)),
    RegressionSpec("(3)", "dump", (
        ("CAT", "pre_event_late"), ("CAT", "pump"),
        ("CAR", "pre_event_late"), ("CAR", "pump"),
        ("CAV", "pre_event_late"), ("CAV", "pump"),
    )),
    RegressionSpec("(4)", "post_dump", (("CAT", "pre_event_late"),)),
    RegressionSpec("(5)", "post_dump", (
        ("CAT", "pre_event_late"), ("CAT", "pump"), ("CAT", "dump"),
        ("CAR", "pre_event_late"), ("CAR", "pump"), ("CAR", "dump"),
        ("CAV", "pre_event_late"), ("CAV", "pump"), ("CAV", "dump"),
    )),
)


def variable_name(kind: str, windows: WindowSet, key: str) -> str:
    return f"{kind}{getattr(windows, key)}"


def event_variables(panel: AbnormalPanel, windows: WindowSet = DEFAULT_WINDOWS) -> dict[str, float]:
    """CAR (percent), CAT and CAV over every regression window for one event."""
    out = {}
    for key in ("pre_event_late", "pump", "dump", "post_dump"):
        w = getattr(windows, key)
        out[f"CAR{w}"] = 100.0 * cumulative(panel.ar, w)
        out[f"CAV{w}"] = cumulative(panel.av, w)
        if panel.at_defined:
            out[f"CAT{w}"] = cumulative(panel.at, w)
    return out


def run_spec(spec: RegressionSpec, data: dict[str, np.ndarray], windows: WindowSet = DEFAULT_WINDOWS,
             policy: str = "car-raw", robust: bool = False) -> RegressionResult:
    if policy not in POLICIES:
        raise DomainError(f"unknown standardization policy {policy!r}")
    dep = variable_name("CAR", windows, spec.dependent)
    y = data[dep]
    cols = [np.ones(len(y))]
    names = ["Intercept"]
    for kind, key in spec.regressors:
        name = variable_name(kind, windows, key)
        x = data[name]
        if kind != "CAR" or policy == "dep-raw":
            x = standardize(x, name)
        cols.append(x)
        names.append(name)
    res = ols(y, np.column_stack(cols), names, robust=robust)
    res.name = spec.name
    res.dependent = dep
    return res


def run_table3(panels: Sequence[AbnormalPanel], windows: WindowSet = DEFAULT_WINDOWS, policy: str = "car-raw",
               robust: bool = False, min_events: int = MIN_EVENTS,
               specs: Sequence[RegressionSpec] = TABLE3_SPECS) -> list[ColumnOutcome]:
    """Run every specification on the events whose abnormal tweets are defined.

    A failing column is reported as a :class:`ColumnFailure` and does not
    stop the others.
    """
    usable = sorted((p for p in panels if p.at_defined), key=lambda p: p.event_id)
    dropped = len(panels) - len(usable)
    if len(usable) < min_events:
        raise InsufficientEventsError(
            f"insufficient events: {len(usable)} usable panels (< {min_events}); {dropped} dropped for zero tweet dispersion"
        )
    rows = [event_variables(p, windows) for p in usable]
    data = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    out: list[ColumnOutcome] = []
    for spec in specs:
        try:
            res = run_spec(spec, data, windows, policy, robust)
            res.dropped_events = dropped
            out.append(res)
        except PumpStudyError as exc:
            out.append(ColumnFailure(spec.name, variable_name("CAR", windows, spec.dependent), str(exc), dropped))
    return out


def write_results_csv(path, results: Sequence[ColumnOutcome]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for res in results:
            if isinstance(res, ColumnFailure):
                continue
            for j, term in enumerate(res.terms):
                p = float(res.p_values[j])
                w.writerow([res.name, term, repr(float(res.coefficients[j])), repr(float(res.standard_errors[j])),
                            repr(float(res.t_stats[j])), repr(p), significance_stars(p)])

"""Table rendering and plot-data files."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError
from .eventstudy import Curves, write_curves
from .regression import ColumnFailure, ColumnOutcome, significance_stars

STAT_LABELS = ("Mean", "Std", "Min", "25th", "50th", "75th", "Max")


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    min: float
    p25: float
    p50: float
    p75: float
    max: float


def summary_stats(values) -> SummaryStats:
    """Mean, sample std and linear-interpolation quartiles."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if len(x) == 0:
        raise DomainError("summary_stats needs at least one value")
    std = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
    p25, p50, p75 = (float(v) for v in np.percentile(x, [25, 50, 75], method="linear"))
    return SummaryStats(float(np.mean(x)), std, float(x[0]), p25, p50, p75, float(x[-1]))


def round_half_up(x: float, places: int) -> Decimal:
    q = Decimal(1).scaleb(-places)
    d = Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP)
    if d == 0:
        d = abs(d)
    return d


def format_coef(x: float, places: int = 3) -> str:
    """Round half-up and drop trailing zeros, keeping all places when the fraction is zero.

    ``-0.470 -> "-0.47"``, ``0.325 -> "0.325"``, ``0 -> "0.000"``.
    """
    if not np.isfinite(x):
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    s = f"{round_half_up(x, places):f}"
    if "." in s:
        whole, frac = s.split(".")
        trimmed = frac.rstrip("0")
        if trimmed:
            s = f"{whole}.{trimmed}"
    return s


def format_stat(x: float, places: int = 2) -> str:
    """Summary-table style: thousands separators, no trailing zeros (``1,119.05``, ``20,439``)."""
    d = round_half_up(x, places)
    s = f"{d:,f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def render_summary_table(stats: SummaryStats, title: str = "Tweets") -> str:
    rows = [(label, format_stat(v)) for label, v in zip(STAT_LABELS, astuple(stats))]
    left = max(len("Statistics"), *(len(r[0]) for r in rows))
    right = max(len(title), *(len(r[1]) for r in rows))
    lines = [f"{'Statistics':<{left}}  {title:>{right}}"]
    lines += [f"{a:<{left}}  {b:>{right}}" for a, b in rows]
    return "\n".join(lines) + "\n"


def cell(coef: float, p: float) -> str:
    return format_coef(coef) + significance_stars(p)


def se_cell(se: float) -> str:
    return f"({format_coef(se)})"


def _term_order(results: Sequence[ColumnOutcome]) -> list[str]:
    seen = []
    for res in results:
        if isinstance(res, ColumnFailure):
            continue
        for t in res.terms:
            if t not in seen:
                seen.append(t)
    rank = {"Intercept": 0, "CAT": 1, "CAR": 2, "CAV": 3}
    return sorted(seen, key=lambda t: (rank.get(t[:3], 0) if t != "Intercept" else 0, seen.index(t)))


def render_regression_table(results: Sequence[ColumnOutcome]) -> str:
    """Fixed-width text table: coefficient with stars, standard error beneath."""
    terms = _term_order(results)
    body: list[list[str]] = [
        [""] + [r.name for r in results],
        [""] + [r.dependent for r in results],
    ]
    for term in terms:
        coef_row, se_row = [term], [""]
        for res in results:
            if isinstance(res, ColumnFailure) or term not in res.terms:
                coef_row.append("")
                se_row.append("")
                continue
            j = res.terms.index(term)
            coef_row.append(cell(res.coefficients[j], res.p_values[j]))
            se_row.append(se_cell(res.standard_errors[j]))
        body += [coef_row, se_row]
    adj, n, dropped = ["Adj. R2 (%)"], ["N"], ["Dropped events"]
    for res in results:
        if isinstance(res, ColumnFailure):
            adj.append("failed")
            n.append("")
        else:
            adj.append(format_coef(100.0 * res.adj_r2, 2))
            n.append(str(res.n))
        dropped.append(str(res.dropped_events))
    body += [adj, n, dropped]

    widths = [max(len(row[c]) for row in body) for c in range(len(body[0]))]
    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    lines = []
    for i, row in enumerate(body):
        first = f"{row[0]:<{widths[0]}}"
        rest = [f"{v:>{w}}" for v, w in zip(row[1:], widths[1:])]
        lines.append("  ".join([first] + rest).rstrip())
        if i == 1 or i == len(body) - 4:
            lines.append(rule)
    for res in results:
        if isinstance(res, ColumnFailure):
            lines.append(f"{res.name} failed: {res.error}")
    lines.append("*** p<0.01, ** p<0.05, * p<0.10; standard errors in parentheses")
    return "\n".join(lines) + "\n"


def parse_regression_table(text: str) -> dict[tuple[str, str], float]:
    """Recover ``(column, term) -> coefficient`` from a rendered table."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not set(ln) <= {"-"}]
    header = lines[0]
    columns = header.split()
    ends, pos = [], 0
    for col in columns:
        pos = header.index(col, pos) + len(col)
        ends.append(pos)
    out = {}
    for ln in lines[2:]:
        if ln[:1].isspace() or " failed: " in ln or ln.startswith(("***", "Adj. R2", "N ", "Dropped events")):
            continue
        label = ln.split()[0]
        starts = [len(label)] + ends[:-1]
        for col, a, b in zip(columns, starts, ends):
            seg = ln[a:b].strip()
            if seg:
                out[(col, label)] = float(seg.rstrip("*"))
    return out


def write_table1(path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["symbol", "events", "percent"])
        for sym, n, pct in rows:
            w.writerow([sym, n, f"{pct:.2f}"])


def write_table2(path, stats: SummaryStats) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["statistic", "tweets"])
        for label, v in zip(STAT_LABELS, astuple(stats)):
            w.writerow([label, repr(float(v))])


def write_weekly(path, weekly) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["week_start", "count"])
        for wk, n in weekly:
            w.writerow([wk.isoformat(), n])


def write_histogram(path, histogram: dict[int, int]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["events_per_symbol", "num_symbols"])
        for k in sorted(histogram):
            w.writerow([k, histogram[k]])


def emit_plot_data(out_dir, curves: Curves | None, weekly, histogram: dict[int, int]) -> list[Path]:
    """Write ``fig7_weekly.csv``, ``fig8_hist.csv`` and (when given) ``fig9_curves.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "fig7_weekly.csv", out_dir / "fig8_hist.csv"]
    write_weekly(written[0], weekly)
    write_histogram(written[1], histogram)
    if curves is not None:
        written.append(out_dir / "fig9_curves.csv")
        write_curves(written[2], curves)
    return written

"""Abnormal and cumulative abnormal returns, volume and tweets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CoverageError, DataError, DomainError
from .timeseries import MinuteSeries, RelativeWindow, as_window, log_returns

MIN_TRAINING_MINUTES = 60

PANEL_HEADER = ["tau", "ar", "av", "at"]
CURVES_HEADER = ["tau", "car_mean", "cav_mean", "cat_mean", "n_car", "n_cat"]
INDEX_HEADER = ["event_id", "at_defined", "mean_return", "mean_volume", "mean_tweets", "std_tweets", "n_valid"]


@dataclass(frozen=True)
class WindowSet:
    training: RelativeWindow = RelativeWindow(-2880, -721)
    pre_event: RelativeWindow = RelativeWindow(-720, -1)
    pre_event_late: RelativeWindow = RelativeWindow(-31, -2)
    pump: RelativeWindow = RelativeWindow(-1, 1)
    dump: RelativeWindow = RelativeWindow(2, 31)
    post_dump: RelativeWindow = RelativeWindow(32, 720)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, as_window(getattr(self, f.name)))
        ordered = self.regression_windows
        for a, b in zip(ordered, ordered[1:]):
            if a.tau2 >= b.tau1:
                raise DomainError(f"windows {a} and {b} overlap or are out of order")
        if self.training.tau2 >= self.event_grid.tau1:
            raise DomainError("training window must end before the event grid starts")

    @property
    def regression_windows(self) -> tuple[RelativeWindow, ...]:
        return (self.pre_event_late, self.pump, self.dump, self.post_dump)

    @property
    def event_grid(self) -> RelativeWindow:
        """Relative minutes on which abnormal series are reported."""
        return RelativeWindow(self.pre_event.tau1, self.post_dump.tau2)

    @property
    def data_span(self) -> RelativeWindow:
        return RelativeWindow(self.training.tau1, self.post_dump.tau2)


DEFAULT_WINDOWS = WindowSet()


@dataclass(frozen=True)
class TrainingStats:
    mean_return: float
    mean_volume: float
    mean_tweets: float
    std_tweets: float
    n_valid: int


@dataclass(frozen=True, eq=False)
class AbnormalPanel:
    event_id: str
    ar: MinuteSeries
    av: MinuteSeries
    at: MinuteSeries
    training: TrainingStats
    at_defined: bool

    @property
    def taus(self) -> np.ndarray:
        return self.ar.minutes


def training_stats(returns: MinuteSeries, volume: MinuteSeries, tweets: MinuteSeries, anchor: int,
                   window=DEFAULT_WINDOWS.training) -> TrainingStats:
    """Means over the non-gap minutes of the training window and the
    population standard deviation of the per-minute tweet counts."""
    w = as_window(window)
    first, last = anchor + w.tau1, anchor + w.tau2
    try:
        r = returns.span(first, last)
        v = volume.span(first, last)
        t = tweets.span(first, last)
    except CoverageError as exc:
        raise DataError(f"insufficient training coverage: {exc}") from None
    valid = r.present & v.present
    n_valid = int(np.count_nonzero(valid))
    if n_valid < MIN_TRAINING_MINUTES:
        raise DataError(f"insufficient training data: {n_valid} valid minutes (< {MIN_TRAINING_MINUTES})")
    tw = t.values[t.present]
    return TrainingStats(
        mean_return=float(np.mean(r.values[valid])),
        mean_volume=float(np.mean(v.values[valid])),
        mean_tweets=float(np.mean(tw)),
        std_tweets=float(np.std(tw)),
        n_valid=n_valid,
    )


def abnormal_return(r: float, stats: TrainingStats) -> float:
    return r - stats.mean_return


def abnormal_volume(v: float, stats: TrainingStats) -> float:
    return v - stats.mean_volume


def abnormal_tweets(t: float, stats: TrainingStats) -> Optional[float]:
    """Standardized tweet surprise; ``None`` when undefined (zero training dispersion)."""
    if stats.std_tweets > 0:
        return (t - stats.mean_tweets) / stats.std_tweets
    return 0.0 if t == stats.mean_tweets else None


def cumulative(series: MinuteSeries, window) -> float:
    """Inclusive sum over a relative window; gaps contribute zero."""
    w = as_window(window)
    return math.fsum(series.span(w.tau1, w.tau2).filled())


def cumulative_percent(series: MinuteSeries, window) -> float:
    return 100.0 * cumulative(series, window)


def _forward_fill(values: np.ndarray, present: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.where(present, np.arange(len(values)), 0)
    np.maximum.accumulate(idx, out=idx)
    return values[idx], np.logical_or.accumulate(present)


def prepare_event_series(close: MinuteSeries, volume: MinuteSeries, anchor: int,
                         windows: WindowSet = DEFAULT_WINDOWS) -> tuple[MinuteSeries, MinuteSeries, int]:
    """Apply the gap policy over the data span.

    Missing bars mean no trade: the last price is carried forward (return 0)
    and volume is 0.  Returns before the first observed price stay gaps.
    Also reports how many bars were actually observed in the training window.
    """
    span = windows.data_span
    first, last = anchor + span.tau1, anchor + span.tau2
    for name, s in (("close", close), ("volume", volume)):
        if not s.covers(first, last):
            raise DataError(
                f"insufficient coverage: {name} spans [{s.start_minute}, {s.end_minute}], "
                f"need [{first}, {last}]"
            )
    # one extra minute so the first return of the span is defined when available
    lead = first - 1
    if close.start_minute <= lead:
        px = close.span(lead, last)
        pv, pp = px.values, px.present
    else:
        px = close.span(first, last)
        pv = np.concatenate([[0.0], px.values])
        pp = np.concatenate([[False], px.present])
    fv, fp = _forward_fill(pv, pp)
    returns = log_returns(MinuteSeries(lead, fv, fp, "price-in-BTC"))

    vol = volume.span(first, last)
    vol_filled = MinuteSeries.full(first, vol.filled(0.0), vol.unit_label)

    tr = windows.training
    observed = int(np.count_nonzero(close.span(anchor + tr.tau1, anchor + tr.tau2).present))
    return returns, vol_filled, observed


def build_panel(event, close: MinuteSeries, volume: MinuteSeries, tweets: MinuteSeries,
                windows: WindowSet = DEFAULT_WINDOWS) -> AbnormalPanel:
    anchor = event.announce_minute
    returns, vol, observed = prepare_event_series(close, volume, anchor, windows)
    if observed < MIN_TRAINING_MINUTES:
        raise DataError(
            f"{event.event_id}: insufficient training data: {observed} observed bars (< {MIN_TRAINING_MINUTES})"
        )
    stats = training_stats(returns, vol, tweets, anchor, windows.training)

    g = windows.event_grid
    first, last = anchor + g.tau1, anchor + g.tau2
    try:
        r = returns.span(first, last)
        t = tweets.span(first, last)
    except CoverageError as exc:
        raise DataError(f"{event.event_id}: {exc}") from None
    v = vol.span(first, last)

    ar = MinuteSeries(g.tau1, r.values - stats.mean_return, r.present, "abnormal return")
    av = MinuteSeries(g.tau1, v.values - stats.mean_volume, v.present, "abnormal volume")
    at_defined = stats.std_tweets > 0
    if at_defined:
        at_vals = (t.values - stats.mean_tweets) / stats.std_tweets
        at_present = t.present
    else:
        at_present = t.present & (t.values == stats.mean_tweets)
        at_vals = np.zeros(len(t))
    at = MinuteSeries(g.tau1, at_vals, at_present, "abnormal tweets")
    return AbnormalPanel(event.event_id, ar, av, at, stats, at_defined)


@dataclass(frozen=True, eq=False)
class Curves:
    taus: np.ndarray
    car_mean: np.ndarray
    cav_mean: np.ndarray
    cat_mean: np.ndarray  # NaN where no panel has defined tweets
    n_car: int
    n_cat: int


def average_curves(panels: Sequence[AbnormalPanel]) -> Curves:
    """Cross-event means of the running CAR/CAV/CAT from the start of the event grid."""
    panels = list(panels)
    if not panels:
        raise DomainError("average_curves needs at least one panel")
    # sort so the reduction order (and thus every bit of the output) is independent of input order
    panels.sort(key=lambda p: p.event_id)
    taus = panels[0].ar.minutes
    car = np.array([np.cumsum(p.ar.filled()) for p in panels])
    cav = np.array([np.cumsum(p.av.filled()) for p in panels])
    defined = [p for p in panels if p.at_defined]
    if defined:
        cat_mean = np.array([np.cumsum(p.at.filled()) for p in defined]).mean(axis=0)
    else:
        cat_mean = np.full(len(taus), np.nan)
    return Curves(taus, car.mean(axis=0), cav.mean(axis=0), cat_mean, len(panels), len(defined))


def _fmt(x: float, present: bool = True) -> str:
    if not present or math.isnan(x):
        return ""
    return repr(float(x))


def write_panel(path, panel: AbnormalPanel) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PANEL_HEADER)
        for k, tau in enumerate(panel.taus):
            w.writerow([
                int(tau),
                _fmt(panel.ar.values[k], panel.ar.present[k]),
                _fmt(panel.av.values[k], panel.av.present[k]),
                _fmt(panel.at.values[k], panel.at.present[k]),
            ])


def write_panel_index(path, panels: Iterable[AbnormalPanel]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDEX_HEADER)
        for p in panels:
            s = p.training
            w.writerow([p.event_id, "true" if p.at_defined else "false", repr(s.mean_return),
                        repr(s.mean_volume), repr(s.mean_tweets), repr(s.std_tweets), s.n_valid])


def _read_column(rows, key) -> tuple[np.ndarray, np.ndarray]:
    present = np.array([r[key] != "" for r in rows], dtype=bool)
    values = np.array([float(r[key]) if r[key] != "" else 0.0 for r in rows])
    return values, present


def read_panel(path, event_id: str, training: TrainingStats, at_defined: bool) -> AbnormalPanel:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: empty panel")
    start = int(rows[0]["tau"])
    series = {}
    for key in ("ar", "av", "at"):
        vals, pres = _read_column(rows, key)
        series[key] = MinuteSeries(start, vals, pres)
    return AbnormalPanel(event_id, series["ar"], series["av"], series["at"], training, at_defined)


def read_panels(directory) -> list[AbnormalPanel]:
    """Load every panel listed in ``index.csv`` of a panel directory."""
    directory = Path(directory)
    panels = []
    with open(directory / "index.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            stats = TrainingStats(float(row["mean_return"]), float(row["mean_volume"]),
                                  float(row["mean_tweets"]), float(row["std_tweets"]), int(row["n_valid"]))
            eid = row["event_id"]
            panels.append(read_panel(directory / f"{eid}.csv", eid, stats, row["at_defined"] == "true"))
    return panels


def write_curves(path, curves: Curves) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVES_HEADER)
        for k, tau in enumerate(curves.taus):
            w.writerow([int(tau), _fmt(curves.car_mean[k]), _fmt(curves.cav_mean[k]),
                        _fmt(curves.cat_mean[k]), curves.n_car, curves.n_cat])

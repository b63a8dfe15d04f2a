"""Pipeline stages behind the command-line interface.

Every stage reads and writes plain files so it can be rerun on its own.
Per-event work is mapped over a process pool; results are always collected
and written in event order, so outputs do not depend on the worker count.
"""

from __future__ import annotations

import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import classifier, eventstore, eventstudy, ingestion, regression, report, synth
from .errors import InsufficientEventsError, PumpStudyError
from .eventstore import EventRecord
from .eventstudy import DEFAULT_WINDOWS, AbnormalPanel, WindowSet

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA = 2

CLASSIFICATION_FILE = "classification.csv"
TWEET_TOTALS_FILE = "tweet_totals.csv"


@dataclass
class RunConfig:
    out: Path = Path("out")
    data_dir: Optional[Path] = None
    events_file: Optional[Path] = None
    klines_dir: Optional[Path] = None
    tweets_dir: Optional[Path] = None
    threshold_rank: int = 3
    standardize_policy: str = "car-raw"
    robust_se: bool = False
    workers: int = 1
    seed: int = 0
    all_events: bool = False
    windows: WindowSet = DEFAULT_WINDOWS
    synth: dict = field(default_factory=dict)

    def resolved(self) -> "RunConfig":
        """Fill data paths from ``data_dir`` when they are not given explicitly."""
        base = self.data_dir
        return replace(
            self,
            events_file=self.events_file or (base / "events.csv" if base else None),
            klines_dir=self.klines_dir or (base / "klines" if base else None),
            tweets_dir=self.tweets_dir or (base / "tweets" if base else None),
        )


class ConfigError(PumpStudyError):
    pass


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        p = getattr(cfg, name)
        if p is None:
            raise ConfigError(f"{name} is not configured")
        if not Path(p).exists():
            raise ConfigError(f"{name} does not exist: {p}")


def _write_rows(path: Path, header: list[str], rows: Iterable[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def klines_path(klines_dir: Path, pair: str) -> Path:
    return Path(klines_dir) / f"{pair}.csv"


def tweets_path(tweets_dir: Path, event_id: str) -> Path:
    return Path(tweets_dir) / f"{event_id}.jsonl"


@lru_cache(maxsize=16)
def _load_pair(path: str, pair: str):
    report_ = ingestion.LoadReport()
    close, volume = ingestion.load_klines(path, pair, report_)
    return close, volume, tuple(report_.warnings)


def _pair_series(klines_dir: Path, pair: str):
    path = klines_path(klines_dir, pair)
    if not path.exists():
        raise FileNotFoundError(f"missing klines file for pair {pair}: {path}")
    return _load_pair(str(path), pair)


# --- classify -------------------------------------------------------------

def _classify_task(args):
    event, klines_dir, threshold = args
    try:
        _, volume, _ = _pair_series(klines_dir, event.pair)
        rep = classifier.qualify_event(volume, event.announce_minute, threshold, event.event_id)
        return rep, None
    except (PumpStudyError, OSError) as exc:
        return None, f"{event.pair}: {exc}"


def cmd_classify(cfg: RunConfig, echo=print) -> int:
    cfg = cfg.resolved()
    _require(cfg, "events_file", "klines_dir")
    events = eventstore.load_events(cfg.events_file)
    results = _map(_classify_task, [(e, cfg.klines_dir, cfg.threshold_rank) for e in events], cfg.workers)

    reports, diagnostics, classified = [], [], []
    for ev, (rep, err) in zip(events, results):
        if err is not None:
            diagnostics.append([ev.event_id, err])
            classified.append(ev.with_success(None))
            echo(f"error: {ev.event_id}: {err}", file=sys.stderr)
        else:
            reports.append(rep)
            classified.append(ev.with_success(rep.success))

    out = Path(cfg.out)
    _write_rows(out / CLASSIFICATION_FILE, classifier.REPORT_HEADER, [r.row() for r in reports])
    _write_rows(out / "classify_diagnostics.csv", ["event_id", "error"], diagnostics)
    eventstore.save_events(classified, out / "events_classified.csv")
    n_ok = sum(r.success for r in reports)
    echo(f"{n_ok} of {len(events)} successful")
    return EXIT_DATA if diagnostics else EXIT_OK


# --- study ----------------------------------------------------------------

def event_panel(event: EventRecord, close, volume, tweets: list, windows: WindowSet = DEFAULT_WINDOWS):
    """Tweet counts plus abnormal panel for one event; returns ``(panel, tweet_total)``."""
    span = windows.data_span
    counts = ingestion.tweet_minute_counts(tweets, event.symbol, event.announce_minute, span)
    panel = eventstudy.build_panel(event, close, volume, counts, windows)
    return panel, int(counts.values.sum())


def _study_task(args):
    event, klines_dir, tweets_dir, windows = args
    try:
        close, volume, _ = _pair_series(klines_dir, event.pair)
        tpath = tweets_path(tweets_dir, event.event_id)
        if not tpath.exists():
            raise FileNotFoundError(f"missing tweets file {tpath}")
        panel, total = event_panel(event, close, volume, ingestion.load_tweets(tpath), windows)
        return panel, total, None
    except (PumpStudyError, OSError) as exc:
        return None, None, str(exc)


def read_classification(path: Path) -> dict[str, bool]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {r["event_id"]: r["success"] == "true" for r in csv.DictReader(fh)}


def select_events(cfg: RunConfig, events: list[EventRecord]) -> list[EventRecord]:
    if cfg.all_events:
        return events
    path = Path(cfg.out) / CLASSIFICATION_FILE
    if not path.exists():
        raise ConfigError(f"no classification found at {path}; run classify first or pass --all-events")
    ok = read_classification(path)
    return [e for e in events if ok.get(e.event_id)]


def cmd_study(cfg: RunConfig, echo=print) -> int:
    cfg = cfg.resolved()
    _require(cfg, "events_file", "klines_dir", "tweets_dir")
    events = select_events(cfg, eventstore.load_events(cfg.events_file))
    tasks = [(e, cfg.klines_dir, cfg.tweets_dir, cfg.windows) for e in events]
    results = _map(_study_task, tasks, cfg.workers)

    out = Path(cfg.out)
    panel_dir = out / "panels"
    panel_dir.mkdir(parents=True, exist_ok=True)
    for stale in panel_dir.glob("*.csv"):
        stale.unlink()

    panels, totals, diagnostics = [], [], []
    for ev, (panel, total, err) in zip(events, results):
        if err is not None:
            diagnostics.append([ev.event_id, err])
            echo(f"skipped {ev.event_id}: {err}", file=sys.stderr)
            continue
        eventstudy.write_panel(panel_dir / f"{ev.event_id}.csv", panel)
        panels.append(panel)
        totals.append([ev.event_id, total])
    eventstudy.write_panel_index(panel_dir / "index.csv", panels)
    _write_rows(out / TWEET_TOTALS_FILE, ["event_id", "tweets"], totals)
    _write_rows(out / "study_diagnostics.csv", ["event_id", "error"], diagnostics)
    if panels:
        eventstudy.write_curves(out / "fig9_curves.csv", eventstudy.average_curves(panels))
    echo(f"{len(panels)} panels built, {len(diagnostics)} skipped")
    if events and not panels:
        return EXIT_DATA
    return EXIT_OK


# --- regress --------------------------------------------------------------

def table3_names(policy: str) -> tuple[str, str]:
    if policy == "car-raw":
        return "table3.txt", "table3_results.csv"
    return f"table3_{policy}.txt", f"table3_results_{policy}.csv"


def cmd_regress(cfg: RunConfig, echo=print) -> int:
    out = Path(cfg.out)
    if not (out / "panels" / "index.csv").exists():
        raise ConfigError(f"no panels under {out / 'panels'}; run study first")
    panels = eventstudy.read_panels(out / "panels")
    try:
        results = regression.run_table3(panels, cfg.windows, cfg.standardize_policy, cfg.robust_se)
    except InsufficientEventsError as exc:
        echo(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    text_name, csv_name = table3_names(cfg.standardize_policy)
    table = report.render_regression_table(results)
    (out / text_name).write_text(table, encoding="utf-8")
    regression.write_results_csv(out / csv_name, results)
    for res in results:
        if isinstance(res, regression.ColumnFailure):
            echo(f"column {res.name} failed: {res.error}", file=sys.stderr)
    echo(table, end="")
    return EXIT_OK


# --- report ---------------------------------------------------------------

def cmd_report(cfg: RunConfig, echo=print) -> int:
    cfg = cfg.resolved()
    _require(cfg, "events_file")
    out = Path(cfg.out)
    events = eventstore.load_events(cfg.events_file)
    cls_path = out / CLASSIFICATION_FILE
    if cls_path.exists() and not cfg.all_events:
        ok = read_classification(cls_path)
        events = [e for e in events if ok.get(e.event_id)]
    elif not cfg.all_events and any(e.success is not None for e in events):
        events = [e for e in events if e.success]
    if events:
        report.write_table1(out / "table1.csv", eventstore.per_crypto_counts(events, 20))
    else:
        report.write_table1(out / "table1.csv", [])
    hist, mean, median = eventstore.events_per_crypto_histogram(events)
    curves = None
    if (out / "panels" / "index.csv").exists():
        panels = eventstudy.read_panels(out / "panels")
        if panels:
            curves = eventstudy.average_curves(panels)
    report.emit_plot_data(out, curves, eventstore.weekly_counts(events), hist)

    totals_path = out / TWEET_TOTALS_FILE
    if totals_path.exists():
        with open(totals_path, newline="", encoding="utf-8") as fh:
            totals = [float(r["tweets"]) for r in csv.DictReader(fh)]
        if totals:
            stats = report.summary_stats(totals)
            report.write_table2(out / "table2.csv", stats)
            echo(report.render_summary_table(stats), end="")
    echo(f"{len(events)} events, {len(hist)} histogram bins, mean {mean:.2f} / median {median:g} events per symbol")
    return EXIT_OK


# --- synth ----------------------------------------------------------------

def cmd_synth(cfg: RunConfig, echo=print) -> int:
    params = dict(cfg.synth)
    params.setdefault("seed", cfg.seed)
    scfg = synth.SynthConfig.from_mapping(params)
    target = Path(cfg.data_dir or cfg.out)
    corpus = synth.generate_corpus(scfg, cfg.windows)
    synth.write_corpus(corpus, target)
    echo(f"wrote {len(corpus.events)} synthetic events to {target}")
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "study": cmd_study,
    "regress": cmd_regress,
    "report": cmd_report,
    "synth": cmd_synth,
}

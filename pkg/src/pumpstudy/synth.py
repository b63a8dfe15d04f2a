"""Seeded synthetic pump-and-dump corpora with known planted effects.

Each event gets its own random streams derived from ``(seed, stream, index)``
so a corpus is a pure function of its config regardless of how generation
is scheduled.  Generation runs in two passes: tweets first, then the
realised pre-event tweet surprise of every event is standardized across
the corpus and the return effects are planted on that standardized value.
The planted slopes are therefore exactly the population coefficients of
the corresponding cross-sectional regressions.
"""

from __future__ import annotations

import csv
import math
import string
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import CoverageError, DataError, DomainError
from .eventstore import EventRecord, save_events
from .eventstudy import DEFAULT_WINDOWS, MIN_TRAINING_MINUTES, AbnormalPanel, TrainingStats, WindowSet
from .ingestion import KlineRow, TweetRecord, matches_symbol, passes_filter, write_klines, write_tweets
from .timeseries import MinuteSeries, RelativeWindow

# 2019-02-04 00:00 UTC, a Monday
DEFAULT_START_MINUTE = 1549238400 // 60

# per-event data must reach the end of the classifier's two-day span
MARKET_SPAN = (-2881, 1439)
MIN_SYMBOL_SEPARATION = 4 * 1440
QUIET_ZONE = (-40, 40)

CHANNELS = ("BigPumpSignal", "CryptoPumpClub", "WSBCryptoPumps", "MegaPumpGroup", "PumpKings")
TEMPLATES = (
    "Big things coming for {tag} today",
    "{tag} looking ready to fly",
    "Keep an eye on {tag} tonight",
    "Just loaded up on {tag}",
    "{tag} chart is breaking out",
    "Who else is holding {tag}?",
)
TRUTH_HEADER = ["column", "term", "value"]


@dataclass(frozen=True)
class SynthConfig:
    n_events: int = 100
    seed: int = 0
    base_volatility: float = 0.002
    base_volume_mean: float = 50.0
    tweet_base_rate: float = 0.01
    beta_pre: float = 0.3
    pump_jump: float = 0.05
    dump_reversal_frac: float = 0.6
    post_dump_tweet_loading: float = -2.0
    vip_rampup_minutes: int = 720
    vip_drift: float = 0.01
    tweet_ramp_strength: float = 8.0
    pump_volume_mult: float = 40.0
    gap_prob: float = 0.002
    junk_tweet_frac: float = 0.25
    retweet_frac: float = 0.3
    spacing_minutes: int = 360
    start_minute: int = DEFAULT_START_MINUTE

    def __post_init__(self):
        if self.n_events < 1:
            raise DomainError("n_events must be >= 1")
        if not self.base_volatility > 0:
            raise DomainError("base_volatility must be positive")
        for name in ("dump_reversal_frac", "gap_prob", "junk_tweet_frac", "retweet_frac"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")
        if not 0 <= self.vip_rampup_minutes <= 720:
            raise DomainError("vip_rampup_minutes must lie in [0, 720]")
        if self.spacing_minutes < 1 or self.tweet_base_rate <= 0 or self.base_volume_mean <= 0:
            raise DomainError("spacing, tweet rate and volume mean must be positive")

    @classmethod
    def null(cls, **overrides) -> "SynthConfig":
        """Config with every planted return effect switched off."""
        base = dict(beta_pre=0.0, pump_jump=0.0, dump_reversal_frac=0.0, post_dump_tweet_loading=0.0, vip_drift=0.0)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_mapping(cls, values: dict) -> "SynthConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            if key not in kinds:
                raise DomainError(f"unknown synth parameter {key!r}")
            kw[key] = int(raw) if kinds[key] in (int, "int") else float(raw)
        return cls(**kw)


@dataclass
class MarketBlock:
    """Minute klines for one event on a contiguous grid (``present`` marks real bars)."""

    start_minute: int
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray
    present: np.ndarray

    def rows(self) -> list[KlineRow]:
        out = []
        for k in np.flatnonzero(self.present):
            out.append(KlineRow(self.start_minute + int(k), float(self.open[k]), float(self.high[k]),
                                float(self.low[k]), float(self.close[k]), float(self.volume[k])))
        return out

    def series(self) -> tuple[MinuteSeries, MinuteSeries]:
        return (MinuteSeries(self.start_minute, self.close, self.present, "price-in-BTC"),
                MinuteSeries(self.start_minute, self.volume, self.present.copy(), "base-asset volume"))


@dataclass
class PlantedTruth:
    coefficients: dict[tuple[str, str], float]
    cat_pre: dict[str, Optional[float]] = field(default_factory=dict)
    z_pre: dict[str, float] = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str, float]]:
        return [(col, term, v) for (col, term), v in self.coefficients.items()]


@dataclass
class Corpus:
    config: SynthConfig
    events: list[EventRecord]
    market: dict[str, MarketBlock]  # by event_id
    tweets: dict[str, list[TweetRecord]]  # by event_id
    truth: PlantedTruth

    def event(self, event_id: str) -> EventRecord:
        for e in self.events:
            if e.event_id == event_id:
                return e
        raise KeyError(event_id)


def _stream(seed: int, kind: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, kind, index])


def _symbols(rng: np.random.Generator, n: int) -> list[str]:
    letters = np.array(list(string.ascii_uppercase))
    out, seen = [], {"BTC"}
    while len(out) < n:
        name = "".join(rng.choice(letters, size=int(rng.integers(3, 5))))
        if name not in seen:
            seen.add(name)
            out.append(name)
    return out


def schedule(cfg: SynthConfig) -> list[EventRecord]:
    """Announcement times and target symbols.

    Symbols are drawn with Zipf-like weights among those not used within
    the last four days, so per-pair kline spans never overlap.
    """
    rng = _stream(cfg.seed, 0)
    pool = _symbols(rng, max(20, cfg.n_events // 3 + 1))
    weights = 1.0 / np.arange(1, len(pool) + 1)
    last_used = np.full(len(pool), -10**12, dtype=np.int64)
    events = []
    t = cfg.start_minute + 3 * 1440
    for k in range(cfg.n_events):
        t += cfg.spacing_minutes + int(rng.integers(0, 120))
        ok = last_used <= t - MIN_SYMBOL_SEPARATION
        w = np.where(ok, weights, 0.0)
        j = int(rng.choice(len(pool), p=w / w.sum()))
        last_used[j] = t
        sym = pool[j]
        events.append(EventRecord(
            event_id=f"E{k:05d}",
            symbol=sym,
            pair=f"{sym}BTC",
            exchange="binance",
            announce_minute=t,
            source_channel=CHANNELS[int(rng.integers(len(CHANNELS)))],
        ))
    return events


def _ramp(taus: np.ndarray, length: int, end: int = -2) -> np.ndarray:
    """0 before ``end - length``, rising linearly to 1 at ``end``, 0 after."""
    if length <= 0:
        return np.zeros(len(taus))
    x = (taus - (end - length)) / length
    return np.where((taus > end - length) & (taus <= end), x, 0.0)


def tweet_intensity(cfg: SynthConfig, exposure: float, taus: np.ndarray) -> np.ndarray:
    base = cfg.tweet_base_rate
    lam = np.full(len(taus), base)
    lam *= 1.0 + cfg.tweet_ramp_strength * exposure * _ramp(taus, cfg.vip_rampup_minutes)
    pump = (taus >= -1) & (taus <= 1)
    lam[pump] *= 1.0 + 20.0 * (1.0 + exposure)
    dump = (taus >= 2) & (taus <= 31)
    lam[dump] *= 1.0 + 5.0 * np.exp(-(taus[dump] - 1) / 10.0)
    return lam


def _tweet_text(rng: np.random.Generator, symbol: str) -> str:
    tag = ("#" if rng.random() < 0.5 else "$") + symbol
    return TEMPLATES[int(rng.integers(len(TEMPLATES)))].format(tag=tag)


def _junk_tweet(rng: np.random.Generator, symbol: str) -> tuple[str, str]:
    kind = int(rng.integers(4))
    if kind == 0:
        # tag stuffing: six tags
        others = ["#crypto", "$ETH", "#altcoin", "$BNB", "#pump"]
        return f"Top picks {' '.join(others)} ${symbol}", "en"
    if kind == 1:
        return _tweet_text(rng, symbol), "es"
    if kind == 2:
        return f"{symbol} is trending today", "en"
    return f"Watching #{symbol}X closely", "en"


def generate_tweets(cfg: SynthConfig, event: EventRecord, index: int,
                    windows: WindowSet = DEFAULT_WINDOWS) -> tuple[list[TweetRecord], np.ndarray]:
    """Tweets for one event and the matching per-minute count of valid tweets."""
    rng = _stream(cfg.seed, 1, index)
    exposure = float(rng.exponential(1.0))
    span = windows.data_span
    taus = np.arange(span.tau1, span.tau2 + 1)
    lam = tweet_intensity(cfg, exposure, taus)
    counts = rng.poisson(lam)
    junk_rate = lam * cfg.junk_tweet_frac / max(1e-12, 1.0 - cfg.junk_tweet_frac)
    junk = rng.poisson(junk_rate)
    records = []
    for k in np.flatnonzero(counts + junk):
        minute = event.announce_minute + int(taus[k])
        for _ in range(int(counts[k])):
            text = _tweet_text(rng, event.symbol)
            rt = bool(rng.random() < cfg.retweet_frac)
            if rt:
                text = f"RT @user{int(rng.integers(1000))}: {text}"
            records.append(TweetRecord(minute * 60 + int(rng.integers(60)), text, "en", rt))
        for _ in range(int(junk[k])):
            text, lang = _junk_tweet(rng, event.symbol)
            records.append(TweetRecord(minute * 60 + int(rng.integers(60)), text, lang, False))
    records.sort(key=lambda t: (t.created_at, t.text))
    # drop exact duplicates, the loader would do the same
    deduped = [t for i, t in enumerate(records) if i == 0 or (t.created_at, t.text) != (records[i - 1].created_at, records[i - 1].text)]
    valid = np.zeros(len(taus), dtype=np.int64)
    for t in deduped:
        if passes_filter(t) and matches_symbol(t.text, event.symbol):
            valid[t.minute - event.announce_minute - span.tau1] += 1
    return deduped, valid


def _cat_from_counts(counts: np.ndarray, windows: WindowSet) -> Optional[float]:
    """Cumulative abnormal tweets over the late pre-event window, by direct summation."""
    origin = windows.data_span.tau1
    tr = windows.training
    train = [float(c) for c in counts[tr.tau1 - origin: tr.tau2 - origin + 1]]
    mean = sum(train) / len(train)
    sd = math.sqrt(sum((c - mean) ** 2 for c in train) / len(train))
    if sd == 0:
        return None
    w = windows.pre_event_late
    return sum((float(c) - mean) / sd for c in counts[w.tau1 - origin: w.tau2 - origin + 1])


def generate_market(cfg: SynthConfig, event: EventRecord, index: int, z: float,
                    windows: WindowSet = DEFAULT_WINDOWS) -> MarketBlock:
    rng = _stream(cfg.seed, 2, index)
    lo, hi = MARKET_SPAN
    taus = np.arange(lo, hi + 1)
    n = len(taus)
    r = rng.normal(0.0, cfg.base_volatility, size=n)
    r[0] = 0.0

    def add(window, total):
        m = (taus >= window.tau1) & (taus <= window.tau2)
        r[m] += total / np.count_nonzero(m)

    vip_start = -cfg.vip_rampup_minutes
    late = windows.pre_event_late
    if vip_start < late.tau1 - 1 and cfg.vip_drift:
        add(RelativeWindow(vip_start, late.tau1 - 1), cfg.vip_drift)
    add(late, cfg.beta_pre * z / 100.0)
    jump = cfg.pump_jump * (0.5 + rng.random())
    add(windows.pump, 3 * jump)
    add(windows.dump, -cfg.dump_reversal_frac * 3 * jump)
    add(windows.post_dump, cfg.post_dump_tweet_loading * z / 100.0)

    p0 = 10.0 ** rng.uniform(-6.0, -4.0)
    close = p0 * np.exp(np.cumsum(r))
    open_ = np.concatenate([[close[0]], close[:-1]])
    wiggle = np.abs(rng.normal(0.0, cfg.base_volatility / 2, size=n))
    high = np.maximum(open_, close) * (1.0 + wiggle)
    low = np.minimum(open_, close) * (1.0 - wiggle)

    mult = 1.0 + 2.0 * _ramp(taus, cfg.vip_rampup_minutes)
    pump = (taus >= windows.pump.tau1) & (taus <= windows.pump.tau2)
    mult[pump] = cfg.pump_volume_mult
    dump = (taus >= windows.dump.tau1) & (taus <= windows.dump.tau2)
    mult[dump] = 1.0 + (cfg.pump_volume_mult - 1.0) * np.exp(-(taus[dump] - 1) / 6.0)
    post = (taus >= windows.post_dump.tau1) & (taus <= windows.post_dump.tau2)
    mult[post] = 1.5
    volume = cfg.base_volume_mean * mult * rng.lognormal(-0.125, 0.5, size=n)

    present = rng.random(n) >= cfg.gap_prob
    present[(taus >= QUIET_ZONE[0]) & (taus <= QUIET_ZONE[1])] = True
    present[0] = present[-1] = True
    return MarketBlock(event.announce_minute + lo, open_, high, low, close, volume, present)


def generate_corpus(cfg: SynthConfig, windows: WindowSet = DEFAULT_WINDOWS) -> Corpus:
    events = schedule(cfg)
    tweets, cats = {}, {}
    for i, ev in enumerate(events):
        recs, valid = generate_tweets(cfg, ev, i, windows)
        tweets[ev.event_id] = recs
        cats[ev.event_id] = _cat_from_counts(valid, windows)

    defined = [c for c in cats.values() if c is not None]
    if len(defined) >= 2:
        mu = sum(defined) / len(defined)
        sd = math.sqrt(sum((c - mu) ** 2 for c in defined) / (len(defined) - 1))
    else:
        mu, sd = 0.0, 0.0
    z = {eid: ((c - mu) / sd if c is not None and sd > 0 else 0.0) for eid, c in cats.items()}

    market = {ev.event_id: generate_market(cfg, ev, i, z[ev.event_id], windows) for i, ev in enumerate(events)}
    late = f"CAT{windows.pre_event_late}"
    truth = PlantedTruth(
        coefficients={
            ("(1)", late): cfg.beta_pre,
            ("(2)", late): 0.0,
            ("(4)", late): cfg.post_dump_tweet_loading,
        },
        cat_pre=cats,
        z_pre=z,
    )
    return Corpus(cfg, events, market, tweets, truth)


def pair_rows(corpus: Corpus) -> dict[str, list[KlineRow]]:
    """Kline rows merged per trading pair, in minute order."""
    out: dict[str, list[KlineRow]] = {}
    for ev in sorted(corpus.events, key=lambda e: e.announce_minute):
        out.setdefault(ev.pair, []).extend(corpus.market[ev.event_id].rows())
    return out


def write_truth(path, truth: PlantedTruth) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for col, term, v in truth.rows():
            w.writerow([col, term, repr(float(v))])


def read_truth(path) -> dict[tuple[str, str], float]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {(r["column"], r["term"]): float(r["value"]) for r in csv.DictReader(fh)}


def write_corpus(corpus: Corpus, directory) -> Path:
    """Write ``events.csv``, ``klines/<PAIR>.csv``, ``tweets/<event_id>.jsonl`` and ``truth.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_events(corpus.events, directory / "events.csv")
    for pair, rows in sorted(pair_rows(corpus).items()):
        write_klines(directory / "klines" / f"{pair}.csv", rows)
    for ev in corpus.events:
        write_tweets(directory / "tweets" / f"{ev.event_id}.jsonl", corpus.tweets[ev.event_id])
    write_truth(directory / "truth.csv", corpus.truth)
    return directory


def config_dict(cfg: SynthConfig) -> dict:
    return asdict(cfg)


def brute_force_panel(event: EventRecord, rows: Sequence[KlineRow], tweets: Sequence[TweetRecord],
                      windows: WindowSet = DEFAULT_WINDOWS) -> AbnormalPanel:
    """Direct minute-by-minute translation of the abnormality formulas.

    Used only as a test oracle for :func:`pumpstudy.eventstudy.build_panel`.
    Applies the same gap policy: a missing bar carries the previous close
    forward and has zero volume.
    """
    a = event.announce_minute
    bars = {}
    for row in rows:
        bars[row.open_time] = row
    if not bars:
        raise DataError(f"{event.event_id}: no kline rows")
    lo_tau, hi_tau = windows.data_span.tau1, windows.data_span.tau2
    if min(bars) > a + lo_tau or max(bars) < a + hi_tau:
        raise DataError(f"{event.event_id}: insufficient coverage")

    price = {}
    last = None
    if a + lo_tau - 1 in bars:
        last = bars[a + lo_tau - 1].close
    for tau in range(lo_tau, hi_tau + 1):
        if a + tau in bars:
            last = bars[a + tau].close
        price[tau] = last

    ret, vol, cnt = {}, {}, {}
    for tau in range(lo_tau, hi_tau + 1):
        prev = price[tau - 1] if tau - 1 >= lo_tau else (bars[a + tau - 1].close if a + tau - 1 in bars else None)
        ret[tau] = math.log(price[tau] / prev) if price[tau] is not None and prev is not None else None
        vol[tau] = bars[a + tau].volume if a + tau in bars else 0.0
        cnt[tau] = 0
    for t in tweets:
        tau = t.created_at // 60 - a
        if lo_tau <= tau <= hi_tau and passes_filter(t) and matches_symbol(t.text, event.symbol):
            cnt[tau] += 1

    tr = windows.training
    observed = sum(1 for tau in range(tr.tau1, tr.tau2 + 1) if a + tau in bars)
    if observed < MIN_TRAINING_MINUTES:
        raise DataError(f"{event.event_id}: insufficient training data")
    train_r, train_v, train_t = [], [], []
    for tau in range(tr.tau1, tr.tau2 + 1):
        if ret[tau] is not None:
            train_r.append(ret[tau])
            train_v.append(vol[tau])
        train_t.append(cnt[tau])
    if len(train_r) < MIN_TRAINING_MINUTES:
        raise DataError(f"{event.event_id}: insufficient training data")
    mean_r = sum(train_r) / len(train_r)
    mean_v = sum(train_v) / len(train_v)
    mean_t = sum(train_t) / len(train_t)
    sd_t = math.sqrt(sum((x - mean_t) ** 2 for x in train_t) / len(train_t))

    g = windows.event_grid
    ar, av, at = [], [], []
    for tau in range(g.tau1, g.tau2 + 1):
        if ret[tau] is None:
            raise CoverageError(f"{event.event_id}: undefined return at tau={tau}")
        ar.append(ret[tau] - mean_r)
        av.append(vol[tau] - mean_v)
        if sd_t > 0:
            at.append((cnt[tau] - mean_t) / sd_t)
        else:
            at.append(0.0 if cnt[tau] == mean_t else None)
    stats = TrainingStats(mean_r, mean_v, mean_t, sd_t, len(train_r))
    return AbnormalPanel(
        event.event_id,
        MinuteSeries.full(g.tau1, ar, "abnormal return"),
        MinuteSeries.full(g.tau1, av, "abnormal volume"),
        MinuteSeries.from_values(g.tau1, at, "abnormal tweets"),
        stats,
        sd_t > 0,
    )

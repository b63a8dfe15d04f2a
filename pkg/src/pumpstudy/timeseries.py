"""Contiguous one-minute grids.

A :class:`MinuteSeries` stores one value per minute starting at
``start_minute`` (integer epoch minutes, UTC).  Missing minutes are
tracked by an explicit boolean mask rather than a sentinel value, so a
gap can never be mistaken for a zero price or volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CoverageError, DomainError


@dataclass(frozen=True)
class RelativeWindow:
    """Inclusive window ``[tau1, tau2]`` of minutes relative to an event."""

    tau1: int
    tau2: int

    def __post_init__(self):
        if self.tau1 > self.tau2:
            raise DomainError(f"window start {self.tau1} is after its end {self.tau2}")

    def __len__(self):
        return self.tau2 - self.tau1 + 1

    def __iter__(self):
        # allows ``a, b = window``
        yield self.tau1
        yield self.tau2

    def __str__(self):
        return f"({self.tau1},{self.tau2})"

    def contains(self, tau: int) -> bool:
        return self.tau1 <= tau <= self.tau2

    def overlaps(self, other: "RelativeWindow") -> bool:
        return self.tau1 <= other.tau2 and other.tau1 <= self.tau2


def as_window(window) -> RelativeWindow:
    if isinstance(window, RelativeWindow):
        return window
    tau1, tau2 = window
    return RelativeWindow(int(tau1), int(tau2))


@dataclass(frozen=True, eq=False)
class MinuteSeries:
    start_minute: int
    values: np.ndarray
    present: np.ndarray
    unit_label: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        present = np.array(self.present, dtype=bool)
        if values.ndim != 1 or values.shape != present.shape:
            raise DomainError("values and presence mask must be 1-d and of equal length")
        if len(values) < 1:
            raise DomainError("a MinuteSeries needs at least one minute")
        values[~present] = 0.0
        values.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "start_minute", int(self.start_minute))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "present", present)

    @classmethod
    def from_values(cls, start_minute: int, values: Iterable[Optional[float]], unit_label: str = ""):
        """Build a series from a sequence where ``None`` (or NaN) marks a gap."""
        vals = []
        mask = []
        for v in values:
            if v is None or (isinstance(v, float) and math.isnan(v)):
                vals.append(0.0)
                mask.append(False)
            else:
                vals.append(float(v))
                mask.append(True)
        return cls(start_minute, np.array(vals), np.array(mask, dtype=bool), unit_label)

    @classmethod
    def full(cls, start_minute: int, values: Sequence[float], unit_label: str = ""):
        values = np.asarray(values, dtype=np.float64)
        return cls(start_minute, values, np.ones(len(values), dtype=bool), unit_label)

    def __len__(self):
        return len(self.values)

    @property
    def end_minute(self) -> int:
        """Last minute covered (inclusive)."""
        return self.start_minute + len(self.values) - 1

    @property
    def minutes(self) -> np.ndarray:
        return np.arange(self.start_minute, self.end_minute + 1, dtype=np.int64)

    @property
    def n_gaps(self) -> int:
        return int(len(self.present) - np.count_nonzero(self.present))

    def gap_minutes(self) -> list[int]:
        return [self.start_minute + int(k) for k in np.flatnonzero(~self.present)]

    def to_list(self) -> list[Optional[float]]:
        return [float(v) if p else None for v, p in zip(self.values, self.present)]

    def filled(self, fill: float = 0.0) -> np.ndarray:
        """Values with gaps replaced by ``fill``."""
        out = self.values.copy()
        out[~self.present] = fill
        return out

    def covers(self, first: int, last: int) -> bool:
        return self.start_minute <= first and last <= self.end_minute

    def value_at(self, minute: int) -> Optional[float]:
        k = minute - self.start_minute
        if not 0 <= k < len(self.values):
            raise CoverageError(f"minute {minute} outside [{self.start_minute}, {self.end_minute}]")
        return float(self.values[k]) if self.present[k] else None

    def span(self, first: int, last: int) -> "MinuteSeries":
        """Sub-series over absolute minutes ``[first, last]``."""
        if first > last:
            raise DomainError(f"empty span [{first}, {last}]")
        if not self.covers(first, last):
            missing = []
            if first < self.start_minute:
                missing.append(f"[{first}, {min(last, self.start_minute - 1)}]")
            if last > self.end_minute:
                missing.append(f"[{max(first, self.end_minute + 1)}, {last}]")
            raise CoverageError(
                f"series covers [{self.start_minute}, {self.end_minute}]; missing {' and '.join(missing)}"
            )
        i = first - self.start_minute
        j = last - self.start_minute + 1
        return MinuteSeries(first, self.values[i:j], self.present[i:j], self.unit_label)

    def rebased(self, start_minute: int) -> "MinuteSeries":
        return MinuteSeries(start_minute, self.values, self.present, self.unit_label)

    def equals(self, other: "MinuteSeries") -> bool:
        return (
            self.start_minute == other.start_minute
            and np.array_equal(self.present, other.present)
            and np.array_equal(self.values, other.values)
        )


def log_returns(prices: MinuteSeries) -> MinuteSeries:
    """One-minute log returns.

    Output minute ``m`` holds ``ln(p[m] / p[m-1])``, so the result starts
    one minute after ``prices`` and is one element shorter.  A pair that
    touches a gap produces a gap.
    """
    if len(prices) < 2:
        raise DomainError("log returns need at least two prices")
    bad = prices.present & (prices.values <= 0)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise DomainError(
            f"non-positive price {prices.values[k]!r} at minute {prices.start_minute + k}"
        )
    p = prices.values
    ok = prices.present[1:] & prices.present[:-1]
    out = np.zeros(len(p) - 1)
    out[ok] = np.log(p[1:][ok] / p[:-1][ok])
    return MinuteSeries(prices.start_minute + 1, out, ok, "log return")


def slice_relative(series: MinuteSeries, anchor: int, window) -> MinuteSeries:
    """Inclusive sub-series ``[anchor + tau1, anchor + tau2]``."""
    w = as_window(window)
    return series.span(anchor + w.tau1, anchor + w.tau2)


def chunk_sums(series: MinuteSeries, anchor: int, width: int) -> list[tuple[int, float]]:
    """Sum the series over fixed-width chunks aligned so one chunk starts at ``anchor``.

    Chunks tile the grid in both directions from the anchor; partial chunks
    at either edge are dropped.  Gaps count as zero.
    """
    if width < 1:
        raise DomainError(f"chunk width must be >= 1, got {width}")
    # first chunk start >= series start that is congruent to anchor mod width
    first = series.start_minute + (anchor - series.start_minute) % width
    n_chunks = (series.end_minute - first + 1) // width
    if n_chunks <= 0:
        return []
    offset = first - series.start_minute
    block = series.filled()[offset : offset + n_chunks * width].reshape(n_chunks, width)
    sums = [math.fsum(row) for row in block]
    return [(first + c * width, s) for c, s in enumerate(sums)]

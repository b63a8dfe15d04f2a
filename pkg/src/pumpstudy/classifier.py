"""Success qualification by five-minute volume ranking."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError, DomainError
from .timeseries import MinuteSeries, RelativeWindow, chunk_sums, slice_relative

QUALIFY_SPAN = RelativeWindow(-1440, 1439)
CHUNK_WIDTH = 5

REPORT_HEADER = ["event_id", "rank", "event_chunk_volume", "total_chunks", "success"]


@dataclass(frozen=True)
class SuccessReport:
    event_id: str
    event_chunk_volume: float
    rank: int
    total_chunks: int
    success: bool
    threshold_rank: int = 3

    def row(self) -> list[str]:
        return [self.event_id, str(self.rank), repr(self.event_chunk_volume), str(self.total_chunks),
                "true" if self.success else "false"]


def rank_of(target: float, sums) -> int:
    """Competition rank of ``target`` among ``sums`` (descending; ties share the better rank)."""
    return 1 + sum(1 for s in sums if s > target)


def qualify_event(volume: MinuteSeries, announce_minute: int, threshold_rank: int = 3,
                  event_id: str = "") -> SuccessReport:
    """Rank the five-minute volume chunk starting at the announcement among all
    chunks in the surrounding two days; the event succeeds when it ranks within
    ``threshold_rank``.
    """
    if threshold_rank < 1:
        raise DomainError(f"threshold_rank must be >= 1, got {threshold_rank}")
    span = slice_relative(volume, announce_minute, QUALIFY_SPAN)
    if not span.present.any():
        raise DataError(f"{event_id or 'event'}: no volume data in the qualification span")
    chunks = chunk_sums(span, announce_minute, CHUNK_WIDTH)
    sums = [s for _, s in chunks]
    event_sum = dict(chunks)[announce_minute]
    rank = rank_of(event_sum, sums)
    return SuccessReport(
        event_id=event_id,
        event_chunk_volume=event_sum,
        rank=rank,
        total_chunks=len(chunks),
        success=rank <= threshold_rank,
        threshold_rank=threshold_rank,
    )

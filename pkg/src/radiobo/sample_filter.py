"""Quality-variance filter for 6 s binned measurements.

Quality readings in [0, 1] are scaled to percent before taking the
population variance, so thresholds such as 35 or 67 are on a 0..2500 scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .channel import BinReading
from .geo import GeoPoint


class InsufficientDataError(ValueError):
    pass


class CalibrationFailedError(RuntimeError):
    """First-sample calibration ran out of retakes.

    Carries every attempted record and the filter state with the last
    escalated threshold so the caller can keep flying with it.
    """

    def __init__(self, records, state):
        super().__init__(f"first sample not accepted after {len(records)} measurements")
        self.records = records
        self.state = state


@dataclass(frozen=True)
class SampleRecord:
    location: GeoPoint
    timestamp: float
    mean_power_db: float
    quality_variance: float
    accepted: bool | None = None


@dataclass(frozen=True)
class FilterState:
    threshold: float = 35.0
    escalation_factor: float = 2.0
    rejected_count: int = 0

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.escalation_factor <= 1:
            raise ValueError("escalation_factor must exceed 1")


def summarize_arrays(power_db, quality, location: GeoPoint, t: float) -> SampleRecord:
    power_db = np.asarray(power_db, dtype=float)
    quality = np.asarray(quality, dtype=float)
    if power_db.size < 2:
        raise InsufficientDataError(f"need at least 2 bins, got {power_db.size}")
    return SampleRecord(
        location=location,
        timestamp=float(t),
        mean_power_db=float(np.mean(power_db)),
        quality_variance=float(np.var(100.0 * quality)),
    )


def summarize(bins: Sequence[BinReading], location: GeoPoint, t: float) -> SampleRecord:
    return summarize_arrays([b.power_db for b in bins], [b.quality for b in bins], location, t)


def evaluate(record: SampleRecord, state: FilterState) -> tuple[SampleRecord, FilterState]:
    ok = record.quality_variance <= state.threshold
    if not ok:
        state = replace(state, rejected_count=state.rejected_count + 1)
    return replace(record, accepted=ok), state


def calibrate_first_sample(
    sampler: Callable[[], SampleRecord],
    state: FilterState,
    max_retakes: int = 10,
) -> tuple[SampleRecord, FilterState, list[SampleRecord]]:
    """Measure until a sample passes, multiplying the threshold after each failure.

    ``sampler`` performs one full stationary measurement. Returns the accepted
    record, the state with the frozen threshold, and all attempts in order
    (the last one is the accepted record). Calibration retakes do not count
    toward ``rejected_count``.
    """
    attempts: list[SampleRecord] = []
    threshold = state.threshold
    for k in range(max_retakes + 1):
        rec = sampler()
        ok = rec.quality_variance <= threshold
        rec = replace(rec, accepted=ok)
        attempts.append(rec)
        if ok:
            return rec, replace(state, threshold=threshold), attempts
        if k < max_retakes:
            threshold *= state.escalation_factor
    raise CalibrationFailedError(attempts, replace(state, threshold=threshold))

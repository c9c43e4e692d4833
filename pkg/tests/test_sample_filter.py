import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radiobo.channel import BinReading, ChannelModel, sample_bins
from radiobo.geo import GeoPoint
from radiobo.sample_filter import (
    CalibrationFailedError,
    FilterState,
    InsufficientDataError,
    SampleRecord,
    calibrate_first_sample,
    evaluate,
    summarize,
)

HERE = GeoPoint(35.7275, -78.696)


def record(var, power=-60.0):
    return SampleRecord(HERE, 0.0, power, var)


def sequence_sampler(variances):
    it = iter(variances)
    return lambda: record(next(it))


def test_summarize_constant_stream():
    bins = [BinReading(-60.0, 0.4)] * 10
    rec = summarize(bins, HERE, 12.0)
    assert rec.quality_variance == 0.0
    assert rec.mean_power_db == -60.0
    assert rec.timestamp == 12.0
    assert rec.accepted is None


def test_summarize_half_and_half():
    bins = [BinReading(-60.0, 0.0), BinReading(-60.0, 1.0)] * 5
    assert summarize(bins, HERE, 0.0).quality_variance == pytest.approx(2500.0)


def test_summarize_needs_two_bins():
    with pytest.raises(InsufficientDataError):
        summarize([BinReading(-60.0, 0.5)], HERE, 0.0)


def test_fade_burst_exceeds_lenient_threshold():
    m = ChannelModel(HERE, model_kind="log-distance", tx_power_db=-45.0, saturation_db=-25.0,
                     noise_floor_db=-85.0, shadowing_std=0.0, fade_prob=0.5, fade_depth_db=30.0)
    bins = sample_bins(m, HERE, 60, np.random.default_rng(11))
    faded = sum(b.power_db < -60 for b in bins)
    p = faded / len(bins)
    hand = p * (1 - p) * (100 * 30 / 60) ** 2
    rec = summarize(bins, HERE, 0.0)
    assert rec.quality_variance == pytest.approx(hand, rel=1e-9)
    assert rec.quality_variance > 67


@pytest.mark.parametrize(
    "var,threshold,accepted",
    [(34.9, 35.0, True), (35.0, 35.0, True), (35.1, 35.0, False), (60.0, 67.0, True)],
)
def test_evaluate_boundaries(var, threshold, accepted):
    rec, state = evaluate(record(var), FilterState(threshold))
    assert rec.accepted is accepted
    assert state.rejected_count == (0 if accepted else 1)
    assert state.threshold == threshold


@given(st.floats(0, 200), st.floats(-120, 0), st.floats(-120, 0))
def test_decision_ignores_power(var, p1, p2):
    s = FilterState(35.0)
    assert evaluate(record(var, p1), s)[0].accepted == evaluate(record(var, p2), s)[0].accepted


def test_calibrate_accepts_first():
    rec, state, attempts = calibrate_first_sample(sequence_sampler([10.0]), FilterState(35.0))
    assert rec.accepted and len(attempts) == 1
    assert state.threshold == 35.0


def test_calibrate_escalates_once():
    rec, state, attempts = calibrate_first_sample(sequence_sampler([50.0, 48.0]), FilterState(35.0, 2.0))
    assert rec.quality_variance == 48.0
    assert state.threshold == 70.0
    assert [a.accepted for a in attempts] == [False, True]
    assert state.rejected_count == 0


def test_calibrate_exhausts_budget():
    with pytest.raises(CalibrationFailedError) as info:
        calibrate_first_sample(sequence_sampler(itertools.repeat(1e12)), FilterState(35.0, 2.0), max_retakes=10)
    assert len(info.value.records) == 11
    assert info.value.state.threshold == 35.0 * 2**10


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=12), st.floats(1.1, 4.0), st.floats(1.0, 100.0))
def test_calibrated_threshold_is_geometric(variances, factor, initial):
    try:
        _, state, attempts = calibrate_first_sample(
            sequence_sampler(variances + [0.0]), FilterState(initial, factor), max_retakes=len(variances)
        )
    except CalibrationFailedError:
        pytest.fail("a zero-variance sample is always accepted")
    k = len(attempts) - 1
    assert state.threshold == pytest.approx(initial * factor**k, rel=1e-12)


def test_acceptance_rates_at_fixed_seed():
    base = dict(tx_location=HERE, model_kind="log-distance", tx_power_db=-45.0, saturation_db=-25.0,
                noise_floor_db=-85.0, shadowing_std=1.0, fade_depth_db=30.0)
    rng = np.random.default_rng(5)
    clean = ChannelModel(**base, fade_prob=0.0)
    dirty = ChannelModel(**base, fade_prob=0.3)
    st_ = FilterState(35.0)
    ok_clean = [evaluate(summarize(sample_bins(clean, HERE, 60, rng), HERE, 0), st_)[0].accepted for _ in range(50)]
    ok_dirty = [evaluate(summarize(sample_bins(dirty, HERE, 60, rng), HERE, 0), st_)[0].accepted for _ in range(50)]
    assert all(ok_clean)
    assert not any(ok_dirty)

import json

import pytest
from hypothesis import given, strategies as st

from pcapctl.heartbeat import (
    NS,
    Heartbeat,
    HeartbeatStream,
    OrderingError,
    beat_to_line,
    parse_lines,
    read_replay,
)


def stream_with(timestamps_s):
    s = HeartbeatStream()
    for t in timestamps_s:
        s.ingest(Heartbeat(ts_ns=round(t * NS)))
    return s


class TestIngest:
    def test_single_beat_no_frequency(self):
        s = stream_with([0.0])
        sample = s.aggregate(1.0)
        assert sample.stale
        assert sample.progress == 0.0

    def test_two_beats_give_reciprocal(self):
        s = stream_with([0.0, 0.1])
        sample = s.aggregate(1.0)
        assert not sample.stale
        assert sample.progress == pytest.approx(10.0)

    def test_out_of_order_rejected(self):
        s = stream_with([0.5])
        with pytest.raises(OrderingError):
            s.ingest(Heartbeat(ts_ns=round(0.4 * NS)))

    def test_equal_timestamps_allowed(self):
        s = stream_with([0.5, 0.5, 0.6])
        # zero-length interval contributes no frequency
        sample = s.aggregate(1.0)
        assert sample.progress == pytest.approx(10.0)


class TestAggregate:
    def test_uniform_spacing(self):
        s = stream_with([i * 0.04 for i in range(26)])
        sample = s.aggregate(1.01)
        assert sample.progress == pytest.approx(25.0)

    def test_median_of_mixed_intervals(self):
        # intervals 0.1, 0.1, 1.0 -> frequencies 10, 10, 1 -> median 10
        s = stream_with([0.0, 0.1, 0.2, 1.2])
        sample = s.aggregate(1.5)
        assert sample.progress == pytest.approx(10.0)

    def test_carry_over_when_window_empty(self):
        s = stream_with([i * 0.04 for i in range(26)])
        first = s.aggregate(1.04)
        assert first.progress == pytest.approx(25.0)
        second = s.aggregate(2.04)
        assert second.stale
        assert second.progress == pytest.approx(25.0)

    def test_straddling_interval_belongs_to_later_window(self):
        # beats at 0.95 and 1.05: the 0.1 s interval counts in window 2
        s = stream_with([0.85, 0.95, 1.05])
        w1 = s.aggregate(1.0)
        assert w1.progress == pytest.approx(10.0)
        w2 = s.aggregate(2.0)
        assert not w2.stale
        assert w2.progress == pytest.approx(10.0)

    def test_window_end_must_advance(self):
        s = stream_with([0.1])
        s.aggregate(1.0)
        with pytest.raises(OrderingError):
            s.aggregate(1.0)

    def test_median_even_count_is_mean_of_middle(self):
        # intervals 0.1, 0.1, 0.2, 0.2 -> {10, 10, 5, 5} -> median 7.5
        s = stream_with([0.0, 0.1, 0.2, 0.4, 0.6])
        sample = s.aggregate(1.0)
        assert sample.progress == pytest.approx(7.5)


class TestMedianProperties:
    def test_single_outlier_does_not_move_aggregate(self):
        base = [i * 0.1 for i in range(8)]
        clean = stream_with(base)
        ref = clean.aggregate(2.0).progress
        # inject one long interval at the end
        dirty = stream_with(base + [base[-1] + 1.5])
        assert dirty.aggregate(3.0).progress == pytest.approx(ref)

    @given(st.lists(st.floats(min_value=0.01, max_value=0.5),
                    min_size=2, max_size=12))
    def test_permutation_invariance(self, intervals):
        def build(order):
            ts, acc = [], 0.0
            for iv in order:
                acc += iv
                ts.append(acc)
            s = stream_with([0.0] + ts)
            return s.aggregate(acc + 1.0).progress

        assert build(intervals) == pytest.approx(build(list(reversed(intervals))))

    def test_every_beat_counts_once(self):
        # same beats split over two windows vs one window: interval
        # multisets agree in union
        beats = [i * 0.25 for i in range(9)]
        split = stream_with(beats)
        a = split.aggregate(1.0)
        b = split.aggregate(2.25)
        assert a.progress == pytest.approx(4.0)
        assert b.progress == pytest.approx(4.0)


class TestWireFormat:
    def test_round_trip_line(self):
        beat = Heartbeat(ts_ns=123456789)
        beats, bad = parse_lines([beat_to_line(beat)])
        assert bad == 0
        assert beats == [beat]

    def test_malformed_lines_counted_not_fatal(self):
        lines = [
            '{"ts_ns": 1}',
            "not json",
            '{"wrong_key": 2}',
            '{"ts_ns": "three"}',
            "",
            '{"ts_ns": 4}',
        ]
        beats, bad = parse_lines(lines)
        assert [b.ts_ns for b in beats] == [1, 4]
        assert bad == 3

    def test_replay_file(self, tmp_path):
        path = tmp_path / "beats.jsonl"
        path.write_text("\n".join(json.dumps({"ts_ns": i * 40_000_000})
                                  for i in range(50)) + "\n")
        beats, bad = read_replay(path)
        assert bad == 0
        assert len(beats) == 50

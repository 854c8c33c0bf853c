"""Interval metric computations against hand-derived values and batch oracles."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manetsim.metrics import (IntervalMetrics, MetricHistory, MetricSample,
                              NetworkState, classify_state, compute_idd,
                              windowed_average)
from oracles import batch_metrics, random_trace


def make_sample(idd=0.0, stt=10.0, por=0.0, plr=0.0, n_packets=9,
                t_start=0.0, delta=0.9):
    return MetricSample(t_start, t_start + delta, idd, stt, por, plr, n_packets)


def feed(engine, records):
    """Play an arrival-ordered trace into the engine, closing at boundaries."""
    samples = []
    for seq, send_time, arrival_time in records:
        while arrival_time >= engine.t_end:
            samples.append(engine.close_interval())
        engine.record_packet(seq, send_time, arrival_time)
    return samples


class TestComputeIdd:
    def test_equal_spacing_cancels(self):
        snd = {1: 0.0, 2: 1.0}
        rcv = {1: 0.5, 2: 1.5}
        assert compute_idd(snd, rcv, 1, 2) == 0.0

    def test_hand_evaluated_three_packets(self):
        snd = {1: 0.0, 2: 1.0, 3: 2.0}
        rcv = {1: 0.1, 2: 1.6, 3: 2.7}
        # pair terms: (1.5 - 1.0) = 0.5 and (1.1 - 1.0) = 0.1; divisor 3
        assert compute_idd(snd, rcv, 1, 3) == pytest.approx(0.2, abs=1e-12)

    def test_missing_middle_packet_invalidates_both_pairs(self):
        snd = {1: 0.0, 2: 1.0, 3: 2.0}
        rcv = {1: 0.1, 3: 2.3}
        assert compute_idd(snd, rcv, 1, 3) == 0.0

    def test_corrected_divisor_differs_only_in_divisor(self):
        snd = {1: 0.0, 2: 1.0, 3: 2.0}
        rcv = {1: 0.1, 2: 1.6, 3: 2.7}
        literal = compute_idd(snd, rcv, 1, 3, literal_divisor=True)
        corrected = compute_idd(snd, rcv, 1, 3, literal_divisor=False)
        assert literal == pytest.approx(0.6 / 3)
        assert corrected == pytest.approx(0.6 / 2)

    def test_corrected_divisor_no_valid_pairs_is_zero(self):
        snd = {1: 0.0, 2: 1.0, 3: 2.0}
        rcv = {1: 0.1, 3: 2.3}
        assert compute_idd(snd, rcv, 1, 3, literal_divisor=False) == 0.0

    def test_start_after_end_rejected(self):
        with pytest.raises(ValueError):
            compute_idd({}, {}, 5, 4)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 30),
           st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
    def test_shift_invariance(self, seed, shift):
        rng = random.Random(seed)
        records = random_trace(rng, max_packets=60)
        snd = {r[0]: r[1] for r in records}
        rcv = {r[0]: r[2] for r in records}
        if not snd:
            return
        lo, hi = min(snd), max(snd)
        base = compute_idd(snd, rcv, lo, hi)
        shifted = compute_idd({k: v + shift for k, v in snd.items()},
                              {k: v + shift for k, v in rcv.items()}, lo, hi)
        assert shifted == pytest.approx(base, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=1, max_value=60),
           st.floats(min_value=0.0, max_value=5.0, allow_nan=False))
    def test_constant_delay_gives_zero(self, n, delay):
        snd = {i: 0.37 * i for i in range(1, n + 1)}
        rcv = {i: t + delay for i, t in snd.items()}
        assert compute_idd(snd, rcv, 1, n) == pytest.approx(0.0, abs=1e-9)


class TestIntervalCounters:
    def test_first_packet_has_no_previous(self):
        engine = IntervalMetrics()
        engine.record_packet(1, 0.0, 0.1)
        assert engine.n_packets == 1
        assert engine.n_out_of_order == 0

    def test_gap_greater_than_one_counts_out_of_order(self):
        engine = IntervalMetrics()
        for seq, t in ((1, 0.1), (2, 0.2), (4, 0.3)):
            engine.record_packet(seq, 0.0, t)
        assert engine.n_out_of_order == 1

    def test_retransmission_overwrites_record(self):
        engine = IntervalMetrics()
        engine.record_packet(1, 0.0, 0.1)
        engine.record_packet(1, 0.5, 0.6)
        assert engine.send_times[1] == 0.5
        assert engine.arrival_times[1] == 0.6

    def test_por_worked_example(self):
        engine = IntervalMetrics()
        for i, seq in enumerate((1, 2, 4, 3, 5)):
            engine.record_packet(seq, seq * 0.01, 0.1 + i * 0.01)
        sample, _ = engine.close_interval()
        assert sample.por == pytest.approx(2 / 5)

    def test_por_zero_for_in_order_arrivals(self):
        engine = IntervalMetrics()
        for i, seq in enumerate((1, 2, 3)):
            engine.record_packet(seq, seq * 0.01, 0.1 + i * 0.01)
        sample, _ = engine.close_interval()
        assert sample.por == 0.0

    def test_por_single_packet_is_zero(self):
        engine = IntervalMetrics()
        engine.record_packet(1, 0.0, 0.1)
        sample, _ = engine.close_interval()
        assert sample.por == 0.0

    def test_stt_nine_packets_in_default_interval(self):
        engine = IntervalMetrics()
        for seq in range(1, 10):
            engine.record_packet(seq, seq * 0.05, seq * 0.05 + 0.02)
        sample, _ = engine.close_interval()
        assert sample.stt == pytest.approx(10.0)

    def test_stt_empty_interval_is_zero(self):
        engine = IntervalMetrics()
        sample, _ = engine.close_interval()
        assert sample.stt == 0.0

    def test_windowed_average_smooths_consecutive_intervals(self):
        assert windowed_average([10.0, 20.0]) == pytest.approx(15.0)
        assert windowed_average([]) == 0.0

    def test_plr_all_received_is_zero(self):
        engine = IntervalMetrics()
        for seq in range(1, 11):
            engine.record_packet(seq, seq * 0.01, seq * 0.01 + 0.02)
        sample, _ = engine.close_interval()
        assert sample.plr == 0.0

    def test_plr_counts_sequence_gap_census(self):
        # highest advances by 10 while only 8 packets arrive -> 0.2
        engine = IntervalMetrics()
        arrived = (1, 2, 3, 4, 5, 6, 7, 10)
        for i, seq in enumerate(arrived):
            engine.record_packet(seq, seq * 0.01, 0.1 + i * 0.01)
        sample, _ = engine.close_interval()
        assert sample.plr == pytest.approx(0.2)

    def test_plr_zero_when_no_new_highest(self):
        engine = IntervalMetrics()
        sample, _ = engine.close_interval()
        assert sample.plr == 0.0

    def test_interval_boundaries_are_exact_multiples(self):
        engine = IntervalMetrics(delta=0.9)
        for k in range(1, 1001):
            engine.close_interval()
            assert engine.t_start == k * 0.9


class TestClassification:
    def full_history(self, idd=0.001, stt=10.0, por=0.01, plr=0.01, n=20):
        history = MetricHistory(n)
        for _ in range(n):
            history.add(make_sample(idd, stt, por, plr))
        return history

    def test_empty_interval_is_disconnected(self):
        sample = make_sample(stt=0.0, n_packets=0)
        assert classify_state(sample, self.full_history()) is NetworkState.DISCONNECTED

    def test_empty_history_defaults_to_normal(self):
        assert classify_state(make_sample(), MetricHistory()) is NetworkState.NORMAL

    def test_congestion_signature(self):
        history = self.full_history(idd=0.001, stt=10.0)
        sample = make_sample(idd=0.002, stt=5.0)
        assert classify_state(sample, history) is NetworkState.CONGESTED

    def test_high_por_signals_route_change(self):
        history = self.full_history(por=0.01)
        sample = make_sample(por=0.05)
        assert classify_state(sample, history) is NetworkState.ROUTE_CHANGE

    def test_high_plr_signals_channel_error(self):
        history = self.full_history(plr=0.01)
        sample = make_sample(plr=0.05)
        assert classify_state(sample, history) is NetworkState.CHANNEL_ERROR

    def test_within_band_is_normal(self):
        history = self.full_history(idd=0.001, stt=10.0, por=0.01, plr=0.01)
        sample = make_sample(idd=0.0012, stt=8.0, por=0.012, plr=0.012)
        assert classify_state(sample, history) is NetworkState.NORMAL

    def test_priority_congested_beats_route_change(self):
        history = self.full_history()
        sample = make_sample(idd=0.01, stt=1.0, por=0.9, plr=0.9)
        assert classify_state(sample, history) is NetworkState.CONGESTED

    def test_disconnected_wins_over_everything(self):
        history = self.full_history()
        sample = make_sample(idd=0.01, stt=0.0, por=0.0, plr=0.9, n_packets=0)
        assert classify_state(sample, history) is NetworkState.DISCONNECTED

    def test_classification_is_pure(self):
        history = self.full_history()
        sample = make_sample(idd=0.01, stt=1.0)
        results = {classify_state(sample, history) for _ in range(10)}
        assert len(results) == 1

    def test_disconnected_intervals_do_not_enter_history(self):
        engine = IntervalMetrics()
        engine.record_packet(1, 0.0, 0.1)
        engine.close_interval()
        before = len(engine.history)
        engine.close_interval()  # empty interval
        assert len(engine.history) == before


class TestStreamingMatchesBatch:
    def run_trace(self, seed, literal=True):
        rng = random.Random(seed)
        records = random_trace(rng, max_packets=400)
        horizon = max((r[2] for r in records), default=0.0)
        n_intervals = int(horizon / 0.9) + 2
        engine = IntervalMetrics(literal_divisor=literal)
        index = 0
        streamed = []
        for k in range(n_intervals):
            t_end = (k + 1) * 0.9
            while index < len(records) and records[index][2] < t_end:
                seq, send_time, arrival_time = records[index]
                engine.record_packet(seq, send_time, arrival_time)
                index += 1
            sample, _ = engine.close_interval()
            streamed.append(sample)
        expected = batch_metrics(records, 0.9, n_intervals, literal)
        return streamed, expected

    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("literal", [True, False])
    def test_incremental_equals_batch(self, seed, literal):
        streamed, expected = self.run_trace(seed, literal)
        assert len(streamed) == len(expected)
        for sample, (idd, stt, por, plr, n_packets) in zip(streamed, expected):
            assert sample.idd == pytest.approx(idd, abs=1e-9)
            assert sample.stt == pytest.approx(stt, abs=1e-9)
            assert sample.por == pytest.approx(por, abs=1e-9)
            assert sample.plr == pytest.approx(plr, abs=1e-9)
            assert sample.n_packets == n_packets

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 30))
    def test_ratios_stay_in_unit_interval(self, seed):
        rng = random.Random(seed)
        records = random_trace(rng, max_packets=200)
        engine = IntervalMetrics()
        for sample, _ in feed(engine, records):
            assert 0.0 <= sample.por <= 1.0
            assert 0.0 <= sample.plr <= 1.0
            assert sample.stt >= 0.0


class TestBottleneckScenario:
    """Scripted single-bottleneck trace: queue buildup must look congested."""

    def build(self):
        engine = IntervalMetrics()
        samples = []
        states = []
        seq = 1
        send_spacing = 0.03
        # quiescent phase: constant one-way delay
        t = 0.0
        while t < 9.0:
            engine.record_packet(seq, t, t + 0.02)
            seq += 1
            t += send_spacing
            while t + 0.02 >= engine.t_end:
                sample, state = engine.close_interval()
                samples.append(sample)
                states.append(state)
        # bottleneck onset at known time: delay ramps, arrivals thin out
        delay = 0.02
        while t < 16.0:
            delay += 0.012
            engine.record_packet(seq, t, t + delay)
            seq += 1
            t += send_spacing * 4
            while t + delay >= engine.t_end:
                sample, state = engine.close_interval()
                samples.append(sample)
                states.append(state)
        return samples, states

    def test_buildup_produces_a_congested_interval(self):
        _, states = self.build()
        assert NetworkState.CONGESTED in states

    def test_congested_phase_median_idd_exceeds_quiet_phase(self):
        import statistics
        samples, _ = self.build()
        quiet = [s.idd for s in samples if s.t_end <= 9.0]
        congested = [s.idd for s in samples if s.t_start >= 9.0]
        assert statistics.median(congested) > statistics.median(quiet)

"""Receiver-side per-interval congestion metrics and network-state classification.

Four metrics are computed over tumbling intervals of length delta (default
0.9 s): inter-packet delay difference (IDD), short-term throughput (STT),
packet out-of-order ratio (POR) and packet loss ratio (PLR).  Each closed
interval is classified into one network state, which the receiver feeds back
to the sender.
"""

from __future__ import annotations

import statistics
from collections import deque
from dataclasses import dataclass
from enum import Enum

DEFAULT_DELTA = 0.9
DEFAULT_HISTORY = 20
DEFAULT_BAND = 0.3


class NetworkState(Enum):
    NORMAL = "normal"
    CONGESTED = "congested"
    ROUTE_CHANGE = "route_change"
    CHANNEL_ERROR = "channel_error"
    DISCONNECTED = "disconnected"


@dataclass(frozen=True)
class MetricSample:
    """One closed interval's metric values over [t_start, t_end)."""

    t_start: float
    t_end: float
    idd: float
    stt: float
    por: float
    plr: float
    n_packets: int


def compute_idd(send_times, arrival_times, st, ed, literal_divisor=True):
    """Average inter-packet delay difference over packet numbers st..ed.

    For each consecutive pair (i, i+1) where both packets have a send and an
    arrival record, accumulates (A_{i+1} - A_i) - (S_{i+1} - S_i).  In literal
    mode the sum is divided by (ed - st + 1) even when some pairs were
    invalid; corrected mode divides by the number of valid pairs instead.
    Returns 0.0 when nothing valid was accumulated.
    """
    if st > ed:
        raise ValueError(f"start packet {st} after end packet {ed}")
    total = 0.0
    valid_pairs = 0
    for i in range(st, ed):
        if i in send_times and i in arrival_times and (i + 1) in send_times and (i + 1) in arrival_times:
            total += (arrival_times[i + 1] - arrival_times[i]) - (send_times[i + 1] - send_times[i])
            valid_pairs += 1
    divisor = (ed - st + 1) if literal_divisor else valid_pairs
    if divisor <= 0:
        return 0.0
    return total / divisor


def windowed_average(values):
    """Smoothed metric over a report window: plain average of interval values."""
    values = list(values)
    if not values:
        return 0.0
    return sum(values) / len(values)


class MetricHistory:
    """Sliding window of recent samples per metric, with medians.

    DISCONNECTED intervals must not be added; callers enforce that.
    """

    METRICS = ("idd", "stt", "por", "plr")

    def __init__(self, maxlen=DEFAULT_HISTORY):
        self._windows = {name: deque(maxlen=maxlen) for name in self.METRICS}

    def add(self, sample):
        for name in self.METRICS:
            self._windows[name].append(getattr(sample, name))

    def median(self, name):
        window = self._windows[name]
        if not window:
            return None
        return statistics.median(window)

    def __len__(self):
        return len(self._windows["idd"])


def classify_state(sample, history, band=DEFAULT_BAND):
    """Classify one closed interval, priority-ordered.

    1. no packets at all -> DISCONNECTED
    2. IDD high and STT low -> CONGESTED
    3. POR high -> ROUTE_CHANGE
    4. PLR high -> CHANNEL_ERROR
    5. otherwise NORMAL

    High/low are relative to the history median: high means above
    (1+band) * median, low means below (1-band) * median.  With no history
    the interval is NORMAL unless empty.
    """
    if sample.n_packets == 0:
        return NetworkState.DISCONNECTED

    def high(name, value):
        med = history.median(name)
        return med is not None and value > (1.0 + band) * med

    def low(name, value):
        med = history.median(name)
        return med is not None and value < (1.0 - band) * med

    if high("idd", sample.idd) and low("stt", sample.stt):
        return NetworkState.CONGESTED
    if high("por", sample.por):
        return NetworkState.ROUTE_CHANGE
    if high("plr", sample.plr):
        return NetworkState.CHANNEL_ERROR
    return NetworkState.NORMAL


class IntervalMetrics:
    """Streaming per-interval metric engine fed by the receiver.

    Packets are recorded as they arrive; close_interval() is called at each
    tumbling boundary (exact multiples of delta from ``start``) and yields the
    interval's MetricSample plus its classified NetworkState.
    """

    def __init__(self, delta=DEFAULT_DELTA, history_len=DEFAULT_HISTORY,
                 band=DEFAULT_BAND, literal_divisor=True, start=0.0):
        if delta <= 0:
            raise ValueError("interval length must be positive")
        self.delta = delta
        self.band = band
        self.literal_divisor = literal_divisor
        self.start = start
        self.history = MetricHistory(history_len)
        self.send_times = {}
        self.arrival_times = {}
        self.sizes = {}
        self.interval_index = 0
        self.last_received_seq = None
        self.highest_seq = 0
        self.reorder_times = []
        self._open_interval()

    def _open_interval(self):
        # Boundaries are start + k*delta, multiplied out so repeated closes
        # cannot drift by accumulated rounding.
        self.t_start = self.start + self.interval_index * self.delta
        self.n_packets = 0
        self.n_out_of_order = 0
        self.byte_count = 0
        self.min_seq = None
        self.max_seq = None
        self.highest_seq_at_open = self.highest_seq

    @property
    def t_end(self):
        return self.start + (self.interval_index + 1) * self.delta

    def record_packet(self, seq, send_time, arrival_time, size=0):
        """Record one received packet; retransmissions overwrite by seq.

        A duplicate of an already-recorded packet only refreshes that
        packet's record: it is not a new distinct reception, so it does not
        touch the interval counters or the out-of-order rule's notion of
        the previously received packet.  Returns True for first receptions,
        False for duplicates.
        """
        duplicate = seq in self.arrival_times
        self.send_times[seq] = send_time
        self.arrival_times[seq] = arrival_time
        self.sizes[seq] = size
        if duplicate:
            return False
        self.n_packets += 1
        self.byte_count += size
        if self.last_received_seq is not None and seq - self.last_received_seq > 1:
            self.n_out_of_order += 1
            self.reorder_times.append(arrival_time)
        self.last_received_seq = seq
        if self.min_seq is None or seq < self.min_seq:
            self.min_seq = seq
        if self.max_seq is None or seq > self.max_seq:
            self.max_seq = seq
        if seq > self.highest_seq:
            self.highest_seq = seq
        return True

    def close_interval(self, now=None):
        """Close the current interval; returns (MetricSample, NetworkState)."""
        if now is not None and now < self.t_end:
            raise ValueError(f"interval [{self.t_start}, {self.t_end}) not elapsed at {now}")
        if self.n_packets > 0:
            idd = compute_idd(self.send_times, self.arrival_times,
                              self.min_seq, self.max_seq, self.literal_divisor)
        else:
            idd = 0.0
        stt = self.n_packets / self.delta
        por = self.n_out_of_order / self.n_packets if self.n_packets else 0.0
        expected = self.highest_seq - self.highest_seq_at_open
        if expected > 0:
            plr = min(1.0, max(0.0, (expected - self.n_packets) / expected))
        else:
            plr = 0.0
        sample = MetricSample(self.t_start, self.t_end, idd, stt, por, plr, self.n_packets)
        state = classify_state(sample, self.history, self.band)
        if state is not NetworkState.DISCONNECTED:
            self.history.add(sample)
        self.interval_index += 1
        self._open_interval()
        return sample, state

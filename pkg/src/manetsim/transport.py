"""Reliable sliding-window transport shared by the TCP, ADTCP and M-ADTCP senders.

Windows are counted in packets.  Every data segment is acknowledged;
acknowledgements carry a cumulative ack number plus the receiver's latest
per-interval network-state feedback, which the configured sender policy
consumes.  Flows are pre-established: there is no handshake or teardown.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .metrics import IntervalMetrics, MetricSample, NetworkState


@dataclass
class TransportConfig:
    packet_size: int = 1000
    ack_size: int = 40
    rto_min: float = 1.0
    rto_max: float = 60.0
    rtt_alpha: float = 0.125
    rtt_beta: float = 0.25
    ssthresh_init: float = 32.0
    max_rto_backoffs: int = 12
    delta: float = 0.9
    history_len: int = 20
    band: float = 0.3
    literal_idd_divisor: bool = True
    carry_payload: bool = False
    debug_checks: bool = False


@dataclass
class Segment:
    """Wire unit for both directions; ACKs reuse the same shape."""

    flow: str
    kind: str
    seq: int = 0
    size: int = 0
    send_time: float = 0.0
    payload: bytes | None = None
    ack_no: int = 0
    state: NetworkState | None = None
    sample: MetricSample | None = None
    interval_id: int | None = None
    retransmit: bool = False


class Sender:
    """Sliding-window sender with Reno-style baseline congestion control.

    The policy object owns the congestion window limit (``cwl``) and reacts
    to receiver feedback; everything else (slow start, congestion avoidance,
    fast retransmit, RTO backoff, Karn's rule) is shared baseline machinery.
    """

    def __init__(self, sim, net, flow, src, dst, policy, cfg, trace=None):
        self.sim = sim
        self.net = net
        self.flow = flow
        self.src = src
        self.dst = dst
        self.policy = policy
        self.cfg = cfg
        self.trace = trace

        self.cwnd = 1.0
        self.ssthresh = cfg.ssthresh_init
        self.cwl = policy.initial_cwl
        self.srtt = None
        self.rttvar = None
        self.rto = cfg.rto_min
        self.next_seq = 1
        self.unacked = {}
        self.last_ack = 0
        self.dup_acks = 0
        self.app_buffer = bytearray()
        self.bytes_submitted = 0
        self.greedy = False
        self.growth_frozen = False
        self.probing = False
        self.failed = False
        self.segments_sent = 0
        self.retransmissions = 0
        self.rtt_samples = 0
        self._rto_backoffs = 0
        self._frozen = None
        self._rto_event = None
        self._probe_event = None

    # -- application side ----------------------------------------------------

    def submit(self, data):
        """Append application bytes to the outgoing stream."""
        self.app_buffer.extend(data)
        self.bytes_submitted += len(data)
        self.pump()

    def set_greedy(self):
        """Keep the send buffer logically non-empty for the whole run."""
        self.greedy = True
        self.pump()

    # -- window machinery ------------------------------------------------------

    @property
    def inflight(self):
        return len(self.unacked)

    def window(self):
        w = self.cwnd if self.cwl is None else min(self.cwnd, self.cwl)
        return max(1, int(w))

    def pump(self):
        """Emit data segments while the window and the app buffer allow."""
        if self.failed or self.probing:
            return
        while self.inflight < self.window():
            if not self._emit_next():
                break
        if self.cfg.debug_checks:
            self._check_invariants()

    def _emit_next(self):
        if self.app_buffer:
            chunk = bytes(self.app_buffer[:self.cfg.packet_size])
            del self.app_buffer[:len(chunk)]
            size = len(chunk)
            payload = chunk if self.cfg.carry_payload else None
        elif self.greedy:
            size = self.cfg.packet_size
            payload = None
        else:
            return False
        segment = Segment(self.flow, "data", seq=self.next_seq, size=size,
                          send_time=self.sim.now, payload=payload)
        self.next_seq += 1
        self.unacked[segment.seq] = [segment, self.sim.now, False]
        self.segments_sent += 1
        self.net.submit(self.flow + ".data", self.src, self.dst, size, segment)
        if self._rto_event is None:
            self._arm_rto()
        self._trace("send", segment.seq)
        return True

    # -- RTT / RTO ------------------------------------------------------------

    def update_rtt(self, sample):
        """Fold one clean RTT sample into srtt/rttvar and recompute the RTO."""
        if self.srtt is None:
            self.srtt = sample
            self.rttvar = sample / 2.0
        else:
            self.srtt = (1.0 - self.cfg.rtt_alpha) * self.srtt + self.cfg.rtt_alpha * sample
            self.rttvar = (1.0 - self.cfg.rtt_beta) * self.rttvar \
                + self.cfg.rtt_beta * abs(self.srtt - sample)
        self.rto = min(max(self.srtt + 4.0 * self.rttvar, self.cfg.rto_min), self.cfg.rto_max)
        self.rtt_samples += 1
        return self.srtt, self.rttvar, self.rto

    def _arm_rto(self):
        if self.probing:
            return
        if self._rto_event is not None:
            self._rto_event.cancel()
        self._rto_event = self.sim.schedule_in(self.rto, self._on_rto, label="rto")

    def _cancel_rto(self):
        if self._rto_event is not None:
            self._rto_event.cancel()
            self._rto_event = None

    def _on_rto(self):
        self._rto_event = None
        if self.failed or self.probing or not self.unacked:
            return
        self._rto_backoffs += 1
        if self._rto_backoffs > self.cfg.max_rto_backoffs:
            self.failed = True
            self._cancel_rto()
            self._trace("failed", 0)
            return
        self.ssthresh = max(self.cwnd / 2.0, 2.0)
        self.cwnd = 1.0
        self.rto = min(self.rto * 2.0, self.cfg.rto_max)
        self.retransmit_oldest()
        self._trace("rto", self.last_ack + 1)

    def restart_rto_timer(self):
        if self.unacked and not self.probing:
            self._arm_rto()

    # -- retransmission ----------------------------------------------------------

    def retransmit_oldest(self):
        """Resend the earliest unacked segment (Karn-marked); restarts the timer."""
        if not self.unacked:
            return False
        seq = min(self.unacked)
        entry = self.unacked[seq]
        segment = entry[0]
        segment.send_time = self.sim.now
        segment.retransmit = True
        entry[1] = self.sim.now
        entry[2] = True
        self.retransmissions += 1
        self.net.submit(self.flow + ".data", self.src, self.dst, segment.size, segment)
        if not self.probing:
            self._arm_rto()
        self._trace("retransmit", seq)
        return True

    # -- probe mode (DISCONNECTED) ---------------------------------------------

    def enter_probe_mode(self):
        """Freeze window state and probe periodically until anything is acked."""
        if self.probing or self.failed:
            return
        self.probing = True
        self._frozen = (self.cwnd, self.ssthresh, self.rto)
        self._cancel_rto()
        self._send_probe()

    def _send_probe(self):
        if not self.probing or self.failed:
            return
        if self.unacked:
            self.retransmit_oldest()
        else:
            self._emit_next()
        self._probe_event = self.sim.schedule_in(self.policy.config.probe_interval,
                                                 self._send_probe, label="probe")

    def _exit_probe_mode(self):
        self.probing = False
        if self._probe_event is not None:
            self._probe_event.cancel()
            self._probe_event = None
        if self._frozen is not None:
            self.cwnd, self.ssthresh, self.rto = self._frozen
            self._frozen = None
        if self.unacked:
            self._arm_rto()

    # -- acknowledgements ---------------------------------------------------------

    def on_ack_segment(self, segment):
        if self.failed:
            return
        ack_no = segment.ack_no
        if ack_no > self.last_ack:
            self._on_new_ack(ack_no)
        elif ack_no == self.last_ack and self.unacked:
            self.dup_acks += 1
            if self.dup_acks == 3:
                self._fast_retransmit()
        if segment.state is not None:
            self.policy.on_feedback(self, segment.state, segment.interval_id)
        self.pump()

    def _on_new_ack(self, ack_no):
        sample_sent_at = None
        for seq in sorted(self.unacked):
            if seq > ack_no:
                break
            _, sent_at, retransmitted = self.unacked.pop(seq)
            if not retransmitted:
                sample_sent_at = sent_at
        if sample_sent_at is not None:
            self.update_rtt(self.sim.now - sample_sent_at)
        self.last_ack = ack_no
        self.dup_acks = 0
        self._rto_backoffs = 0
        if self.probing:
            self._exit_probe_mode()
        elif not self.growth_frozen:
            if self.cwnd < self.ssthresh:
                self.cwnd += 1.0
            else:
                self.cwnd += 1.0 / self.cwnd
            if self.cwl is not None:
                self.cwnd = min(self.cwnd, self.cwl)
        if self.unacked:
            self._arm_rto()
        else:
            self._cancel_rto()
        self._trace("ack", ack_no)

    def _fast_retransmit(self):
        self.ssthresh = max(self.cwnd / 2.0, 2.0)
        self.cwnd = self.ssthresh
        if self.cwl is not None:
            self.cwnd = min(self.cwnd, self.cwl)
        self.retransmit_oldest()
        self._trace("fast_retransmit", self.last_ack + 1)

    # -- diagnostics -----------------------------------------------------------

    def _trace(self, event, seq):
        if self.trace is not None:
            cwl = "" if self.cwl is None else self.cwl
            self.trace.append((self.sim.now, event, seq,
                               round(self.cwnd, 6), cwl, round(self.rto, 6)))

    def _check_invariants(self):
        assert self.cwnd >= 1.0, f"cwnd {self.cwnd} below 1"
        if self.cwl is not None:
            assert self.cwnd <= self.cwl + 1e-9, f"cwnd {self.cwnd} above CWL {self.cwl}"
        assert self.inflight <= self.window(), \
            f"inflight {self.inflight} exceeds window {self.window()}"
        assert self.cfg.rto_min <= self.rto <= self.cfg.rto_max, f"rto {self.rto} out of bounds"


class Receiver:
    """In-order reassembly plus the per-interval metric engine and feedback."""

    def __init__(self, sim, net, flow, node, peer, cfg, start=0.0):
        self.sim = sim
        self.net = net
        self.flow = flow
        self.node = node
        self.peer = peer
        self.cfg = cfg
        self.engine = IntervalMetrics(delta=cfg.delta, history_len=cfg.history_len,
                                      band=cfg.band,
                                      literal_divisor=cfg.literal_idd_divisor,
                                      start=start)
        self.expected = 1
        self.reorder_buffer = {}
        self.stream = bytearray()
        self.bytes_released = 0
        self.segments_released = 0
        self.duplicates = 0
        self.arrivals = []
        self.arrival_seqs = []
        self.intervals = []
        self.last_feedback = None
        self._acked_since_close = False
        self.closing_enabled = False

    def start(self):
        """Begin interval bookkeeping; closes fire at exact delta multiples."""
        self.closing_enabled = True
        self.sim.schedule(self.engine.t_end, self._on_interval_close, label="interval_close")

    def on_data(self, segment):
        now = self.sim.now
        if self.engine.record_packet(segment.seq, segment.send_time, now, segment.size):
            self.arrivals.append(now)
            self.arrival_seqs.append(segment.seq)
        if segment.seq == self.expected:
            self._release(segment)
            while self.expected in self.reorder_buffer:
                self._release(self.reorder_buffer.pop(self.expected))
        elif segment.seq > self.expected:
            self.reorder_buffer[segment.seq] = segment
        else:
            self.duplicates += 1
        self._send_ack()

    def _release(self, segment):
        if segment.payload is not None:
            self.stream.extend(segment.payload)
        self.bytes_released += segment.size
        self.segments_released += 1
        self.expected += 1

    def _send_ack(self):
        ack = Segment(self.flow, "ack", size=self.cfg.ack_size,
                      send_time=self.sim.now, ack_no=self.expected - 1)
        if self.last_feedback is not None:
            ack.state, ack.sample, ack.interval_id = self.last_feedback
        self.net.submit(self.flow + ".ack", self.node, self.peer, ack.size, ack)
        self._acked_since_close = True

    def _on_interval_close(self):
        sample, state = self.engine.close_interval(self.sim.now)
        self.intervals.append((sample, state))
        self.last_feedback = (state, sample, len(self.intervals) - 1)
        if not self._acked_since_close:
            # keep the feedback channel alive through idle intervals
            self._send_ack()
        self._acked_since_close = False
        self.sim.schedule(self.engine.t_end, self._on_interval_close, label="interval_close")


class TransportFlow:
    """One pre-established reliable flow between two nodes."""

    def __init__(self, sim, net, name, src, dst, policy, cfg=None, trace=None):
        cfg = cfg or TransportConfig()
        self.name = name
        self.cfg = cfg
        self.sender = Sender(sim, net, name, src, dst, policy, cfg, trace=trace)
        self.receiver = Receiver(sim, net, name, dst, src, cfg)
        net.attach(name + ".data", self.receiver.on_data)
        net.attach(name + ".ack", self.sender.on_ack_segment)

    def start(self, greedy=False):
        self.receiver.start()
        if greedy:
            self.sender.set_greedy()

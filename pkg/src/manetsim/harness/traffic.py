"""Traffic sources and single-run assembly for a scenario."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import KeyedRng, RngStream, Simulator
from ..net import DROP_CAUSES, Network, RandomWaypointMobility, new_audit
from ..policies import PolicyConfig, make_policy
from ..transport import TransportConfig, TransportFlow

SUMMARY_METRICS = ("inter_arrival_delay", "idd", "por", "stt")


class CbrSource:
    """Constant-bit-rate datagram source; one packet every size*8/rate seconds.

    Packets are unreliable: they are routed hop by hop and never retransmitted.
    Emission times are k * spacing, multiplied out to avoid float drift.
    """

    def __init__(self, sim, net, flow, src, dst, rate, packet_size, duration):
        self.sim = sim
        self.net = net
        self.flow = flow
        self.src = src
        self.dst = dst
        self.packet_size = packet_size
        self.duration = duration
        self.spacing = packet_size * 8.0 / rate
        self.generated = 0
        net.audit.setdefault(flow, new_audit())

    def start(self):
        self._schedule(1)

    def _schedule(self, k):
        t = k * self.spacing
        if t < self.duration:
            self.sim.schedule(t, self._emit, k, label="cbr")

    def _emit(self, k):
        self.generated += 1
        self.net.submit(self.flow, self.src, self.dst, self.packet_size, k)
        self._schedule(k + 1)


@dataclass
class RunResult:
    """Outcome of one seeded simulation run."""

    policy: str
    seed: int
    intervals: list = field(default_factory=list)
    arrivals: list = field(default_factory=list)
    reorder_times: list = field(default_factory=list)
    audit: dict = field(default_factory=dict)
    inflight: dict = field(default_factory=dict)
    sender_stats: dict = field(default_factory=dict)
    failed: bool = False

    def window_summary(self, window_start, window_end):
        """Per-run summary over the measurement window; None when undefined.

        Inter-arrival delay is the mean gap between consecutive first
        receptions in the window; POR is the window's out-of-order census
        over the packets received in it; IDD and STT average the interval
        samples whose start lies inside the window.
        """
        summary = dict.fromkeys(SUMMARY_METRICS)
        times = [t for t in self.arrivals if window_start <= t < window_end]
        if len(times) >= 2:
            summary["inter_arrival_delay"] = (times[-1] - times[0]) / (len(times) - 1)
        received = sum(1 for t in self.arrivals if window_start <= t < window_end)
        if received:
            jumps = sum(1 for t in self.reorder_times if window_start <= t < window_end)
            summary["por"] = jumps / received
        samples = [s for s, _ in self.intervals
                   if window_start <= s.t_start < window_end]
        if samples:
            summary["idd"] = sum(s.idd for s in samples) / len(samples)
            summary["stt"] = sum(s.stt for s in samples) / len(samples)
        return summary

    def conservation_ok(self):
        """Sent = delivered + dropped + in-flight, for every flow."""
        for flow, counters in self.audit.items():
            dropped = sum(counters[cause] for cause in DROP_CAUSES)
            if counters["submitted"] != counters["delivered"] + dropped + self.inflight[flow]:
                return False
        return True


def run_scenario(scenario, seed, policy_override=None, transport_trace=None,
                 topology_log=None):
    """Execute one seeded run of a scenario; returns a RunResult.

    policy_override forces every FTP flow's sender policy, which is how the
    comparison harness pairs runs under identical seeds.
    """
    sim = Simulator()
    mobility = RandomWaypointMobility(
        scenario.nodes, scenario.field_width, scenario.field_height,
        scenario.max_speed, RngStream(seed, "mobility"), pause=scenario.pause)
    net = Network(
        sim, mobility, KeyedRng(seed, "mac"),
        range_m=scenario.range_m,
        bit_rate=scenario.bit_rate,
        queue_limit=scenario.queue_limit,
        retry_limit=scenario.retry_limit,
        p0=scenario.p0,
        mac_overhead=scenario.mac_overhead,
        slot=scenario.slot,
        cw_min=scenario.cw_min,
        cw_max=scenario.cw_max,
        discovery_hop_latency=scenario.discovery_hop_latency,
        discovery_retry=scenario.discovery_retry,
        topology_log=topology_log)
    net.start_mobility(scenario.mobility_tick)

    policy_cfg = PolicyConfig(cwl_fixed=scenario.cwl_fixed, cwl_min=scenario.cwl_min,
                              cwl_max=scenario.cwl_max,
                              probe_interval=scenario.probe_interval)
    transport_flows = []
    run_policy = "none"
    for index, flow_cfg in enumerate(scenario.flows):
        name = f"flow{index}"
        if flow_cfg.kind == "cbr":
            source = CbrSource(sim, net, name, flow_cfg.src, flow_cfg.dst,
                               flow_cfg.rate, flow_cfg.packet_size, scenario.duration)
            source.start()
        else:
            tag = policy_override or flow_cfg.policy
            packet_size = flow_cfg.packet_size or scenario.packet_size
            tcfg = TransportConfig(
                packet_size=packet_size,
                rto_min=scenario.rto_min,
                rto_max=scenario.rto_max,
                delta=scenario.delta,
                history_len=scenario.history_len,
                band=scenario.band,
                literal_idd_divisor=scenario.literal_idd_divisor)
            flow = TransportFlow(sim, net, name, flow_cfg.src, flow_cfg.dst,
                                 make_policy(tag, policy_cfg), tcfg,
                                 trace=transport_trace)
            flow.start(greedy=True)
            transport_flows.append(flow)
            run_policy = tag

    sim.run_until(scenario.duration)

    result = RunResult(policy=run_policy, seed=seed)
    result.audit = {flow: dict(counters) for flow, counters in net.audit.items()}
    result.inflight = {flow: net.inflight(flow) for flow in net.audit}
    if transport_flows:
        measured = transport_flows[0]
        receiver = measured.receiver
        result.intervals = list(receiver.intervals)
        result.arrivals = list(receiver.arrivals)
        result.reorder_times = list(receiver.engine.reorder_times)
        result.failed = measured.sender.failed
        result.sender_stats = {
            "segments_sent": measured.sender.segments_sent,
            "retransmissions": measured.sender.retransmissions,
            "rtt_samples": measured.sender.rtt_samples,
            "bytes_released": measured.receiver.bytes_released,
        }
    return result

"""Sender-side congestion policies: plain TCP, ADTCP and M-ADTCP.

Policies consume the receiver's per-interval network-state feedback.  TCP
ignores it; ADTCP reacts per state with a fixed congestion window limit;
M-ADTCP adds an AIMD-adapted window limit on top of the ADTCP reactions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .metrics import NetworkState

POLICY_TAGS = ("tcp", "adtcp", "madtcp")


@dataclass
class PolicyConfig:
    cwl_fixed: int = 4
    cwl_min: int = 2
    cwl_max: int = 8
    probe_interval: float = 2.0

    def __post_init__(self):
        if not (1 <= self.cwl_min <= self.cwl_fixed <= self.cwl_max):
            raise ValueError(
                f"need cwl_min <= cwl_fixed <= cwl_max, got "
                f"({self.cwl_min}, {self.cwl_fixed}, {self.cwl_max})")
        if self.probe_interval <= 0:
            raise ValueError("probe_interval must be positive")


class TcpPolicy:
    """Baseline policy: receiver feedback is discarded entirely."""

    name = "tcp"

    def __init__(self, config=None):
        self.config = config or PolicyConfig()

    @property
    def initial_cwl(self):
        return None

    def on_feedback(self, sender, state, interval_id):
        pass


class AdtcpPolicy:
    """Fixed window limit; one state-driven reaction per receiver interval."""

    name = "adtcp"

    def __init__(self, config=None):
        self.config = config or PolicyConfig()
        self._last_interval = -1

    @property
    def initial_cwl(self):
        return self.config.cwl_fixed

    def on_feedback(self, sender, state, interval_id):
        if interval_id is None or interval_id <= self._last_interval:
            return
        self._last_interval = interval_id
        self.react(sender, state)

    def react(self, sender, state):
        if state is NetworkState.CONGESTED:
            sender.growth_frozen = False
            sender.ssthresh = max(sender.cwnd / 2.0, 2.0)
            sender.cwnd = sender.ssthresh
        elif state is NetworkState.CHANNEL_ERROR:
            # loss was not congestion: repair it, keep the window intact
            sender.growth_frozen = False
            sender.retransmit_oldest()
        elif state is NetworkState.ROUTE_CHANGE:
            sender.growth_frozen = True
            sender.restart_rto_timer()
            sender.retransmit_oldest()
        elif state is NetworkState.DISCONNECTED:
            sender.growth_frozen = True
            sender.enter_probe_mode()
        else:
            sender.growth_frozen = False


class MadtcpPolicy(AdtcpPolicy):
    """ADTCP reactions plus an AIMD-adapted congestion window limit."""

    name = "madtcp"

    def react(self, sender, state):
        super().react(sender, state)
        if state is NetworkState.NORMAL:
            sender.cwl = min(sender.cwl + 1, self.config.cwl_max)
        elif state is NetworkState.CONGESTED:
            sender.cwl = max(sender.cwl // 2, self.config.cwl_min)
        sender.cwnd = min(sender.cwnd, sender.cwl)


def make_policy(tag, config=None):
    if tag == "tcp":
        return TcpPolicy(config)
    if tag == "adtcp":
        return AdtcpPolicy(config)
    if tag == "madtcp":
        return MadtcpPolicy(config)
    raise ValueError(f"unknown policy {tag!r}; expected one of {POLICY_TAGS}")

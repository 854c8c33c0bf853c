"""Discrete-event MANET simulator comparing TCP, ADTCP and M-ADTCP senders."""

from .core import Event, RngStream, SchedulingError, Simulator
from .metrics import (IntervalMetrics, MetricHistory, MetricSample, NetworkState,
                      classify_state, compute_idd, windowed_average)
from .net import Frame, Network, RandomWaypointMobility, within_range
from .policies import (AdtcpPolicy, MadtcpPolicy, PolicyConfig, TcpPolicy,
                       make_policy)
from .transport import Receiver, Segment, Sender, TransportConfig, TransportFlow

__version__ = "0.1.0"

__all__ = [
    "AdtcpPolicy",
    "Event",
    "Frame",
    "IntervalMetrics",
    "MadtcpPolicy",
    "MetricHistory",
    "MetricSample",
    "Network",
    "NetworkState",
    "PolicyConfig",
    "RandomWaypointMobility",
    "Receiver",
    "RngStream",
    "SchedulingError",
    "Segment",
    "Sender",
    "Simulator",
    "TcpPolicy",
    "TransportConfig",
    "TransportFlow",
    "classify_state",
    "compute_idd",
    "make_policy",
    "windowed_average",
    "within_range",
]

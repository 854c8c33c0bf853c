"""Scenario configuration: reference defaults, file parsing, validation.

Scenario files are flat key=value text under [network], [mobility],
[policy], [experiment] and [flow.N] section headers.  Every key is
optional; an empty file yields the 5-node reference scenario (670 m field,
2 Mbps, 250 m range, 4 m/s, 150 s, two CBR flows plus one FTP flow).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from ..policies import POLICY_TAGS


class ScenarioError(ValueError):
    """Scenario file could not be parsed or validated."""


@dataclass
class FlowConfig:
    kind: str
    src: int
    dst: int
    rate: float = 0.0
    packet_size: int | None = None
    policy: str = "madtcp"


def default_flows():
    return [
        FlowConfig("cbr", 0, 3, rate=1_000_000.0, packet_size=1500),
        FlowConfig("cbr", 3, 4, rate=750_000.0, packet_size=1500),
        FlowConfig("ftp", 1, 2, policy="madtcp"),
    ]


@dataclass
class Scenario:
    # network
    field_width: float = 670.0
    field_height: float = 670.0
    nodes: int = 5
    range_m: float = 250.0
    bit_rate: float = 2_000_000.0
    queue_limit: int = 50
    retry_limit: int = 7
    p0: float = 0.05
    mac_overhead: float = 5e-4
    slot: float = 2e-5
    cw_min: int = 31
    cw_max: int = 1023
    discovery_hop_latency: float = 2e-3
    discovery_retry: float = 0.5
    # mobility
    max_speed: float = 4.0
    pause: float = 0.0
    mobility_tick: float = 0.1
    # transport / metrics / policy constants
    delta: float = 0.9
    history_len: int = 20
    band: float = 0.3
    cwl_fixed: int = 4
    cwl_min: int = 2
    cwl_max: int = 8
    probe_interval: float = 2.0
    rto_min: float = 1.0
    rto_max: float = 60.0
    packet_size: int = 1000
    literal_idd_divisor: bool = True
    # experiment
    duration: float = 150.0
    window_start: float = 100.0
    window_end: float = 150.0
    base_seed: int = 1
    iterations: int = 1
    flows: list = field(default_factory=default_flows)


_SECTION_KEYS = {
    "network": {
        "field_width": ("field_width", float),
        "field_height": ("field_height", float),
        "nodes": ("nodes", int),
        "range_m": ("range_m", float),
        "bit_rate": ("bit_rate", float),
        "queue_limit": ("queue_limit", int),
        "retry_limit": ("retry_limit", int),
        "p0": ("p0", float),
        "mac_overhead": ("mac_overhead", float),
        "slot": ("slot", float),
        "cw_min": ("cw_min", int),
        "cw_max": ("cw_max", int),
        "discovery_hop_latency": ("discovery_hop_latency", float),
        "discovery_retry": ("discovery_retry", float),
    },
    "mobility": {
        "max_speed": ("max_speed", float),
        "pause": ("pause", float),
        "tick": ("mobility_tick", float),
    },
    "policy": {
        "delta": ("delta", float),
        "history": ("history_len", int),
        "band": ("band", float),
        "cwl_fixed": ("cwl_fixed", int),
        "cwl_min": ("cwl_min", int),
        "cwl_max": ("cwl_max", int),
        "probe_interval": ("probe_interval", float),
        "rto_min": ("rto_min", float),
        "rto_max": ("rto_max", float),
        "packet_size": ("packet_size", int),
        "literal_idd_divisor": ("literal_idd_divisor", bool),
    },
    "experiment": {
        "duration": ("duration", float),
        "window_start": ("window_start", float),
        "window_end": ("window_end", float),
        "base_seed": ("base_seed", int),
        "iterations": ("iterations", int),
    },
}

_FLOW_KEYS = {
    "kind": str,
    "src": int,
    "dst": int,
    "rate": float,
    "packet_size": int,
    "policy": str,
}

_BOOL_VALUES = {"true": True, "yes": True, "on": True, "1": True,
                "false": False, "no": False, "off": False, "0": False}


def _convert(section, key, raw, target):
    if target is bool:
        value = _BOOL_VALUES.get(raw.strip().lower())
        if value is None:
            raise ScenarioError(f"[{section}] {key}: expected a boolean, got {raw!r}")
        return value
    try:
        return target(raw)
    except ValueError:
        raise ScenarioError(
            f"[{section}] {key}: expected {target.__name__}, got {raw!r}") from None


def load_scenario(path):
    """Parse and validate a scenario file; unset keys take reference defaults."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle, source=str(path))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    return scenario_from_parser(parser)


def scenario_from_parser(parser):
    scenario = Scenario()
    flow_sections = []
    for section in parser.sections():
        if section.startswith("flow."):
            suffix = section[len("flow."):]
            if not suffix.isdigit():
                raise ScenarioError(f"[{section}]: flow sections are named flow.<index>")
            flow_sections.append((int(suffix), section))
            continue
        keys = _SECTION_KEYS.get(section)
        if keys is None:
            raise ScenarioError(f"[{section}]: unknown section")
        for key, raw in parser.items(section):
            if key not in keys:
                raise ScenarioError(f"[{section}] {key}: unknown key")
            attr, target = keys[key]
            setattr(scenario, attr, _convert(section, key, raw, target))
    if flow_sections:
        scenario.flows = []
        for _, section in sorted(flow_sections):
            scenario.flows.append(_parse_flow(parser, section))
    validate_scenario(scenario)
    return scenario


def _parse_flow(parser, section):
    values = {}
    for key, raw in parser.items(section):
        target = _FLOW_KEYS.get(key)
        if target is None:
            raise ScenarioError(f"[{section}] {key}: unknown key")
        values[key] = _convert(section, key, raw, target)
    for required in ("kind", "src", "dst"):
        if required not in values:
            raise ScenarioError(f"[{section}]: missing required key {required}")
    kind = values["kind"].strip().lower()
    flow = FlowConfig(kind, values["src"], values["dst"])
    if "rate" in values:
        flow.rate = values["rate"]
    if "packet_size" in values:
        flow.packet_size = values["packet_size"]
    if "policy" in values:
        flow.policy = values["policy"].strip().lower()
    if flow.packet_size is None and kind == "cbr":
        flow.packet_size = 1500
    return flow


def validate_scenario(scenario):
    def check(condition, message):
        if not condition:
            raise ScenarioError(message)

    check(scenario.nodes >= 2, f"nodes: need at least 2 nodes, got {scenario.nodes}")
    check(scenario.field_width > 0 and scenario.field_height > 0,
          "field_width/field_height: must be positive")
    check(scenario.range_m > 0, "range_m: must be positive")
    check(scenario.bit_rate > 0, "bit_rate: must be positive")
    check(scenario.queue_limit >= 1, "queue_limit: must be at least 1")
    check(scenario.retry_limit >= 1, "retry_limit: must be at least 1")
    check(0.0 <= scenario.p0 <= 1.0, "p0: must lie in [0, 1]")
    check(scenario.max_speed >= 0, "max_speed: must be non-negative")
    check(scenario.mobility_tick > 0, "tick: must be positive")
    check(scenario.delta > 0, "delta: must be positive")
    check(scenario.history_len >= 1, "history: must be at least 1")
    check(0.0 < scenario.band < 1.0, "band: must lie in (0, 1)")
    check(1 <= scenario.cwl_min <= scenario.cwl_fixed <= scenario.cwl_max,
          "cwl_min/cwl_fixed/cwl_max: need cwl_min <= cwl_fixed <= cwl_max")
    check(scenario.probe_interval > 0, "probe_interval: must be positive")
    check(0 < scenario.rto_min <= scenario.rto_max, "rto_min/rto_max: need 0 < rto_min <= rto_max")
    check(scenario.packet_size > 0, "packet_size: must be positive")
    check(scenario.duration > 0, "duration: must be positive")
    check(scenario.duration > scenario.window_start,
          "duration: must exceed window_start")
    check(0 <= scenario.window_start < scenario.window_end,
          "window_start/window_end: need 0 <= window_start < window_end")
    check(scenario.window_end <= scenario.duration,
          "window_end: must not exceed duration")
    check(scenario.iterations >= 1, "iterations: must be at least 1")
    for index, flow in enumerate(scenario.flows):
        name = f"flow.{index}"
        check(flow.kind in ("cbr", "ftp"), f"[{name}] kind: expected cbr or ftp, got {flow.kind!r}")
        for end, node in (("src", flow.src), ("dst", flow.dst)):
            check(0 <= node < scenario.nodes,
                  f"[{name}] {end}: node {node} outside 0..{scenario.nodes - 1}")
        check(flow.src != flow.dst, f"[{name}] dst: must differ from src")
        if flow.kind == "cbr":
            check(flow.rate > 0, f"[{name}] rate: CBR flows need a positive rate")
            check(flow.packet_size and flow.packet_size > 0,
                  f"[{name}] packet_size: must be positive")
        else:
            check(flow.policy in POLICY_TAGS,
                  f"[{name}] policy: expected one of {POLICY_TAGS}, got {flow.policy!r}")
            check(flow.packet_size is None or flow.packet_size > 0,
                  f"[{name}] packet_size: must be positive")
    return scenario


def scenario_to_text(scenario):
    """Render a scenario back to file syntax (round-trips through load)."""
    lines = []
    for section, keys in _SECTION_KEYS.items():
        lines.append(f"[{section}]")
        for key, (attr, target) in keys.items():
            value = getattr(scenario, attr)
            if target is bool:
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        lines.append("")
    for index, flow in enumerate(scenario.flows):
        lines.append(f"[flow.{index}]")
        lines.append(f"kind = {flow.kind}")
        lines.append(f"src = {flow.src}")
        lines.append(f"dst = {flow.dst}")
        if flow.kind == "cbr":
            lines.append(f"rate = {flow.rate}")
        if flow.packet_size is not None:
            lines.append(f"packet_size = {flow.packet_size}")
        if flow.kind == "ftp":
            lines.append(f"policy = {flow.policy}")
        lines.append("")
    return "\n".join(lines)

"""Wireless multi-hop network: waypoint mobility, contention MAC, source routing.

Propagation is a fixed-radius disk; the 802.11 DCF is abstracted as
carrier-sense deferral (a sender waits while any in-range node is on air,
which shares the nominal bit rate within a neighborhood) plus a per-attempt
collision probability driven by the number of concurrent in-range
transmitters - so hidden terminals still collide - with binary-exponential
backoff between retries.  Routing is on-demand shortest-hop source routing
with flood-cost latency and invalidation on link break.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .core import derive_seed

DEFAULT_RANGE_M = 250.0
DEFAULT_BIT_RATE = 2_000_000.0
DEFAULT_QUEUE_LIMIT = 50
DEFAULT_RETRY_LIMIT = 7
DEFAULT_P0 = 0.05
DEFAULT_MAC_OVERHEAD = 5e-4
DEFAULT_SLOT = 20e-6
DEFAULT_CW_MIN = 31
DEFAULT_CW_MAX = 1023
DEFAULT_DISCOVERY_HOP_LATENCY = 2e-3
DEFAULT_DISCOVERY_RETRY = 0.5
DEFAULT_PENDING_TIMEOUT = 1.0
DEFAULT_BREAK_MEMORY = 1.0

DROP_CAUSES = ("drop_queue", "drop_retry", "drop_linkdown", "drop_noroute", "drop_loss")


def within_range(a, b, range_m):
    """True iff positions a and b are within the transmission disk (inclusive)."""
    return math.dist(a, b) <= range_m


class RandomWaypointMobility:
    """Random-waypoint motion inside a rectangular field.

    Each node heads to its waypoint at a fixed speed; on arrival it pauses,
    then draws a fresh waypoint and a speed in (0, max_speed] from the
    mobility substream.  max_speed <= 0 freezes the topology.
    """

    def __init__(self, n_nodes, width, height, max_speed, rng, pause=0.0, positions=None):
        self.width = width
        self.height = height
        self.max_speed = max_speed
        self.rng = rng
        self.pause = pause
        if positions is None:
            positions = [(rng.uniform(0.0, width), rng.uniform(0.0, height))
                         for _ in range(n_nodes)]
        self.positions = [tuple(p) for p in positions]
        if len(self.positions) != n_nodes:
            raise ValueError("positions do not match node count")
        self.targets = list(self.positions)
        self.speeds = [0.0] * n_nodes
        self.pause_left = [0.0] * n_nodes
        if max_speed > 0:
            for i in range(n_nodes):
                self._new_leg(i)

    def _new_leg(self, i):
        self.targets[i] = (self.rng.uniform(0.0, self.width),
                           self.rng.uniform(0.0, self.height))
        # 1 - random() lies in (0, 1], so speeds are never zero
        self.speeds[i] = self.max_speed * (1.0 - self.rng.random())

    def step(self, dt):
        """Advance every node by dt seconds of motion."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_speed <= 0:
            return
        for i, (x, y) in enumerate(self.positions):
            if self.pause_left[i] > 0:
                self.pause_left[i] -= dt
                continue
            tx, ty = self.targets[i]
            dist = math.hypot(tx - x, ty - y)
            travel = self.speeds[i] * dt
            if travel >= dist:
                self.positions[i] = (tx, ty)
                self.pause_left[i] = self.pause
                self._new_leg(i)
            else:
                frac = travel / dist
                self.positions[i] = (x + (tx - x) * frac, y + (ty - y) * frac)


@dataclass
class Frame:
    """One link-layer unit travelling hop by hop along a source route.

    ``uid`` is the per-flow submission index; together with the flow it keys
    every MAC random draw, so paired runs share per-packet randomness.
    """

    flow: str
    size: int
    payload: object
    route: tuple | None = None
    hop: int = 0
    attempt: int = 0
    enqueued_at: float = 0.0
    uid: int = 0
    flow_key: int = 0
    deferrals: int = 0


def new_audit():
    counters = {"submitted": 0, "delivered": 0}
    counters.update({cause: 0 for cause in DROP_CAUSES})
    return counters


class Network:
    """Node queues, MAC transmission and on-demand routing over mobile nodes."""

    def __init__(self, sim, mobility, rng,
                 range_m=DEFAULT_RANGE_M,
                 bit_rate=DEFAULT_BIT_RATE,
                 queue_limit=DEFAULT_QUEUE_LIMIT,
                 retry_limit=DEFAULT_RETRY_LIMIT,
                 p0=DEFAULT_P0,
                 p_collision_fixed=None,
                 delivery_loss=0.0,
                 mac_overhead=DEFAULT_MAC_OVERHEAD,
                 slot=DEFAULT_SLOT,
                 cw_min=DEFAULT_CW_MIN,
                 cw_max=DEFAULT_CW_MAX,
                 discovery_hop_latency=DEFAULT_DISCOVERY_HOP_LATENCY,
                 discovery_retry=DEFAULT_DISCOVERY_RETRY,
                 pending_timeout=DEFAULT_PENDING_TIMEOUT,
                 break_memory=DEFAULT_BREAK_MEMORY,
                 topology_log=None):
        self.sim = sim
        self.mobility = mobility
        self.rng = rng
        self.n_nodes = len(mobility.positions)
        self.range_m = range_m
        self.bit_rate = bit_rate
        self.queue_limit = queue_limit
        self.retry_limit = retry_limit
        self.p0 = p0
        self.p_collision_fixed = p_collision_fixed
        self.delivery_loss = delivery_loss
        self.mac_overhead = mac_overhead
        self.slot = slot
        self.cw_min = cw_min
        self.cw_max = cw_max
        self.discovery_hop_latency = discovery_hop_latency
        self.discovery_retry = discovery_retry
        self.pending_timeout = pending_timeout
        self.break_memory = break_memory
        self.topology_log = topology_log
        self._broken_links = {}

        self.queues = [deque() for _ in range(self.n_nodes)]
        self.serving = [None] * self.n_nodes
        self.on_air = [False] * self.n_nodes
        self.air_end = [0.0] * self.n_nodes
        self.routes = {}
        self.pending = {}
        self.discovering = set()
        self.endpoints = {}
        self.audit = {}
        self.break_listeners = []
        self.attempts_total = 0
        self.attempts_failed = 0
        self._flow_keys = {}
        self._flow_uids = {}

    # -- wiring ------------------------------------------------------------

    @property
    def positions(self):
        return self.mobility.positions

    def attach(self, flow, callback):
        """Register the delivery callback for a flow's destination endpoint."""
        self.endpoints[flow] = callback
        self.audit.setdefault(flow, new_audit())

    def add_break_listener(self, callback):
        self.break_listeners.append(callback)

    def start_mobility(self, tick):
        """Begin periodic mobility updates (and topology logging, if enabled)."""
        if tick <= 0:
            raise ValueError("mobility tick must be positive")
        self._log_topology()
        self.sim.schedule_in(tick, self._mobility_tick, tick, label="mobility")

    def _mobility_tick(self, tick):
        self.mobility.step(tick)
        self._log_topology()
        self.sim.schedule_in(tick, self._mobility_tick, tick, label="mobility")

    def _log_topology(self):
        if self.topology_log is not None:
            for node, (x, y) in enumerate(self.positions):
                self.topology_log.append((self.sim.now, node, x, y))

    # -- routing -----------------------------------------------------------

    def connectivity(self):
        """Adjacency lists of the current disk-range graph."""
        pos = self.positions
        adj = [[] for _ in range(self.n_nodes)]
        for i in range(self.n_nodes):
            for j in range(i + 1, self.n_nodes):
                if within_range(pos[i], pos[j], self.range_m):
                    adj[i].append(j)
                    adj[j].append(i)
        return adj

    def route_discover(self, src, dst):
        """Shortest-hop route on the current range graph, or None.

        Ties are broken toward the lexicographically smallest node sequence.
        """
        adj = self.connectivity()
        dist = {dst: 0}
        frontier = deque([dst])
        while frontier:
            node = frontier.popleft()
            for nxt in adj[node]:
                if nxt not in dist:
                    dist[nxt] = dist[node] + 1
                    frontier.append(nxt)
        if src not in dist:
            return None
        route = [src]
        node = src
        while node != dst:
            node = min(n for n in adj[node] if dist.get(n, -1) == dist[node] - 1)
            route.append(node)
        return tuple(route)

    def _ensure_discovery(self, key):
        if key in self.discovering or key in self.routes:
            return
        self.discovering.add(key)
        src, dst = key
        route = self.route_discover(src, dst)
        hops = (len(route) - 1) if route else self.n_nodes
        latency = self.discovery_hop_latency * hops
        self.sim.schedule_in(latency, self._discovery_done, key, route, label="route_discovery")

    def _discovery_done(self, key, route):
        self.discovering.discard(key)
        waiting = self.pending.get(key)
        if route is not None:
            self.routes[key] = route
            while waiting:
                frame, queued_at = waiting.popleft()
                if self.sim.now - queued_at > self.pending_timeout:
                    # aged out while no route existed; senders retransmit fresh
                    self.audit[frame.flow]["drop_noroute"] += 1
                    continue
                frame.route = route
                self._enqueue(key[0], frame)
        elif waiting:
            self.sim.schedule_in(self.discovery_retry, self._retry_discovery, key,
                                 label="route_retry")

    def _retry_discovery(self, key):
        if key not in self.routes and self.pending.get(key):
            self._ensure_discovery(key)

    def _link_broken(self, route, hop):
        a, b = route[hop], route[hop + 1]
        for key in list(self.routes):
            cached = self.routes[key]
            for i in range(len(cached) - 1):
                if cached[i] == a and cached[i + 1] == b:
                    del self.routes[key]
                    if self.pending.get(key):
                        self._ensure_discovery(key)
                    break
        self._salvage(a, b)
        for callback in self.break_listeners:
            callback(route, hop)

    def _salvage(self, node, broken_next_hop):
        """Re-route frames still queued at ``node`` for a now-broken next hop.

        Only the frame in flight on the broken hop is lost.  Queued frames are
        repaired locally when this node can still reach their destination
        (route-cache salvage, no flood latency, so they stay ahead of traffic
        rediscovered at the source); otherwise they wait on a fresh discovery.
        """
        queue = self.queues[node]
        stuck = [f for f in queue if f.route[f.hop + 1] == broken_next_hop]
        if not stuck:
            return
        kept = deque(f for f in queue if f.route[f.hop + 1] != broken_next_hop)
        queue.clear()
        queue.extend(kept)
        for frame in stuck:
            self._reroute(node, frame)

    def _reroute(self, node, frame):
        """Point one frame at a fresh route from this node to its destination."""
        dst = frame.route[-1]
        frame.route = None
        frame.hop = 0
        frame.attempt = 0
        key = (node, dst)
        replacement = self.routes.get(key)
        if replacement is not None and not within_range(
                self.positions[node], self.positions[replacement[1]], self.range_m):
            replacement = None
        if replacement is None:
            replacement = self.route_discover(node, dst)
        if replacement is not None:
            frame.route = replacement
            self._enqueue(node, frame)
            return
        waiting = self.pending.setdefault(key, deque())
        if len(waiting) >= self.queue_limit:
            self.audit[frame.flow]["drop_noroute"] += 1
        else:
            waiting.append((frame, self.sim.now))
            self._ensure_discovery(key)

    # -- MAC ---------------------------------------------------------------

    def submit(self, flow, src, dst, size, payload):
        """Hand one packet to the network; it is routed, queued and transmitted.

        Packets with no usable route wait (bounded) for discovery to finish.
        """
        audit = self.audit.setdefault(flow, new_audit())
        audit["submitted"] += 1
        flow_key = self._flow_keys.get(flow)
        if flow_key is None:
            flow_key = self._flow_keys[flow] = derive_seed(0, flow)
        uid = self._flow_uids.get(flow, 0)
        self._flow_uids[flow] = uid + 1
        frame = Frame(flow, size, payload, uid=uid, flow_key=flow_key)
        key = (src, dst)
        route = self.routes.get(key)
        if route is None:
            waiting = self.pending.setdefault(key, deque())
            if len(waiting) >= self.queue_limit:
                audit["drop_noroute"] += 1
            else:
                waiting.append((frame, self.sim.now))
                self._ensure_discovery(key)
            return
        frame.route = route
        self._enqueue(src, frame)

    def _enqueue(self, node, frame):
        frame.enqueued_at = self.sim.now
        queue = self.queues[node]
        if len(queue) >= self.queue_limit:
            self.audit[frame.flow]["drop_queue"] += 1
            return
        queue.append(frame)
        if self.serving[node] is None:
            self._serve_next(node)

    def _serve_next(self, node):
        queue = self.queues[node]
        if not queue:
            self.serving[node] = None
            return
        frame = queue.popleft()
        self.serving[node] = frame
        self._attempt(node, frame)

    def _attempt(self, node, frame):
        receiver = frame.route[frame.hop + 1]
        in_range = within_range(self.positions[node], self.positions[receiver], self.range_m)
        if not in_range:
            if self._broken_links.get((node, receiver), 0.0) > self.sim.now:
                # break already observed here; re-route without another casualty
                self._serve_next(node)
                self._reroute(node, frame)
                return
            self._broken_links[(node, receiver)] = self.sim.now + self.break_memory
            self.audit[frame.flow]["drop_linkdown"] += 1
            self._link_broken(frame.route, frame.hop)
            self._serve_next(node)
            return
        frame.attempt += 1
        if frame.attempt == 1:
            backoff = 0.0
        else:
            cw = min((self.cw_min + 1) << (frame.attempt - 2), self.cw_max + 1)
            backoff = self.rng.below(cw, frame.flow_key, frame.uid, frame.hop,
                                     frame.attempt, 1) * self.slot
        self.sim.schedule_in(backoff, self._carrier_check, node, frame, label="mac_tx")

    def _carrier_check(self, node, frame):
        # Defer while any in-range node is on air; resume after a short
        # random jitter so contenders do not restart in lockstep.
        busy_until = 0.0
        pos = self.positions
        for other in range(self.n_nodes):
            if other != node and self.on_air[other] \
                    and within_range(pos[other], pos[node], self.range_m):
                busy_until = max(busy_until, self.air_end[other])
        if busy_until > self.sim.now:
            frame.deferrals += 1
            jitter = self.rng.below(self.cw_min + 1, frame.flow_key, frame.uid,
                                    frame.deferrals, 2) * self.slot
            self.sim.schedule(busy_until + jitter, self._carrier_check, node, frame,
                              label="mac_defer")
            return
        self._transmit_start(node, frame)

    def _transmit_start(self, node, frame):
        airtime = frame.size * 8.0 / self.bit_rate + self.mac_overhead
        self.on_air[node] = True
        self.air_end[node] = self.sim.now + airtime
        self.sim.schedule_in(airtime, self._transmit_end, node, frame, label="mac_tx_end")

    def _transmit_end(self, node, frame):
        self.on_air[node] = False
        receiver = frame.route[frame.hop + 1]
        self.attempts_total += 1
        collided = self.rng.uniform01(frame.flow_key, frame.uid, frame.hop,
                                      frame.attempt, 3) < self._collision_probability(node, receiver)
        if collided:
            self.attempts_failed += 1
            if frame.attempt >= self.retry_limit:
                self.audit[frame.flow]["drop_retry"] += 1
                self._link_broken(frame.route, frame.hop)
                self._serve_next(node)
            else:
                self._attempt(node, frame)
            return
        self._serve_next(node)
        if frame.hop + 1 == len(frame.route) - 1:
            audit = self.audit[frame.flow]
            if self.delivery_loss > 0 and \
                    self.rng.uniform01(frame.flow_key, frame.uid, 4) < self.delivery_loss:
                audit["drop_loss"] += 1
                return
            audit["delivered"] += 1
            callback = self.endpoints.get(frame.flow)
            if callback is not None:
                callback(frame.payload)
        else:
            frame.hop += 1
            frame.attempt = 0
            self._enqueue(receiver, frame)

    def _collision_probability(self, sender, receiver):
        if self.p_collision_fixed is not None:
            return self.p_collision_fixed
        pos = self.positions
        k = 1
        for other in range(self.n_nodes):
            if other != sender and self.on_air[other] and within_range(pos[other], pos[receiver], self.range_m):
                k += 1
        return 1.0 - (1.0 - self.p0) ** (k - 1)

    # -- accounting ----------------------------------------------------------

    def inflight(self, flow):
        """Frames of a flow still inside the network (queued, in service, or pending)."""
        count = 0
        for queue in self.queues:
            count += sum(1 for f in queue if f.flow == flow)
        count += sum(1 for f in self.serving if f is not None and f.flow == flow)
        for waiting in self.pending.values():
            count += sum(1 for frame, _ in waiting if frame.flow == flow)
        return count

    def dropped(self, flow):
        audit = self.audit[flow]
        return sum(audit[cause] for cause in DROP_CAUSES)

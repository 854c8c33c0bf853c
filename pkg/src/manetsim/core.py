"""Deterministic discrete-event engine: virtual clock, event queue, seeded RNG streams."""

from __future__ import annotations

import hashlib
import heapq
import itertools
import random


class SchedulingError(ValueError):
    """Raised when an event would fire before the current virtual time."""


class Event:
    """A scheduled callback; also serves as the cancellation handle."""

    __slots__ = ("fire_at", "seq", "fn", "args", "label", "cancelled")

    def __init__(self, fire_at, seq, fn, args, label):
        self.fire_at = fire_at
        self.seq = seq
        self.fn = fn
        self.args = args
        self.label = label
        self.cancelled = False

    def cancel(self):
        self.cancelled = True

    def __repr__(self):
        state = " cancelled" if self.cancelled else ""
        return f"<Event {self.label or self.fn.__name__} @{self.fire_at:.6f} #{self.seq}{state}>"


class Simulator:
    """Single-threaded event loop with a strictly monotone virtual clock.

    Events firing at the same instant are dispatched in scheduling order
    (monotone tie-break counter), which makes whole runs reproducible.
    An optional ``trace`` list collects (fire_at, seq, label) per dispatch.
    """

    def __init__(self, trace=None):
        self.now = 0.0
        self.trace = trace
        self._heap = []
        self._counter = itertools.count()

    def schedule(self, fire_at, fn, *args, label=""):
        """Enqueue ``fn(*args)`` to run at virtual time ``fire_at``."""
        if fire_at < self.now:
            raise SchedulingError(f"cannot schedule at {fire_at}: clock already at {self.now}")
        event = Event(fire_at, next(self._counter), fn, args, label)
        heapq.heappush(self._heap, (fire_at, event.seq, event))
        return event

    def schedule_in(self, delay, fn, *args, label=""):
        return self.schedule(self.now + delay, fn, *args, label=label)

    def run_until(self, t_end):
        """Dispatch every pending event with fire_at <= t_end; clock ends at t_end.

        Returns the number of dispatched (non-cancelled) events.
        """
        if t_end < self.now:
            raise SchedulingError(f"cannot run back to {t_end}: clock already at {self.now}")
        dispatched = 0
        heap = self._heap
        while heap and heap[0][0] <= t_end:
            fire_at, seq, event = heapq.heappop(heap)
            if event.cancelled:
                continue
            self.now = fire_at
            if self.trace is not None:
                self.trace.append((fire_at, seq, event.label))
            event.fn(*event.args)
            dispatched += 1
        self.now = t_end
        return dispatched

    def pending(self):
        """Number of queued, uncancelled events."""
        return sum(1 for _, _, event in self._heap if not event.cancelled)


def derive_seed(master_seed, label):
    """Map (master seed, label) to a stable 64-bit stream seed.

    Uses SHA-256 rather than ``hash()`` so the mapping does not depend on
    PYTHONHASHSEED or the platform.
    """
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream(random.Random):
    """Seeded pseudo-random stream; identical (seed, label) replays identically.

    Separate labels give statistically independent substreams, so e.g.
    mobility draws can be varied without perturbing MAC draws.
    """

    def __new__(cls, master_seed, label=""):
        return super().__new__(cls)

    def __init__(self, master_seed, label=""):
        self.master_seed = master_seed
        self.label = label
        super().__init__(derive_seed(master_seed, label))


_MASK64 = (1 << 64) - 1


def _splitmix64(x):
    x &= _MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _MASK64
    return x ^ (x >> 31)


class KeyedRng:
    """Counter-style generator: each draw is keyed, not sequential.

    Two runs that issue the same keys get the same draws regardless of the
    order or number of other draws in between, which keeps paired runs of
    different policies on common random numbers.  Keys are small integers.
    """

    def __init__(self, master_seed, label=""):
        self.master_seed = master_seed
        self.label = label
        self.base = derive_seed(master_seed, label)

    def _word(self, key):
        x = self.base
        for part in key:
            x = _splitmix64(x ^ ((part + 0x9E3779B97F4A7C15) & _MASK64))
        return x

    def uniform01(self, *key):
        """Uniform float in [0, 1) for this key."""
        return (self._word(key) >> 11) * (1.0 / (1 << 53))

    def below(self, n, *key):
        """Uniform integer in [0, n) for this key."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self._word(key) % n

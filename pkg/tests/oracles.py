"""Independent reference implementations used to cross-check the package.

Everything here recomputes results from scratch with its own logic; none of
it calls into the streaming/engine code paths it is used to verify.
"""

from __future__ import annotations

import math


def oracle_idd(send_times, arrival_times, st, ed, literal=True):
    """Average inter-packet delay difference over packet numbers st..ed."""
    pair_values = []
    i = st
    while i < ed:
        have_all = all(i + k in send_times and i + k in arrival_times for k in (0, 1))
        if have_all:
            arrival_gap = arrival_times[i + 1] - arrival_times[i]
            send_gap = send_times[i + 1] - send_times[i]
            pair_values.append(arrival_gap - send_gap)
        i += 1
    divisor = (ed - st + 1) if literal else len(pair_values)
    if divisor <= 0:
        return 0.0
    return math.fsum(pair_values) / divisor


def batch_metrics(records, delta, n_intervals, literal=True, start=0.0):
    """Recompute per-interval (idd, stt, por, plr, n_packets) from a trace.

    ``records`` is the receiver's packet trace in arrival order:
    (seq, send_time, arrival_time) tuples.  Interval k covers
    [start + k*delta, start + (k+1)*delta).
    """
    samples = []
    send_times = {}
    arrival_times = {}
    prev_seq = None
    highest = 0
    index = 0
    for k in range(n_intervals):
        t_end = start + (k + 1) * delta
        highest_at_open = highest
        n_packets = 0
        n_out_of_order = 0
        lo = hi = None
        while index < len(records) and records[index][2] < t_end:
            seq, send_time, arrival_time = records[index][:3]
            index += 1
            duplicate = seq in arrival_times
            send_times[seq] = send_time
            arrival_times[seq] = arrival_time
            if duplicate:
                continue
            n_packets += 1
            if prev_seq is not None and seq - prev_seq > 1:
                n_out_of_order += 1
            prev_seq = seq
            lo = seq if lo is None else min(lo, seq)
            hi = seq if hi is None else max(hi, seq)
            highest = max(highest, seq)
        idd = oracle_idd(send_times, arrival_times, lo, hi, literal) if n_packets else 0.0
        stt = n_packets / delta
        por = n_out_of_order / n_packets if n_packets else 0.0
        expected = highest - highest_at_open
        if expected > 0:
            plr = min(1.0, max(0.0, (expected - n_packets) / expected))
        else:
            plr = 0.0
        samples.append((idd, stt, por, plr, n_packets))
    return samples


def brute_force_route(positions, range_m, src, dst):
    """Exhaustive shortest route search; ties by lexicographic node sequence."""
    n = len(positions)
    best = None

    def extend(path):
        nonlocal best
        node = path[-1]
        if node == dst:
            key = (len(path), path)
            if best is None or key < (len(best), best):
                best = list(path)
            return
        if best is not None and len(path) >= len(best):
            return
        for nxt in range(n):
            if nxt in path:
                continue
            if math.dist(positions[node], positions[nxt]) <= range_m:
                path.append(nxt)
                extend(path)
                path.pop()

    extend([src])
    return tuple(best) if best is not None else None


def random_trace(rng, max_packets=1000, loss=0.2, reorder=0.2, duplicate=0.05):
    """Synthetic receiver trace with random loss, reordering and duplicates.

    Returns records in arrival order: (seq, send_time, arrival_time).
    """
    n = rng.randrange(0, max_packets + 1)
    spacing = rng.uniform(0.001, 0.05)
    sent = []
    for seq in range(1, n + 1):
        send_time = seq * spacing * rng.uniform(0.5, 1.5)
        sent.append((seq, send_time))
    arrivals = []
    for seq, send_time in sent:
        if rng.random() < loss:
            continue
        delay = rng.uniform(0.001, 0.4)
        arrivals.append((seq, send_time, send_time + delay))
        if rng.random() < duplicate:
            arrivals.append((seq, send_time + rng.uniform(0, 0.2),
                             send_time + delay + rng.uniform(0.01, 0.5)))
    if reorder > 0:
        for i in range(len(arrivals) - 1):
            if rng.random() < reorder:
                arrivals[i], arrivals[i + 1] = arrivals[i + 1], arrivals[i]
    arrivals.sort(key=lambda record: record[2])
    return arrivals

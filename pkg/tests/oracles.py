"""Brute-force reference computations used as test oracles.

Everything here works from the raw event list with plain loops and shares
no code with the package's incremental paths.
"""

import itertools
import math
from collections import deque

import numpy as np


def weight(kind, value, t_now, t_event):
    gap = t_now - t_event
    if kind == "full":
        return 1.0
    if kind == "exponential":
        return math.pow(0.5, gap / value)
    return 1.0 if gap < value else 0.0


def weights(events, n, memory, t):
    W = [[0.0] * n for _ in range(n)]
    for te, a, b in events:
        if te <= t:
            W[a][b] += weight(memory.kind, memory.value, t, te)
    return W


def recency_rank(events, memory, t, owner, other, send):
    """Rank of ``other`` in ``owner``'s send (or receive) recency list."""
    last = {}
    for te, a, b in events:
        if te > t or weight(memory.kind, memory.value, t, te) == 0.0:
            continue
        if send and a == owner:
            last[b] = te
        if not send and b == owner:
            last[a] = te
    if other not in last:
        return 0
    order = sorted(last, key=lambda k: -last[k])
    return order.index(other) + 1


def distinct(events, n, memory, t, z, d_star, i, W=None):
    if W is None:
        W = weights(events, n, memory, t)
    num = den = 0.0
    for j in range(n):
        if j == i:
            continue
        vol = W[i][j] + W[j][i]
        den += vol
        if z[i] != z[j]:
            num += vol
    return d_star if den == 0 else num / den


def stat(kind, i, j, events, n, memory=None, t=None, z=None, d_star=None,
         zv=None, dyad_m=None, prop=False, W=None):
    """Direct evaluation of one statistic for dyad (i, j).

    ``W`` may carry a precomputed :func:`weights` matrix for the same
    (events, memory, t) to avoid recomputing it per call.
    """
    if kind == "baseline":
        return 1.0
    if kind == "send":
        return zv[i]
    if kind == "receive":
        return zv[j]
    if kind == "same":
        return float(zv[i] == zv[j])
    if kind == "difference":
        return abs(zv[i] - zv[j])
    if kind == "dyad":
        return dyad_m[i][j]
    if kind.startswith("ps"):
        past = [e for e in events if e[0] <= t]
        if not past:
            return 0.0
        _, a, b = past[-1]
        shift = {
            "psABBA": i == b and j == a,
            "psABBY": i == b and j not in (a, b),
            "psABAY": i == a and j not in (a, b),
            "psABXA": j == a and i not in (a, b),
            "psABXB": j == b and i not in (a, b),
            "psABXY": i not in (a, b) and j not in (a, b),
        }[kind]
        return float(shift)
    if kind == "rrankSend":
        r = recency_rank(events, memory, t, i, j, send=True)
        return 1.0 / r if r else 0.0
    if kind == "rrankReceive":
        r = recency_rank(events, memory, t, i, j, send=False)
        return 1.0 / r if r else 0.0
    if kind == "distinct_dissatisfaction":
        return abs(distinct(events, n, memory, t, z, d_star[i], i, W) - d_star[i])
    if kind == "distinct_choice":
        d = distinct(events, n, memory, t, z, d_star[i], i, W)
        if d > d_star[i]:
            return float(z[i] == z[j])
        if d < d_star[i]:
            return float(z[i] != z[j])
        return 0.0

    if W is None:
        W = weights(events, n, memory, t)
    H = range(n)
    out_i = sum(W[i][h] for h in H)
    in_i = sum(W[h][i] for h in H)
    total = sum(map(sum, W))

    def ratio(a, b):
        return a / b if b > 0 else 0.0

    if kind == "inertia":
        return ratio(W[i][j], out_i) if prop else W[i][j]
    if kind == "reciprocity":
        return ratio(W[j][i], in_i) if prop else W[j][i]
    degree = {
        "indegreeSender": in_i,
        "indegreeReceiver": sum(W[h][j] for h in H),
        "outdegreeSender": out_i,
        "outdegreeReceiver": sum(W[j][h] for h in H),
    }
    if kind in degree:
        return ratio(degree[kind], total) if prop else degree[kind]
    if kind == "otp":
        return sum(min(W[i][h], W[h][j]) for h in H)
    if kind == "itp":
        return sum(min(W[j][h], W[h][i]) for h in H)
    if kind == "osp":
        return sum(min(W[i][h], W[j][h]) for h in H)
    if kind == "isp":
        return sum(min(W[h][i], W[h][j]) for h in H)
    raise KeyError(kind)


def dyad_probabilities(logrates):
    """Multinomial probabilities by direct exponentiation (no shift)."""
    lam = [math.exp(x) for x in logrates]
    tot = math.fsum(lam)
    return [x / tot for x in lam], tot


def temporal_hops(events, n):
    """Minimal hop count of time-respecting paths, by exhaustive search.

    A path is a sequence of events e1, ..., ek with strictly increasing
    times where each event's sender is the previous event's receiver.
    Returns dict (s, v) -> min hops for reachable pairs.
    """
    events = sorted(events)
    best = {}
    # state: (current node, time of last hop, hops); BFS over event indices
    for s in range(n):
        frontier = deque()
        for k, (t, a, b) in enumerate(events):
            if a == s:
                frontier.append((k, 1))
        seen = set()
        while frontier:
            k, hops = frontier.popleft()
            if (k, hops) in seen:
                continue
            seen.add((k, hops))
            t, a, b = events[k]
            if b != s:
                key = (s, b)
                if key not in best or hops < best[key]:
                    best[key] = hops
            if hops >= len(events):
                continue
            for k2, (t2, a2, b2) in enumerate(events):
                if a2 == b and t2 > t:
                    frontier.append((k2, hops + 1))
    return best


def betweenness(adj):
    """Unnormalized directed betweenness by enumerating all shortest paths."""
    n = len(adj)

    def all_shortest(s, t):
        dist = {s: 0}
        q = deque([s])
        while q:
            u = q.popleft()
            for v in range(n):
                if adj[u][v] and v not in dist:
                    dist[v] = dist[u] + 1
                    q.append(v)
        if t not in dist:
            return []
        paths = []

        def walk(path):
            u = path[-1]
            if u == t:
                paths.append(list(path))
                return
            for v in range(n):
                if adj[u][v] and dist.get(v) == dist[u] + 1 and dist[v] <= dist[t]:
                    walk(path + [v])

        walk([s])
        return paths

    cb = [0.0] * n
    for s, t in itertools.permutations(range(n), 2):
        paths = all_shortest(s, t)
        if not paths:
            continue
        for v in range(n):
            if v in (s, t):
                continue
            cb[v] += sum(v in p for p in paths) / len(paths)
    return cb


def random_history(rng, n, m, t_scale=1.0):
    times = np.cumsum(rng.exponential(t_scale, size=m))
    events = []
    for t in times:
        a = int(rng.integers(n))
        b = int(rng.integers(n - 1))
        b = b + (b >= a)
        events.append((float(t), a, b))
    return events

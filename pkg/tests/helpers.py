"""Shared test utilities: stream generator and brute-force oracles."""

import random

ACCEPTANCE_LINES: list[str] = []


def random_stream(n, delta, events, seed, p_insert=0.5, target=None):
    """Valid ``(u, v, kind)`` stream; inserts until ``target`` edges exist, then churns."""
    rng = random.Random(seed)
    adj = [set() for _ in range(n)]
    edges = []
    pos = {}
    out = []
    while len(out) < events:
        grow = target is not None and len(edges) < target
        if edges and not grow and rng.random() >= p_insert:
            i = rng.randrange(len(edges))
            u, v = edges[i]
            last = edges.pop()
            if i < len(edges):
                edges[i] = last
                pos[last] = i
            del pos[(u, v)]
            adj[u].discard(v)
            adj[v].discard(u)
            out.append((u, v, "delete"))
            continue
        for _ in range(100):
            u, v = rng.randrange(n), rng.randrange(n)
            if u != v and v not in adj[u] and len(adj[u]) < delta and len(adj[v]) < delta:
                key = (min(u, v), max(u, v))
                pos[key] = len(edges)
                edges.append(key)
                adj[u].add(v)
                adj[v].add(u)
                out.append((u, v, "insert"))
                break
        else:
            if not edges:
                break
            p_insert = 0.0
    return out


def brute_proper(n, edges, colors):
    """Independent oracle: every vertex colored, no monochromatic edge."""
    if any(c == 0 for c in colors[:n]):
        return False
    return all(colors[u] != colors[v] for u, v in edges)

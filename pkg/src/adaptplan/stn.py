"""Simple-temporal-network consistency over ordered node prefixes.

A constraint ``lb <= t(dst) - t(src) <= ub`` becomes two distance-graph
edges: ``src -> dst`` with weight ``ub`` and ``dst -> src`` with weight
``-lb``.  The network is consistent iff the distance graph has no negative
cycle.  Besides the explicit constraints, a prefix adds two implicit ones:
consecutive nodes are non-decreasing in time, and every node happens no
earlier than ``now``.
"""
from __future__ import annotations

import math
from collections import defaultdict, deque

TOL = 1e-9


def distance_edges(constraints):
    """Yield ``(u, v, w)`` distance edges for ``(src, dst, lb, ub)`` constraints."""
    for src, dst, lb, ub, *_ in constraints:
        if ub != math.inf:
            yield src, dst, ub
        if lb != -math.inf:
            yield dst, src, -lb


class IncrementalSTN:
    """Consistency of a growing prefix, maintained with a feasible potential.

    ``push`` appends a node and restores feasibility by relaxing only from
    the new node (all new edges touch it, so any new negative cycle passes
    through it).  ``pop`` undoes the last push, so a depth-first search can
    share one instance.
    """

    def __init__(self, constraints, anchor, now=0.0):
        self.anchor = anchor
        self.now = now
        self.out = defaultdict(list)
        self.inc = defaultdict(list)
        for u, v, w in distance_edges(constraints):
            self.out[u].append((v, w))
            self.inc[v].append((u, w))
        self.n_edges = sum(len(v) for v in self.out.values())
        self.pot = {anchor: 0.0}
        self.prefix = []
        self.index = {}
        self._undo = []

    def _outs(self, x):
        yield from self.out[x]
        if x != self.anchor:
            i = self.index[x]
            if i:
                yield self.prefix[i - 1], 0.0
            yield self.anchor, -self.now

    def push(self, node) -> bool:
        pot = self.pot
        if node in pot:
            raise ValueError(f"{node!r} already in the prefix")
        ins = [pot[u] + w for u, w in self.inc[node] if u in pot]
        self.index[node] = len(self.prefix)
        self.prefix.append(node)
        pot[node] = 0.0
        if ins:
            pot[node] = min(ins)
        else:
            pot[node] = max((pot[y] - w for y, w in self._outs(node) if y in pot and y != node), default=0.0)
        changes = [(node, None)]
        self._undo.append(changes)
        queue = deque([node])
        budget = len(pot) * (len(pot) + self.n_edges + 1)
        while queue:
            x = queue.popleft()
            px = pot[x]
            for y, w in self._outs(x):
                if y not in pot:
                    continue
                cand = px + w
                if pot[y] > cand + TOL:
                    if y == node:
                        self.pop()
                        return False
                    changes.append((y, pot[y]))
                    pot[y] = cand
                    queue.append(y)
            budget -= 1
            if budget < 0:
                self.pop()
                return False
        return True

    def pop(self):
        changes = self._undo.pop()
        for n, old in reversed(changes):
            if old is None:
                del self.pot[n]
            else:
                self.pot[n] = old
        del self.index[self.prefix.pop()]

    def schedule(self):
        """A witness assignment with the anchor at time 0."""
        base = self.pot[self.anchor]
        return {n: p - base for n, p in self.pot.items()}


def bellman_ford(nodes, edges, source):
    """Single-source shortest distances; returns None on a negative cycle."""
    dist = {n: math.inf for n in nodes}
    dist[source] = 0.0
    for _ in range(len(nodes)):
        changed = False
        for u, v, w in edges:
            du = dist[u]
            if du != math.inf and du + w < dist[v] - TOL:
                dist[v] = du + w
                changed = True
        if not changed:
            return dist
    for u, v, w in edges:
        if dist[u] != math.inf and dist[u] + w < dist[v] - TOL:
            return None
    return dist


def prefix_constraints(prefix, constraints, anchor, now=0.0):
    """Constraints restricted to ``prefix`` plus ordering and ``now`` bounds."""
    members = set(prefix) | {anchor}
    out = [c for c in constraints if c[0] in members and c[1] in members]
    for a, b in zip(prefix, prefix[1:]):
        out.append((a, b, 0.0, math.inf))
    for n in prefix:
        out.append((anchor, n, now, math.inf))
    return out


def solve(prefix, constraints, anchor, now=0.0):
    """Return ``(earliest, latest)`` time maps, or None if inconsistent."""
    cons = prefix_constraints(prefix, constraints, anchor, now)
    nodes = [anchor] + list(prefix)
    edges = list(distance_edges(cons))
    # every prefix node reaches the anchor through its ``now`` bound, so the
    # reverse pass sees every cycle; the forward pass may not
    reverse = [(v, u, w) for u, v, w in edges]
    to_anchor = bellman_ford(nodes, reverse, anchor)
    if to_anchor is None:
        return None
    latest = bellman_ford(nodes, edges, anchor)
    earliest = {n: -d for n, d in to_anchor.items()}
    return earliest, latest

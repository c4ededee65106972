"""Exact GED on small graphs: exhaustive enumeration and A* over node mappings."""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .editpath import edit_cost
from .graphs import GraphPair


class OracleSizeError(ValueError):
    pass


@dataclass
class OracleResult:
    ged: int
    optimal_mappings: list[tuple[int, ...]] = field(default_factory=list)
    optimal: bool = True
    expanded: int = 0

    def to_json(self) -> dict:
        return {
            "ged": self.ged,
            "optimal": self.optimal,
            "optimal_mappings": [list(m) for m in self.optimal_mappings],
        }


def _batched_costs(pair: GraphPair, maps: np.ndarray) -> np.ndarray:
    g, h = pair.g, pair.g_prime
    hl = np.asarray(h.labels, dtype=np.int64)
    gl = np.asarray(g.labels, dtype=np.int64)
    a_h = h.adjacency().astype(np.int64)
    cost = np.full(len(maps), h.n - g.n + g.num_edges + h.num_edges, dtype=np.int64)
    if g.n:
        cost += (hl[maps] != gl[None, :]).sum(axis=1)
    for u, v in g.edges:
        cost -= 2 * a_h[maps[:, u], maps[:, v]]
    return cost


def exact_ged_bruteforce(pair: GraphPair, mapping_cap: int = 64, max_nodes: int = 8,
                         chunk: int = 200_000) -> OracleResult:
    """Minimum edit cost over every injective mapping, enumerated lexicographically."""
    g, h = pair.g, pair.g_prime
    if g.n > max_nodes:
        raise OracleSizeError(
            f"brute force refuses |V|={g.n} > {max_nodes}; use exact_ged_astar for larger graphs")
    if g.n == 0:
        return OracleResult(edit_cost(pair, ()), [()], True)
    perms = itertools.permutations(range(h.n), g.n)
    best = None
    found: list[tuple[int, ...]] = []
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(perms, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        maps = block.reshape(-1, g.n)
        costs = _batched_costs(pair, maps)
        lo = int(costs.min())
        if best is None or lo < best:
            best = lo
            found = []
        if lo == best and len(found) < mapping_cap:
            for row in maps[costs == best][: mapping_cap - len(found)]:
                found.append(tuple(int(x) for x in row))
    return OracleResult(best, found, True, 0)


def exact_ged_astar(pair: GraphPair, node_budget: int = 2_000_000, mapping_cap: int = 1) -> OracleResult:
    """Best-first search over partial injective mappings.

    The heuristic adds a label-multiset bound (remaining nodes of g whose label
    cannot be matched by the unused nodes of g') to an edge-count bound
    (difference between the edges still touching unassigned nodes on each side).
    Both count disjoint parts of the final cost, so their sum stays admissible.
    When ``node_budget`` expansions are exhausted the cheapest open state is
    completed greedily and the result is flagged ``optimal=False``.
    """
    g, h = pair.g, pair.g_prime
    n, m = g.n, h.n
    a_g = g.adjacency()
    a_h = h.adjacency()
    nb_h = h.neighbors()
    order = sorted(range(n), key=lambda v: (-int(a_g[v].sum()), v))
    gl, hl = g.labels, h.labels
    base = m - n

    rem_label_counts = []
    rem_edges = []
    for i in range(n + 1):
        rest = order[i:]
        rem_label_counts.append(Counter(gl[v] for v in rest))
        rs = set(rest)
        rem_edges.append(sum(1 for u, v in g.edges if u in rs or v in rs))
    h_label_counts = Counter(hl)

    def heuristic(depth, used, used_edges):
        cu = h_label_counts.copy()
        for x in used:
            cu[hl[x]] -= 1
        rc = rem_label_counts[depth]
        common = sum(min(c, cu[lab]) for lab, c in rc.items())
        label_lb = (n - depth) - common
        edge_lb = abs(rem_edges[depth] - (h.num_edges - used_edges))
        return label_lb + edge_lb

    def extend(depth, images, cost, used_edges, vp):
        u = order[depth]
        c = cost + (gl[u] != hl[vp])
        for j in range(depth):
            c += a_g[u, order[j]] != a_h[vp, images[j]]
        ue = used_edges + sum(1 for w in nb_h[vp] if w in images)
        return c, ue

    def to_mapping(images):
        f = [0] * n
        for j, vp in enumerate(images):
            f[order[j]] = vp
        return tuple(f)

    counter = itertools.count()
    h0 = heuristic(0, (), 0)
    heap = [(base + h0, 0, next(counter), base, 0, ())]
    best = None
    found: list[tuple[int, ...]] = []
    expanded = 0
    while heap:
        fval, negd, _, cost, used_edges, images = heapq.heappop(heap)
        if best is not None and fval > best:
            break
        depth = -negd
        if depth == n:
            # edges among inserted nodes are exactly the remaining heuristic term
            cost = fval
            if best is None:
                best = cost
            if cost == best:
                found.append(to_mapping(images))
                if len(found) >= mapping_cap:
                    break
            continue
        expanded += 1
        if expanded > node_budget:
            heapq.heappush(heap, (fval, negd, next(counter), cost, used_edges, images))
            break
        for vp in range(m):
            if vp in images:
                continue
            c, ue = extend(depth, images, cost, used_edges, vp)
            nxt = images + (vp,)
            f2 = c + heuristic(depth + 1, nxt, ue)
            if best is not None and f2 > best:
                continue
            heapq.heappush(heap, (f2, -(depth + 1), next(counter), c, ue, nxt))

    if best is not None and (expanded <= node_budget):
        return OracleResult(int(best), found, True, expanded)
    if best is not None:
        return OracleResult(int(best), found, False, expanded)
    # budget exhausted before any goal: finish the most promising state greedily
    _, negd, _, cost, used_edges, images = heap[0]
    depth = -negd
    while depth < n:
        options = []
        for vp in range(m):
            if vp not in images:
                c, ue = extend(depth, images, cost, used_edges, vp)
                options.append((c, vp, ue))
        cost, vp, used_edges = min(options)
        images = images + (vp,)
        depth += 1
    f = to_mapping(images)
    return OracleResult(edit_cost(pair, f), [f], False, expanded)


def exact_ged(pair: GraphPair, mapping_cap: int = 1, max_bruteforce_nodes: int = 6) -> OracleResult:
    """Brute force for tiny pairs, A* otherwise."""
    if pair.g.n <= max_bruteforce_nodes and pair.g_prime.n <= max_bruteforce_nodes + 1:
        return exact_ged_bruteforce(pair, mapping_cap)
    return exact_ged_astar(pair, mapping_cap=mapping_cap)


def ground_truth_matrix(pair: GraphPair) -> np.ndarray:
    if pair.gt_mapping is None:
        raise ValueError("pair has no ground-truth mapping")
    m = np.zeros((pair.g.n, pair.g_prime.n), dtype=np.float64)
    m[np.arange(pair.g.n), list(pair.gt_mapping)] = 1.0
    return m

"""Random base graphs and synthetic training pairs built from known edit sequences."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graphs import GraphPair, LabeledGraph
from .oracle import exact_ged_astar

EDIT_KINDS = ("relabel", "insert_node", "delete_edge", "insert_edge")


class GenerationError(ValueError):
    pass


def random_graph(n: int, rng: np.random.Generator, num_labels: int = 1, extra_edge_prob: float = 0.15) -> LabeledGraph:
    """Connected graph: a random recursive tree plus independent extra edges."""
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(v))
        edges.add((u, v))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_edge_prob:
                edges.add((u, v))
    labels = rng.integers(num_labels, size=n) if num_labels > 1 else np.zeros(n, dtype=int)
    return LabeledGraph(n, tuple(sorted(edges)), tuple(int(x) for x in labels))


def delta_range(n: int, small_max: int = 5) -> tuple[int, int]:
    if n > 20:
        return 1, 10
    if n > 10:
        return 1, 5
    return 1, small_max


def _apply_edits(g: LabeledGraph, delta: int, rng: np.random.Generator, num_labels: int,
                 kinds: Sequence[str]) -> LabeledGraph:
    labels = list(g.labels)
    edges = set(g.edges)
    n = g.n
    touched_nodes: set[int] = set()
    touched_edges: set[tuple[int, int]] = set()
    for step in range(delta):
        options: dict[str, list] = {}
        if "relabel" in kinds and num_labels > 1:
            cand = [v for v in range(g.n) if v not in touched_nodes]
            if cand:
                options["relabel"] = cand
        if "insert_node" in kinds:
            options["insert_node"] = [None]
        if "delete_edge" in kinds:
            cand = sorted(e for e in edges if e not in touched_edges)
            if cand:
                options["delete_edge"] = cand
        if "insert_edge" in kinds:
            cand = [(u, v) for u in range(n) for v in range(u + 1, n)
                    if (u, v) not in edges and (u, v) not in touched_edges]
            if cand:
                options["insert_edge"] = cand
        if not options:
            raise GenerationError(f"no legal non-canceling edit left after {step} of {delta} edits")
        kind = sorted(options)[int(rng.integers(len(options)))]
        cand = options[kind]
        item = cand[int(rng.integers(len(cand)))]
        if kind == "relabel":
            new = int(rng.integers(num_labels - 1))
            labels[item] = new if new < labels[item] else new + 1
            touched_nodes.add(item)
        elif kind == "insert_node":
            labels.append(int(rng.integers(num_labels)) if num_labels > 1 else 0)
            touched_nodes.add(n)
            n += 1
        elif kind == "delete_edge":
            edges.remove(item)
            touched_edges.add(item)
        else:
            edges.add(item)
            touched_edges.add(item)
    return LabeledGraph(n, tuple(edges), tuple(labels))


def generate_synthetic_pair(g: LabeledGraph, delta: int, rng_seed: int, num_labels: int | None = None,
                            kinds: Sequence[str] = EDIT_KINDS, permute: bool = False,
                            verify_max_nodes: int = 8, max_tries: int = 50) -> GraphPair:
    """Apply ``delta`` distinct, non-canceling edits to ``g``.

    A node or edge touched once is never touched again, and when ``g`` has at
    most ``verify_max_nodes`` nodes the exact GED is checked against ``delta``;
    sequences that collapse (for example through an automorphism) are redrawn.
    With ``permute`` the nodes of the edited graph are shuffled and the
    ground-truth mapping follows the shuffle.
    """
    if delta < 1:
        raise GenerationError("delta must be >= 1")
    if num_labels is None:
        num_labels = max(g.labels, default=0) + 1
    seq = np.random.SeedSequence([int(rng_seed) & 0xFFFFFFFF, delta])
    for child in seq.spawn(max_tries):
        rng = np.random.default_rng(child)
        edited = _apply_edits(g, delta, rng, num_labels, kinds)
        mapping = tuple(range(g.n))
        if permute:
            perm = rng.permutation(edited.n)
            edges = tuple((int(perm[u]), int(perm[v])) for u, v in edited.edges)
            labels = [0] * edited.n
            for v in range(edited.n):
                labels[perm[v]] = edited.labels[v]
            edited = LabeledGraph(edited.n, edges, tuple(labels))
            mapping = tuple(int(perm[v]) for v in range(g.n))
        pair = GraphPair(g, edited, mapping, delta)
        if g.n > verify_max_nodes:
            return pair
        if exact_ged_astar(pair).ged == delta:
            return pair
    raise GenerationError(f"could not draw a {delta}-edit sequence with exact GED {delta} in {max_tries} tries")


def build_corpus(graphs: Sequence[LabeledGraph], per_graph: int, seed: int, num_labels: int | None = None,
                 small_max_delta: int = 5, permute: bool = True) -> list[GraphPair]:
    """``per_graph`` synthetic partners for each base graph, deltas per graph size."""
    rng = np.random.default_rng(seed)
    pairs = []
    for gi, g in enumerate(graphs):
        lo, hi = delta_range(g.n, small_max_delta)
        for j in range(per_graph):
            delta = int(rng.integers(lo, hi + 1))
            sub_seed = int(rng.integers(2**31))
            pairs.append(generate_synthetic_pair(g, delta, sub_seed, num_labels, permute=permute))
    return pairs


def random_graphs(count: int, seed: int, min_nodes: int, max_nodes: int, num_labels: int = 1,
                  extra_edge_prob: float = 0.15) -> list[LabeledGraph]:
    rng = np.random.default_rng(seed)
    return [random_graph(int(rng.integers(min_nodes, max_nodes + 1)), rng, num_labels, extra_edge_prob)
            for _ in range(count)]

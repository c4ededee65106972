"""Edit scripts induced by injective node mappings.

Given an oriented pair ``(g, g')`` with ``|V| <= |V'|`` and an injective map
``f: V -> V'``, the induced edit path relabels mismatched nodes, inserts one
node per unmatched node of ``g'``, deletes edges of ``g`` whose image is not an
edge of ``g'`` and inserts edges of ``g'`` whose preimage is not an edge of
``g``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import GraphPair, LabeledGraph


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class EditOp:
    """One unit-cost edit.

    kind is one of ``relabel`` (a=node, b=new label), ``insert_node``
    (a=label, b=matched node of g'), ``delete_edge`` / ``insert_edge``
    (a, b = endpoints in the extended node space of g: inserted nodes take ids
    ``g.n, g.n + 1, ...`` in insertion order).
    """

    kind: str
    a: int
    b: int

    def to_json(self) -> dict:
        if self.kind == "relabel":
            return {"op": "relabel", "node": self.a, "label": self.b}
        if self.kind == "insert_node":
            return {"op": "insert_node", "label": self.a, "matched_to": self.b}
        return {"op": self.kind, "u": self.a, "v": self.b}


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...]
    extended_mapping: tuple[int, ...]

    @property
    def cost(self) -> int:
        return len(self.ops)

    def to_json(self) -> dict:
        return {
            "cost": self.cost,
            "extended_mapping": list(self.extended_mapping),
            "ops": [op.to_json() for op in self.ops],
        }

    def canonical(self) -> tuple:
        """Order-free identity of the script, used to count distinct edit paths.

        Inserted nodes are named by the node of g' they realize so that two
        scripts inserting the same nodes in a different order coincide.
        """
        n = len(self.extended_mapping) - sum(1 for op in self.ops if op.kind == "insert_node")

        def name(x):
            return ("g", x) if x < n else ("new", self.extended_mapping[x])

        out = []
        for op in self.ops:
            if op.kind in ("delete_edge", "insert_edge"):
                u, v = sorted((name(op.a), name(op.b)))
                out.append((op.kind, u, v))
            else:
                out.append((op.kind, op.a, op.b))
        return tuple(sorted(out))


def check_mapping(pair: GraphPair, f: Sequence[int]) -> np.ndarray:
    f = np.asarray(f, dtype=np.int64)
    if f.shape != (pair.g.n,):
        raise MappingError(f"mapping must have length {pair.g.n}, got shape {f.shape}")
    if f.size and (f.min() < 0 or f.max() >= pair.g_prime.n):
        raise MappingError("mapping entry outside g_prime")
    if len(np.unique(f)) != f.size:
        raise MappingError("mapping is not injective")
    return f


def derive_edit_path(pair: GraphPair, f: Sequence[int]) -> EditScript:
    g, h = pair.g, pair.g_prime
    f = check_mapping(pair, f)
    ops: list[EditOp] = []

    for v in range(g.n):
        if g.labels[v] != h.labels[f[v]]:
            ops.append(EditOp("relabel", v, h.labels[f[v]]))

    ext = [int(x) for x in f]
    used = set(ext)
    for vp in range(h.n):
        if vp not in used:
            ops.append(EditOp("insert_node", h.labels[vp], vp))
            ext.append(vp)

    inv = {vp: v for v, vp in enumerate(ext)}
    h_edges = h.edge_set()
    g_edges = g.edge_set()
    for u, v in g.edges:
        a, b = ext[u], ext[v]
        if (min(a, b), max(a, b)) not in h_edges:
            ops.append(EditOp("delete_edge", u, v))
    for up, vp in h.edges:
        a, b = inv[up], inv[vp]
        if (min(a, b), max(a, b)) not in g_edges:
            ops.append(EditOp("insert_edge", min(a, b), max(a, b)))

    return EditScript(tuple(ops), tuple(ext))


def edit_cost(pair: GraphPair, f: Sequence[int]) -> int:
    g, h = pair.g, pair.g_prime
    f = check_mapping(pair, f)
    cost = h.n - g.n
    hl = h.labels
    for v in range(g.n):
        cost += g.labels[v] != hl[f[v]]
    h_edges = h.edge_set()
    matched = 0
    for u, v in g.edges:
        a, b = f[u], f[v]
        matched += (min(a, b), max(a, b)) in h_edges
    return int(cost + g.num_edges + h.num_edges - 2 * matched)


def apply_script(g: LabeledGraph, script: EditScript) -> LabeledGraph:
    """Replay ``script`` on ``g`` and return the edited graph (extended node ids)."""
    labels = list(g.labels)
    edges = set(g.edges)
    for op in script.ops:
        if op.kind == "relabel":
            labels[op.a] = op.b
        elif op.kind == "insert_node":
            labels.append(op.a)
        elif op.kind == "delete_edge":
            edges.remove((min(op.a, op.b), max(op.a, op.b)))
        elif op.kind == "insert_edge":
            e = (min(op.a, op.b), max(op.a, op.b))
            if e in edges:
                raise ValueError(f"edge {e} already present")
            edges.add(e)
        else:
            raise ValueError(f"unknown edit {op.kind}")
    return LabeledGraph(len(labels), tuple(edges), tuple(labels))


def replays_to_target(pair: GraphPair, script: EditScript) -> bool:
    """True when replaying ``script`` on g yields g' under the extended mapping."""
    out = apply_script(pair.g, script)
    ext = script.extended_mapping
    h = pair.g_prime
    if out.n != h.n or sorted(ext) != list(range(h.n)):
        return False
    labels = [0] * h.n
    for v, vp in enumerate(ext):
        labels[vp] = out.labels[v]
    mapped = {tuple(sorted((ext[u], ext[v]))) for u, v in out.edges}
    return tuple(labels) == h.labels and mapped == h.edge_set()

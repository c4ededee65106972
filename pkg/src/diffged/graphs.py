"""Labeled undirected graphs, graph pairs, and the line-delimited JSON dataset format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphValidationError(ValueError):
    pass


class DatasetParseError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected node-labeled graph with nodes ``0..n-1``.

    Edges are stored as sorted ``(u, v)`` tuples with ``u < v``; the edge tuple
    itself is sorted so that equal graphs compare equal.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        if self.n < 0:
            raise GraphValidationError("negative node count")
        if len(self.labels) != self.n:
            raise GraphValidationError(f"expected {self.n} labels, got {len(self.labels)}")
        seen = set()
        canon = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphValidationError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphValidationError(f"dangling node index in edge ({u}, {v}) for n={self.n}")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise GraphValidationError(f"duplicate edge {e}")
            seen.add(e)
            canon.append(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if any(lab < 0 for lab in self.labels):
            raise GraphValidationError("negative label id")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], labels: Sequence[int] | None = None):
        return cls(n, tuple(tuple(e) for e in edges), tuple(labels) if labels is not None else (0,) * n)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int8)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self.edges)

    def neighbors(self) -> list[list[int]]:
        nb = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].append(v)
            nb[v].append(u)
        return nb

    def key(self) -> tuple:
        return (self.n, self.edges, self.labels)


@dataclass(frozen=True)
class GraphPair:
    """Oriented pair with ``g.n <= g_prime.n``.

    ``swapped`` records that the source record listed the larger graph first.
    ``gt_mapping`` always maps nodes of the smaller graph ``g`` into ``g_prime``.
    """

    g: LabeledGraph
    g_prime: LabeledGraph
    gt_mapping: tuple[int, ...] | None = None
    gt_ged: int | None = None
    swapped: bool = False

    def __post_init__(self):
        if self.g.n > self.g_prime.n:
            raise GraphValidationError("pair not oriented: g must not be larger than g_prime")
        if self.gt_mapping is not None:
            m = tuple(int(x) for x in self.gt_mapping)
            object.__setattr__(self, "gt_mapping", m)
            if len(m) != self.g.n:
                raise GraphValidationError("gt_mapping length must equal g.n")
            if len(set(m)) != len(m) or any(not 0 <= x < self.g_prime.n for x in m):
                raise GraphValidationError("gt_mapping is not an injective map into g_prime")
        if self.gt_ged is not None and self.gt_ged < 0:
            raise GraphValidationError("gt_ged must be non-negative")

    @classmethod
    def oriented(cls, a: LabeledGraph, b: LabeledGraph, gt_mapping=None, gt_ged=None) -> "GraphPair":
        if a.n > b.n:
            return cls(b, a, gt_mapping, gt_ged, swapped=True)
        return cls(a, b, gt_mapping, gt_ged, swapped=False)

    def reversed(self) -> tuple[LabeledGraph, LabeledGraph]:
        """The pair as it appeared in the source record."""
        return (self.g_prime, self.g) if self.swapped else (self.g, self.g_prime)


@dataclass
class LabelVocabulary:
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._ids = {s: i for i, s in enumerate(self.names)}
        if len(self._ids) != len(self.names):
            raise ValueError("duplicate label names")

    @property
    def size(self) -> int:
        return len(self.names)

    def id_of(self, name: str, grow: bool = True) -> int:
        if name not in self._ids:
            if not grow:
                raise KeyError(f"unknown label {name!r}")
            self._ids[name] = len(self.names)
            self.names.append(name)
        return self._ids[name]

    def name_of(self, i: int) -> str:
        return self.names[i]

    @classmethod
    def unlabeled(cls) -> "LabelVocabulary":
        return cls(["0"])

    @classmethod
    def numbered(cls, size: int) -> "LabelVocabulary":
        return cls([str(i) for i in range(size)])

    def __eq__(self, other):
        return isinstance(other, LabelVocabulary) and self.names == other.names


def one_hot_labels(g: LabeledGraph, vocab: LabelVocabulary | int) -> np.ndarray:
    size = vocab if isinstance(vocab, int) else vocab.size
    x = np.zeros((g.n, size), dtype=np.float64)
    for i, lab in enumerate(g.labels):
        if lab >= size:
            raise GraphValidationError(f"label id {lab} outside vocabulary of size {size}")
        x[i, lab] = 1.0
    return x


# --- JSON lines -------------------------------------------------------------

def _graph_from_record(rec: dict, vocab: LabelVocabulary) -> LabeledGraph:
    n = rec["n"]
    if not isinstance(n, int):
        raise TypeError("n must be an integer")
    labels = rec.get("labels")
    if labels is None:
        labels = ["0"] * n
    ids = [vocab.id_of(str(s)) for s in labels]
    return LabeledGraph(n, tuple(tuple(e) for e in rec["edges"]), tuple(ids))


def _graph_to_record(g: LabeledGraph, vocab: LabelVocabulary) -> dict:
    return {
        "n": g.n,
        "edges": [list(e) for e in g.edges],
        "labels": [vocab.name_of(i) for i in g.labels],
    }


def pair_from_record(rec: dict, vocab: LabelVocabulary) -> GraphPair:
    a = _graph_from_record(rec["g"], vocab)
    b = _graph_from_record(rec["g_prime"], vocab)
    return GraphPair.oriented(a, b, rec.get("gt_mapping"), rec.get("gt_ged"))


def pair_to_record(p: GraphPair, vocab: LabelVocabulary) -> dict:
    a, b = p.reversed()
    return {
        "g": _graph_to_record(a, vocab),
        "g_prime": _graph_to_record(b, vocab),
        "gt_mapping": list(p.gt_mapping) if p.gt_mapping is not None else None,
        "gt_ged": p.gt_ged,
    }


def load_dataset(path: str | Path, vocab: LabelVocabulary | None = None) -> tuple[list[GraphPair], LabelVocabulary]:
    """Read a line-delimited JSON file of pair records.

    Pairs whose first graph is larger are swapped on load.  Labels are interned
    into ``vocab`` (a fresh vocabulary when not given) in first-seen order.
    """
    vocab = vocab if vocab is not None else LabelVocabulary()
    pairs = []
    with open(path) as fh:
        idx = 0
        for line in fh:
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pair = pair_from_record(rec, vocab)
            except GraphValidationError as exc:
                raise GraphValidationError(f"record {idx}: {exc}") from exc
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetParseError(f"record {idx}: {exc}") from exc
            pairs.append(pair)
            idx += 1
    if vocab.size == 0:
        vocab.id_of("0")
    return pairs, vocab


def save_dataset(pairs: Sequence[GraphPair], path: str | Path, vocab: LabelVocabulary) -> None:
    with open(path, "w") as fh:
        for p in pairs:
            fh.write(json.dumps(pair_to_record(p, vocab)) + "\n")


def load_graphs(path: str | Path, vocab: LabelVocabulary | None = None) -> tuple[list[LabeledGraph], LabelVocabulary]:
    """Read base graphs from JSON lines.

    Accepts bare graph records (``{"n", "edges", "labels"}``) or pair records,
    in which case both sides of each pair are returned.
    """
    vocab = vocab if vocab is not None else LabelVocabulary()
    graphs = []
    with open(path) as fh:
        for idx, line in enumerate(l for l in fh if l.strip()):
            try:
                rec = json.loads(line)
                if "g" in rec:
                    graphs.append(_graph_from_record(rec["g"], vocab))
                    graphs.append(_graph_from_record(rec["g_prime"], vocab))
                else:
                    graphs.append(_graph_from_record(rec, vocab))
            except GraphValidationError as exc:
                raise GraphValidationError(f"record {idx}: {exc}") from exc
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DatasetParseError(f"record {idx}: {exc}") from exc
    if vocab.size == 0:
        vocab.id_of("0")
    return graphs, vocab


def save_graphs(graphs: Sequence[LabeledGraph], path: str | Path, vocab: LabelVocabulary) -> None:
    with open(path, "w") as fh:
        for g in graphs:
            fh.write(json.dumps(_graph_to_record(g, vocab)) + "\n")

"""Shared fixtures and brute-force reference implementations used across the suite."""

import itertools
import math

import numpy as np

from diffged.graphs import GraphPair, LabeledGraph
from diffged.synthetic import build_corpus, random_graphs

# label ids: 0 = C, 1 = N, 2 = O


def figure1_pair() -> GraphPair:
    """Two small molecules four edits apart: one relabel, one node insertion,
    one edge deletion and one edge insertion."""
    g = LabeledGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)], [0, 0, 1, 2])
    h = LabeledGraph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)], [0, 0, 0, 2, 1])
    return GraphPair(g, h)


FIGURE1_OPTIMAL_MAPPING = (0, 1, 2, 3)


def figure6_pair() -> GraphPair:
    g = LabeledGraph.from_edges(4, [(0, 1), (1, 2), (1, 3)], [0, 0, 2, 1])
    h = LabeledGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)], [0, 0, 2, 0])
    return GraphPair(g, h)


# sparse, confident prediction concentrated on an optimal mapping of figure6_pair
FIGURE6_MATRIX = np.array([
    [0.97, 0.02, 0.01, 0.05],
    [0.03, 0.95, 0.02, 0.01],
    [0.01, 0.04, 0.98, 0.02],
    [0.06, 0.01, 0.03, 0.91],
])


def triangle(labels=(0, 0, 0)) -> LabeledGraph:
    return LabeledGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)], labels)


def path(n: int) -> LabeledGraph:
    return LabeledGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def naive_edit_cost(pair: GraphPair, f) -> int:
    """Cost counted straight from the definition, via adjacency matrices."""
    g, h = pair.g, pair.g_prime
    ext = list(f) + [v for v in range(h.n) if v not in f]
    a = np.zeros((h.n, h.n), dtype=int)
    a[: g.n, : g.n] = g.adjacency()
    b = h.adjacency()[np.ix_(ext, ext)]
    relabel = sum(g.labels[v] != h.labels[f[v]] for v in range(g.n))
    return int(relabel + (h.n - g.n) + np.triu(np.abs(a - b)).sum())


def brute_ged(pair: GraphPair) -> int:
    return min(naive_edit_cost(pair, f) for f in itertools.permutations(range(pair.g_prime.n), pair.g.n))


def small_corpus(count=20, per_graph=2, seed=0, min_nodes=3, max_nodes=6, labels=3):
    gs = random_graphs(count, seed, min_nodes, max_nodes, labels)
    return build_corpus(gs, per_graph, seed + 1, num_labels=labels, small_max_delta=3)


def finite_difference_check(model, pair, mt, t, target, per_group=20, step=1e-4, seed=0, floor=1e-8):
    """Worst relative error between autograd and central differences, per parameter group.

    ``model`` must be float64.  Coordinates are sampled with replacement when a
    group has fewer than ``per_group`` entries, so every group gets ``per_group`` probes.
    ``floor`` keeps structurally zero gradients from dividing round-off by round-off.
    """
    import torch

    from diffged.denoiser import PairTensors, bce_loss, denoise_backward

    _, grads = denoise_backward(pair, mt, t, model, target)
    pt = PairTensors.build(pair.g, pair.g_prime, model.config.vocab_size, torch.float64)
    mt_t = torch.as_tensor(np.asarray(mt), dtype=torch.float64)[None]
    tgt = torch.as_tensor(np.asarray(target), dtype=torch.float64)
    tt = torch.tensor([float(t)], dtype=torch.float64)

    def loss():
        with torch.no_grad():
            return float(bce_loss(model(*pt.expand(1), mt_t, tt)[0], tgt))

    rng = np.random.default_rng(seed)
    worst = {}
    for name, p in model.named_parameters():
        flat = p.data.view(-1)
        idx = rng.choice(flat.numel(), size=per_group, replace=flat.numel() < per_group)
        errs = []
        for i in idx:
            orig = flat[i].item()
            flat[i] = orig + step
            up = loss()
            flat[i] = orig - step
            down = loss()
            flat[i] = orig
            num = (up - down) / (2 * step)
            ana = grads[name].reshape(-1)[i]
            errs.append(abs(ana - num) / max(abs(ana) + abs(num), floor))
        worst[name] = max(errs)
    return worst


# --- two-state chain references ---

def q_step(beta):
    return np.array([[1 - beta, beta], [beta, 1 - beta]])


def q_bar(betas, t):
    m = np.eye(2)
    for b in betas[:t]:
        m = m @ q_step(b)
    return m


def bridge_by_enumeration(betas, x0, x_from, t_from, t_to):
    """P(x_{t_to} = 1 | x_{t_from}, x_0) by summing over every intermediate path."""
    num = den = 0.0
    for path in itertools.product((0, 1), repeat=t_from - 1):
        states = (x0,) + path + (x_from,)
        w = 1.0
        for s in range(1, t_from + 1):
            w *= q_step(betas[s - 1])[states[s - 1], states[s]]
        den += w
        if states[t_to] == 1:
            num += w
    return num / den


# --- rank statistics by pair enumeration ---

def tau_b_pairs(x, y):
    """Tau-b by counting every pair once."""
    conc = disc = tx = ty = 0
    for i, j in itertools.combinations(range(len(x)), 2):
        dx, dy = np.sign(x[i] - x[j]), np.sign(y[i] - y[j])
        if dx == 0 and dy == 0:
            continue
        if dx == 0:
            tx += 1
        elif dy == 0:
            ty += 1
        elif dx == dy:
            conc += 1
        else:
            disc += 1
    return (conc - disc) / math.sqrt((conc + disc + tx) * (conc + disc + ty))


def average_ranks(x):
    # rank = 1 + (#smaller) + (#equal - 1) / 2
    x = np.asarray(x)
    return np.array([1 + np.sum(x < v) + (np.sum(x == v) - 1) / 2 for v in x], dtype=float)


def rho_pairs(x, y):
    rx, ry = average_ranks(x), average_ranks(y)
    cx, cy = rx - rx.mean(), ry - ry.mean()
    return float((cx * cy).sum() / math.sqrt((cx ** 2).sum() * (cy ** 2).sum()))


def precision_oracle(gt, pred, k):
    k = min(k, len(gt))
    rank = lambda s: sorted(range(len(s)), key=lambda i: (s[i], i))[:k]
    return len(set(rank(gt)) & set(rank(pred))) / k

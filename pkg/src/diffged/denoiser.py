"""Denoising network predicting clean matching probabilities from a noisy matrix.

Each layer encodes the two graphs separately with a GIN update, then an
anisotropic cross-graph layer updates the pair embeddings of both directions
``(v, v')`` and ``(v', v)`` with shared weights, conditioned on the time step.
A per-pair head scores both directions and the summed scores go through a
sigmoid, so running the pair as ``(G', G)`` with ``M^T`` returns the transpose.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .graphs import GraphPair, LabeledGraph, LabelVocabulary, one_hot_labels

CHECKPOINT_VERSION = 1


@dataclass
class DenoiserConfig:
    vocab_size: int
    layer_dims: list[int] = field(default_factory=lambda: [128, 64, 32, 32, 32, 32])
    embed_dim: int | None = None  # sinusoidal width for pair and time inputs; defaults to layer_dims[0]
    freq_base: float = 10000.0
    gn_eps: float = 1e-5
    graph_norm: bool = True  # False swaps both norms for the identity (test hook)
    init_seed: int = 0

    def __post_init__(self):
        if not self.layer_dims or any(d <= 0 for d in self.layer_dims):
            raise ValueError("layer_dims must be a non-empty list of positive ints")
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be positive")
        if self.embed_dim is None:
            self.embed_dim = self.layer_dims[0]
        if self.embed_dim % 2:
            raise ValueError("embed_dim must be even")


def sinusoidal_embedding(x, dim: int, base: float = 10000.0) -> torch.Tensor:
    """Interleaved sin/cos features: ``[sin(x w_0), cos(x w_0), sin(x w_1), ...]``
    with ``w_i = base ** (-2i / dim)``.  Works elementwise on any tensor shape."""
    if dim % 2:
        raise ValueError("sinusoidal embedding needs an even dimension")
    x = torch.as_tensor(x)
    if not x.is_floating_point():
        x = x.to(torch.get_default_dtype())
    i = torch.arange(dim // 2, dtype=x.dtype)
    freqs = base ** (-2.0 * i / dim)
    ang = x[..., None] * freqs
    return torch.stack([torch.sin(ang), torch.cos(ang)], dim=-1).flatten(-2)


class MLP(nn.Module):
    def __init__(self, d_in: int, d_hidden: int, d_out: int):
        super().__init__()
        self.fc1 = nn.Linear(d_in, d_hidden)
        self.fc2 = nn.Linear(d_hidden, d_out)

    def forward(self, x):
        return self.fc2(torch.relu(self.fc1(x)))


class GraphNorm(nn.Module):
    """Per-instance, per-channel norm ``gamma * (x - alpha * mean) / std + shift``.

    Statistics pool jointly over two groups (both graphs' nodes, or both pair
    tables).  The two partial sums are added, never concatenated, which keeps
    the result independent of which group is passed first.
    """

    def __init__(self, dim: int, eps: float = 1e-5, enabled: bool = True):
        super().__init__()
        self.eps = eps
        self.enabled = enabled
        self.weight = nn.Parameter(torch.ones(dim))
        self.mean_scale = nn.Parameter(torch.ones(dim))
        self.bias = nn.Parameter(torch.zeros(dim))

    def forward(self, a: torch.Tensor, b: torch.Tensor):
        if not self.enabled:
            return a, b
        # a: [B, *group_a, d], b: [B, *group_b, d]
        da = tuple(range(1, a.dim() - 1))
        db = tuple(range(1, b.dim() - 1))
        count = math.prod(a.shape[1:-1]) + math.prod(b.shape[1:-1])
        mean = (a.sum(dim=da) + b.sum(dim=db)) / count
        shift = (self.mean_scale * mean)
        ca = a - _expand(shift, a)
        cb = b - _expand(shift, b)
        var = ((ca * ca).sum(dim=da) + (cb * cb).sum(dim=db)) / count
        std = torch.sqrt(var + self.eps)
        return (self.weight * ca / _expand(std, a) + self.bias,
                self.weight * cb / _expand(std, b) + self.bias)


def _expand(stat: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    return stat.reshape(stat.shape[0], *([1] * (like.dim() - 2)), stat.shape[-1])


class GINEncoder(nn.Module):
    """Sum aggregation with eps = 0 followed by a two-layer MLP."""

    def __init__(self, d_in: int, d_out: int):
        super().__init__()
        self.mlp = MLP(d_in, d_out, d_out)

    def forward(self, h: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        return self.mlp(h + adj @ h)


class AGNNLayer(nn.Module):
    def __init__(self, d_pair_in: int, d: int, d_time: int, eps: float, graph_norm: bool):
        super().__init__()
        self.W1 = nn.Linear(d_pair_in, d, bias=False)
        self.W2 = nn.Linear(d, d, bias=False)
        self.W3 = nn.Linear(d, d, bias=False)
        self.W4 = nn.Linear(d, d, bias=False)
        self.W5 = nn.Linear(d_time, d, bias=False)
        self.W6 = nn.Linear(d, d, bias=False)
        self.W7 = nn.Linear(d, d, bias=False)
        self.mlp = MLP(d, d, d)
        self.norm_pair = GraphNorm(d, eps, graph_norm)
        self.norm_node = GraphNorm(d, eps, graph_norm)

    def forward(self, h1, h2, pa, pb, ht):
        """h1: [B,n,d] and h2: [B,m,d] are the GIN outputs; pa: [B,n,m,d_in] and
        pb: [B,m,n,d_in] the previous pair tables; ht: [B,d_time]."""
        pa = self.W1(pa)
        pb = self.W1(pb)
        w3_1, w3_2 = self.W3(h1), self.W3(h2)
        w4_1, w4_2 = self.W4(h1), self.W4(h2)
        ta = self.W2(pa) + w3_1[:, :, None, :] + w4_2[:, None, :, :]
        tb = self.W2(pb) + w3_2[:, :, None, :] + w4_1[:, None, :, :]

        na, nb = self.norm_pair(ta, tb)
        time = self.W5(ht)[:, None, None, :]
        pa_out = pa + self.mlp(torch.relu(na) + time)
        pb_out = pb + self.mlp(torch.relu(nb) + time)

        w7_1, w7_2 = self.W7(h1), self.W7(h2)
        agg1 = self.W6(h1) + (w7_2[:, None, :, :] * _lane_sigmoid(ta)).sum(dim=2)
        agg2 = self.W6(h2) + (w7_1[:, None, :, :] * _lane_sigmoid(tb)).sum(dim=2)
        n1, n2 = self.norm_node(agg1, agg2)
        return h1 + torch.relu(n1), h2 + torch.relu(n2), pa_out, pb_out


class Denoiser(nn.Module):
    def __init__(self, config: DenoiserConfig):
        super().__init__()
        self.config = config
        dims = config.layer_dims
        self.gin = nn.ModuleList()
        self.agnn = nn.ModuleList()
        d_node, d_pair = config.vocab_size, config.embed_dim
        for d in dims:
            self.gin.append(GINEncoder(d_node, d))
            self.agnn.append(AGNNLayer(d_pair, d, config.embed_dim, config.gn_eps, config.graph_norm))
            d_node = d_pair = d
        self.head = MLP(dims[-1], dims[-1], 1)
        self.reset_parameters(config.init_seed)

    @torch.no_grad()
    def reset_parameters(self, seed: int):
        gen = torch.Generator().manual_seed(int(seed))
        for name, mod in self.named_modules():
            if isinstance(mod, nn.Linear):
                bound = 1.0 / math.sqrt(mod.in_features)
                mod.weight.copy_(torch.rand(mod.weight.shape, generator=gen) * 2 * bound - bound)
                if mod.bias is not None:
                    mod.bias.copy_(torch.rand(mod.bias.shape, generator=gen) * 2 * bound - bound)
            elif isinstance(mod, GraphNorm):
                mod.weight.fill_(1.0)
                mod.mean_scale.fill_(1.0)
                mod.bias.fill_(0.0)

    def logits(self, x1, adj1, x2, adj2, mt, t):
        """Batched scores; every tensor carries a leading batch axis.

        x1: [B,n,C], adj1: [B,n,n], x2: [B,m,C], adj2: [B,m,m], mt: [B,n,m], t: [B].
        """
        cfg = self.config
        # contiguous copies: strided inputs take different (non bit-identical) GEMM paths
        pa = sinusoidal_embedding(mt.contiguous(), cfg.embed_dim, cfg.freq_base).contiguous()
        pb = sinusoidal_embedding(mt.transpose(1, 2).contiguous(), cfg.embed_dim, cfg.freq_base).contiguous()
        ht = sinusoidal_embedding(t, cfg.embed_dim, cfg.freq_base)
        h1, h2 = x1, x2
        for gin, agnn in zip(self.gin, self.agnn):
            h1 = gin(h1, adj1)
            h2 = gin(h2, adj2)
            h1, h2, pa, pb = agnn(h1, h2, pa, pb, ht)
        sa = self.head(pa)[..., 0]
        sb = self.head(pb)[..., 0]
        return sa + sb.transpose(1, 2)

    def forward(self, x1, adj1, x2, adj2, mt, t):
        return _lane_sigmoid(self.logits(x1, adj1, x2, adj2, mt, t))


def _lane_sigmoid(x: torch.Tensor, width: int = 64) -> torch.Tensor:
    # The vectorised sigmoid and its scalar tail loop round differently, so an
    # entry's value would depend on its flat position.  Padding to a multiple of
    # the vector width sends every entry down the vectorised path.
    flat = x.reshape(-1)
    pad = (-flat.numel()) % width
    if pad:
        flat = torch.cat([flat, flat.new_zeros(pad)])
    return torch.sigmoid(flat)[: x.numel()].reshape(x.shape)


# --- per-pair helpers -----------------------------------------------------------

@dataclass
class PairTensors:
    x1: torch.Tensor
    adj1: torch.Tensor
    x2: torch.Tensor
    adj2: torch.Tensor

    @classmethod
    def build(cls, g: LabeledGraph, h: LabeledGraph, vocab_size: int, dtype=None) -> "PairTensors":
        dtype = dtype or torch.get_default_dtype()
        return cls(
            torch.as_tensor(one_hot_labels(g, vocab_size), dtype=dtype),
            torch.as_tensor(g.adjacency(), dtype=dtype),
            torch.as_tensor(one_hot_labels(h, vocab_size), dtype=dtype),
            torch.as_tensor(h.adjacency(), dtype=dtype),
        )

    def expand(self, batch: int):
        return (self.x1.expand(batch, -1, -1), self.adj1.expand(batch, -1, -1),
                self.x2.expand(batch, -1, -1), self.adj2.expand(batch, -1, -1))


def model_dtype(model: nn.Module) -> torch.dtype:
    return next(model.parameters()).dtype


def denoise_forward(pair: GraphPair | tuple[LabeledGraph, LabeledGraph], mt, t: int,
                    model: Denoiser) -> np.ndarray:
    """Matching probabilities ``|V| x |V'|`` for one pair and one noisy matrix."""
    g, h = (pair.g, pair.g_prime) if isinstance(pair, GraphPair) else pair
    dtype = model_dtype(model)
    mt = torch.as_tensor(np.asarray(mt), dtype=dtype)
    if mt.shape != (g.n, h.n):
        raise ValueError(f"matching matrix shape {tuple(mt.shape)} != ({g.n}, {h.n})")
    if t < 1:
        raise ValueError("t must be >= 1")
    pt = PairTensors.build(g, h, model.config.vocab_size, dtype)
    with torch.no_grad():
        out = model(*pt.expand(1), mt[None], torch.tensor([float(t)], dtype=dtype))
    return out[0].numpy()


def bce_loss(probs: torch.Tensor, target: torch.Tensor, clamp: float = 1e-7) -> torch.Tensor:
    p = probs.clamp(clamp, 1.0 - clamp)
    return -(target * torch.log(p) + (1.0 - target) * torch.log(1.0 - p)).mean()


def denoise_backward(pair: GraphPair, mt, t: int, model: Denoiser, target) -> tuple[float, dict[str, np.ndarray]]:
    """BCE against ``target`` and its gradient for every named parameter."""
    dtype = model_dtype(model)
    mt = torch.as_tensor(np.asarray(mt), dtype=dtype)
    target = torch.as_tensor(np.asarray(target), dtype=dtype)
    if mt.shape != target.shape or mt.shape != (pair.g.n, pair.g_prime.n):
        raise ValueError("matching matrix and target must both be |V| x |V'|")
    pt = PairTensors.build(pair.g, pair.g_prime, model.config.vocab_size, dtype)
    model.zero_grad(set_to_none=True)
    probs = model(*pt.expand(1), mt[None], torch.tensor([float(t)], dtype=dtype))[0]
    loss = bce_loss(probs, target)
    loss.backward()
    grads = {name: (p.grad.detach().numpy().copy() if p.grad is not None else np.zeros(tuple(p.shape)))
             for name, p in model.named_parameters()}
    model.zero_grad(set_to_none=True)
    return float(loss.detach()), grads


# --- checkpoints ----------------------------------------------------------------

def save_checkpoint(path: str | Path, model: Denoiser, vocab: LabelVocabulary | None = None,
                    extra: dict | None = None, optimizer_state: dict[str, np.ndarray] | None = None) -> None:
    """npz container: named parameter arrays plus a JSON header."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "vocab": vocab.names if vocab is not None else None,
        "dtype": str(model_dtype(model)).replace("torch.", ""),
        "extra": extra or {},
    }
    arrays = {f"param/{k}": v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    for k, v in (optimizer_state or {}).items():
        arrays[f"opt/{k}"] = np.asarray(v)
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path: str | Path):
    """Returns ``(model, vocab, extra, optimizer_state)``."""
    with np.load(path) as z:
        meta = json.loads(bytes(z["__meta__"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        params = {k[len("param/"):]: z[k] for k in z.files if k.startswith("param/")}
        opt = {k[len("opt/"):]: z[k] for k in z.files if k.startswith("opt/")}
    config = DenoiserConfig(**meta["config"])
    model = Denoiser(config).to(getattr(torch, meta["dtype"]))
    model.load_state_dict({k: torch.from_numpy(np.array(v)) for k, v in params.items()})
    vocab = LabelVocabulary(list(meta["vocab"])) if meta.get("vocab") is not None else None
    return model, vocab, meta.get("extra", {}), opt

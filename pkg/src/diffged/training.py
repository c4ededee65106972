"""Training loop for the denoiser: random time step, forward corruption, BCE to the clean matrix."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch

from .denoiser import Denoiser, DenoiserConfig, PairTensors, bce_loss, model_dtype
from .diffusion import NoiseSchedule, build_schedule, forward_sample
from .graphs import GraphPair
from .oracle import ground_truth_matrix
from .solver import SolveConfig, diffged_solve

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-3
    weight_decay: float = 5e-4
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    seed: int = 0
    layer_dims: list[int] = field(default_factory=lambda: [128, 64, 32, 32, 32, 32])
    val_k: int = 4
    val_steps: int = 5
    val_max_pairs: int = 64
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate < 0 or self.weight_decay < 0:
            raise ValueError("epochs, batch_size, learning_rate and weight_decay must be non-negative "
                             "(batch_size positive)")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig fields: {sorted(unknown)}")
        return cls(**d)

    def schedule(self) -> NoiseSchedule:
        return build_schedule(self.T, self.beta_start, self.beta_end)


class Adam:
    """Adam with decoupled weight decay: ``p *= 1 - lr * wd`` before the moment step."""

    def __init__(self, params: dict[str, torch.nn.Parameter], lr: float = 1e-3, weight_decay: float = 0.0,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = {k: torch.zeros_like(p) for k, p in params.items()}
        self.v = {k: torch.zeros_like(p) for k, p in params.items()}

    @torch.no_grad()
    def step(self):
        self.step_count += 1
        c1 = 1.0 - self.beta1 ** self.step_count
        c2 = 1.0 - self.beta2 ** self.step_count
        for k, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            if self.weight_decay:
                p.mul_(1.0 - self.lr * self.weight_decay)
            self.m[k].mul_(self.beta1).add_(g, alpha=1.0 - self.beta1)
            self.v[k].mul_(self.beta2).addcmul_(g, g, value=1.0 - self.beta2)
            denom = (self.v[k] / c2).sqrt_().add_(self.eps)
            p.addcdiv_(self.m[k], denom, value=-self.lr / c1)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"step": np.array(self.step_count)}
        for k in self.params:
            out[f"m/{k}"] = self.m[k].numpy().copy()
            out[f"v/{k}"] = self.v[k].numpy().copy()
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]):
        self.step_count = int(arrays["step"])
        for k in self.params:
            self.m[k] = torch.from_numpy(np.array(arrays[f"m/{k}"]))
            self.v[k] = torch.from_numpy(np.array(arrays[f"v/{k}"]))


@dataclass
class TrainingItem:
    pair: GraphPair
    target: np.ndarray
    tensors: PairTensors

    @classmethod
    def build(cls, pair: GraphPair, vocab_size: int, dtype) -> "TrainingItem":
        if pair.gt_mapping is None:
            raise ValueError("training pair has no ground-truth mapping")
        return cls(pair, ground_truth_matrix(pair), PairTensors.build(pair.g, pair.g_prime, vocab_size, dtype))


def batch_loss(model: Denoiser, items: Sequence[TrainingItem], states: Sequence[np.ndarray],
               times: Sequence[int]) -> tuple[torch.Tensor, list[float]]:
    """Mean of per-item BCE.  Items of equal shape share one forward pass;
    groups are reduced in sorted shape order so the sum is reproducible."""
    dtype = model_dtype(model)
    groups: dict[tuple[int, int], list[int]] = {}
    for i, it in enumerate(items):
        groups.setdefault(it.target.shape, []).append(i)
    total = None
    per_item = [0.0] * len(items)
    for shape in sorted(groups):
        idx = groups[shape]
        tz = [items[i].tensors for i in idx]
        x1 = torch.stack([p.x1 for p in tz])
        a1 = torch.stack([p.adj1 for p in tz])
        x2 = torch.stack([p.x2 for p in tz])
        a2 = torch.stack([p.adj2 for p in tz])
        mt = torch.as_tensor(np.stack([states[i] for i in idx]), dtype=dtype)
        t = torch.tensor([float(times[i]) for i in idx], dtype=dtype)
        target = torch.as_tensor(np.stack([items[i].target for i in idx]), dtype=dtype)
        probs = model(x1, a1, x2, a2, mt, t)
        losses = torch.stack([bce_loss(probs[j], target[j]) for j in range(len(idx))])
        for j, v in zip(idx, losses.detach().tolist()):
            per_item[j] = v
        s = losses.sum()
        total = s if total is None else total + s
    return total / len(items), per_item


def train_step(model: Denoiser, opt: Adam, items: Sequence[TrainingItem], schedule: NoiseSchedule,
               rng: np.random.Generator) -> float:
    """One optimizer update on a batch; returns the mean batch loss."""
    times = [int(rng.integers(1, schedule.T + 1)) for _ in items]
    states = [forward_sample(it.target, t, schedule, rng) for it, t in zip(items, times)]
    model.zero_grad(set_to_none=True)
    loss, per_item = batch_loss(model, items, states, times)
    value = float(loss.detach())
    if not math.isfinite(value):
        bad = [i for i, x in enumerate(per_item) if not math.isfinite(x)]
        raise FloatingPointError(f"non-finite loss {value}; items {bad} at t={[times[i] for i in bad]}")
    loss.backward()
    opt.step()
    return value


@dataclass
class TrainResult:
    model: Denoiser
    optimizer: Adam
    loss_curve: list[dict] = field(default_factory=list)
    val_history: list[dict] = field(default_factory=list)
    best_epoch: int = 0


def new_model(vocab_size: int, config: TrainConfig) -> Denoiser:
    return Denoiser(DenoiserConfig(vocab_size=vocab_size, layer_dims=list(config.layer_dims),
                                   init_seed=config.seed))


def split_validation(pairs: Sequence[GraphPair], fraction: float, seed: int):
    order = np.random.default_rng(seed).permutation(len(pairs))
    n_val = int(round(fraction * len(pairs)))
    val = [pairs[i] for i in sorted(order[:n_val])]
    train = [pairs[i] for i in sorted(order[n_val:])]
    return train, val


def train(train_pairs: Sequence[GraphPair], vocab_size: int, config: TrainConfig,
          val_pairs: Sequence[GraphPair] | None = None, model: Denoiser | None = None,
          on_epoch: Callable[[int, float], None] | None = None) -> TrainResult:
    """Epoch loop with per-epoch validation accuracy and best-epoch retention.

    Validation runs the solver with ``val_k`` chains and ``val_steps`` reverse
    steps; the returned model carries the parameters of the best epoch (epoch 0
    being the initialization).
    """
    if not train_pairs and config.epochs > 0:
        raise ValueError("empty training set")
    model = model if model is not None else new_model(vocab_size, config)
    dtype = model_dtype(model)
    params = dict(model.named_parameters())
    opt = Adam(params, config.learning_rate, config.weight_decay)
    schedule = config.schedule()
    items = [TrainingItem.build(p, vocab_size, dtype) for p in train_pairs]
    seeds = np.random.SeedSequence([config.seed & 0xFFFFFFFF, 7])
    shuffle_rng, noise_rng = (np.random.default_rng(s) for s in seeds.spawn(2))
    val = list(val_pairs or [])[: config.val_max_pairs]

    def validate():
        if not val:
            return None
        sc = SolveConfig(k=config.val_k, S=config.val_steps, seed=config.seed)
        hits = sum(diffged_solve(p, model, schedule, sc).predicted_ged == p.gt_ged for p in val)
        return hits / len(val)

    result = TrainResult(model, opt)
    best_acc = validate()
    best_state = copy.deepcopy(model.state_dict())
    result.val_history.append({"epoch": 0, "accuracy": best_acc})
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(items))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [items[i] for i in order[start:start + config.batch_size]]
            loss = train_step(model, opt, batch, schedule, noise_rng)
            step += 1
            losses.append(loss)
            result.loss_curve.append({"step": step, "epoch": epoch, "loss": loss})
        acc = validate()
        result.val_history.append({"epoch": epoch, "accuracy": acc, "mean_loss": float(np.mean(losses))})
        log.info("epoch %d loss %.5f val_acc %s", epoch, float(np.mean(losses)), acc)
        if on_epoch is not None:
            on_epoch(epoch, float(np.mean(losses)))
        if acc is None or best_acc is None or acc > best_acc:
            best_acc = acc
            best_state = copy.deepcopy(model.state_dict())
            result.best_epoch = epoch
    model.load_state_dict(best_state)
    return result


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)

"""End-to-end solve: sample k matching matrices, extract mappings, keep the cheapest edit path."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch

from .denoiser import Denoiser, PairTensors, model_dtype
from .diffusion import NoiseSchedule, ddim_subsequence, reverse_step, sample_initial
from .editpath import EditScript, derive_edit_path, edit_cost
from .extraction import parallel_extract
from .graphs import GraphPair
from .metrics import evaluate_predictions


@dataclass
class SolveConfig:
    k: int = 100
    S: int = 10
    method: str = "greedy"
    one_shot: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.S < 1:
            raise ValueError("S must be >= 1")
        if self.method not in ("greedy", "hungarian"):
            raise ValueError(f"unknown extraction method {self.method!r}")

    @property
    def steps(self) -> int:
        return 1 if self.one_shot else self.S


@dataclass
class SolveResult:
    predicted_ged: int
    best_mapping: tuple[int, ...]
    best_script: EditScript
    chain_costs: list[int]
    distinct_optimal_paths: int
    seconds: float = 0.0
    chain_mappings: list[tuple[int, ...]] = field(default_factory=list, repr=False)

    def to_json(self, emit_path: bool = False) -> dict:
        out = {
            "predicted_ged": self.predicted_ged,
            "best_mapping": list(self.best_mapping),
            "chain_costs": self.chain_costs,
            "distinct_optimal_paths": self.distinct_optimal_paths,
            "time_s": self.seconds,
        }
        if emit_path:
            out["edit_path"] = self.best_script.to_json()
        return out


def chain_rng(root_seed: int, chain: int) -> np.random.Generator:
    """Stream for one chain; depends only on (root_seed, chain), never on k."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed) & 0xFFFFFFFF, int(chain)]))


CHAIN_BLOCK = 8


def _block_forward(model: Denoiser, pt: PairTensors, states: np.ndarray, tau: int, dtype) -> np.ndarray:
    """Model outputs for ``states`` computed in fixed blocks of CHAIN_BLOCK chains.

    CPU GEMM rounding depends on the total row count, so a chain batched with
    31 others would not reproduce its k=1 result.  With the block size pinned
    a chain's output is independent of its slot and of its neighbours; the
    last block is padded with copies that are discarded.
    """
    k = states.shape[0]
    inputs = pt.expand(CHAIN_BLOCK)
    t = torch.full((CHAIN_BLOCK,), float(tau), dtype=dtype)
    out = []
    for lo in range(0, k, CHAIN_BLOCK):
        block = states[lo:lo + CHAIN_BLOCK]
        if block.shape[0] < CHAIN_BLOCK:
            fill = np.repeat(block[-1:], CHAIN_BLOCK - block.shape[0], axis=0)
            block = np.concatenate([block, fill])
        res = model(*inputs, torch.as_tensor(block, dtype=dtype), t).double().numpy()
        out.append(res[: min(CHAIN_BLOCK, k - lo)])
    return np.concatenate(out)


def sample_matrices(pair: GraphPair, model: Denoiser, schedule: NoiseSchedule, config: SolveConfig,
                    chains: Sequence[int] | None = None) -> np.ndarray:
    """Run the reverse chains and return the final probability matrices ``[k, |V|, |V'|]``.

    ``chains`` selects which chain indices to run (default ``0..k-1``).  Each
    chain's result depends only on ``(config.seed, chain index)``.
    """
    n, m = pair.g.n, pair.g_prime.n
    chains = list(range(config.k)) if chains is None else list(chains)
    taus = ddim_subsequence(schedule.T, config.steps)
    rngs = [chain_rng(config.seed, c) for c in chains]
    states = np.stack([sample_initial(n, m, r) for r in rngs])
    dtype = model_dtype(model)
    pt = PairTensors.build(pair.g, pair.g_prime, model.config.vocab_size, dtype)
    probs = None
    with torch.no_grad():
        for i, tau in enumerate(taus):
            probs = _block_forward(model, pt, states, tau, dtype)
            if i + 1 < len(taus):
                t_to = taus[i + 1]
                states = np.stack([reverse_step(states[c], probs[c], tau, t_to, schedule, rngs[c])
                                   for c in range(len(chains))])
    return probs


def diffged_solve(pair: GraphPair, model: Denoiser, schedule: NoiseSchedule, config: SolveConfig) -> SolveResult:
    start = time.perf_counter()
    if pair.g.n == 0:
        script = derive_edit_path(pair, ())
        return SolveResult(script.cost, (), script, [script.cost] * config.k, 1, time.perf_counter() - start, [()])
    mats = sample_matrices(pair, model, schedule, config)
    mappings = parallel_extract(list(mats), config.method)
    costs = [edit_cost(pair, f) for f in mappings]
    best = min(costs)
    best_idx = costs.index(best)
    scripts = {derive_edit_path(pair, mappings[i]).canonical() for i, c in enumerate(costs) if c == best}
    script = derive_edit_path(pair, mappings[best_idx])
    return SolveResult(best, mappings[best_idx], script, costs, len(scripts),
                       time.perf_counter() - start, mappings)


def query_key(pair: GraphPair):
    """The graph listed first in the source record; pairs sharing it form one ranking query."""
    return pair.reversed()[0].key()


def evaluate(pairs: Sequence[GraphPair], model: Denoiser | None, schedule: NoiseSchedule | None,
             config: SolveConfig, predictor: Callable[[GraphPair], int] | None = None):
    """Solve every pair and score the predictions against ``gt_ged``.

    ``predictor`` replaces the model (for instance with the exact oracle).
    Returns the report and the per-pair predictions.
    """
    if any(p.gt_ged is None for p in pairs):
        raise ValueError("every evaluated pair needs a ground-truth GED")
    preds, secs = [], []
    for p in pairs:
        start = time.perf_counter()
        if predictor is not None:
            preds.append(int(predictor(p)))
        else:
            preds.append(diffged_solve(p, model, schedule, config).predicted_ged)
        secs.append(time.perf_counter() - start)
    report = evaluate_predictions([p.gt_ged for p in pairs], preds, [query_key(p) for p in pairs], secs)
    return report, preds

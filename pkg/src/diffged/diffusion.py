"""Bit-flip discrete diffusion over binary matching matrices.

Every entry of a matching matrix is an independent two-state chain.  Step ``t``
flips the state with probability ``beta_t``; the product of ``t`` such kernels
is again a symmetric flip kernel whose flip probability is
``(1 - prod_s (1 - 2 beta_s)) / 2``, so all kernels are carried as scalars.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray  # betas[t - 1] is beta_t
    contraction: np.ndarray  # contraction[t] = prod_{s<=t} (1 - 2 beta_s), contraction[0] = 1

    @property
    def T(self) -> int:
        return len(self.betas)

    def beta(self, t: int) -> float:
        self._check(t)
        return float(self.betas[t - 1])

    def flip_prob(self, t: int) -> float:
        """Flip probability of the cumulative kernel Q_1 ... Q_t."""
        if not 0 <= t <= self.T:
            raise ScheduleError(f"t={t} outside [0, {self.T}]")
        return 0.5 * (1.0 - float(self.contraction[t]))

    def bridge_flip_prob(self, t_to: int, t_from: int) -> float:
        """Flip probability of Q_{t_to+1} ... Q_{t_from}."""
        if not 0 <= t_to < t_from <= self.T:
            raise ScheduleError(f"need 0 <= t_to < t_from <= T, got {t_to}, {t_from}")
        return 0.5 * (1.0 - float(np.prod(1.0 - 2.0 * self.betas[t_to:t_from])))

    def cumulative_matrix(self, t: int) -> np.ndarray:
        p = self.flip_prob(t)
        return np.array([[1.0 - p, p], [p, 1.0 - p]])

    def _check(self, t):
        if not 1 <= t <= self.T:
            raise ScheduleError(f"t={t} outside [1, {self.T}]")


def schedule_from_betas(betas) -> NoiseSchedule:
    betas = np.asarray(betas, dtype=np.float64)
    if betas.ndim != 1 or len(betas) == 0:
        raise ScheduleError("need at least one step")
    if np.any(betas < 0) or np.any(betas >= 0.5):
        raise ScheduleError("betas must lie in [0, 0.5)")
    contraction = np.concatenate([[1.0], np.cumprod(1.0 - 2.0 * betas)])
    return NoiseSchedule(betas, contraction)


def build_schedule(T: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linear schedule beta_1 = beta_start ... beta_T = beta_end."""
    if T < 1:
        raise ScheduleError("T must be positive")
    if not 0 < beta_start <= beta_end < 0.5:
        raise ScheduleError("need 0 < beta_start <= beta_end < 0.5")
    if T == 1:
        betas = np.array([beta_start])
    else:
        betas = beta_start + (np.arange(T) / (T - 1)) * (beta_end - beta_start)
    return schedule_from_betas(betas)


def _flip(m: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    flips = rng.random(m.shape) < p
    return np.where(flips, 1 - m, m).astype(np.int8)


def forward_sample(m0: np.ndarray, t: int, schedule: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """Draw M^t ~ q(M^t | M^0) entrywise."""
    schedule._check(t)
    return _flip(np.asarray(m0, dtype=np.int8), schedule.flip_prob(t), rng)


def posterior(mt: np.ndarray, m0_probs: np.ndarray, t_from: int, t_to: int, schedule: NoiseSchedule,
              eps: float = 1e-300) -> np.ndarray:
    """P(state = 1 at ``t_to``) given the state at ``t_from`` and P(M^0 = 1).

    For each clean value b the exact bridge posterior
    ``q(x_to = 1 | x_from, x_0 = b) = q(x_from | x_to = 1) q(x_to = 1 | b) / q(x_from | b)``
    is mixed with weight P(M^0 = b).  ``t_to = 0`` returns the clean-state
    probabilities themselves.
    """
    mt = np.asarray(mt)
    p1 = np.asarray(m0_probs, dtype=np.float64)
    if np.any(p1 < 0) or np.any(p1 > 1):
        raise ValueError("m0_probs must lie in [0, 1]")
    if t_to == 0:
        return p1.copy()
    k_to = schedule.flip_prob(t_to)  # q(x_to != x_0)
    k_from = schedule.flip_prob(t_from)  # q(x_from != x_0)
    k_br = schedule.bridge_flip_prob(t_to, t_from)  # q(x_from != x_to)
    x = mt.astype(bool)

    # likelihood of the observed state at t_from given x_to = 1
    lik1 = np.where(x, 1.0 - k_br, k_br)
    # q(x_from | x_0 = b)
    den1 = np.where(x, 1.0 - k_from, k_from)
    den0 = np.where(x, k_from, 1.0 - k_from)
    if min(den1.min(initial=1.0), den0.min(initial=1.0)) < eps:
        raise ZeroDivisionError("q(M^t | M^0) vanishes; schedule has a zero-noise step")
    post_b1 = lik1 * (1.0 - k_to) / den1
    post_b0 = lik1 * k_to / den0
    return p1 * post_b1 + (1.0 - p1) * post_b0


def reverse_step(mt: np.ndarray, m0_probs: np.ndarray, t_from: int, t_to: int, schedule: NoiseSchedule,
                 rng: np.random.Generator) -> np.ndarray:
    p = posterior(mt, m0_probs, t_from, t_to, schedule)
    return (rng.random(p.shape) < p).astype(np.int8)


def sample_initial(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.random((rows, cols)) < 0.5).astype(np.int8)


def ddim_subsequence(T: int, S: int) -> list[int]:
    """Descending time points ``[tau_S, ..., tau_1]`` with ``tau_S = T``.

    Points are ``round(linspace(T, 1, S))`` with duplicates dropped; for
    ``S = 1`` only ``T`` itself is visited.
    """
    if not 1 <= S <= T:
        raise ScheduleError(f"need 1 <= S <= T, got S={S}, T={T}")
    if S == 1:
        return [T]
    taus = np.rint(np.linspace(T, 1, S)).astype(int)
    out = []
    for t in taus:
        if not out or t < out[-1]:
            out.append(int(t))
    return out

"""Seeded generative-model access to a ground-truth MDP.

The sampler hides the true transition tensor behind next-state draws.  Each
(s, a) pair owns an independent RNG stream derived from the master seed with
a splitmix64-style mixer, so the sample sequence at one pair never depends
on how calls interleave across pairs, and batched draws equal the same
number of single draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import TabularMdp

_MASK64 = (1 << 64) - 1

# domain separation tags for derived streams
_TAG_TRANSITION = 0x9A3F_52C1_7E88_0001
_TAG_REWARD = 0x9A3F_52C1_7E88_0002
_TAG_TRIAL = 0x9A3F_52C1_7E88_0003


def splitmix64(z: int) -> int:
    """One step of the splitmix64 mixer; the fixed stream-derivation hash."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *words: int) -> int:
    """Mix a master seed with integer words into a new 64-bit seed."""
    x = splitmix64(master_seed & _MASK64)
    for w in words:
        x = splitmix64(x ^ (w & _MASK64))
    return x


@dataclass(frozen=True)
class RngSeedSpec:
    """Master seed plus the fixed per-(s, a) stream derivation rule."""

    master_seed: int

    def transition_seed(self, s: int, a: int) -> int:
        return derive_seed(self.master_seed, _TAG_TRANSITION, s, a)

    def reward_seed(self) -> int:
        return derive_seed(self.master_seed, _TAG_REWARD)

    def trial_seed(self, trial: int) -> int:
        return derive_seed(self.master_seed, _TAG_TRIAL, trial)


class GenerativeModel:
    """Sampling-only view of a ground-truth MDP.

    Exposes sizes, the (known) reward table, next-state draws, and an exact
    per-pair sample tally.  The true transition tensor is deliberately kept
    off the public surface.
    """

    def __init__(self, truth: TabularMdp, seed_spec: RngSeedSpec | int):
        if isinstance(seed_spec, int):
            seed_spec = RngSeedSpec(seed_spec)
        self._truth = truth
        self.seed_spec = seed_spec
        self.num_states = truth.num_states
        self.num_actions = truth.num_actions
        self.rewards = truth.rewards
        self.sample_counter = np.zeros((truth.num_states, truth.num_actions),
                                       dtype=np.int64)
        # inverse-CDF tables in state-index order, plus the last state with
        # positive mass (absorbs the u >= cum[-1] float corner)
        self._cum = np.cumsum(truth.transitions, axis=2)
        self._last_support = np.zeros((truth.num_states, truth.num_actions),
                                      dtype=int)
        for s in range(truth.num_states):
            for a in range(truth.num_actions):
                self._last_support[s, a] = int(np.flatnonzero(
                    truth.transitions[s, a] > 0)[-1])
        self._streams: dict[tuple[int, int], np.random.Generator] = {}

    def _stream(self, s: int, a: int) -> np.random.Generator:
        key = (s, a)
        gen = self._streams.get(key)
        if gen is None:
            gen = np.random.Generator(
                np.random.PCG64(self.seed_spec.transition_seed(s, a)))
            self._streams[key] = gen
        return gen

    def _check_pair(self, s: int, a: int) -> None:
        if not (0 <= s < self.num_states and 0 <= a < self.num_actions):
            raise IndexError(f"state-action pair ({s}, {a}) out of range")

    def sample_batch(self, s: int, a: int, n: int) -> np.ndarray:
        """Draw n next states from P(.|s, a) by inverse CDF."""
        self._check_pair(s, a)
        u = self._stream(s, a).random(n)
        idx = np.searchsorted(self._cum[s, a], u, side="right")
        idx[idx >= self.num_states] = self._last_support[s, a]
        self.sample_counter[s, a] += n
        return idx

    def sample_next(self, s: int, a: int) -> int:
        """Draw one next state from P(.|s, a)."""
        return int(self.sample_batch(s, a, 1)[0])


@dataclass(frozen=True)
class EmpiricalModel:
    """Empirical MDP built from exactly n_per_pair draws at every pair."""

    counts: np.ndarray
    n_per_pair: int
    mdp: TabularMdp = field(compare=False)


def build_empirical(gm: GenerativeModel, n_per_pair: int,
                    perturbed_rewards: np.ndarray) -> EmpiricalModel:
    """Draw n_per_pair samples at every (s, a) and assemble the empirical MDP
    with the given (possibly perturbed) reward table attached."""
    if n_per_pair < 1:
        raise ValueError("n_per_pair must be at least 1")
    S, A = gm.num_states, gm.num_actions
    counts = np.zeros((S, A, S), dtype=np.int64)
    for s in range(S):
        for a in range(A):
            draws = gm.sample_batch(s, a, n_per_pair)
            counts[s, a] = np.bincount(draws, minlength=S)
    mdp = TabularMdp(S, A, counts / float(n_per_pair),
                     np.asarray(perturbed_rewards, dtype=float),
                     metadata={"empirical_n": n_per_pair})
    return EmpiricalModel(counts=counts, n_per_pair=n_per_pair, mdp=mdp)


def perturb_rewards(rewards: np.ndarray, xi: float, seed: int) -> np.ndarray:
    """Add i.i.d. Unif(0, xi) noise to every reward entry.

    Zero draws are rejected and redrawn so the perturbation is strictly
    positive, matching the open interval; xi = 0 returns the table as is.
    """
    if xi < 0.0:
        raise ValueError("xi must be nonnegative")
    rewards = np.asarray(rewards, dtype=float)
    if xi == 0.0:
        return rewards.copy()
    gen = np.random.Generator(np.random.PCG64(seed))
    u = gen.random(rewards.shape)
    while np.any(u == 0.0):  # probability 2^-53 per entry, but stay exact
        redraw = u == 0.0
        u[redraw] = gen.random(int(redraw.sum()))
    return rewards + xi * u

"""Core tabular-MDP data model: transition/reward tables, policies, induced
chains, the span seminorm, and a canonical JSON file format.

Conventions used throughout the package:
  * transitions P have shape (S, A, S) with P[s, a, s'] = Pr(s' | s, a)
  * rewards r have shape (S, A), values in [0, 1] (perturbed models may
    exceed 1 by at most the perturbation size)
  * value vectors are plain 1-D numpy arrays of length S
  * Q tables are plain (S, A) numpy arrays
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PROB_TOL = 1e-12  # row-sum tolerance for stochastic matrices


class MdpFormatError(ValueError):
    """Raised when an MDP/policy file is malformed or fails validation on load."""


class SolverConvergenceError(RuntimeError):
    """Raised when an iterative solver exceeds its iteration cap."""


class EnumerationBudgetError(RuntimeError):
    """Raised when a policy-enumeration operation would exceed its budget."""


class InfeasibleInstanceError(ValueError):
    """Raised when requested construction parameters admit no valid instance."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TabularMdp:
    """Ground-truth tabular MDP (S, A, P, r); immutable after construction."""

    num_states: int
    num_actions: int
    transitions: np.ndarray  # (S, A, S)
    rewards: np.ndarray      # (S, A)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "transitions", _freeze(self.transitions))
        object.__setattr__(self, "rewards", _freeze(self.rewards))
        S, A = self.num_states, self.num_actions
        if self.transitions.shape != (S, A, S):
            raise ValueError(
                f"transitions shape {self.transitions.shape} != {(S, A, S)}")
        if self.rewards.shape != (S, A):
            raise ValueError(f"rewards shape {self.rewards.shape} != {(S, A)}")

    def with_transitions(self, transitions: np.ndarray) -> "TabularMdp":
        return TabularMdp(self.num_states, self.num_actions,
                          transitions, self.rewards, dict(self.metadata))

    def with_rewards(self, rewards: np.ndarray) -> "TabularMdp":
        return TabularMdp(self.num_states, self.num_actions,
                          self.transitions, rewards, dict(self.metadata))


@dataclass(frozen=True)
class DeterministicPolicy:
    """State -> action map, stored as an int array of length S."""

    actions: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.actions, dtype=int)
        a.flags.writeable = False
        object.__setattr__(self, "actions", a)
        if a.ndim != 1:
            raise ValueError("actions must be a 1-D array")

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class StochasticPolicy:
    """State -> distribution over actions, stored as an (S, A) row-stochastic table."""

    probs: np.ndarray

    def __post_init__(self):
        p = _freeze(self.probs)
        object.__setattr__(self, "probs", p)
        if p.ndim != 2:
            raise ValueError("probs must be a 2-D array")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > PROB_TOL):
            raise ValueError("each probs row must be a probability distribution")


Policy = DeterministicPolicy | StochasticPolicy


@dataclass(frozen=True)
class InducedChain:
    """Markov chain obtained by fixing a policy: matrix P_pi and reward r_pi."""

    matrix: np.ndarray  # (S, S)
    reward: np.ndarray  # (S,)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _freeze(self.matrix))
        object.__setattr__(self, "reward", _freeze(self.reward))

    @property
    def num_states(self) -> int:
        return self.matrix.shape[0]


def validate_mdp(m: TabularMdp, reward_cap: float = 1.0) -> list[str]:
    """Check the MDP invariants and return a list of violation descriptions.

    An empty list means the MDP is valid: every transition row is a
    probability distribution (sum 1 within PROB_TOL, entries >= 0) and every
    reward lies in [0, reward_cap].  Violations are data, not exceptions.
    """
    violations: list[str] = []
    P, r = m.transitions, m.rewards
    if not np.all(np.isfinite(P)):
        violations.append("transitions contain non-finite entries")
    if not np.all(np.isfinite(r)):
        violations.append("rewards contain non-finite entries")
    if violations:
        return violations
    for s in range(m.num_states):
        for a in range(m.num_actions):
            row = P[s, a]
            if np.any(row < 0):
                j = int(np.argmin(row))
                violations.append(
                    f"P[{s}][{a}][{j}] = {row[j]:.6g} is negative")
            total = float(row.sum())
            if abs(total - 1.0) > PROB_TOL:
                violations.append(
                    f"row P[{s}][{a}] sums to {total!r}, not 1")
            rv = float(r[s, a])
            if rv < 0.0 or rv > reward_cap:
                violations.append(
                    f"r[{s}][{a}] = {rv:.6g} outside [0, {reward_cap:.6g}]")
    return violations


def span(v: np.ndarray) -> float:
    """Span seminorm sp(v) = max(v) - min(v); rejects empty vectors."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("span of an empty vector is undefined")
    return float(np.max(v) - np.min(v))


def policy_matrix(pi: Policy, num_states: int, num_actions: int) -> np.ndarray:
    """Return the (S, A) action-probability table of a policy."""
    if isinstance(pi, DeterministicPolicy):
        if len(pi) != num_states:
            raise ValueError(f"policy has {len(pi)} states, MDP has {num_states}")
        if np.any(pi.actions < 0) or np.any(pi.actions >= num_actions):
            raise ValueError("policy selects an out-of-range action")
        probs = np.zeros((num_states, num_actions))
        probs[np.arange(num_states), pi.actions] = 1.0
        return probs
    if isinstance(pi, StochasticPolicy):
        if pi.probs.shape != (num_states, num_actions):
            raise ValueError(
                f"policy table {pi.probs.shape} does not match ({num_states}, {num_actions})")
        return np.asarray(pi.probs)
    raise TypeError(f"not a policy: {type(pi).__name__}")


def induce_chain(m: TabularMdp, pi: Policy) -> InducedChain:
    """Collapse the MDP under a policy:

        P_pi[s, s'] = sum_a pi(a|s) P[s, a, s']
        r_pi[s]     = sum_a pi(a|s) r[s, a]

    For a deterministic policy this is exact row selection.
    """
    if isinstance(pi, DeterministicPolicy):
        if len(pi) != m.num_states:
            raise ValueError(f"policy has {len(pi)} states, MDP has {m.num_states}")
        if np.any(pi.actions < 0) or np.any(pi.actions >= m.num_actions):
            raise ValueError("policy selects an out-of-range action")
        idx = np.arange(m.num_states)
        return InducedChain(m.transitions[idx, pi.actions],
                            m.rewards[idx, pi.actions])
    probs = policy_matrix(pi, m.num_states, m.num_actions)
    matrix = np.einsum("sa,sat->st", probs, m.transitions)
    reward = np.einsum("sa,sa->s", probs, m.rewards)
    return InducedChain(matrix, reward)


# ---------------------------------------------------------------------------
# Canonical file format (JSON).  Floats are serialized with Python's repr,
# which round-trips every finite double exactly.


def _require(doc: dict, key: str):
    if key not in doc:
        raise MdpFormatError(f"missing field {key!r}")
    return doc[key]


def mdp_to_dict(m: TabularMdp) -> dict:
    doc = {
        "num_states": m.num_states,
        "num_actions": m.num_actions,
        "transitions": m.transitions.tolist(),
        "rewards": m.rewards.tolist(),
    }
    if m.metadata:
        doc["metadata"] = m.metadata
    return doc


def mdp_from_dict(doc: dict, reward_cap: float = 1.0) -> TabularMdp:
    S = _require(doc, "num_states")
    A = _require(doc, "num_actions")
    if not isinstance(S, int) or not isinstance(A, int) or S < 1 or A < 1:
        raise MdpFormatError("num_states and num_actions must be positive integers")
    try:
        transitions = np.asarray(_require(doc, "transitions"), dtype=float)
        rewards = np.asarray(_require(doc, "rewards"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise MdpFormatError(f"malformed array field: {exc}") from exc
    if transitions.shape != (S, A, S):
        raise MdpFormatError(
            f"transitions shape {transitions.shape} does not match ({S}, {A}, {S})")
    if rewards.shape != (S, A):
        raise MdpFormatError(f"rewards shape {rewards.shape} does not match ({S}, {A})")
    m = TabularMdp(S, A, transitions, rewards, doc.get("metadata", {}))
    problems = validate_mdp(m, reward_cap=reward_cap)
    if problems:
        raise MdpFormatError("invalid MDP: " + "; ".join(problems))
    return m


def write_mdp(m: TabularMdp, path: str | Path) -> None:
    Path(path).write_text(json.dumps(mdp_to_dict(m), indent=1) + "\n")


def read_mdp(path: str | Path, reward_cap: float = 1.0) -> TabularMdp:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MdpFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MdpFormatError("top-level document must be an object")
    return mdp_from_dict(doc, reward_cap=reward_cap)


def write_policy(pi: Policy, path: str | Path) -> None:
    if isinstance(pi, DeterministicPolicy):
        doc = {"actions": [int(a) for a in pi.actions]}
    else:
        doc = {"probs": pi.probs.tolist()}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_policy(path: str | Path) -> Policy:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise MdpFormatError(f"not valid JSON: {exc}") from exc
    if "actions" in doc:
        return DeterministicPolicy(np.asarray(doc["actions"], dtype=int))
    if "probs" in doc:
        try:
            return StochasticPolicy(np.asarray(doc["probs"], dtype=float))
        except ValueError as exc:
            raise MdpFormatError(str(exc)) from exc
    raise MdpFormatError("policy file needs an 'actions' or 'probs' field")

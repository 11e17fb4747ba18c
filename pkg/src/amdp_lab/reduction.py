"""Average-reward learning through a discounted solve, plus the machine
checks for every inequality the reduction rests on.

The sampled pipeline: pick gamma = 1 - eps / (12 H), perturb rewards by a
tiny seeded uniform, build an empirical MDP from a fixed number of draws per
state-action pair, Q-value-iterate the discounted problem on it, and return
the greedy policy.  The certification operations evaluate both sides of each
supporting inequality with the exact solvers and record them as pass/fail
certificates.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .generative import GenerativeModel, build_empirical, perturb_rewards
from .mdp import DeterministicPolicy, Policy, TabularMdp, span
from .solvers import (
    AmdpOptimum,
    amdp_gain_bias,
    amdp_optimal,
    dmdp_policy_value,
    dmdp_value_iteration,
    induce_chain,
)


@dataclass(frozen=True)
class ReductionParams:
    """Parameter schedule for one reduction run.

    gamma = 1 - epsilon / (12 H_bound); eps_gamma = epsilon / (12 (1-gamma)),
    which simplifies to H_bound; xi is the reward-perturbation size; and
    n_per_pair the sample budget at each state-action pair.
    """

    epsilon: float
    delta: float
    H_bound: float
    gamma: float
    eps_gamma: float
    xi: float
    n_per_pair: int


def reduction_params(epsilon: float, delta: float, H_bound: float,
                     num_states: int, num_actions: int,
                     n_override: int | None = None,
                     c_tilde: float = 1.0, c_p: float = 1.0) -> ReductionParams:
    """Derive the full schedule from (epsilon, delta, H_bound) and the sizes.

    The sample size defaults to ceil(c_tilde * H * eps^-3 * ln(SA/(eps delta)))
    unless n_override pins it; the universal constants c_tilde and c_p are
    configuration knobs with default 1.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if H_bound < 1.0:
        raise ValueError(f"H_bound must be at least 1, got {H_bound}")
    gamma = 1.0 - epsilon / (12.0 * H_bound)
    eps_gamma = epsilon / (12.0 * (1.0 - gamma))
    xi = c_p * (1.0 - gamma) * eps_gamma / (num_states**5 * num_actions**5)
    if n_override is not None:
        if n_override < 1:
            raise ValueError("n_override must be positive")
        n = int(n_override)
    else:
        n = math.ceil(c_tilde * H_bound * epsilon**-3
                      * math.log(num_states * num_actions / (epsilon * delta)))
    return ReductionParams(epsilon=epsilon, delta=delta, H_bound=H_bound,
                           gamma=gamma, eps_gamma=eps_gamma, xi=xi, n_per_pair=n)


def algorithm1(gm: GenerativeModel, params: ReductionParams) -> DeterministicPolicy:
    """Sample-based reduction: perturb rewards, build the empirical MDP from
    n_per_pair draws everywhere, solve the discounted problem on it to an
    accuracy far below eps_gamma, and return the greedy policy."""
    r_p = perturb_rewards(gm.rewards, params.xi, gm.seed_spec.reward_seed())
    emp = build_empirical(gm, params.n_per_pair, r_p)
    accuracy = min(1e-9 / (1.0 - params.gamma), params.eps_gamma / 10.0)
    _, _, policy = dmdp_value_iteration(emp.mdp, params.gamma, accuracy)
    return policy


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Certificate:
    """One checked inequality: passed iff lhs <= rhs + tolerance."""

    name: str
    lhs: float
    rhs: float
    tolerance: float
    passed: bool
    instance_id: str


def _certificate(name: str, lhs: float, rhs: float, tolerance: float,
                 instance_id: str) -> Certificate:
    return Certificate(name=name, lhs=float(lhs), rhs=float(rhs),
                       tolerance=tolerance, passed=bool(lhs <= rhs + tolerance),
                       instance_id=instance_id)


def gamma_for_accuracy(epsilon: float, H: float) -> float:
    """Discount 1 - epsilon / H, guarded for tiny bias spans.

    When H <= epsilon that expression leaves (0, 1); gamma = 1/2 keeps every
    certified span bound valid there, since 4 (1-gamma) H <= 2 H <= 2 eps.
    """
    if H > epsilon:
        return 1.0 - epsilon / H
    return 0.5


def certify_gain_discount_gap(m: TabularMdp, pi: Policy, gamma: float,
                              instance_id: str = "") -> Certificate:
    """Check ||gain - (1-gamma) V_gamma||_inf <= sp((1-gamma) V_gamma) for
    one policy at one discount."""
    gain = amdp_gain_bias(m, pi).gain
    scaled = (1.0 - gamma) * dmdp_policy_value(m, pi, gamma)
    return _certificate("gain_discount_gap",
                        float(np.max(np.abs(gain - scaled))), span(scaled),
                        1e-8, instance_id)


def certify_span_bounds(m: TabularMdp, epsilon: float, instance_id: str = "",
                        opt: AmdpOptimum | None = None,
                        horizon: int = 200) -> list[Certificate]:
    """Span bounds behind the reduction, at gamma = 1 - epsilon / H:

      * sp((1-gamma) V*_gamma)            <= 4 epsilon
      * sp((1-gamma) V^{pi*}_gamma)       <= 4 epsilon
      * max_{T <= horizon} sp(V_T^{pi*})  <= 2 sp(bias of pi*)
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if opt is None:
        opt = amdp_optimal(m)
    gamma = gamma_for_accuracy(epsilon, opt.H)
    tol = 1e-7

    _, V_star, _ = dmdp_value_iteration(m, gamma, 1e-9)
    certs = [_certificate("optimal_value_span",
                          span((1.0 - gamma) * V_star), 4.0 * epsilon, tol,
                          instance_id)]
    V_pi = dmdp_policy_value(m, opt.policy, gamma)
    certs.append(_certificate("optimal_policy_value_span",
                              span((1.0 - gamma) * V_pi), 4.0 * epsilon, tol,
                              instance_id))
    chain = induce_chain(m, opt.policy)
    policy_bias_span = span(amdp_gain_bias(m, opt.policy).bias)
    V = np.zeros(m.num_states)
    worst = 0.0
    for _ in range(horizon):
        V = chain.reward + chain.matrix @ V
        worst = max(worst, span(V))
    certs.append(_certificate("finite_horizon_span", worst,
                              2.0 * policy_bias_span, tol, instance_id))
    return certs


def certify_finite_horizon_identity(m: TabularMdp, pi: Policy,
                                    horizon: int = 200,
                                    instance_id: str = "") -> Certificate:
    """Check V_T = T gain + bias - P^T bias for all T up to the horizon; the
    certificate carries the worst residual."""
    chain = induce_chain(m, pi)
    gb = amdp_gain_bias(m, pi)
    V = np.zeros(m.num_states)
    propagated = gb.bias.copy()  # P^T bias
    worst = 0.0
    for T in range(1, horizon + 1):
        V = chain.reward + chain.matrix @ V
        propagated = chain.matrix @ propagated
        predicted = T * gb.gain + gb.bias - propagated
        worst = max(worst, float(np.max(np.abs(V - predicted))))
    return _certificate("finite_horizon_identity", worst, 0.0, 1e-8, instance_id)


def reduction_chain_certificates(m: TabularMdp, epsilon: float,
                                 eps_gamma: float, instance_id: str = "",
                                 opt: AmdpOptimum | None = None) -> list[Certificate]:
    """Link-by-link check of the reduction argument at one (epsilon,
    eps_gamma) pair, ending with the headline bound
    rho* - min_s rho^{pi_hat}(s) <= 8 epsilon + 3 (1-gamma) eps_gamma."""
    if opt is None:
        opt = amdp_optimal(m)
    gamma = gamma_for_accuracy(epsilon, opt.H)
    tol = 1e-6
    rho_star = float(np.max(opt.gain))

    _, V_star, _ = dmdp_value_iteration(m, gamma, 1e-9)
    V_opt_pi = dmdp_policy_value(m, opt.policy, gamma)
    solve_accuracy = eps_gamma if eps_gamma > 0.0 else 1e-10
    _, _, pi_hat = dmdp_value_iteration(m, gamma, solve_accuracy)
    V_hat = dmdp_policy_value(m, pi_hat, gamma)
    rho_hat = amdp_gain_bias(m, pi_hat).gain

    scale = 1.0 - gamma
    gain_opt = amdp_gain_bias(m, opt.policy).gain
    certs = [
        _certificate("link_gain_gap_at_optimal_policy",
                     float(np.max(np.abs(gain_opt - scale * V_opt_pi))),
                     span(scale * V_opt_pi), tol, instance_id),
        _certificate("link_optimal_policy_value_span",
                     span(scale * V_opt_pi), 4.0 * epsilon, tol, instance_id),
        _certificate("link_optimal_value_span",
                     span(scale * V_star), 4.0 * epsilon, tol, instance_id),
        _certificate("link_policy_dominance",
                     float(np.max(V_opt_pi - V_star)), 0.0, tol, instance_id),
        _certificate("link_solver_accuracy",
                     float(np.max(np.abs(V_star - V_hat))), eps_gamma, tol,
                     instance_id),
        _certificate("link_span_passing",
                     span(scale * V_hat),
                     span(scale * V_star) + 2.0 * scale * eps_gamma, tol,
                     instance_id),
        _certificate("link_gain_gap_at_solved_policy",
                     float(np.max(np.abs(rho_hat - scale * V_hat))),
                     span(scale * V_hat), tol, instance_id),
        _certificate("reduction_bound",
                     rho_star - float(np.min(rho_hat)),
                     8.0 * epsilon + 3.0 * scale * eps_gamma, tol, instance_id),
    ]
    return certs


def certify_reduction_bound(m: TabularMdp, epsilon: float, eps_gamma: float,
                            instance_id: str = "",
                            opt: AmdpOptimum | None = None) -> Certificate:
    """The headline reduction certificate alone; see
    reduction_chain_certificates for the full argument."""
    return reduction_chain_certificates(m, epsilon, eps_gamma, instance_id,
                                        opt)[-1]


# ---------------------------------------------------------------------------
# sampled trials


@dataclass(frozen=True)
class TrialRecord:
    """One sampled run: the seed it used and the exact optimality gap of the
    returned policy, measured on the ground truth."""

    seed: int
    gap: float


def empirical_error(gm: GenerativeModel, params: ReductionParams,
                    trials: int, opt: AmdpOptimum | None = None) -> list[TrialRecord]:
    """Run the sampled reduction once per derived trial seed and record the
    exact gap rho* - min_s rho^{pi_hat}(s) for each run.

    Gaps come from the exact solvers on the hidden truth; samples never
    enter the evaluation.
    """
    truth = gm._truth  # harness-side exact evaluation, not a consumer path
    if opt is None:
        opt = amdp_optimal(truth)
    rho_star = float(np.max(opt.gain))
    records = []
    for trial in range(trials):
        seed = gm.seed_spec.trial_seed(trial)
        trial_gm = GenerativeModel(truth, seed)
        policy = algorithm1(trial_gm, params)
        gap = rho_star - float(np.min(amdp_gain_bias(truth, policy).gain))
        records.append(TrialRecord(seed=seed, gap=gap))
    return records


def failure_rate(records: list[TrialRecord], epsilon: float) -> float:
    """Fraction of trials whose exact gap exceeded epsilon."""
    if not records:
        raise ValueError("no trial records")
    return sum(1 for rec in records if rec.gap > epsilon) / len(records)


# ---------------------------------------------------------------------------
# serialization


def format_number(x: float) -> str:
    """Render a value with 12 significant digits (file precision)."""
    return f"{x:.12g}"


def _open_for_csv(path_or_file):
    if hasattr(path_or_file, "write"):
        return path_or_file, False
    return open(path_or_file, "w", newline=""), True


def write_certificates_csv(certs: list[Certificate], path: str | Path) -> None:
    """Write certificates as CSV with columns instance_id, name, lhs, rhs,
    tolerance, passed; comma separated, LF line endings."""
    fh, owned = _open_for_csv(path)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance_id", "name", "lhs", "rhs", "tolerance", "passed"])
        for c in certs:
            writer.writerow([c.instance_id, c.name, format_number(c.lhs),
                             format_number(c.rhs), format_number(c.tolerance),
                             str(c.passed).lower()])
    finally:
        if owned:
            fh.close()


def write_certificates_report(certs: list[Certificate], path: str | Path) -> None:
    """Structured-text (JSON) companion of the CSV: per-certificate records
    plus a pass/fail summary."""
    payload = {
        "total": len(certs),
        "passed": sum(1 for c in certs if c.passed),
        "failed": [
            {"instance_id": c.instance_id, "name": c.name}
            for c in certs if not c.passed
        ],
        "certificates": [
            {"instance_id": c.instance_id, "name": c.name,
             "lhs": float(format_number(c.lhs)) if math.isfinite(c.lhs) else c.lhs,
             "rhs": float(format_number(c.rhs)) if math.isfinite(c.rhs) else c.rhs,
             "tolerance": c.tolerance, "passed": c.passed}
            for c in certs
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=1, default=str) + "\n")


def write_trials_csv(records: list[TrialRecord], epsilon: float,
                     path: str | Path, instance_id: str = "",
                     n_per_pair: int | None = None) -> None:
    """Write trial records as CSV (instance_id, N, seed, gap, success)."""
    fh, owned = _open_for_csv(path)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance_id", "N", "seed", "gap", "success"])
        for rec in records:
            writer.writerow([instance_id, n_per_pair if n_per_pair is not None else "",
                             rec.seed, format_number(rec.gap),
                             str(rec.gap <= epsilon).lower()])
    finally:
        if owned:
            fh.close()

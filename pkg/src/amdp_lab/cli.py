"""Command-line front end.

Subcommands: solve (dmdp|amdp), params, hardgen, certify, reduce,
experiment.  Console output carries 6 decimals; files carry 12 significant
digits.  Exit codes: 0 success, 2 validation/configuration failure,
3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import chains, corpus, hard_instances, reduction, solvers
from .generative import GenerativeModel, RngSeedSpec
from .mdp import (
    EnumerationBudgetError,
    InfeasibleInstanceError,
    MdpFormatError,
    SolverConvergenceError,
    TabularMdp,
    read_mdp,
    validate_mdp,
    write_mdp,
    write_policy,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3


def _fmt6(x: float) -> str:
    return f"{float(x):.6f}"


def _vector6(v) -> str:
    return "(" + ", ".join(_fmt6(x) for x in np.asarray(v).ravel()) + ")"


def _write_json(path: Path, payload) -> None:
    def render(obj):
        if isinstance(obj, float):
            return float(reduction.format_number(obj))
        if isinstance(obj, (list, tuple)):
            return [render(x) for x in obj]
        if isinstance(obj, dict):
            return {k: render(v) for k, v in obj.items()}
        return obj

    path.write_text(json.dumps(render(payload), indent=1) + "\n")


def _load_mdp(path: str, reward_cap: float = 1.0) -> TabularMdp:
    m = read_mdp(path, reward_cap=reward_cap)
    problems = validate_mdp(m, reward_cap=reward_cap)
    if problems:
        raise MdpFormatError("; ".join(problems))
    return m


def _instance_id(m: TabularMdp, path: str) -> str:
    return str(m.metadata.get("name") or Path(path).stem)


def _oracle_H(m: TabularMdp, budget: int = 10**6) -> float:
    try:
        opt = solvers.amdp_optimal(m, method="enumerate", budget=budget)
    except EnumerationBudgetError:
        opt = solvers.amdp_optimal(m, method="relative_vi")
    return opt.H


def _resolve_H(flag: str, m: TabularMdp) -> float:
    if flag == "oracle":
        return max(_oracle_H(m), 1.0)
    try:
        H = float(flag)
    except ValueError:
        raise MdpFormatError(f"--H must be a float or 'oracle', got {flag!r}")
    if H < 1.0:
        raise MdpFormatError("--H must be at least 1")
    return H


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    m = _load_mdp(args.mdp)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    if args.kind == "dmdp":
        if args.gamma is None:
            raise MdpFormatError("solve dmdp needs --gamma")
        Q, V, policy = solvers.dmdp_value_iteration(m, args.gamma, args.accuracy)
        print(f"V = {_vector6(V)}")
        print(f"policy = {list(map(int, policy.actions))}")
        if out:
            _write_json(out / "values.json", {"gamma": args.gamma, "values": list(V)})
            write_policy(policy, out / "policy.json")
    else:
        opt = solvers.amdp_optimal(m, method=args.method)
        print(f"rho = {_vector6(opt.gain)}")
        print(f"h = {_vector6(opt.bias)}")
        print(f"H = {_fmt6(opt.H)}")
        print(f"policy = {list(map(int, opt.policy.actions))}")
        if not opt.weakly_communicating:
            print("note: input is not weakly communicating; "
                  "constant optimal gain is not guaranteed")
        if out:
            _write_json(out / "gain.json", {"gain": list(opt.gain)})
            _write_json(out / "bias.json", {"bias": list(opt.bias), "H": opt.H})
            write_policy(opt.policy, out / "policy.json")
    return EXIT_OK


def cmd_params(args) -> int:
    m = _load_mdp(args.mdp)
    D = chains.diameter(m)
    H = _oracle_H(m)
    print(f"D = {D if math.isinf(D) else _fmt6(D)}")
    try:
        t_mix = chains.mixing_time(m)
        print(f"t_mix = {t_mix if math.isinf(t_mix) else _fmt6(t_mix)}")
    except EnumerationBudgetError:
        t_mix = None
        print("t_mix = not computed (enumeration budget exceeded)")
    print(f"H = {_fmt6(H)}")
    ok_D = math.isinf(D) or H <= D + 1e-6
    print(f"H <= D: {'pass' if ok_D else 'FAIL'}")
    if t_mix is None:
        print("H <= 8 t_mix: skipped")
    elif math.isinf(t_mix):
        print("H <= 8 t_mix: vacuous (t_mix = inf)")
    else:
        print(f"H <= 8 t_mix: {'pass' if H <= 8.0 * t_mix + 1e-6 else 'FAIL'}")
    return EXIT_OK


def cmd_hardgen(args) -> int:
    spec = hard_instances.HardInstanceSpec(
        S=args.S, A=args.A, D=args.D, epsilon=args.epsilon,
        variant=args.variant, k=args.k, l=args.l)
    m = hard_instances.hard_instance(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    suffix = f"_k{args.k}_l{args.l}" if args.variant == "MKL" else ""
    path = out / (f"{args.variant}_S{args.S}_A{args.A}_D{args.D:g}"
                  f"_eps{args.epsilon:g}{suffix}.json")
    write_mdp(m, path)
    print(f"wrote {path}")
    return EXIT_OK


def _instance_certificates(m: TabularMdp, instance_id: str, epsilon: float,
                           mixing_budget: int = 10**6) -> list[reduction.Certificate]:
    """Full per-instance certificate set used by the certify command."""
    opt = solvers.amdp_optimal(m) if m.num_actions**m.num_states <= 10**6 \
        else solvers.amdp_optimal(m, method="relative_vi")
    certs = [
        reduction.certify_gain_discount_gap(m, opt.policy, 0.9, instance_id),
        *reduction.certify_span_bounds(m, epsilon, instance_id, opt=opt),
        reduction.certify_finite_horizon_identity(m, opt.policy, 200, instance_id),
        reduction.certify_reduction_bound(m, epsilon, 0.0, instance_id, opt=opt),
    ]
    D = chains.diameter(m)
    certs.append(reduction._certificate("bias_span_le_diameter", opt.H, D,
                                        1e-6, instance_id))
    try:
        t_mix = chains.mixing_time(m, budget=mixing_budget)
    except EnumerationBudgetError:
        t_mix = None
    if t_mix is not None and math.isfinite(t_mix):
        certs.append(reduction._certificate("bias_span_le_mixing", opt.H,
                                            8.0 * t_mix, 1e-6, instance_id))
    return certs


def cmd_certify(args) -> int:
    instances: list[tuple[str, TabularMdp]] = []
    if args.mdp:
        for path in args.mdp:
            m = _load_mdp(path)
            instances.append((_instance_id(m, path), m))
    elif args.count:
        instances = list(corpus.standard_corpus(
            count=args.count, max_states=args.smax, max_actions=args.amax,
            master_seed=args.seed))
    else:
        raise MdpFormatError("certify needs --mdp files or a corpus spec (--count)")

    certs: list[reduction.Certificate] = []
    for instance_id, m in instances:
        certs.extend(_instance_certificates(m, instance_id, args.epsilon))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "certificates.csv"
    reduction.write_certificates_csv(certs, csv_path)
    reduction.write_certificates_report(certs, out / "certificates.json")
    failed = [c for c in certs if not c.passed]
    print(f"{len(certs)} certificates on {len(instances)} instances "
          f"-> {csv_path}")
    for c in failed:
        print(f"FAIL {c.instance_id} {c.name}: lhs={c.lhs!r} rhs={c.rhs!r}")
    print("all passed" if not failed else f"{len(failed)} failed")
    return EXIT_OK if not failed else 1


def cmd_reduce(args) -> int:
    m = _load_mdp(args.mdp)
    H = _resolve_H(args.H, m)
    params = reduction.reduction_params(
        args.epsilon, args.delta, H, m.num_states, m.num_actions,
        n_override=args.N[0] if args.N else None)
    gm = GenerativeModel(m, args.seed)
    policy = reduction.algorithm1(gm, params)
    opt = solvers.amdp_optimal(m) if m.num_actions**m.num_states <= 10**6 \
        else solvers.amdp_optimal(m, method="relative_vi")
    gain_hat = solvers.amdp_gain_bias(m, policy).gain
    gap = float(np.max(opt.gain)) - float(np.min(gain_hat))
    print(f"policy = {list(map(int, policy.actions))}")
    print(f"gap = {_fmt6(gap)}")
    print(f"N = {params.n_per_pair}, gamma = {params.gamma!r}, "
          f"total_samples = {params.n_per_pair * m.num_states * m.num_actions}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_policy(policy, out / "policy_hat.json")
        _write_json(out / "reduce.json", {
            "instance_id": _instance_id(m, args.mdp), "seed": args.seed,
            "N": params.n_per_pair, "gap": gap})
    return EXIT_OK


def _experiment_cells(truth, instance_id, opt, args, H):
    spec = RngSeedSpec(args.seed)
    seeds = [spec.trial_seed(i) for i in range(args.trials)]
    if len(set(seeds)) != len(seeds):
        raise MdpFormatError("derived seeds collide; change --seed")
    rho_star = float(np.max(opt.gain))

    def run_cell(cell):
        N, seed = cell
        params = reduction.reduction_params(
            args.epsilon, args.delta, H, truth.num_states, truth.num_actions,
            n_override=N)
        start = time.perf_counter()
        policy = reduction.algorithm1(GenerativeModel(truth, seed), params)
        wallclock_ms = int(round(1000.0 * (time.perf_counter() - start)))
        gap = rho_star - float(np.min(solvers.amdp_gain_bias(truth, policy).gain))
        return {
            "instance_id": instance_id, "N": N, "seed": seed, "gap": gap,
            "success": gap <= args.epsilon, "wallclock_ms": wallclock_ms,
            "total_samples": N * truth.num_states * truth.num_actions,
        }

    cells = [(N, seed) for N in args.N for seed in seeds]
    workers = int(os.environ.get("AMDP_LAB_THREADS", "0") or 0)
    if workers <= 0:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, len(cells)))
    if workers == 1:
        rows = [run_cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    rows.sort(key=lambda row: (row["N"], seeds.index(row["seed"])))
    return rows


def cmd_experiment(args) -> int:
    if not args.N:
        raise MdpFormatError("experiment needs --N with at least one value")
    if args.trials < 1:
        raise MdpFormatError("experiment needs --trials >= 1")
    m = _load_mdp(args.mdp)
    instance_id = _instance_id(m, args.mdp)
    opt = solvers.amdp_optimal(m) if m.num_actions**m.num_states <= 10**6 \
        else solvers.amdp_optimal(m, method="relative_vi")
    H = _resolve_H(args.H, m)
    rows = _experiment_cells(m, instance_id, opt, args, H)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "experiment.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance_id", "N", "seed", "gap", "success",
                         "wallclock_ms", "total_samples"])
        for row in rows:
            writer.writerow([row["instance_id"], row["N"], row["seed"],
                             reduction.format_number(row["gap"]),
                             str(row["success"]).lower(), row["wallclock_ms"],
                             row["total_samples"]])
    print(f"{len(rows)} rows -> {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amdp-lab",
        description="Average-reward MDP laboratory: solve, analyze, generate, "
                    "certify, and run sampled-reduction experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="exact discounted or average-reward solve")
    p.add_argument("kind", choices=["dmdp", "amdp"])
    p.add_argument("--mdp", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--accuracy", type=float, default=1e-9)
    p.add_argument("--method", choices=["enumerate", "relative_vi"],
                   default="enumerate")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("params", help="diameter, mixing time, bias span")
    p.add_argument("--mdp", required=True)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("hardgen", help="generate a lower-bound hard instance")
    p.add_argument("--S", type=int, required=True)
    p.add_argument("--A", type=int, required=True)
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--variant", choices=["M0", "M1", "MKL"], default="M0")
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_hardgen)

    p = sub.add_parser("certify", help="machine-check the proved inequalities")
    p.add_argument("--mdp", nargs="*")
    p.add_argument("--count", type=int)
    p.add_argument("--smax", type=int, default=6)
    p.add_argument("--amax", type=int, default=4)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("reduce", help="one sampled-reduction run with exact gap")
    p.add_argument("--mdp", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--H", default="oracle")
    p.add_argument("--N", type=_int_list)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("experiment", help="sweep N x seeds, write a CSV")
    p.add_argument("--mdp", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--H", default="oracle")
    p.add_argument("--N", type=_int_list, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MdpFormatError, InfeasibleInstanceError, FileNotFoundError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverConvergenceError, EnumerationBudgetError,
            np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

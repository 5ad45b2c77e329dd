"""Command-line front end: run, sweep, gen-profile, diag.

All randomness flows from the trace seed; an optional --seed flag is folded
into it by stable hashing so sweeps stay reproducible piecemeal.  Outputs
are CSV (per-step or per-setting) plus a JSON summary; no plotting.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

from .estimator import KalmanConfig
from .model import ConstraintSpec, Mode, ProfileError, load_profile, save_profile
from .policies import POLICY_NAMES, make_policy
from .simulator import (
    Trace,
    TraceError,
    load_trace,
    run,
    xi_diagnostics_from_values,
)
from .synth import ProfileKnobs, generate_space, reference_latency

CSV_COLUMNS = [
    "input_index",
    "dnn",
    "power_watts",
    "stage",
    "latency_s",
    "deadline_met",
    "accuracy",
    "energy_j",
    "viol_latency",
    "viol_accuracy",
    "viol_energy",
]


class CliError(Exception):
    """User-input problem; maps to exit code 2."""


def _stable_seed(top_seed: int, trace_seed: int) -> int:
    digest = hashlib.sha256(f"{top_seed}:{trace_seed}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def _effective_trace(trace: Trace, top_seed: int | None) -> Trace:
    if top_seed is None:
        return trace
    return replace(trace, seed=_stable_seed(top_seed, trace.seed))


def _kalman_from_args(args) -> KalmanConfig | None:
    overrides = {
        "r": args.kalman_r,
        "q0": args.kalman_q0,
        "alpha": args.kalman_alpha,
        "k0": args.kalman_k0,
    }
    set_vals = {k: v for k, v in overrides.items() if v is not None}
    if not set_vals:
        return None
    return replace(KalmanConfig(), **set_vals)


def _build_spec(args, space) -> ConstraintSpec:
    mode = Mode(args.mode)
    ref = reference_latency(space)
    t_goal = args.t_goal if args.t_goal is not None else args.deadline_mult * ref
    overhead = args.overhead if args.overhead is not None else 0.01 * ref
    e_goal = args.e_goal
    if e_goal is None and args.e_goal_mult is not None:
        e_goal = args.e_goal_mult * space.max_power.cap_watts * t_goal
    try:
        return ConstraintSpec(
            mode=mode,
            t_goal=t_goal,
            e_goal=e_goal,
            q_goal=args.q_goal,
            pr_threshold=args.pr_th,
            overhead_budget=overhead,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _load_inputs(args):
    try:
        space = load_profile(args.profile)
    except (ProfileError, OSError) as exc:
        raise CliError(f"profile: {exc}") from exc
    try:
        trace = load_trace(args.trace)
    except (TraceError, OSError) as exc:
        raise CliError(f"trace: {exc}") from exc
    return space, trace


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_step_csv(path: Path, records, space) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.input_index,
                    space.dnns[r.decision.dnn_index].id,
                    _fmt(space.powers[r.decision.power_index].cap_watts),
                    r.completed_stage,
                    _fmt(r.observed_latency),
                    int(r.deadline_met),
                    _fmt(r.delivered_accuracy),
                    _fmt(r.energy),
                    int(r.violations.latency),
                    int(r.violations.accuracy),
                    int(r.violations.energy),
                ]
            )


def _summary_dict(summary, spec: ConstraintSpec, policy_name: str) -> dict:
    return {
        "policy": policy_name,
        "n_inputs": summary.n_inputs,
        "mean_energy_j": summary.mean_energy,
        "mean_accuracy": summary.mean_accuracy,
        "mean_error": summary.mean_error,
        "violation_rates": summary.violation_rates,
        "per_phase": [
            {
                "length": p.length,
                "mean_energy_j": p.mean_energy,
                "mean_accuracy": p.mean_accuracy,
                "violation_rates": p.violation_rates,
            }
            for p in summary.per_phase
        ],
        "spec": {
            "mode": spec.mode.value,
            "t_goal_s": spec.t_goal,
            "e_goal_j": spec.e_goal,
            "q_goal": spec.q_goal,
            "pr_threshold": spec.pr_threshold,
            "overhead_budget_s": spec.overhead_budget,
        },
    }


def cmd_run(args) -> int:
    space, trace = _load_inputs(args)
    trace = _effective_trace(trace, args.seed)
    spec = _build_spec(args, space)
    policy = make_policy(args.policy, kalman=_kalman_from_args(args))
    result = run(space, spec, trace, policy)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_step_csv(out.with_suffix(".csv"), result.records, space)
    out.with_suffix(".json").write_text(
        json.dumps(
            _summary_dict(result.summary, spec, policy.name),
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return 0


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"bad {what} list: {text!r}") from exc
    if not vals:
        raise CliError(f"empty {what} grid")
    return vals


def cmd_sweep(args) -> int:
    space, trace = _load_inputs(args)
    trace = _effective_trace(trace, args.seed)
    mode = Mode(args.mode)
    ref = reference_latency(space)
    kalman = _kalman_from_args(args)

    deadline_mults = _parse_floats(args.deadline_mults, "deadline-mult")
    if mode is Mode.MINIMIZE_ENERGY:
        if args.q_goals is None:
            raise CliError("min-energy sweep requires --q-goals")
        goals = _parse_floats(args.q_goals, "q-goal")
    else:
        if args.e_goal_mults is None:
            raise CliError("max-accuracy sweep requires --e-goal-mults")
        goals = _parse_floats(args.e_goal_mults, "e-goal-mult")

    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    for p in policies:
        if p not in POLICY_NAMES:
            raise CliError(f"unknown policy {p!r}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for dm in deadline_mults:
        t_goal = dm * ref
        for g in goals:
            if mode is Mode.MINIMIZE_ENERGY:
                spec = ConstraintSpec(
                    mode=mode,
                    t_goal=t_goal,
                    q_goal=g,
                    pr_threshold=args.pr_th,
                    overhead_budget=0.01 * ref,
                )
            else:
                spec = ConstraintSpec(
                    mode=mode,
                    t_goal=t_goal,
                    e_goal=g * space.max_power.cap_watts * t_goal,
                    pr_threshold=args.pr_th,
                    overhead_budget=0.01 * ref,
                )
            static = run(space, spec, trace, make_policy("oracle-static")).summary
            baseline = static.objective(spec)
            for name in policies:
                if name == "oracle-static":
                    summary = static
                else:
                    summary = run(
                        space, spec, trace, make_policy(name, kalman=kalman)
                    ).summary
                obj = summary.objective(spec)
                norm = obj / baseline if baseline else float("nan")
                rows.append(
                    [
                        _fmt(dm),
                        _fmt(g),
                        name,
                        _fmt(obj),
                        _fmt(norm),
                        _fmt(summary.violation_rates["latency"]),
                        _fmt(summary.violation_rates["accuracy"]),
                        _fmt(summary.violation_rates["energy"]),
                    ]
                )

    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "deadline_mult",
                "q_goal" if mode is Mode.MINIMIZE_ENERGY else "e_goal_mult",
                "policy",
                "mean_objective",
                "normalized_to_oracle_static",
                "viol_latency_rate",
                "viol_accuracy_rate",
                "viol_energy_rate",
            ]
        )
        writer.writerows(rows)
    return 0


def cmd_gen_profile(args) -> int:
    knobs = ProfileKnobs(
        n_dnns=args.dnns,
        n_powers=args.powers,
        power_min=args.power_min,
        power_max=args.power_max,
        power_exponent=args.power_exponent,
        latency_min=args.latency_min,
        latency_ratio=args.latency_ratio,
        error_min=args.error_min,
        error_ratio=args.error_ratio,
        anytime_stages=args.anytime_stages,
        num_classes=args.num_classes,
    )
    try:
        space = generate_space(knobs, seed=args.seed or 0)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_profile(space, out)
    return 0


def cmd_diag(args) -> int:
    try:
        space = load_profile(args.profile)
    except (ProfileError, OSError) as exc:
        raise CliError(f"profile: {exc}") from exc
    dnn_by_id = {d.id: d for d in space.dnns}
    cap_to_index = {pw.cap_watts: pw.index for pw in space.powers}

    import numpy as np

    xi = []
    try:
        with open(args.run_csv, newline="") as fh:
            for row in csv.DictReader(fh):
                dnn = dnn_by_id.get(row["dnn"])
                if dnn is None:
                    raise CliError(f"run CSV references unknown dnn {row['dnn']!r}")
                j = cap_to_index.get(float(row["power_watts"]))
                if j is None:
                    raise CliError(
                        f"run CSV references unknown power {row['power_watts']!r}"
                    )
                stage = max(1, int(row["stage"]))
                t_prof = dnn.stages[stage - 1].t_prof[j]
                xi.append(float(row["latency_s"]) / t_prof)
    except OSError as exc:
        raise CliError(f"run CSV: {exc}") from exc
    if len(xi) < 30:
        raise CliError(f"need at least 30 rows for diagnostics, got {len(xi)}")

    diag = xi_diagnostics_from_values(np.array(xi))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.with_suffix(".csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for k in range(len(diag.counts)):
            writer.writerow(
                [
                    _fmt(diag.bin_edges[k]),
                    _fmt(diag.bin_edges[k + 1]),
                    int(diag.counts[k]),
                ]
            )
    out.with_suffix(".json").write_text(
        json.dumps(
            {"n": int(len(diag.values)), "fit_mean": diag.mean, "fit_sd": diag.sd},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return 0


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[m.value for m in Mode], default="min-energy")
    p.add_argument("--deadline-mult", type=float, default=1.0)
    p.add_argument("--t-goal", type=float, default=None, help="absolute deadline, s")
    p.add_argument("--q-goal", type=float, default=None)
    p.add_argument("--e-goal", type=float, default=None, help="energy budget, J")
    p.add_argument(
        "--e-goal-mult",
        type=float,
        default=None,
        help="energy budget as a fraction of max-cap power over the deadline",
    )
    p.add_argument("--pr-th", type=float, default=None)
    p.add_argument("--overhead", type=float, default=None, help="scheduler tax, s")


def _add_kalman_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kalman.r", dest="kalman_r", type=float, default=None)
    p.add_argument("--kalman.q0", dest="kalman_q0", type=float, default=None)
    p.add_argument("--kalman.alpha", dest="kalman_alpha", type=float, default=None)
    p.add_argument("--kalman.k0", dest="kalman_k0", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alertsim")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one policy on one trace")
    p_run.add_argument("--profile", required=True)
    p_run.add_argument("--trace", required=True)
    p_run.add_argument("--policy", choices=POLICY_NAMES, default="alert")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", required=True, help="output base path (.csv/.json)")
    _add_spec_flags(p_run)
    _add_kalman_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="cross-product of constraint settings")
    p_sweep.add_argument("--profile", required=True)
    p_sweep.add_argument("--trace", required=True)
    p_sweep.add_argument("--mode", choices=[m.value for m in Mode], default="min-energy")
    p_sweep.add_argument("--deadline-mults", default="0.4,0.8,1.2,1.6,2.0")
    p_sweep.add_argument("--q-goals", default=None)
    p_sweep.add_argument("--e-goal-mults", default=None)
    p_sweep.add_argument("--policies", default="alert,oracle,oracle-static")
    p_sweep.add_argument("--pr-th", type=float, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", required=True)
    _add_kalman_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("gen-profile", help="generate a synthetic profile")
    p_gen.add_argument("--dnns", type=int, default=8)
    p_gen.add_argument("--powers", type=int, default=5)
    p_gen.add_argument("--power-min", type=float, default=10.0)
    p_gen.add_argument("--power-max", type=float, default=50.0)
    p_gen.add_argument("--power-exponent", type=float, default=0.8)
    p_gen.add_argument("--latency-min", type=float, default=0.02)
    p_gen.add_argument("--latency-ratio", type=float, default=18.0)
    p_gen.add_argument("--error-min", type=float, default=0.03)
    p_gen.add_argument("--error-ratio", type=float, default=7.8)
    p_gen.add_argument("--anytime-stages", type=int, default=4)
    p_gen.add_argument("--num-classes", type=int, default=10)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen_profile)

    p_diag = sub.add_parser("diag", help="slow-down histogram from a run CSV")
    p_diag.add_argument("--run-csv", required=True)
    p_diag.add_argument("--profile", required=True)
    p_diag.add_argument("--out", required=True)
    p_diag.set_defaults(func=cmd_diag)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

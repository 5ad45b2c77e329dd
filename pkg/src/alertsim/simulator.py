"""Trace-driven closed-loop harness.

A trace is a sequence of environment phases, each a distribution over true
per-input slow-down factors plus a true idle-power level.  The harness
realizes the trace into per-input draws up front (so clairvoyant policies
can inspect them), then executes any policy input by input: adjust the time
goal, decide, execute under the true slow-down, measure, feed back.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Union

import numpy as np

from .model import ConfigSpace, ConstraintSpec, DnnKind, Mode
from .selector import (
    ConfigDecision,
    GroupState,
    InfeasibleDeadlineError,
    adjust_goal,
)

MIN_SLOWDOWN = 0.01  # truncation floor for heavy-tailed draws


# --- slow-down distributions ------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.value)

    def mean(self) -> float:
        return self.value


@dataclass(frozen=True)
class Gaussian:
    mean_: float
    sd: float

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean_, self.sd, n)

    def mean(self) -> float:
        return self.mean_


@dataclass(frozen=True)
class LogNormal:
    mu_log: float
    sd_log: float

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.lognormal(self.mu_log, self.sd_log, n)

    def mean(self) -> float:
        return math.exp(self.mu_log + 0.5 * self.sd_log**2)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, n)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)


SlowdownDist = Union[Constant, Gaussian, LogNormal, Uniform]


def lognormal_matching(mean: float, sd: float) -> LogNormal:
    """LogNormal with the same mean and variance as a Gaussian(mean, sd)."""
    if mean <= 0:
        raise ValueError("mean must be positive")
    sd_log2 = math.log(1.0 + (sd / mean) ** 2)
    return LogNormal(mu_log=math.log(mean) - 0.5 * sd_log2, sd_log=math.sqrt(sd_log2))


@dataclass(frozen=True)
class EnvironmentPhase:
    length: int
    slowdown_dist: SlowdownDist
    idle_power_true: float      # watts
    input_noise_sd: float = 0.0  # per-input multiplicative jitter


@dataclass(frozen=True)
class Trace:
    seed: int
    phases: tuple[EnvironmentPhase, ...]
    group_size: int | None = None  # shared-deadline group length

    @property
    def length(self) -> int:
        return sum(p.length for p in self.phases)


# --- trace file format ------------------------------------------------------

_DIST_KINDS = {
    "constant": (Constant, ("value",)),
    "gaussian": (Gaussian, ("mean", "sd")),
    "lognormal": (LogNormal, ("mu_log", "sd_log")),
    "uniform": (Uniform, ("lo", "hi")),
}


class TraceError(ValueError):
    """Malformed trace document."""


def _dist_from_dict(d: dict) -> SlowdownDist:
    kind = d.get("kind")
    if kind not in _DIST_KINDS:
        raise TraceError(f"unknown distribution kind {kind!r}")
    cls, params = _DIST_KINDS[kind]
    missing = [p for p in params if p not in d]
    if missing:
        raise TraceError(f"distribution '{kind}' missing params {missing}")
    extra = set(d) - {"kind", *params}
    if extra:
        raise TraceError(f"distribution '{kind}': unknown params {sorted(extra)}")
    return cls(*(float(d[p]) for p in params))


def _dist_to_dict(dist: SlowdownDist) -> dict:
    if isinstance(dist, Constant):
        return {"kind": "constant", "value": dist.value}
    if isinstance(dist, Gaussian):
        return {"kind": "gaussian", "mean": dist.mean_, "sd": dist.sd}
    if isinstance(dist, LogNormal):
        return {"kind": "lognormal", "mu_log": dist.mu_log, "sd_log": dist.sd_log}
    return {"kind": "uniform", "lo": dist.lo, "hi": dist.hi}


def trace_from_dict(doc: dict) -> Trace:
    try:
        phases = tuple(
            EnvironmentPhase(
                length=int(p["length"]),
                slowdown_dist=_dist_from_dict(p["dist"]),
                idle_power_true=float(p["idle_power_true"]),
                input_noise_sd=float(p.get("input_noise_sd", 0.0)),
            )
            for p in doc["phases"]
        )
        trace = Trace(
            seed=int(doc["seed"]),
            phases=phases,
            group_size=int(doc["group_size"]) if "group_size" in doc else None,
        )
    except KeyError as exc:
        raise TraceError(f"trace: missing field {exc}") from exc
    if trace.length < 1:
        raise TraceError("trace: total length must be >= 1")
    for k, p in enumerate(trace.phases):
        if p.length < 1:
            raise TraceError(f"trace phase {k}: length must be >= 1")
        if p.idle_power_true <= 0:
            raise TraceError(f"trace phase {k}: idle power must be positive")
    return trace


def trace_to_dict(trace: Trace) -> dict:
    doc: dict = {
        "seed": trace.seed,
        "phases": [
            {
                "length": p.length,
                "dist": _dist_to_dict(p.slowdown_dist),
                "idle_power_true": p.idle_power_true,
                "input_noise_sd": p.input_noise_sd,
            }
            for p in trace.phases
        ],
    }
    if trace.group_size is not None:
        doc["group_size"] = trace.group_size
    return doc


def load_trace(path: str | Path) -> Trace:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}: not valid JSON ({exc})") from exc
    try:
        return trace_from_dict(doc)
    except TraceError as exc:
        raise TraceError(f"{path}: {exc}") from exc


def save_trace(trace: Trace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trace_to_dict(trace), indent=2) + "\n")


# --- realized environment ---------------------------------------------------

@dataclass(frozen=True)
class TrueEnvironment:
    """Per-input ground truth drawn once from the trace seed."""

    slowdown: np.ndarray
    idle_power: np.ndarray
    phase_index: np.ndarray


def realize(trace: Trace) -> TrueEnvironment:
    rng = np.random.default_rng(trace.seed)
    slow, idle, phase = [], [], []
    for k, p in enumerate(trace.phases):
        s = p.slowdown_dist.draw(rng, p.length)
        if p.input_noise_sd > 0:
            s = s * rng.normal(1.0, p.input_noise_sd, p.length)
        slow.append(np.maximum(s, MIN_SLOWDOWN))
        idle.append(np.full(p.length, p.idle_power_true))
        phase.append(np.full(p.length, k, dtype=int))
    return TrueEnvironment(
        slowdown=np.concatenate(slow),
        idle_power=np.concatenate(idle),
        phase_index=np.concatenate(phase),
    )


# --- single-input execution -------------------------------------------------

@dataclass(frozen=True)
class ExecOutcome:
    true_slowdown: float
    latency: float          # seconds until a result is available (or cut off)
    completed_stage: int    # 1-based; 0 = nothing finished in time
    fb_latency: float       # observation fed to the slow-down filter
    fb_t_prof: float        # matching profiled latency


def execute_decision(
    s: float, decision: ConfigDecision, space: ConfigSpace, t_goal: float
) -> ExecOutcome:
    """Deterministic outcome of one decision under true slow-down s.

    Traditional DNNs run to completion; anytime DNNs stop at the target
    stage or the deadline, whichever is earlier, and deliver the last stage
    finished by the stop time.  The filter feedback pair is the completion
    time of the stage actually finished (falling back to the cut-off time
    against the first stage's profile when nothing finished).
    """
    dnn = space.dnns[decision.dnn_index]
    j = decision.power_index
    if dnn.kind is DnnKind.TRADITIONAL:
        t_prof = dnn.stages[0].t_prof[j]
        latency = s * t_prof
        completed = 1 if latency <= t_goal else 0
        return ExecOutcome(s, latency, completed, latency, t_prof)

    target = decision.target_stage or len(dnn.stages)
    stop = min(s * dnn.stages[target - 1].t_prof[j], t_goal)
    completed = 0
    for k in range(target):
        if s * dnn.stages[k].t_prof[j] <= stop:
            completed = k + 1
    if completed:
        t_prof = dnn.stages[completed - 1].t_prof[j]
        fb_latency, fb_t_prof = s * t_prof, t_prof
    else:
        # nothing finished: the cut-off time only bounds the slow-down
        fb_latency, fb_t_prof = stop, dnn.stages[0].t_prof[j]
    return ExecOutcome(s, stop, completed, fb_latency, fb_t_prof)


def sample_step(
    phase: EnvironmentPhase,
    rng: np.random.Generator,
    decision: ConfigDecision,
    space: ConfigSpace,
    t_goal: float,
) -> tuple[float, float, int]:
    """Draw one true slow-down from a phase and execute the decision.

    Returns (true_slowdown, observed_latency, completed_stage).
    """
    s = float(phase.slowdown_dist.draw(rng, 1)[0])
    if phase.input_noise_sd > 0:
        s *= float(rng.normal(1.0, phase.input_noise_sd))
    s = max(s, MIN_SLOWDOWN)
    out = execute_decision(s, decision, space, t_goal)
    return out.true_slowdown, out.latency, out.completed_stage


# --- measurement ------------------------------------------------------------

@dataclass(frozen=True)
class ViolationFlags:
    latency: bool
    accuracy: bool
    energy: bool


@dataclass(frozen=True)
class StepRecord:
    input_index: int
    decision: ConfigDecision
    true_slowdown: float
    observed_latency: float
    completed_stage: int
    deadline_met: bool
    delivered_accuracy: float
    energy: float
    violations: ViolationFlags
    phase_index: int = 0
    period: float = 0.0       # per-input deadline period used for accounting
    fb_latency: float = 0.0
    fb_t_prof: float = 0.0
    idle_power_true: float = 0.0


def measure(
    decision: ConfigDecision,
    outcome: ExecOutcome,
    spec: ConstraintSpec,
    idle_power_true: float,
    space: ConfigSpace,
    *,
    input_index: int = 0,
    phase_index: int = 0,
    period: float | None = None,
    overhead: float | None = None,
) -> StepRecord:
    """Turn an execution outcome into a record with energy accounting and
    constraint-violation flags against the original spec.

    Inference draws the cap for min(latency, period); the remainder of the
    period draws the true idle power.
    """
    dnn = space.dnns[decision.dnn_index]
    cap = space.powers[decision.power_index].cap_watts
    per = spec.t_goal if period is None else period
    tax = spec.overhead_budget if overhead is None else overhead
    latency = outcome.latency + tax

    if outcome.completed_stage >= 1:
        delivered = dnn.stages[outcome.completed_stage - 1].accuracy
    else:
        delivered = dnn.q_fail
    deadline_met = outcome.completed_stage >= 1 and latency <= per

    energy = cap * min(latency, per) + idle_power_true * max(0.0, per - latency)
    flags = ViolationFlags(
        latency=not deadline_met,
        accuracy=(
            spec.mode is Mode.MINIMIZE_ENERGY and delivered < spec.q_goal
        ),
        energy=(spec.mode is Mode.MAXIMIZE_ACCURACY and energy > spec.e_goal),
    )
    return StepRecord(
        input_index=input_index,
        decision=decision,
        true_slowdown=outcome.true_slowdown,
        observed_latency=latency,
        completed_stage=outcome.completed_stage,
        deadline_met=deadline_met,
        delivered_accuracy=delivered,
        energy=energy,
        violations=flags,
        phase_index=phase_index,
        period=per,
        fb_latency=outcome.fb_latency,
        fb_t_prof=outcome.fb_t_prof,
        idle_power_true=idle_power_true,
    )


# --- closed loop ------------------------------------------------------------

class Policy(Protocol):
    name: str

    def begin(
        self, space: ConfigSpace, spec: ConstraintSpec, env: TrueEnvironment
    ) -> None: ...

    def decide(self, index: int, t_goal: float) -> ConfigDecision: ...

    def observe(self, record: StepRecord) -> None: ...


@dataclass(frozen=True)
class PhaseSummary:
    length: int
    mean_energy: float
    mean_accuracy: float
    violation_rates: dict


@dataclass(frozen=True)
class Summary:
    n_inputs: int
    mean_energy: float
    mean_accuracy: float
    mean_error: float
    violation_rates: dict
    per_phase: tuple[PhaseSummary, ...]

    def objective(self, spec: ConstraintSpec) -> float:
        if spec.mode is Mode.MINIMIZE_ENERGY:
            return self.mean_energy
        return self.mean_accuracy


@dataclass(frozen=True)
class RunResult:
    records: tuple[StepRecord, ...]
    summary: Summary


def _summarize(records: list[StepRecord], n_phases: int) -> Summary:
    def rates(rs: list[StepRecord]) -> dict:
        n = len(rs)
        return {
            "latency": sum(r.violations.latency for r in rs) / n,
            "accuracy": sum(r.violations.accuracy for r in rs) / n,
            "energy": sum(r.violations.energy for r in rs) / n,
        }

    per_phase = []
    for k in range(n_phases):
        rs = [r for r in records if r.phase_index == k]
        if not rs:
            continue
        per_phase.append(
            PhaseSummary(
                length=len(rs),
                mean_energy=sum(r.energy for r in rs) / len(rs),
                mean_accuracy=sum(r.delivered_accuracy for r in rs) / len(rs),
                violation_rates=rates(rs),
            )
        )
    mean_acc = sum(r.delivered_accuracy for r in records) / len(records)
    return Summary(
        n_inputs=len(records),
        mean_energy=sum(r.energy for r in records) / len(records),
        mean_accuracy=mean_acc,
        mean_error=1.0 - mean_acc,
        violation_rates=rates(records),
        per_phase=tuple(per_phase),
    )


def run(
    space: ConfigSpace, spec: ConstraintSpec, trace: Trace, policy: Policy
) -> RunResult:
    """Execute a policy over a whole trace (workflow: measure previous,
    adjust goal, predict, select).  Infeasible adjusted deadlines are
    clamped and surface as latency violations; a run never aborts."""
    env = realize(trace)
    policy.begin(space, spec, env)
    records: list[StepRecord] = []

    group: GroupState | None = None
    for n in range(trace.length):
        if trace.group_size is not None:
            if group is None or group.remaining_count == 0:
                group = GroupState(
                    remaining_budget=trace.group_size * spec.t_goal,
                    remaining_count=trace.group_size,
                )
        try:
            plan_goal = adjust_goal(spec, group)
        except InfeasibleDeadlineError:
            plan_goal = 0.001  # proceed; the miss is recorded below
        period = plan_goal + spec.overhead_budget

        decision = policy.decide(n, plan_goal)
        s = float(env.slowdown[n])
        outcome = execute_decision(s, decision, space, plan_goal)
        record = measure(
            decision,
            outcome,
            spec,
            float(env.idle_power[n]),
            space,
            input_index=n,
            phase_index=int(env.phase_index[n]),
            period=period,
        )
        records.append(record)
        policy.observe(record)

        if group is not None:
            group.remaining_budget -= record.observed_latency
            group.remaining_count -= 1

    return RunResult(
        records=tuple(records), summary=_summarize(records, len(trace.phases))
    )


# --- slow-down diagnostics --------------------------------------------------

@dataclass(frozen=True)
class XiDiagnostics:
    values: np.ndarray
    counts: np.ndarray
    bin_edges: np.ndarray
    mean: float
    sd: float


def xi_diagnostics(
    records: list[StepRecord] | tuple[StepRecord, ...],
    space: ConfigSpace | None = None,
) -> XiDiagnostics:
    """Observed slow-down factors with a 40-bin histogram and an MLE
    Gaussian fit; needs at least 30 records."""
    if len(records) < 30:
        raise ValueError("need at least 30 records for diagnostics")
    xi = np.array([r.fb_latency / r.fb_t_prof for r in records])
    return xi_diagnostics_from_values(xi)


def xi_diagnostics_from_values(xi: np.ndarray) -> XiDiagnostics:
    if len(xi) < 30:
        raise ValueError("need at least 30 values for diagnostics")
    counts, edges = np.histogram(xi, bins=40)
    return XiDiagnostics(
        values=xi,
        counts=counts,
        bin_edges=edges,
        mean=float(np.mean(xi)),
        sd=float(np.std(xi)),
    )

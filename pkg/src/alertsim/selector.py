"""Constrained configuration selection over a prediction list.

Feasibility applies the active budget constraints (energy or accuracy, plus
an optional completion-probability threshold); the objective is the spec's
optimization mode.  When nothing is feasible the selector relaxes
constraints in a fixed hierarchy rather than failing: first the energy
budget, then the accuracy goal.  Latency is never relaxed because deadline
misses are already priced into expected accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import ConstraintSpec, Mode
from .predictor import Prediction


class FallbackLevel(Enum):
    NONE = "none"
    DROPPED_ENERGY = "dropped-energy"
    DROPPED_ACCURACY = "dropped-accuracy"


@dataclass(frozen=True)
class ConfigDecision:
    dnn_index: int
    power_index: int
    target_stage: int | None
    prediction: Prediction
    feasible: bool
    fallback_level: FallbackLevel


@dataclass
class GroupState:
    """Remaining shared-deadline budget for a group of inputs."""

    remaining_budget: float  # seconds
    remaining_count: int


class InfeasibleDeadlineError(ValueError):
    """The adjusted per-input deadline is not positive."""


def adjust_goal(
    spec: ConstraintSpec,
    group_state: GroupState | None = None,
    floor_min: float = 0.001,
) -> float:
    """Per-input time goal after overhead compensation.

    Shared-deadline groups split the remaining budget evenly over the
    remaining inputs; the result is floored at floor_min.
    """
    if group_state is None:
        goal = spec.t_goal - spec.overhead_budget
    else:
        if group_state.remaining_count < 1:
            raise ValueError("group has no remaining inputs")
        share = group_state.remaining_budget / group_state.remaining_count
        goal = share - spec.overhead_budget
    goal = max(goal, floor_min)
    if goal <= 0:
        raise InfeasibleDeadlineError(
            f"adjusted deadline {goal:.6g} s is not positive"
        )
    return goal


def _feasible(
    p: Prediction,
    spec: ConstraintSpec,
    use_energy: bool,
    use_accuracy: bool,
    use_pr: bool,
) -> bool:
    if use_pr and spec.pr_threshold is not None and p.pr_deadline < spec.pr_threshold:
        return False
    if spec.mode is Mode.MAXIMIZE_ACCURACY:
        return not use_energy or p.energy <= spec.e_goal
    return not use_accuracy or p.expected_accuracy >= spec.q_goal


def _rank_key(p: Prediction, spec: ConstraintSpec, objective_mode: Mode):
    stage = 0 if p.target_stage is None else p.target_stage
    if objective_mode is Mode.MAXIMIZE_ACCURACY:
        return (-p.expected_accuracy, p.energy, p.power_index, p.dnn_index, stage)
    return (p.energy, -p.expected_accuracy, p.power_index, p.dnn_index, stage)


_LEVELS = (
    # (fallback level, use_energy, use_accuracy, use_pr)
    (FallbackLevel.NONE, True, True, True),
    (FallbackLevel.DROPPED_ENERGY, False, True, True),
    (FallbackLevel.DROPPED_ACCURACY, False, False, False),
)


def select(predictions: list[Prediction], spec: ConstraintSpec) -> ConfigDecision:
    """Best feasible prediction under the spec, with constraint-relaxation
    fallback; always returns a decision.

    Ties break toward lower energy (accuracy mode) or higher accuracy
    (energy mode), then lower power index, then lower DNN index.
    At the last fallback level the objective switches to maximum expected
    accuracy regardless of mode.
    """
    if not predictions:
        raise ValueError("predictions must be non-empty")
    for level, use_e, use_a, use_pr in _LEVELS:
        pool = [p for p in predictions if _feasible(p, spec, use_e, use_a, use_pr)]
        if not pool:
            continue
        mode = (
            Mode.MAXIMIZE_ACCURACY
            if level is FallbackLevel.DROPPED_ACCURACY
            else spec.mode
        )
        best = min(pool, key=lambda p: _rank_key(p, spec, mode))
        return ConfigDecision(
            dnn_index=best.dnn_index,
            power_index=best.power_index,
            target_stage=best.target_stage,
            prediction=best,
            feasible=level is FallbackLevel.NONE,
            fallback_level=level,
        )
    raise AssertionError("unreachable: last level has no constraints")


def brute_force_select(
    predictions: list[Prediction], spec: ConstraintSpec
) -> ConfigDecision:
    """Exhaustive-scan oracle for select(): same feasibility and tie rules,
    written as explicit pairwise comparisons."""
    if not predictions:
        raise ValueError("predictions must be non-empty")

    def better(a: Prediction, b: Prediction, mode: Mode) -> bool:
        if mode is Mode.MAXIMIZE_ACCURACY:
            if a.expected_accuracy != b.expected_accuracy:
                return a.expected_accuracy > b.expected_accuracy
            if a.energy != b.energy:
                return a.energy < b.energy
        else:
            if a.energy != b.energy:
                return a.energy < b.energy
            if a.expected_accuracy != b.expected_accuracy:
                return a.expected_accuracy > b.expected_accuracy
        if a.power_index != b.power_index:
            return a.power_index < b.power_index
        if a.dnn_index != b.dnn_index:
            return a.dnn_index < b.dnn_index
        a_stage = 0 if a.target_stage is None else a.target_stage
        b_stage = 0 if b.target_stage is None else b.target_stage
        return a_stage < b_stage

    for level, use_e, use_a, use_pr in _LEVELS:
        mode = (
            Mode.MAXIMIZE_ACCURACY
            if level is FallbackLevel.DROPPED_ACCURACY
            else spec.mode
        )
        best: Prediction | None = None
        for p in predictions:
            if not _feasible(p, spec, use_e, use_a, use_pr):
                continue
            if best is None or better(p, best, mode):
                best = p
        if best is not None:
            return ConfigDecision(
                dnn_index=best.dnn_index,
                power_index=best.power_index,
                target_stage=best.target_stage,
                prediction=best,
                feasible=level is FallbackLevel.NONE,
                fallback_level=level,
            )
    raise AssertionError("unreachable: last level has no constraints")

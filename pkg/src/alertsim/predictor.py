"""Per-configuration predictions from estimator state and profiled tables.

The slow-down factor is modelled as Gaussian, so every configuration's
latency is Gaussian with mean mu*t_prof and sd sigma*t_prof.  From that we
derive deadline-completion probabilities, expected delivered accuracy
(step-function blend with the backup accuracy; staircase over stages for
anytime DNNs), and energy in mean or percentile form.

All functions here are pure; probabilities use the untruncated Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

from .estimator import IdlePowerEstimate, SlowdownEstimate
from .model import ConfigSpace, ConstraintSpec, DnnKind, DnnProfile

_SQRT2 = math.sqrt(2.0)
_STD_NORMAL = NormalDist()


def normal_cdf(x: float) -> float:
    """Standard normal CDF via erf; absolute error well under 1e-9."""
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("quantile probability must lie in (0, 1)")
    return _STD_NORMAL.inv_cdf(p)


@dataclass(frozen=True)
class Prediction:
    dnn_index: int
    power_index: int
    target_stage: int | None  # 1-based; None for traditional DNNs
    latency_mean: float
    latency_sigma: float
    pr_deadline: float
    expected_accuracy: float
    energy: float


def latency_distribution(
    est: SlowdownEstimate, t_prof: float
) -> tuple[float, float]:
    if t_prof <= 0:
        raise ValueError("t_prof must be positive")
    return est.mu * t_prof, est.sigma * t_prof


def deadline_probability(
    est: SlowdownEstimate, t_prof: float, t_goal: float
) -> float:
    """Probability that this configuration finishes by the deadline."""
    if t_prof <= 0 or t_goal <= 0:
        raise ValueError("t_prof and t_goal must be positive")
    mean, sigma = latency_distribution(est, t_prof)
    if sigma == 0.0:
        return 1.0 if mean <= t_goal else 0.0
    return normal_cdf((t_goal - mean) / sigma)


def accuracy_blend(pr_deadline: float, q_on_time: float, q_fail: float) -> float:
    """Expectation of the on-time/backup accuracy step function."""
    return pr_deadline * q_on_time + (1.0 - pr_deadline) * q_fail


def expected_accuracy_traditional(
    est: SlowdownEstimate, dnn: DnnProfile, power_index: int, t_goal: float
) -> float:
    if dnn.kind is not DnnKind.TRADITIONAL:
        raise ValueError("expected a traditional DNN profile")
    stage = dnn.stages[0]
    pr = deadline_probability(est, stage.t_prof[power_index], t_goal)
    return accuracy_blend(pr, stage.accuracy, dnn.q_fail)


def expected_accuracy_anytime(
    est: SlowdownEstimate,
    dnn: DnnProfile,
    power_index: int,
    target_stage: int,
    t_goal: float,
) -> float:
    """Expected delivered accuracy when running stages 1..target_stage.

    All stage latencies share one slow-down draw, so the delivered stage is
    a staircase in the draw and the expectation telescopes over the
    per-stage completion probabilities.
    """
    if dnn.kind is not DnnKind.ANYTIME:
        raise ValueError("expected an anytime DNN profile")
    if not 1 <= target_stage <= len(dnn.stages):
        raise ValueError("target_stage out of range")
    prs = [
        deadline_probability(est, dnn.stages[k].t_prof[power_index], t_goal)
        for k in range(target_stage)
    ]
    prs.append(0.0)  # stages beyond the target never run
    acc = (1.0 - prs[0]) * dnn.q_fail
    for k in range(target_stage):
        acc += dnn.stages[k].accuracy * (prs[k] - prs[k + 1])
    return acc


def predict_energy_mean(
    est: SlowdownEstimate,
    idle_est: IdlePowerEstimate,
    power_watts: float,
    t_prof: float,
    t_goal: float,
) -> float:
    """Mean-latency energy estimate: inference draw plus idle-period draw.

    The idle interval is floored at zero when the predicted latency exceeds
    the deadline period.
    """
    if power_watts <= 0 or t_prof <= 0 or t_goal <= 0:
        raise ValueError("inputs must be positive")
    lat = est.mu * t_prof
    return power_watts * lat + idle_est.phi * power_watts * max(0.0, t_goal - lat)


def predict_energy_percentile(
    est: SlowdownEstimate,
    idle_est: IdlePowerEstimate,
    power_watts: float,
    t_prof: float,
    t_goal: float,
    pr_th: float,
) -> float:
    """Worst-case-percentile energy estimate: the mean latency is replaced
    by the pr_th-quantile of the latency distribution (capped at the period
    for the idle-term subtraction)."""
    if power_watts <= 0 or t_prof <= 0 or t_goal <= 0:
        raise ValueError("inputs must be positive")
    lat = (est.mu + normal_quantile(pr_th) * est.sigma) * t_prof
    idle = max(0.0, t_goal - min(lat, t_goal))
    return power_watts * lat + idle_est.phi * power_watts * idle


def predict_all(
    space: ConfigSpace,
    est: SlowdownEstimate,
    idle_est: IdlePowerEstimate,
    spec: ConstraintSpec,
    t_goal: float | None = None,
) -> list[Prediction]:
    """One prediction per (dnn, power) for traditional DNNs and per
    (dnn, power, target stage) for anytime DNNs, in ascending index order.

    When the spec sets a probabilistic threshold, energies use the
    percentile form; otherwise the mean form.
    """
    goal = spec.t_goal if t_goal is None else t_goal
    preds: list[Prediction] = []
    for i, dnn in enumerate(space.dnns):
        for j, pw in enumerate(space.powers):
            if dnn.kind is DnnKind.TRADITIONAL:
                targets = [None]
            else:
                targets = list(range(1, len(dnn.stages) + 1))
            for target in targets:
                stage = dnn.stages[0 if target is None else target - 1]
                t_prof = stage.t_prof[j]
                mean, sigma = latency_distribution(est, t_prof)
                pr = deadline_probability(est, t_prof, goal)
                if target is None:
                    acc = accuracy_blend(pr, stage.accuracy, dnn.q_fail)
                else:
                    acc = expected_accuracy_anytime(est, dnn, j, target, goal)
                if spec.pr_threshold is not None:
                    energy = predict_energy_percentile(
                        est, idle_est, pw.cap_watts, t_prof, goal, spec.pr_threshold
                    )
                else:
                    energy = predict_energy_mean(
                        est, idle_est, pw.cap_watts, t_prof, goal
                    )
                preds.append(
                    Prediction(
                        dnn_index=i,
                        power_index=j,
                        target_stage=target,
                        latency_mean=mean,
                        latency_sigma=sigma,
                        pr_deadline=pr,
                        expected_accuracy=acc,
                        energy=energy,
                    )
                )
    return preds

"""Scheduling policies: the coordinated controller plus comparison schemes.

Every policy implements the same protocol (begin/decide/observe), so the
simulator never branches on which one it runs.  The two oracle schemes are
clairvoyant: they read the realized trace handed to begin(); all others see
only the feedback records.
"""

from __future__ import annotations

from .estimator import (
    IdleFilterConfig,
    KalmanConfig,
    idle_power_init,
    idle_power_update,
    slowdown_init,
    slowdown_update,
)
from .model import ConfigSpace, ConstraintSpec, DnnKind, Mode, fastest_dnn
from .predictor import (
    Prediction,
    expected_accuracy_anytime,
    predict_all,
    predict_energy_mean,
)
from .selector import ConfigDecision, FallbackLevel, select
from .simulator import StepRecord, TrueEnvironment, execute_decision


def _decision(
    i: int,
    j: int,
    target: int | None,
    pred: Prediction,
    feasible: bool = True,
    level: FallbackLevel = FallbackLevel.NONE,
) -> ConfigDecision:
    return ConfigDecision(
        dnn_index=i,
        power_index=j,
        target_stage=target,
        prediction=pred,
        feasible=feasible,
        fallback_level=level,
    )


def _stub(i: int, j: int, target: int | None) -> ConfigDecision:
    return ConfigDecision(
        dnn_index=i,
        power_index=j,
        target_stage=target,
        prediction=None,  # filled in once the config is chosen
        feasible=True,
        fallback_level=FallbackLevel.NONE,
    )


def _configs(space: ConfigSpace):
    """All (dnn, power, target stage) triples in deterministic order."""
    for i, dnn in enumerate(space.dnns):
        for j in range(len(space.powers)):
            if dnn.kind is DnnKind.TRADITIONAL:
                yield i, j, None
            else:
                for k in range(1, len(dnn.stages) + 1):
                    yield i, j, k


class AlertPolicy:
    """Coordinated selection: predict every configuration from the shared
    slow-down and idle-power filters, then solve the constrained argmax."""

    def __init__(
        self,
        kalman: KalmanConfig | None = None,
        idle_cfg: IdleFilterConfig | None = None,
        kinds: frozenset[DnnKind] | None = None,
        name: str = "alert",
    ):
        self.kalman = kalman
        self.idle_cfg = idle_cfg
        self.kinds = kinds
        self.name = name

    def begin(self, space, spec, env) -> None:
        self.space = space
        self.spec = spec
        self.est = slowdown_init(self.kalman)
        phi0 = min(1.0, space.p_idle_prof / space.max_power.cap_watts)
        self.idle = idle_power_init(phi0, self.idle_cfg)
        if self.kinds is not None and not any(
            d.kind in self.kinds for d in space.dnns
        ):
            raise ValueError(f"{self.name}: space has no DNN of kinds {self.kinds}")

    def decide(self, index: int, t_goal: float) -> ConfigDecision:
        preds = predict_all(self.space, self.est, self.idle, self.spec, t_goal)
        if self.kinds is not None:
            preds = [
                p for p in preds if self.space.dnns[p.dnn_index].kind in self.kinds
            ]
        return select(preds, self.spec)

    def observe(self, record: StepRecord) -> None:
        self.est = slowdown_update(self.est, record.fb_latency, record.fb_t_prof)
        cap = self.space.powers[record.decision.power_index].cap_watts
        self.idle = idle_power_update(self.idle, record.idle_power_true, cap)


def _exact_eval(space, spec, s, idle_true, i, j, target, t_goal):
    """Ground-truth (deadline_met, delivered accuracy, energy, latency) for
    one config under a known slow-down, including the overhead tax."""
    out = execute_decision(s, _stub(i, j, target), space, t_goal)
    latency = out.latency + spec.overhead_budget
    period = t_goal + spec.overhead_budget
    dnn = space.dnns[i]
    delivered = (
        dnn.stages[out.completed_stage - 1].accuracy
        if out.completed_stage >= 1
        else dnn.q_fail
    )
    met = out.completed_stage >= 1 and latency <= period
    cap = space.powers[j].cap_watts
    energy = cap * min(latency, period) + idle_true * max(0.0, period - latency)
    return met, delivered, energy, latency


def _exact_pred(i, j, target, met, delivered, energy, latency) -> Prediction:
    return Prediction(
        dnn_index=i,
        power_index=j,
        target_stage=target,
        latency_mean=latency,
        latency_sigma=0.0,
        pr_deadline=1.0 if met else 0.0,
        expected_accuracy=delivered,
        energy=energy,
    )


def _rank(mode: Mode, delivered, energy, j, i, target):
    stage = 0 if target is None else target
    if mode is Mode.MAXIMIZE_ACCURACY:
        return (-delivered, energy, j, i, stage)
    return (energy, -delivered, j, i, stage)


class OraclePolicy:
    """Clairvoyant per-input optimum: exact outcomes for every config under
    the true slow-down, same constraints and tie rules as the selector."""

    name = "oracle"

    def begin(self, space, spec, env: TrueEnvironment) -> None:
        self.space = space
        self.spec = spec
        self.env = env

    def decide(self, index: int, t_goal: float) -> ConfigDecision:
        s = float(self.env.slowdown[index])
        idle = float(self.env.idle_power[index])
        evals = []
        for i, j, target in _configs(self.space):
            met, delivered, energy, latency = _exact_eval(
                self.space, self.spec, s, idle, i, j, target, t_goal
            )
            evals.append((i, j, target, met, delivered, energy, latency))

        mode = self.spec.mode
        levels = [
            (FallbackLevel.NONE, True, True),
            (FallbackLevel.DROPPED_ENERGY, False, True),
            (FallbackLevel.DROPPED_ACCURACY, False, False),
        ]
        for level, use_energy, use_acc in levels:
            pool = []
            for i, j, target, met, delivered, energy, latency in evals:
                if level is not FallbackLevel.DROPPED_ACCURACY and not met:
                    continue
                if mode is Mode.MAXIMIZE_ACCURACY:
                    if use_energy and energy > self.spec.e_goal:
                        continue
                elif use_acc and delivered < self.spec.q_goal:
                    continue
                pool.append((i, j, target, met, delivered, energy, latency))
            if not pool:
                continue
            obj_mode = (
                Mode.MAXIMIZE_ACCURACY
                if level is FallbackLevel.DROPPED_ACCURACY
                else mode
            )
            i, j, target, met, delivered, energy, latency = min(
                pool, key=lambda e: _rank(obj_mode, e[4], e[5], e[1], e[0], e[2])
            )
            return _decision(
                i,
                j,
                target,
                _exact_pred(i, j, target, met, delivered, energy, latency),
                feasible=level is FallbackLevel.NONE,
                level=level,
            )
        raise AssertionError("unreachable")

    def observe(self, record: StepRecord) -> None:
        pass


class OracleStaticPolicy:
    """Best single fixed configuration over the whole trace.

    A config is eligible when it violates each active constraint on at most
    10% of inputs; among eligible configs the best mean objective wins,
    otherwise the config with the fewest total violations.
    """

    name = "oracle-static"

    def begin(self, space, spec, env: TrueEnvironment) -> None:
        self.space = space
        self.spec = spec
        n = len(env.slowdown)
        t_goal = spec.t_goal - spec.overhead_budget
        best = None
        for i, j, target in _configs(space):
            lat_viol = acc_viol = e_viol = 0
            tot_energy = tot_acc = 0.0
            for idx in range(n):
                met, delivered, energy, _ = _exact_eval(
                    space,
                    spec,
                    float(env.slowdown[idx]),
                    float(env.idle_power[idx]),
                    i,
                    j,
                    target,
                    t_goal,
                )
                lat_viol += not met
                if spec.mode is Mode.MINIMIZE_ENERGY:
                    acc_viol += delivered < spec.q_goal
                else:
                    e_viol += energy > spec.e_goal
                tot_energy += energy
                tot_acc += delivered
            mean_obj = (
                tot_energy / n
                if spec.mode is Mode.MINIMIZE_ENERGY
                else -tot_acc / n
            )
            eligible = max(lat_viol, acc_viol, e_viol) <= 0.10 * n
            total_viol = lat_viol + acc_viol + e_viol
            # eligible configs sort ahead of ineligible; then objective for
            # the former, violation count for the latter
            key = (
                (0, mean_obj, total_viol, j, i, target or 0)
                if eligible
                else (1, total_viol, mean_obj, j, i, target or 0)
            )
            if best is None or key < best[0]:
                best = (key, i, j, target, eligible)
        _, i, j, target, eligible = best
        self.choice = _decision(
            i,
            j,
            target,
            _exact_pred(i, j, target, eligible, 0.0, 0.0, 0.0),
            feasible=eligible,
        )

    def decide(self, index: int, t_goal: float) -> ConfigDecision:
        return self.choice

    def observe(self, record: StepRecord) -> None:
        pass


class SysOnlyPolicy:
    """Fixed fastest traditional DNN; adapts only the power cap, choosing
    the cheapest cap whose predicted latency meets the deadline."""

    name = "sys-only"

    def __init__(self, kalman: KalmanConfig | None = None):
        self.kalman = kalman

    def begin(self, space, spec, env) -> None:
        self.space = space
        self.spec = spec
        dnn = fastest_dnn(space, len(space.powers) - 1, kind=DnnKind.TRADITIONAL)
        self.dnn_index = space.dnns.index(dnn)
        self.est = slowdown_init(self.kalman)
        phi0 = min(1.0, space.p_idle_prof / space.max_power.cap_watts)
        self.idle = idle_power_init(phi0)

    def decide(self, index: int, t_goal: float) -> ConfigDecision:
        dnn = self.space.dnns[self.dnn_index]
        t_prof = dnn.stages[0].t_prof
        best = None
        for j, pw in enumerate(self.space.powers):
            if self.est.mu * t_prof[j] > t_goal:
                continue
            energy = predict_energy_mean(
                self.est, self.idle, pw.cap_watts, t_prof[j], t_goal
            )
            if best is None or energy < best[0]:
                best = (energy, j)
        if best is None:
            j = len(self.space.powers) - 1  # nothing predicted on time: go fastest
            feasible = False
        else:
            j = best[1]
            feasible = True
        pred = Prediction(
            dnn_index=self.dnn_index,
            power_index=j,
            target_stage=None,
            latency_mean=self.est.mu * t_prof[j],
            latency_sigma=self.est.sigma * t_prof[j],
            pr_deadline=1.0 if feasible else 0.0,
            expected_accuracy=dnn.stages[0].accuracy,
            energy=predict_energy_mean(
                self.est, self.idle, self.space.powers[j].cap_watts, t_prof[j], t_goal
            ),
        )
        return _decision(self.dnn_index, j, None, pred, feasible=feasible)

    def observe(self, record: StepRecord) -> None:
        self.est = slowdown_update(self.est, record.fb_latency, record.fb_t_prof)
        cap = self.space.powers[record.decision.power_index].cap_watts
        self.idle = idle_power_update(self.idle, record.idle_power_true, cap)


def _pick_anytime(space: ConfigSpace):
    anytime = [d for d in space.dnns if d.kind is DnnKind.ANYTIME]
    if not anytime:
        raise ValueError("space has no anytime DNN")
    dnn = max(anytime, key=lambda d: (len(d.stages), d.id))
    return space.dnns.index(dnn)


class AppOnlyPolicy:
    """One anytime DNN at the system-default (maximum) power cap; adapts
    only the target output stage for expected accuracy."""

    name = "app-only"

    def __init__(self, kalman: KalmanConfig | None = None):
        self.kalman = kalman

    def begin(self, space, spec, env) -> None:
        self.space = space
        self.spec = spec
        self.dnn_index = _pick_anytime(space)
        self.power_index = len(space.powers) - 1
        self.est = slowdown_init(self.kalman)

    def decide(self, index: int, t_goal: float) -> ConfigDecision:
        dnn = self.space.dnns[self.dnn_index]
        j = self.power_index
        best_stage, best_acc = 1, -1.0
        for k in range(1, len(dnn.stages) + 1):
            acc = expected_accuracy_anytime(self.est, dnn, j, k, t_goal)
            if acc > best_acc:
                best_stage, best_acc = k, acc
        t_prof = dnn.stages[best_stage - 1].t_prof[j]
        pred = Prediction(
            dnn_index=self.dnn_index,
            power_index=j,
            target_stage=best_stage,
            latency_mean=self.est.mu * t_prof,
            latency_sigma=self.est.sigma * t_prof,
            pr_deadline=0.0,
            expected_accuracy=best_acc,
            energy=0.0,
        )
        return _decision(self.dnn_index, j, best_stage, pred)

    def observe(self, record: StepRecord) -> None:
        self.est = slowdown_update(self.est, record.fb_latency, record.fb_t_prof)


class NoCoordPolicy:
    """Anytime-stage and power-cap controllers running independently.

    Each assumes the other's previous choice stays fixed, with its own
    estimator instance and no shared state, so they can work at cross
    purposes after environment shifts.
    """

    name = "no-coord"

    def __init__(self, kalman: KalmanConfig | None = None):
        self.kalman = kalman

    def begin(self, space, spec, env) -> None:
        self.space = space
        self.spec = spec
        self.dnn_index = _pick_anytime(space)
        self.power_index = len(space.powers) - 1
        self.stage = len(space.dnns[self.dnn_index].stages)
        self.est_app = slowdown_init(self.kalman)
        self.est_sys = slowdown_init(self.kalman)
        phi0 = min(1.0, space.p_idle_prof / space.max_power.cap_watts)
        self.idle_sys = idle_power_init(phi0)

    def decide(self, index: int, t_goal: float) -> ConfigDecision:
        dnn = self.space.dnns[self.dnn_index]
        # app side: best stage assuming the current power cap stays
        j_old = self.power_index
        best_stage, best_acc = 1, -1.0
        for k in range(1, len(dnn.stages) + 1):
            acc = expected_accuracy_anytime(self.est_app, dnn, j_old, k, t_goal)
            if acc > best_acc:
                best_stage, best_acc = k, acc
        # system side: cheapest cap meeting the deadline for the current stage
        t_prof_old = dnn.stages[self.stage - 1].t_prof
        best = None
        for j, pw in enumerate(self.space.powers):
            if self.est_sys.mu * t_prof_old[j] > t_goal:
                continue
            energy = predict_energy_mean(
                self.est_sys, self.idle_sys, pw.cap_watts, t_prof_old[j], t_goal
            )
            if best is None or energy < best[0]:
                best = (energy, j)
        new_power = best[1] if best is not None else len(self.space.powers) - 1

        self.stage = best_stage
        self.power_index = new_power
        t_prof = dnn.stages[best_stage - 1].t_prof[new_power]
        pred = Prediction(
            dnn_index=self.dnn_index,
            power_index=new_power,
            target_stage=best_stage,
            latency_mean=self.est_app.mu * t_prof,
            latency_sigma=self.est_app.sigma * t_prof,
            pr_deadline=0.0,
            expected_accuracy=best_acc,
            energy=0.0,
        )
        return _decision(self.dnn_index, new_power, best_stage, pred)

    def observe(self, record: StepRecord) -> None:
        self.est_app = slowdown_update(
            self.est_app, record.fb_latency, record.fb_t_prof
        )
        self.est_sys = slowdown_update(
            self.est_sys, record.fb_latency, record.fb_t_prof
        )
        cap = self.space.powers[record.decision.power_index].cap_watts
        self.idle_sys = idle_power_update(self.idle_sys, record.idle_power_true, cap)


POLICY_NAMES = (
    "alert",
    "alert-any",
    "alert-trad",
    "oracle",
    "oracle-static",
    "sys-only",
    "app-only",
    "no-coord",
)


def make_policy(name: str, kalman: KalmanConfig | None = None):
    if name == "alert":
        return AlertPolicy(kalman=kalman)
    if name == "alert-any":
        return AlertPolicy(
            kalman=kalman, kinds=frozenset({DnnKind.ANYTIME}), name="alert-any"
        )
    if name == "alert-trad":
        return AlertPolicy(
            kalman=kalman, kinds=frozenset({DnnKind.TRADITIONAL}), name="alert-trad"
        )
    if name == "oracle":
        return OraclePolicy()
    if name == "oracle-static":
        return OracleStaticPolicy()
    if name == "sys-only":
        return SysOnlyPolicy(kalman=kalman)
    if name == "app-only":
        return AppOnlyPolicy(kalman=kalman)
    if name == "no-coord":
        return NoCoordPolicy(kalman=kalman)
    raise ValueError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")

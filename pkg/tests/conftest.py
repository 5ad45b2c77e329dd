"""Shared helpers: randomized (space, spec, estimator-state) instances used
by the selector-equivalence tests."""

import random
from dataclasses import replace

from alertsim.estimator import idle_power_init, slowdown_init
from alertsim.model import (
    ConfigSpace,
    ConstraintSpec,
    DnnKind,
    DnnProfile,
    Mode,
    PowerSetting,
    Stage,
)
from alertsim.predictor import predict_all


def random_space(rnd: random.Random) -> ConfigSpace:
    n_powers = rnd.randint(1, 4)
    caps = sorted(rnd.uniform(5.0, 100.0) for _ in range(n_powers))
    powers = tuple(PowerSetting(i, c) for i, c in enumerate(caps))
    scale = [caps[-1] / c for c in caps]  # slower at lower caps

    dnns = []
    for i in range(rnd.randint(1, 4)):
        base = rnd.uniform(0.01, 1.0)
        if rnd.random() < 0.4:
            n_stages = rnd.randint(2, 4)
            accs = sorted(rnd.uniform(0.2, 0.99) for _ in range(n_stages))
            # strictly increasing stage latencies at every power
            lats = sorted(base * rnd.uniform(0.3, 3.0) for _ in range(n_stages))
            stages = tuple(
                Stage(a, tuple(t * s for s in scale)) for a, t in zip(accs, lats)
            )
            dnns.append(
                DnnProfile(
                    id=f"any-{i}",
                    kind=DnnKind.ANYTIME,
                    stages=stages,
                    q_fail=rnd.uniform(0.0, accs[0]),
                )
            )
        else:
            acc = rnd.uniform(0.2, 0.99)
            stages = (Stage(acc, tuple(base * s for s in scale)),)
            dnns.append(
                DnnProfile(
                    id=f"dnn-{i}",
                    kind=DnnKind.TRADITIONAL,
                    stages=stages,
                    q_fail=rnd.uniform(0.0, acc),
                )
            )
    return ConfigSpace(
        dnns=tuple(dnns), powers=powers, p_idle_prof=rnd.uniform(1.0, 10.0)
    )


def random_spec(rnd: random.Random) -> ConstraintSpec:
    mode = rnd.choice([Mode.MINIMIZE_ENERGY, Mode.MAXIMIZE_ACCURACY])
    pr_th = rnd.choice([None, rnd.uniform(0.05, 0.99)])
    t_goal = rnd.uniform(0.05, 3.0)
    if mode is Mode.MINIMIZE_ENERGY:
        return ConstraintSpec(
            mode=mode, t_goal=t_goal, q_goal=rnd.uniform(0.1, 0.99), pr_threshold=pr_th
        )
    return ConstraintSpec(
        mode=mode, t_goal=t_goal, e_goal=rnd.uniform(0.5, 80.0), pr_threshold=pr_th
    )


def random_predictions(rnd: random.Random):
    """Predictions for a random space under a random spec and filter state."""
    space = random_space(rnd)
    spec = random_spec(rnd)
    est = replace(
        slowdown_init(), mu=rnd.uniform(0.3, 3.0), sigma2=rnd.uniform(0.0, 0.6)
    )
    idle = replace(idle_power_init(0.5), phi=rnd.uniform(0.0, 1.0))
    return predict_all(space, est, idle, spec), spec

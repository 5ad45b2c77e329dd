"""Why uncertainty changes the best configuration.

Two candidate networks under the same deadline: a slow, accurate one and a
fast, less accurate one.  When the slow-down estimate is confident, the slow
network's small miss risk is worth taking.  When the estimate is noisy, the
expected accuracy of the slow network collapses and the selector switches to
the fast one.
"""

from dataclasses import replace

from alertsim import (
    ConfigSpace,
    ConstraintSpec,
    DnnKind,
    DnnProfile,
    Mode,
    PowerSetting,
    Stage,
    idle_power_init,
    predict_all,
    select,
    slowdown_init,
)

space = ConfigSpace(
    dnns=(
        DnnProfile(
            id="accurate",
            kind=DnnKind.TRADITIONAL,
            stages=(Stage(accuracy=0.95, t_prof=(0.95,)),),
            q_fail=0.0,
        ),
        DnnProfile(
            id="fast",
            kind=DnnKind.TRADITIONAL,
            stages=(Stage(accuracy=0.88, t_prof=(0.60,)),),
            q_fail=0.0,
        ),
    ),
    powers=(PowerSetting(index=0, cap_watts=30.0),),
    p_idle_prof=4.0,
)

spec = ConstraintSpec(
    mode=Mode.MAXIMIZE_ACCURACY,
    t_goal=1.0,
    e_goal=1e9,  # energy budget slack: this demo is about the deadline
)

idle = idle_power_init(4.0 / 30.0)

print(f"{'sigma':>6}  {'choice':>8}  {'Pr(accurate meets)':>19}  {'E[acc] acc/fast':>17}")
for sigma in (0.02, 0.05, 0.10, 0.20):
    est = replace(slowdown_init(), mu=1.0, sigma2=sigma**2)
    preds = predict_all(space, est, idle, spec)
    decision = select(preds, spec)
    by_dnn = {p.dnn_index: p for p in preds}
    print(
        f"{sigma:>6.2f}  {space.dnns[decision.dnn_index].id:>8}"
        f"  {by_dnn[0].pr_deadline:>19.4f}"
        f"  {by_dnn[0].expected_accuracy:.4f} / {by_dnn[1].expected_accuracy:.4f}"
    )

print()
print("Same profiles, same deadline; only the estimator's confidence moved.")

"""Track a shifting co-location environment with the slow-down filter.

The filter sees only (observed latency, profiled latency) pairs.  Watch the
mean chase each regime change and the variance spike right after it, then
settle once the innovations calm down.
"""

import numpy as np

from alertsim import slowdown_init, slowdown_update

T_PROF = 0.25  # profiled latency of the config we pretend to run

rng = np.random.default_rng(1)
est = slowdown_init()

print(f"{'step':>4}  {'true':>5}  {'mu':>6}  {'sigma':>6}  {'Q':>6}")
step = 0
for regime, n in ((1.0, 30), (2.5, 30), (1.3, 30)):
    for _ in range(n):
        true_xi = regime * rng.normal(1.0, 0.05)
        est = slowdown_update(est, true_xi * T_PROF, T_PROF)
        step += 1
        if step % 10 == 0 or step in (31, 32, 61, 62):
            print(
                f"{step:>4}  {regime:>5.2f}  {est.mu:>6.3f}"
                f"  {est.sigma:>6.3f}  {est.q_noise:>6.3f}"
            )

print()
print("The adaptive process noise floors at Q0, so the variance never")
print("collapses: predictions stay honest about what might happen next.")

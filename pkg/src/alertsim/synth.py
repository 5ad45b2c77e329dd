"""Synthetic profile generation and preset benchmark scenarios.

The generator builds a family of DNN variants whose (latency, error) points
form a lower convex frontier plus a few dominated points, with a wide
latency spread (default 18x) and error spread (default 7.8x).  Per-power
latencies scale as (p_max / p)^exponent, so profiles are monotone in the
power cap by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigSpace, DnnKind, DnnProfile, PowerSetting, Stage
from .simulator import Constant, EnvironmentPhase, Gaussian, LogNormal, Trace


@dataclass(frozen=True)
class ProfileKnobs:
    n_dnns: int = 8
    n_powers: int = 5
    power_min: float = 10.0
    power_max: float = 50.0
    power_exponent: float = 0.8
    latency_min: float = 0.02      # fastest DNN at max power, seconds
    latency_ratio: float = 18.0    # slowest / fastest
    error_min: float = 0.03        # most accurate DNN
    error_ratio: float = 7.8       # least / most accurate
    anytime_stages: int = 4        # stages of the one anytime DNN; 0 = none
    num_classes: int = 10          # sets q_fail = 1 / num_classes
    dominated_every: int = 3       # every k-th DNN is pushed off the frontier


def generate_space(knobs: ProfileKnobs | None = None, seed: int = 0) -> ConfigSpace:
    k = knobs or ProfileKnobs()
    if k.n_dnns < 1 or k.n_powers < 1:
        raise ValueError("need at least one DNN and one power setting")
    if k.latency_ratio <= 1 or k.error_ratio <= 1:
        raise ValueError("latency_ratio and error_ratio must exceed 1")
    if not k.power_min < k.power_max:
        raise ValueError("power range is degenerate")
    rng = np.random.default_rng(seed)

    caps = np.linspace(k.power_min, k.power_max, k.n_powers)
    powers = tuple(PowerSetting(j, float(c)) for j, c in enumerate(caps))
    power_scale = (k.power_max / caps) ** k.power_exponent  # >= 1, decreasing

    # frontier: latency log-spaced, error shrinking with latency
    lat = np.geomspace(k.latency_min, k.latency_min * k.latency_ratio, k.n_dnns)
    frac = (
        np.linspace(1.0, 0.0, k.n_dnns) if k.n_dnns > 1 else np.array([0.0])
    )
    err = k.error_min * k.error_ratio**frac

    def error_at(latency: float) -> float:
        f = math.log(latency / k.latency_min) / math.log(k.latency_ratio)
        return k.error_min * k.error_ratio ** (1.0 - min(max(f, 0.0), 1.0))

    q_fail = 1.0 / k.num_classes
    anytime_index = k.n_dnns - 1 if k.anytime_stages >= 2 else None

    dnns = []
    for i in range(k.n_dnns):
        base_lat = float(lat[i])
        e = float(err[i])
        if (
            k.dominated_every > 0
            and i % k.dominated_every == k.dominated_every - 1
            and i != anytime_index
        ):
            e *= 1.0 + 0.3 * float(rng.uniform(0.5, 1.0))  # off the frontier
        e = min(e, 0.9)

        if i == anytime_index:
            fracs = np.geomspace(0.25, 1.0, k.anytime_stages)
            stages = []
            for f in fracs:
                t_k = base_lat * float(f)
                # anytime flexibility costs a little accuracy per stage
                acc = 1.0 - 1.05 * error_at(t_k)
                stages.append(
                    Stage(
                        accuracy=acc,
                        t_prof=tuple(float(t_k * ps) for ps in power_scale),
                    )
                )
            dnns.append(
                DnnProfile(
                    id=f"any-{i:02d}",
                    kind=DnnKind.ANYTIME,
                    stages=tuple(stages),
                    q_fail=min(q_fail, stages[0].accuracy),
                )
            )
        else:
            dnns.append(
                DnnProfile(
                    id=f"dnn-{i:02d}",
                    kind=DnnKind.TRADITIONAL,
                    stages=(
                        Stage(
                            accuracy=1.0 - e,
                            t_prof=tuple(float(base_lat * ps) for ps in power_scale),
                        ),
                    ),
                    q_fail=q_fail,
                )
            )

    return ConfigSpace(dnns=tuple(dnns), powers=powers, p_idle_prof=4.0)


def reference_latency(space: ConfigSpace) -> float:
    """Deadline unit for constraint sweeps: mean profiled latency (over
    power settings) of the slowest anytime DNN, falling back to the slowest
    DNN overall."""
    anytime = [d for d in space.dnns if d.kind is DnnKind.ANYTIME]
    pool = anytime or list(space.dnns)
    slowest = max(pool, key=lambda d: d.final_stage.t_prof[-1])
    t = slowest.final_stage.t_prof
    return sum(t) / len(t)


# --- preset benchmark scenario ----------------------------------------------
#
# Three contention regimes: none, memory-bound (heavy-tailed slowdowns),
# compute-bound (moderate symmetric slowdowns).  The slowdown magnitudes are
# calibration knobs of this benchmark, not measured values.

MEMORY_MEAN, MEMORY_SD = 1.8, 0.35
COMPUTE_MEAN, COMPUTE_SD = 1.3, 0.1


def _memory_dist() -> LogNormal:
    sd_log2 = math.log(1.0 + (MEMORY_SD / MEMORY_MEAN) ** 2)
    return LogNormal(
        mu_log=math.log(MEMORY_MEAN) - 0.5 * sd_log2, sd_log=math.sqrt(sd_log2)
    )


def preset_space(seed: int = 0) -> ConfigSpace:
    return generate_space(ProfileKnobs(), seed=seed)


def preset_trace(
    seed: int = 42, phase_length: int = 200, input_noise_sd: float = 0.05
) -> Trace:
    """Dynamic three-phase trace: no contention, memory contention, compute
    contention."""
    return Trace(
        seed=seed,
        phases=(
            EnvironmentPhase(
                length=phase_length,
                slowdown_dist=Constant(1.0),
                idle_power_true=4.0,
                input_noise_sd=input_noise_sd,
            ),
            EnvironmentPhase(
                length=phase_length,
                slowdown_dist=_memory_dist(),
                idle_power_true=6.0,
                input_noise_sd=input_noise_sd,
            ),
            EnvironmentPhase(
                length=phase_length,
                slowdown_dist=Gaussian(COMPUTE_MEAN, COMPUTE_SD),
                idle_power_true=5.0,
                input_noise_sd=input_noise_sd,
            ),
        ),
    )

"""Feedback estimators for the control loop.

Two scalar Kalman filters:
  * the global slow-down factor xi = observed latency / profiled latency,
    shared across every DNN/power configuration, with an adaptive process
    noise driven by recent innovations (so the variance tracks volatility);
  * the idle-power ratio phi = idle power / capped inference power, used by
    the energy predictor for the inference-idle interval.

Updates are pure: each returns a new state and leaves the input unmodified.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class KalmanConfig:
    """Slow-down filter constants (all overridable from the CLI)."""

    k0: float = 0.5        # initial gain
    r: float = 0.001       # measurement noise
    q0: float = 0.1        # floor of the adaptive process noise
    alpha: float = 0.3     # forgetting factor for the process noise
    mu0: float = 1.0       # initial slow-down mean
    sigma2_0: float = 0.1  # initial slow-down variance
    # The variance recurrence uses the previous step's gain as written; set
    # True to use the freshly computed gain instead (diagnostic variant).
    sigma2_uses_current_gain: bool = False


@dataclass(frozen=True)
class SlowdownEstimate:
    mu: float
    sigma2: float
    k_gain: float
    q_noise: float
    last_innovation: float
    config: KalmanConfig

    @property
    def sigma(self) -> float:
        return self.sigma2 ** 0.5


def slowdown_init(config: KalmanConfig | None = None) -> SlowdownEstimate:
    cfg = config or KalmanConfig()
    return SlowdownEstimate(
        mu=cfg.mu0,
        sigma2=cfg.sigma2_0,
        k_gain=cfg.k0,
        q_noise=cfg.q0,
        last_innovation=0.0,  # no observation yet
        config=cfg,
    )


def slowdown_update(
    state: SlowdownEstimate, observed_latency: float, t_prof_used: float
) -> SlowdownEstimate:
    """One filter step from an observed (latency, profiled latency) pair."""
    if observed_latency <= 0:
        raise ValueError("observed_latency must be positive")
    if t_prof_used <= 0:
        raise ValueError("t_prof_used must be positive")
    cfg = state.config

    q = max(
        cfg.q0,
        cfg.alpha * state.q_noise
        + (1.0 - cfg.alpha) * (state.k_gain * state.last_innovation) ** 2,
    )
    prior_var = (1.0 - state.k_gain) * state.sigma2 + q
    k = prior_var / (prior_var + cfg.r)
    y = observed_latency / t_prof_used - state.mu
    mu = state.mu + k * y
    if cfg.sigma2_uses_current_gain:
        sigma2 = (1.0 - k) * state.sigma2 + q
    else:
        sigma2 = (1.0 - state.k_gain) * state.sigma2 + q
    return SlowdownEstimate(
        mu=mu, sigma2=sigma2, k_gain=k, q_noise=q, last_innovation=y, config=cfg
    )


@dataclass(frozen=True)
class IdleFilterConfig:
    m0: float = 0.01    # initial process variance
    s: float = 0.0001   # process noise
    v: float = 0.001    # measurement noise


@dataclass(frozen=True)
class IdlePowerEstimate:
    phi: float    # idle-power ratio, in [0, 1]
    m_var: float  # process variance
    config: IdleFilterConfig


def idle_power_init(
    phi0: float, config: IdleFilterConfig | None = None
) -> IdlePowerEstimate:
    cfg = config or IdleFilterConfig()
    if not 0.0 <= phi0 <= 1.0:
        raise ValueError("phi0 must lie in [0, 1]")
    return IdlePowerEstimate(phi=phi0, m_var=cfg.m0, config=cfg)


def idle_power_update(
    state: IdlePowerEstimate,
    measured_idle_power: float,
    last_inference_power: float,
) -> IdlePowerEstimate:
    """One filter step toward the measured idle/inference power ratio.

    Ratios above 1 (idle draw transiently exceeding the capped inference
    power under co-location) are clamped to 1.
    """
    if measured_idle_power <= 0 or last_inference_power <= 0:
        raise ValueError("power measurements must be positive")
    cfg = state.config
    ratio = min(1.0, measured_idle_power / last_inference_power)
    w = (state.m_var + cfg.s) / (state.m_var + cfg.s + cfg.v)
    m = (1.0 - w) * (state.m_var + cfg.s)
    phi = state.phi + w * (ratio - state.phi)
    return replace(state, phi=phi, m_var=m)

"""Runtime scheduling of DNN variant + power cap under latency, accuracy,
and energy goals, with a trace-driven simulator and baseline policies."""

from .estimator import (
    IdleFilterConfig,
    IdlePowerEstimate,
    KalmanConfig,
    SlowdownEstimate,
    idle_power_init,
    idle_power_update,
    slowdown_init,
    slowdown_update,
)
from .model import (
    ConfigSpace,
    ConstraintSpec,
    DnnKind,
    DnnProfile,
    Mode,
    PowerSetting,
    ProfileError,
    Stage,
    fastest_dnn,
    load_profile,
    save_profile,
    validate,
)
from .policies import POLICY_NAMES, AlertPolicy, make_policy
from .predictor import (
    Prediction,
    deadline_probability,
    expected_accuracy_anytime,
    expected_accuracy_traditional,
    latency_distribution,
    predict_all,
    predict_energy_mean,
    predict_energy_percentile,
)
from .selector import (
    ConfigDecision,
    FallbackLevel,
    GroupState,
    adjust_goal,
    brute_force_select,
    select,
)
from .simulator import (
    Constant,
    EnvironmentPhase,
    Gaussian,
    LogNormal,
    StepRecord,
    Summary,
    Trace,
    TraceError,
    Uniform,
    lognormal_matching,
    load_trace,
    run,
    save_trace,
    xi_diagnostics,
)
from .synth import ProfileKnobs, generate_space, preset_space, preset_trace

__version__ = "0.1.0"

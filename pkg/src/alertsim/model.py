"""Configuration-space model: DNN variants, power settings, profiled tables.

A config space pairs a set of DNN profiles (traditional or anytime) with a
set of power-cap settings.  Each DNN stage carries one profiled latency per
power setting; all performance numbers are profile constants, never measured
from live inference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path


class DnnKind(str, Enum):
    TRADITIONAL = "traditional"
    ANYTIME = "anytime"


class Mode(str, Enum):
    MINIMIZE_ENERGY = "min-energy"
    MAXIMIZE_ACCURACY = "max-accuracy"


@dataclass(frozen=True)
class PowerSetting:
    """A discrete power-cap bucket (no interpolation between caps)."""

    index: int
    cap_watts: float


@dataclass(frozen=True)
class Stage:
    """One output stage: a fixed accuracy plus per-power profiled latency."""

    accuracy: float
    t_prof: tuple[float, ...]  # seconds, one entry per power setting


@dataclass(frozen=True)
class DnnProfile:
    id: str
    kind: DnnKind
    stages: tuple[Stage, ...]
    q_fail: float

    @property
    def final_stage(self) -> Stage:
        return self.stages[-1]


@dataclass(frozen=True)
class ConfigSpace:
    dnns: tuple[DnnProfile, ...]
    powers: tuple[PowerSetting, ...]
    p_idle_prof: float  # profiled system idle power, watts

    @property
    def max_power(self) -> PowerSetting:
        return self.powers[-1]


@dataclass(frozen=True)
class ConstraintSpec:
    """User goal: optimize one of energy/accuracy subject to the others.

    overhead_budget is the worst-case scheduler overhead subtracted from the
    deadline so the scheduler itself cannot cause violations.
    """

    mode: Mode
    t_goal: float
    e_goal: float | None = None
    q_goal: float | None = None
    pr_threshold: float | None = None
    overhead_budget: float = 0.0

    def __post_init__(self) -> None:
        if self.overhead_budget < 0:
            raise ValueError("overhead_budget must be >= 0")
        if self.t_goal <= self.overhead_budget:
            raise ValueError("t_goal must exceed overhead_budget")
        if self.mode is Mode.MAXIMIZE_ACCURACY:
            if self.e_goal is None:
                raise ValueError("max-accuracy mode requires e_goal")
            if self.e_goal <= 0:
                raise ValueError("e_goal must be positive")
        elif self.mode is Mode.MINIMIZE_ENERGY:
            if self.q_goal is None:
                raise ValueError("min-energy mode requires q_goal")
            if self.q_goal <= 0:
                raise ValueError("q_goal must be positive")
        if self.pr_threshold is not None and not 0.0 < self.pr_threshold < 1.0:
            raise ValueError("pr_threshold must lie in (0, 1)")


def validate(space: ConfigSpace) -> list[str]:
    """Check every structural invariant; return human-readable violations.

    Diagnostics are returned, never raised, so callers can report all
    problems in one pass.
    """
    problems: list[str] = []
    if not space.powers:
        problems.append("power axis is empty")
    if not space.dnns:
        problems.append("DNN axis is empty")
    if space.p_idle_prof <= 0:
        problems.append("p_idle_prof must be positive")

    prev_cap = 0.0
    for k, pw in enumerate(space.powers):
        if pw.cap_watts <= prev_cap:
            problems.append(
                f"power[{k}]: cap {pw.cap_watts} W not strictly above previous"
            )
        prev_cap = pw.cap_watts

    n_powers = len(space.powers)
    for dnn in space.dnns:
        tag = f"dnn '{dnn.id}'"
        if dnn.kind is DnnKind.TRADITIONAL and len(dnn.stages) != 1:
            problems.append(f"{tag}: traditional profile must have exactly 1 stage")
        if dnn.kind is DnnKind.ANYTIME and len(dnn.stages) < 2:
            problems.append(f"{tag}: anytime profile needs >= 2 stages")
        if not 0.0 <= dnn.q_fail <= 1.0:
            problems.append(f"{tag}: q_fail {dnn.q_fail} outside [0,1]")
        if dnn.stages and dnn.q_fail > dnn.stages[0].accuracy:
            problems.append(f"{tag}: q_fail exceeds first-stage accuracy")

        prev_acc = -1.0
        for s, stage in enumerate(dnn.stages):
            stag = f"{tag} stage {s}"
            if not 0.0 <= stage.accuracy <= 1.0:
                problems.append(f"{stag}: accuracy {stage.accuracy} outside [0,1]")
            if dnn.kind is DnnKind.ANYTIME and stage.accuracy <= prev_acc:
                problems.append(f"{stag}: accuracies not increasing")
            prev_acc = stage.accuracy
            if len(stage.t_prof) != n_powers:
                problems.append(
                    f"{stag}: latency vector length {len(stage.t_prof)} "
                    f"!= {n_powers} power settings"
                )
                continue
            for j, t in enumerate(stage.t_prof):
                if t <= 0:
                    problems.append(f"{stag}: latency at power {j} not positive")
                if j > 0 and t > stage.t_prof[j - 1]:
                    problems.append(
                        f"{stag}: latency increases from power {j - 1} to {j}"
                    )
            if dnn.kind is DnnKind.ANYTIME and s > 0:
                prev_stage = dnn.stages[s - 1]
                if len(prev_stage.t_prof) == n_powers and any(
                    stage.t_prof[j] <= prev_stage.t_prof[j] for j in range(n_powers)
                ):
                    problems.append(
                        f"{stag}: latencies not strictly above stage {s - 1}"
                    )
    return problems


def fastest_dnn(
    space: ConfigSpace, power_index: int, kind: DnnKind | None = None
) -> DnnProfile:
    """DNN with minimal final-stage latency at a power index; ties go to the
    lexicographically lower id."""
    candidates = [d for d in space.dnns if kind is None or d.kind is kind]
    if not candidates:
        raise ValueError(f"no DNN of kind {kind} in the space")
    return min(
        candidates, key=lambda d: (d.final_stage.t_prof[power_index], d.id)
    )


# --- profile file format ----------------------------------------------------
#
# JSON schema (field names exact, unknown fields rejected):
#   {"powers": [watts...], "p_idle_prof": watts,
#    "dnns": [{"id", "kind", "q_fail"?, "num_classes"?,
#              "stages": [{"accuracy", "t_prof": [seconds per power]}]}]}

_TOP_FIELDS = {"powers", "p_idle_prof", "dnns"}
_DNN_FIELDS = {"id", "kind", "q_fail", "num_classes", "stages"}
_STAGE_FIELDS = {"accuracy", "t_prof"}


class ProfileError(ValueError):
    """Malformed or invariant-violating profile document."""


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ProfileError(f"{where}: unknown field(s) {sorted(unknown)}")


def space_from_dict(doc: dict) -> ConfigSpace:
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be a JSON object")
    _reject_unknown(doc, _TOP_FIELDS, "profile")
    for f in _TOP_FIELDS:
        if f not in doc:
            raise ProfileError(f"profile: missing field '{f}'")

    powers = tuple(
        PowerSetting(index=j, cap_watts=float(w)) for j, w in enumerate(doc["powers"])
    )
    dnns = []
    for d in doc["dnns"]:
        _reject_unknown(d, _DNN_FIELDS, f"dnn '{d.get('id', '?')}'")
        for f in ("id", "kind", "stages"):
            if f not in d:
                raise ProfileError(f"dnn '{d.get('id', '?')}': missing field '{f}'")
        try:
            kind = DnnKind(d["kind"])
        except ValueError:
            raise ProfileError(
                f"dnn '{d['id']}': kind must be 'traditional' or 'anytime'"
            ) from None
        if "q_fail" in d:
            q_fail = float(d["q_fail"])
        elif "num_classes" in d:
            # backup answer is a random guess over the declared classes
            q_fail = 1.0 / int(d["num_classes"])
        else:
            raise ProfileError(
                f"dnn '{d['id']}': q_fail required when num_classes is absent"
            )
        stages = []
        for s in d["stages"]:
            _reject_unknown(s, _STAGE_FIELDS, f"dnn '{d['id']}' stage")
            for f in _STAGE_FIELDS:
                if f not in s:
                    raise ProfileError(f"dnn '{d['id']}' stage: missing '{f}'")
            stages.append(
                Stage(
                    accuracy=float(s["accuracy"]),
                    t_prof=tuple(float(t) for t in s["t_prof"]),
                )
            )
        dnns.append(
            DnnProfile(id=str(d["id"]), kind=kind, stages=tuple(stages), q_fail=q_fail)
        )

    space = ConfigSpace(
        dnns=tuple(dnns), powers=powers, p_idle_prof=float(doc["p_idle_prof"])
    )
    problems = validate(space)
    if problems:
        raise ProfileError("invalid profile: " + "; ".join(problems))
    return space


def space_to_dict(space: ConfigSpace) -> dict:
    return {
        "powers": [pw.cap_watts for pw in space.powers],
        "p_idle_prof": space.p_idle_prof,
        "dnns": [
            {
                "id": d.id,
                "kind": d.kind.value,
                "q_fail": d.q_fail,
                "stages": [
                    {"accuracy": s.accuracy, "t_prof": list(s.t_prof)}
                    for s in d.stages
                ],
            }
            for d in space.dnns
        ],
    }


def load_profile(path: str | Path) -> ConfigSpace:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{path}: not valid JSON ({exc})") from exc
    try:
        return space_from_dict(doc)
    except ProfileError as exc:
        raise ProfileError(f"{path}: {exc}") from exc


def save_profile(space: ConfigSpace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(space_to_dict(space), indent=2) + "\n")

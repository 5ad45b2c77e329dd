import pytest

from alertsim.estimator import KalmanConfig
from alertsim.model import ConfigSpace, ConstraintSpec, DnnKind, Mode
from alertsim.policies import (
    AlertPolicy,
    POLICY_NAMES,
    make_policy,
)
from alertsim.simulator import run
from alertsim.synth import preset_space, preset_trace, reference_latency


@pytest.fixture(scope="module")
def space():
    return preset_space()


@pytest.fixture(scope="module")
def trace():
    return preset_trace(phase_length=60)


@pytest.fixture(scope="module")
def min_energy_spec(space):
    ref = reference_latency(space)
    return ConstraintSpec(
        mode=Mode.MINIMIZE_ENERGY,
        t_goal=0.14,
        q_goal=0.68,
        overhead_budget=0.01 * ref,
    )


@pytest.fixture(scope="module")
def max_acc_spec(space):
    ref = reference_latency(space)
    t_goal = 0.8 * ref
    return ConstraintSpec(
        mode=Mode.MAXIMIZE_ACCURACY,
        t_goal=t_goal,
        e_goal=0.6 * space.max_power.cap_watts * t_goal,
        pr_threshold=0.95,
        overhead_budget=0.01 * ref,
    )


class TestMakePolicy:
    def test_all_names_construct(self):
        for name in POLICY_NAMES:
            assert make_policy(name).name == name

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown policy"):
            make_policy("greedy")

    def test_kalman_config_passed_through(self):
        cfg = KalmanConfig(q0=0.5)
        assert make_policy("alert", kalman=cfg).kalman is cfg


class TestAlertVariants:
    def test_alert_trad_never_picks_anytime(self, space, min_energy_spec, trace):
        result = run(space, min_energy_spec, trace, make_policy("alert-trad"))
        kinds = {space.dnns[r.decision.dnn_index].kind for r in result.records}
        assert kinds == {DnnKind.TRADITIONAL}

    def test_alert_any_only_picks_anytime(self, space, min_energy_spec, trace):
        result = run(space, min_energy_spec, trace, make_policy("alert-any"))
        kinds = {space.dnns[r.decision.dnn_index].kind for r in result.records}
        assert kinds == {DnnKind.ANYTIME}

    def test_filtered_variant_requires_matching_dnn(self, space, min_energy_spec, trace):
        trad_only = ConfigSpace(
            dnns=tuple(d for d in space.dnns if d.kind is DnnKind.TRADITIONAL),
            powers=space.powers,
            p_idle_prof=space.p_idle_prof,
        )
        with pytest.raises(ValueError, match="alert-any"):
            run(trad_only, min_energy_spec, trace, make_policy("alert-any"))

    def test_estimator_tracks_environment(self, space, min_energy_spec, trace):
        policy = AlertPolicy()
        run(space, min_energy_spec, trace, policy)
        # the trace ends in the compute phase (mean slow-down 1.3)
        assert policy.est.mu == pytest.approx(1.3, abs=0.25)


class TestOracle:
    def test_oracle_dominates_per_input(self, space, min_energy_spec, trace):
        alert = run(space, min_energy_spec, trace, make_policy("alert"))
        oracle = run(space, min_energy_spec, trace, make_policy("oracle"))
        for ra, ro in zip(alert.records, oracle.records):
            if ro.decision.feasible and ra.deadline_met and not ra.violations.accuracy:
                # alert's realized config was in the oracle's feasible pool
                assert ro.energy <= ra.energy + 1e-9

    def test_oracle_never_misses_when_feasible(self, space, min_energy_spec, trace):
        oracle = run(space, min_energy_spec, trace, make_policy("oracle"))
        for r in oracle.records:
            if r.decision.feasible:
                assert r.deadline_met

    def test_oracle_static_is_constant(self, space, min_energy_spec, trace):
        result = run(space, min_energy_spec, trace, make_policy("oracle-static"))
        configs = {
            (r.decision.dnn_index, r.decision.power_index, r.decision.target_stage)
            for r in result.records
        }
        assert len(configs) == 1

    def test_oracle_static_beats_any_fixed_config(self, space, min_energy_spec, trace):
        result = run(space, min_energy_spec, trace, make_policy("oracle-static"))
        chosen = result.summary.mean_energy
        # spot-check a few other fixed configs via the same runner
        from test_simulator import _FixedPolicy

        for i, j in ((0, 0), (0, 4), (3, 2)):
            other = run(space, min_energy_spec, trace, _FixedPolicy(i, j))
            viol = other.summary.violation_rates
            if max(viol.values()) <= 0.10:
                assert chosen <= other.summary.mean_energy + 1e-9


class TestSingleLayerBaselines:
    def test_sys_only_fixes_the_dnn(self, space, min_energy_spec, trace):
        result = run(space, min_energy_spec, trace, make_policy("sys-only"))
        dnns = {r.decision.dnn_index for r in result.records}
        assert len(dnns) == 1
        (i,) = dnns
        assert space.dnns[i].kind is DnnKind.TRADITIONAL
        powers = {r.decision.power_index for r in result.records}
        assert len(powers) > 1  # it does adapt the cap across phases

    def test_app_only_fixes_the_power(self, space, min_energy_spec, trace):
        result = run(space, min_energy_spec, trace, make_policy("app-only"))
        powers = {r.decision.power_index for r in result.records}
        assert powers == {len(space.powers) - 1}
        for r in result.records:
            assert space.dnns[r.decision.dnn_index].kind is DnnKind.ANYTIME

    def test_no_coord_runs_both_controllers(self, space, trace):
        # loose enough deadline that the power controller has room to move
        ref = reference_latency(space)
        spec = ConstraintSpec(
            mode=Mode.MINIMIZE_ENERGY,
            t_goal=ref,
            q_goal=0.68,
            overhead_budget=0.01 * ref,
        )
        result = run(space, spec, trace, make_policy("no-coord"))
        powers = {r.decision.power_index for r in result.records}
        assert len(powers) > 1  # system side reacts to the phases
        # accuracy is weakly increasing in the target stage, so the app side
        # always aims for the deepest stage and lets the deadline cut it off
        n_stages = len(space.dnns[result.records[0].decision.dnn_index].stages)
        assert {r.decision.target_stage for r in result.records} == {n_stages}

    def test_anytime_baselines_need_an_anytime_dnn(self, space, min_energy_spec, trace):
        trad_only = ConfigSpace(
            dnns=tuple(d for d in space.dnns if d.kind is DnnKind.TRADITIONAL),
            powers=space.powers,
            p_idle_prof=space.p_idle_prof,
        )
        for name in ("app-only", "no-coord"):
            with pytest.raises(ValueError, match="anytime"):
                run(trad_only, min_energy_spec, trace, make_policy(name))


class TestCoordinationAdvantage:
    def test_alert_beats_uncoordinated_on_objective(self, space, max_acc_spec, trace):
        alert = run(space, max_acc_spec, trace, make_policy("alert")).summary
        sys_only = run(space, max_acc_spec, trace, make_policy("sys-only")).summary
        assert alert.mean_accuracy > sys_only.mean_accuracy

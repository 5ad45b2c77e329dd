"""Post-run diagnostics: what did the environment actually look like?

Runs the adaptive policy on the preset trace, then recovers the observed
slow-down factors from the step records and fits them.  A text histogram
shows the three contention regimes baked into the trace.
"""

from alertsim import ConstraintSpec, Mode, make_policy, run, xi_diagnostics
from alertsim.synth import preset_space, preset_trace, reference_latency

space = preset_space()
trace = preset_trace()
ref = reference_latency(space)

spec = ConstraintSpec(
    mode=Mode.MINIMIZE_ENERGY,
    t_goal=0.14,
    q_goal=0.68,
    overhead_budget=0.01 * ref,
)

result = run(space, spec, trace, make_policy("alert"))
diag = xi_diagnostics(result.records, space)

print(f"{len(diag.values)} observations, fit mean {diag.mean:.3f}, sd {diag.sd:.3f}\n")

peak = diag.counts.max()
for lo, hi, count in zip(diag.bin_edges[:-1], diag.bin_edges[1:], diag.counts):
    bar = "#" * round(40 * count / peak)
    print(f"{lo:6.2f}-{hi:6.2f}  {count:>4}  {bar}")

print()
print("phase means for comparison (true regimes):")
for k, phase in enumerate(trace.phases):
    stats = result.summary.per_phase[k]
    xi = [r.true_slowdown for r in result.records if r.phase_index == k]
    print(f"  phase {k}: true mean {sum(xi) / len(xi):.3f}, "
          f"energy {stats.mean_energy:.4f} J, accuracy {stats.mean_accuracy:.4f}")

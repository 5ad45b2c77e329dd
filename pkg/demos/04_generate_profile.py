"""Generate a synthetic configuration space and inspect its frontier.

The generator lays out a family of DNN variants on a latency/accuracy
trade-off curve, attaches per-power-cap latency columns, and (optionally)
injects dominated points off the frontier.  The result round-trips through
the JSON profile format.
"""

import tempfile
from pathlib import Path

from alertsim import DnnKind, load_profile, save_profile, validate
from alertsim.synth import ProfileKnobs, generate_space

knobs = ProfileKnobs(n_dnns=6, n_powers=4, anytime_stages=3)
space = generate_space(knobs)
assert validate(space) == []

path = Path(tempfile.mkdtemp()) / "profile.json"
save_profile(space, path)
reloaded = load_profile(path)
assert reloaded == space
print(f"wrote {path} ({path.stat().st_size} bytes), round-trip OK\n")

caps = ", ".join(f"{p.cap_watts:.0f}W" for p in space.powers)
print(f"power caps: {caps}; profiled idle {space.p_idle_prof:.1f}W\n")

print(f"{'dnn':>8}  {'kind':>11}  {'accuracy':>8}  latency at each cap (ms)")
for dnn in space.dnns:
    final = dnn.final_stage
    lats = "  ".join(f"{t * 1e3:7.1f}" for t in final.t_prof)
    print(f"{dnn.id:>8}  {dnn.kind.value:>11}  {final.accuracy:>8.3f}  {lats}")

any_dnn = next(d for d in space.dnns if d.kind is DnnKind.ANYTIME)
print(f"\nanytime variant {any_dnn.id}: per-stage accuracy "
      + " -> ".join(f"{s.accuracy:.3f}" for s in any_dnn.stages))

"""Walk one sparse-secret LWE batch through every reduction stage.

Prints the plan, the residual width after each stage and the witness-gap
report on the final halfspace instance.

    python3 demos/pipeline_walkthrough.py [m]
"""

import math
import sys

from lwe_hardness.lwe import gen_lwe, residual_stats
from lwe_hardness.planner import plan_parameters
from lwe_hardness.reduction import STAGES, apply_stages, desk_lwe_spec, to_ltf_instance
from lwe_hardness.streams import RandomStream
from lwe_hardness.verification import check_witness_gap, null_independence_test

m = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
plan = plan_parameters(16, 4, 0.5, 1.0, 4, m=m)
print(f"n={plan.n} k={plan.k} q={plan.q} T=alpha={plan.T:.5f} sigma~={plan.sigma_tilde:.3f}")
for p in plan.failed():
    print(f"  advisory: {p.name} fails at desk scale ({p.lhs:.3g} vs {p.rhs:.3g})")

predicted = {"widen": math.hypot(plan.lwe_noise, plan.widen_extra),
             "continuize": plan.effective_noise, "gaussianize": plan.final_noise,
             "rotate": plan.final_noise}
root = RandomStream(7)
batch = gen_lwe(desk_lwe_spec(plan, m), "alternative", True, root.substream(1))
for i, stage in enumerate(STAGES):
    batch = apply_stages(batch, plan, root.substream(2, i), (stage,))
    _, std = residual_stats(batch, batch.planted_secret)
    print(f"{stage:>12}: m={batch.m:>7}  modulus={batch.modulus:<10.5g} "
          f"residual width={std * math.sqrt(2 * math.pi):.4g} (planned {predicted[stage]:.4g})")

ds = to_ltf_instance(batch, plan.T)
gap = check_witness_gap(ds)
print(f"witness gap: min(R1,R2)={gap.estimate:.4f} (oracle {gap.target:.4f}), status {gap.status}")
blind = null_independence_test(ds, 8, root.substream(3))
print(f"random projections: min p={blind.estimate:.3g} -> "
      f"{'labels look independent' if blind.passed else 'dependence detected'}")

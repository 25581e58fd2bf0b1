"""Degree-4 polynomial regression against hard instances of shrinking period.

For each T the distinguisher is run on paired alternative/null trials;
advantage collapses once the label period is small compared with the
Gaussian width, while the witness halfspaces still beat 1/2.

    python3 demos/hardness_shadow.py [trials]
"""

import sys

from lwe_hardness.distinguisher import AdvantageConfig, advantage_experiment
from lwe_hardness.verification import hermite_projection_oracle, witness_oracle

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 5
print(f"{'T':>5} {'advantage':>9} {'alt err':>8} {'deg-4 sign err':>14} {'witness min':>11}")
for T in (0.9, 0.75, 0.5, 0.25):
    cfg = AdvantageConfig(n=6, T=T, noise=T / 100, degree=4, m=200_000, trials=trials, seed=1)
    res = advantage_experiment(cfg)
    alt_err = sum(res.test_errors["alternative"]) / trials
    oracle = hermite_projection_oracle(T, 4, T / 100)
    print(f"{T:>5} {res.advantage:>9.2f} {alt_err:>8.4f} {oracle['sign_error']:>14.4f} "
          f"{witness_oracle(T, T / 100)['min']:>11.4f}")

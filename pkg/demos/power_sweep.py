"""
Sum-SE against transmit power
=============================

Reproduces the power sweep of the 4-user scenario with a modest trial
count and prints the table.  The same numbers come from::

    ris-zf run --config k4 --sweep power --trials 50 --out power.csv

Pass a trial count as the first argument for smoother curves.
"""

import sys

from ris_zf.channel import ScenarioConfig
from ris_zf.harness import SweepSpec, run_sweep

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
spec = SweepSpec(
    axis="ptx_dbm",
    values=(0, 5, 10, 15, 20, 25, 30),
    trials=trials,
    algorithms=("direct", "random", "greedy", "addone"),
    base=ScenarioConfig(n_ris=128),
    master_seed=0,
)
result = run_sweep(spec)

# one row per power level, one column per algorithm
table = {}
for rec in result.records:
    table.setdefault(rec.axis_value, {})[rec.algorithm] = rec
print(f"{'P_Tx dBm':>8}" + "".join(f"{a:>10}" for a in spec.algorithms))
for value, row in table.items():
    print(f"{value:>8g}" + "".join(f"{row[a].mean_se:>10.2f}" for a in spec.algorithms))

# mean number of served users: the RIS lets the penalized users back in
print("\nmean users served at 20 dBm:",
      {a: round(table[20.0][a].mean_users, 2) for a in spec.algorithms})

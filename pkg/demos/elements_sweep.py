"""
Sum-SE against RIS size
=======================

Sweeps the number of reflecting elements for the 12-user scenario at
20 dBm.  User selection runs in the QR subspace, so its cost stays flat
while the phase design (which touches every element) grows with N_R; the
per-algorithm wall time column shows both.
"""

import sys

from ris_zf.channel import ScenarioConfig
from ris_zf.harness import SweepSpec, format_csv, run_sweep

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
spec = SweepSpec(
    axis="n_ris",
    values=(16, 32, 64, 128, 256),
    trials=trials,
    algorithms=("direct", "random", "greedy", "addone"),
    base=ScenarioConfig(n_users=12),
    master_seed=3,
)
result = run_sweep(spec)
print(format_csv(result, timing=True))

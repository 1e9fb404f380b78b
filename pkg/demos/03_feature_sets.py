"""
Five feature sets, one target
=============================

For the last vehicle, predict the throughput it will get once it reaches the
spot where a vehicle ahead is now.  The look-ahead delay is the gap distance
divided by the current speed.  Features come either from the vehicle itself
or from the vehicle ahead.
"""

import numpy as np

from pqos import CampaignConfig, EnvironmentConfig, FeatureSetKind, simulate_campaign
from pqos.alignment import build_dataset
from pqos.trace_store import resample

traces = {t.vehicle_id: resample(t, 1.0) for t in simulate_campaign(EnvironmentConfig(), CampaignConfig(n_rounds=2, seed=5))}

for next_id in ("1", "3"):
    for kind in FeatureSetKind:
        ds = build_dataset(traces["4"], traces[next_id], kind)
        tau = np.array([r.tau_s for r in ds.rows])
        print(f"self 4 / next {next_id} {kind.value:>13}: {len(ds):5d} rows, "
              f"{len(ds.feature_schema)} features, mean delay {tau.mean():.0f} s")
    print("   dropped:", ds.drop_counts)

# a single row, spelled out
row = build_dataset(traces["4"], traces["1"], "next-phy-cell").rows[100]
print(f"\nat t={row.t_s:.0f} s the gap is {row.d_sn_m:.0f} m, so the target is read at t={row.target_t_s:.0f} s")
for name, value in row.features.items():
    print(f"  {name:>24} = {value:8.2f}")
print(f"  {'target throughput':>24} = {row.target_mbps:8.2f} Mbps")

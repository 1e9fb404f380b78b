"""
Simulating a four-vehicle highway campaign
==========================================

Four vehicles drive the same out-and-back road, three minutes apart.  Each
one logs radio KPIs, serving cell, cell load and throughput once per second.
"""

import numpy as np

from pqos import CampaignConfig, EnvironmentConfig, simulate_campaign

env = EnvironmentConfig()
campaign = CampaignConfig(n_rounds=2, seed=1)
traces = simulate_campaign(env, campaign)

# one trace per vehicle, vehicle "1" leads
for tr in traces:
    rsrp = tr.column("rsrp_dbm")
    tput = tr.column("throughput_mbps")
    print(
        f"vehicle {tr.vehicle_id}: {len(tr)} samples, starts at t={tr.t[0]:.0f} s, "
        f"RSRP {rsrp.min():.0f}..{rsrp.max():.0f} dBm, mean throughput {tput.mean():.1f} Mbps"
    )

# handovers of the leader along its first pass of the road
lead = traces[0]
cells = lead.column("serving_cell_id")
switch = np.flatnonzero(np.diff(cells)) + 1
print("leader handovers at positions (m):", np.round(lead.column("position_m")[switch]).astype(int).tolist()[:8])

# the road is static, so two vehicles at the same spot see the same mean signal
# but a different cell load, because load drifts over time
lead_pos, tail_pos = traces[0].column("position_m"), traces[3].column("position_m")
i = int(np.argmin(np.abs(lead_pos - 5000)))
j = int(np.argmin(np.abs(tail_pos - 5000)))
print(f"at 5 km: leader RSRP {traces[0].column('rsrp_dbm')[i]:.1f} dBm, "
      f"last vehicle RSRP {traces[3].column('rsrp_dbm')[j]:.1f} dBm")
print(f"          leader load {traces[0].column('cell_load')[i]:.2f}, last vehicle load {traces[3].column('cell_load')[j]:.2f}")

"""
How far ahead does the leader see?
==================================

Slide the follower's RSRP series against the leader's and look for the lag
with the highest Pearson correlation.  With a shared shadowing map the peak
lands on the start gap between the two vehicles.
"""

from pqos import CampaignConfig, EnvironmentConfig, simulate_campaign
from pqos.correlation import cross_correlation, kpi_series, peak_lag
from pqos.trace_store import resample

traces = [resample(t, 1.0) for t in simulate_campaign(EnvironmentConfig(), CampaignConfig(n_rounds=2, seed=3))]

for follower in ("2", "3", "4"):
    lead = traces[0]
    follow = next(t for t in traces if t.vehicle_id == follower)
    for kpi in ("rsrp_dbm", "snr_db"):
        curve = cross_correlation(kpi_series(lead, kpi), kpi_series(follow, kpi), max_lag_s=900)
        lag = peak_lag(curve)
        r = curve.r[curve.lags_s == lag][0]
        print(f"leader 1 vs vehicle {follower} ({kpi}): peak at {lag:+.0f} s, r = {r:.2f}")

# throughput mixes in the time-varying load, so its peak is weaker
curve = cross_correlation(kpi_series(traces[0], "throughput_mbps"), kpi_series(traces[3], "throughput_mbps"), 900)
lag = peak_lag(curve)
print(f"throughput, leader vs vehicle 4: peak at {lag:+.0f} s, r = {curve.r[curve.lags_s == lag][0]:.2f}")

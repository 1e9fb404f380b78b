"""
Training the boosted trees and reading the results
==================================================

Run the full grid (two vehicle pairs by five feature sets), hold out the
last round of the road, and compare the relative prediction error.  Then
ask which inputs the best model actually leans on.
"""

from pqos import CampaignConfig, EnvironmentConfig, simulate_campaign
from pqos.evaluation import ExperimentConfig, run_experiment
from pqos.gbt import GbtConfig

traces = simulate_campaign(EnvironmentConfig(), CampaignConfig(seed=2))
report = run_experiment(traces, ExperimentConfig(gbt=GbtConfig(n_rounds=100)))

print(f"{'pair':>6} {'feature set':>14} {'MRPE %':>7} {'train':>6} {'test':>5}")
for c in report.cells:
    print(f"{c.self_id + '/' + c.next_id:>6} {c.feature_set:>14} {c.mrpe.mrpe_percent:7.1f} {c.n_train:6d} {c.n_test:5d}")

table = report.mrpe_table()
for pair in (("4", "1"), ("4", "3")):
    base, best = table[pair + ("baseline",)], table[pair + ("next-phy-cell",)]
    print(f"pair {pair[0]}/{pair[1]}: next-phy-cell is {100 * (base - best) / base:.0f}% below the baseline")

print("\npermutation importance, pair 4/1, next-phy-cell (MRPE increase in points):")
for name, score in report.cell("4", "1", "next-phy-cell").importance:
    print(f"  {name:>24} {score:6.2f}")

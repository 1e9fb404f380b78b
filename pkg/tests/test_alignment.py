import numpy as np
import pytest

from oracles import brute_force_rows, toy
from pqos.alignment import (
    FeatureSetKind,
    build_dataset,
    load_dataset_csv,
    lookahead_delay,
    pair_distance,
    store_dataset_csv,
)
from pqos.errors import DomainError, SchemaError
from pqos.radio_sim import CampaignConfig, EnvironmentConfig, simulate_campaign
from pqos.trace_store import resample


def test_pair_distance_examples():
    a = toy([0, 1, 2], [5000, 5000, 5000], "s")
    b = toy([0, 1, 2], [5000, 5000, 5000], "n")
    assert pair_distance(a, b, 1.0) == 0.0
    a = toy([0, 1, 2], [1000, 1010, 1020], "s")
    b = toy([0, 1, 2], [1100, 1110, 1120], "n")
    assert pair_distance(a, b, 0.0) == 100.0


def test_pair_distance_uses_nearest_next_sample():
    s = toy([10.0], [1000.0], "s")
    # next sampled only at t - 0.4 and t + 0.45
    n = toy([9.6, 10.45], [1300.0, 1350.0], "n")
    assert pair_distance(s, n, 10.0) == 300.0
    far = toy([9.3, 10.6], [1300.0, 1350.0], "n")
    assert pair_distance(s, far, 10.0) is None


def test_lookahead_delay_examples():
    assert lookahead_delay(1200, 20) == 60.0
    assert lookahead_delay(0, 20) == 0.0
    assert lookahead_delay(5400, 30) == 180.0
    assert lookahead_delay(100, 1.0) is None
    assert lookahead_delay(100, 0.2) is None


def test_feature_schemas_follow_feature_table():
    assert FeatureSetKind.BASELINE.schema == ["self_throughput"]
    assert FeatureSetKind.PHY.schema == ["self_snr", "self_rsrp", "self_rsrq", "self_rssi"]
    assert FeatureSetKind.NEXT_PHY_AND_CELL.schema == [
        "next_snr",
        "next_rsrp",
        "next_rsrq",
        "next_rssi",
        "self_cell_load",
        "self_connected_devices",
    ]
    dims = {k: len(k.schema) for k in FeatureSetKind}
    assert dims == {
        FeatureSetKind.BASELINE: 1,
        FeatureSetKind.PHY: 4,
        FeatureSetKind.PHY_AND_CELL: 6,
        FeatureSetKind.NEXT_PHY: 4,
        FeatureSetKind.NEXT_PHY_AND_CELL: 6,
    }
    assert len(FeatureSetKind) == 5


def test_feature_set_parsing():
    assert FeatureSetKind.parse("next-phy-cell") is FeatureSetKind.NEXT_PHY_AND_CELL
    with pytest.raises(SchemaError):
        FeatureSetKind.parse("all")


def test_ten_sample_toy_gives_seven_rows():
    t = np.arange(10.0)
    s = toy(t, 10 * t, "s", speed=10.0)
    n = toy(t, 10 * t + 30, "n", speed=10.0)  # tau = 30 / 10 = 3 samples
    ds = build_dataset(s, n, FeatureSetKind.BASELINE)
    assert len(ds) == 7
    for row in ds.rows:
        assert row.tau_s == 3.0
        assert row.target_mbps == s.column("throughput_mbps")[int(row.t_s) + 3]
    assert ds.drop_counts["no_target"] == 3


@pytest.mark.parametrize("kind", list(FeatureSetKind))
def test_rows_match_brute_force_enumeration(kind):
    rng = np.random.default_rng(5)
    t = np.arange(20.0)
    s_speed = rng.uniform(8, 12, 20)
    s = toy(t, np.cumsum(s_speed), "s", speed=s_speed, seed=1)
    n = toy(t + rng.uniform(-0.3, 0.3, 20), np.cumsum(rng.uniform(8, 12, 20)) + 40, "n", seed=2)
    ds = build_dataset(s, n, kind, period_s=1.0)
    expected = brute_force_rows(s, n, 1.0)
    assert [(r.t_s, r.tau_s, r.target_mbps, r.target_t_s) for r in ds.rows] == expected


def test_features_come_from_time_t_only():
    t = np.arange(15.0)
    s = toy(t, 10 * t, "s", seed=3)
    n = toy(t, 10 * t + 40, "n", seed=4)
    ds = build_dataset(s, n, FeatureSetKind.NEXT_PHY_AND_CELL)
    for row in ds.rows:
        i = int(row.t_s)
        assert row.features["next_snr"] == n.column("snr_db")[i]
        assert row.features["next_rssi"] == n.column("rssi_dbm")[i]
        assert row.features["self_cell_load"] == s.column("cell_load")[i]
        assert row.target_t_s > row.t_s
        # re-reading the self trace at the matched time reproduces the target
        k = int(np.flatnonzero(s.t == row.target_t_s)[0])
        assert s.column("throughput_mbps")[k] == row.target_mbps
    ds = build_dataset(s, n, FeatureSetKind.BASELINE)
    for row in ds.rows:
        assert row.features["self_throughput"] == s.column("throughput_mbps")[int(row.t_s)]


def test_row_count_non_increasing_in_lookahead():
    t = np.arange(60.0)
    s = toy(t, 10 * t, "s")
    counts = [len(build_dataset(s, toy(t, 10 * t + gap, "n"), "baseline")) for gap in range(0, 500, 50)]
    assert counts == sorted(counts, reverse=True)


def test_next_vehicle_behind_rows_are_dropped_and_counted():
    t = np.arange(30.0)
    s = toy(t, 10 * t, "s")
    # next vehicle behind self for the first 10 s, ahead afterwards
    n = toy(t, 10 * t + np.where(t < 10, -20.0, 20.0), "n")
    ds = build_dataset(s, n, "phy")
    assert ds.drop_counts["next_behind"] == 10
    assert all(r.tau_s >= 0 for r in ds.rows)


def test_standstill_rows_are_dropped():
    t = np.arange(30.0)
    speed = np.where(t < 5, 0.5, 10.0)
    s = toy(t, np.cumsum(speed), "s", speed=speed)
    n = toy(t, np.cumsum(speed) + 20, "n")
    ds = build_dataset(s, n, "phy")
    assert ds.drop_counts["standstill"] == 5
    assert min(r.t_s for r in ds.rows) == 5.0


def test_empty_dataset_reports_reasons():
    t = np.arange(10.0)
    s = toy(t, 10 * t, "s")
    n = toy(t + 100, 10 * t, "n")
    with pytest.raises(DomainError, match="no_next_sample=10"):
        build_dataset(s, n, "baseline")


def test_simulated_pair_has_expected_mean_delay():
    traces = [resample(t, 1.0) for t in simulate_campaign(EnvironmentConfig(), CampaignConfig(n_rounds=2, seed=1))]
    ds = build_dataset(traces[3], traces[0], "next-phy")
    taus = np.array([r.tau_s for r in ds.rows])
    # nominal gap 540 s; vehicles slow down by up to 3 %
    assert 500 < taus.mean() < 580
    assert all(np.isfinite(r.target_mbps) and r.target_mbps >= 0 for r in ds.rows)


def test_dataset_csv_roundtrip(tmp_path):
    t = np.arange(20.0)
    ds = build_dataset(toy(t, 10 * t, "4"), toy(t, 10 * t + 30, "1"), "next-phy-cell")
    p = tmp_path / "d.csv"
    store_dataset_csv(ds, p)
    back = load_dataset_csv(p)
    assert back.feature_schema == ds.feature_schema
    assert (back.self_id, back.next_id) == ("4", "1")
    assert back.rows == ds.rows
    header = p.read_text().splitlines()[0].split(",")
    assert "tau_s" in header and header[-1] == "target_mbps"

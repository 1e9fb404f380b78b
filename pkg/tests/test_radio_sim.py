import json
import math

import numpy as np
import pytest

from pqos.errors import ConfigError, DomainError
from pqos.radio_sim import (
    HANDOVER_HYSTERESIS_DB,
    CampaignConfig,
    EnvironmentConfig,
    LoadProcessConfig,
    configs_from_dict,
    load_config,
    link_quality,
    make_shadow_field,
    mean_received_power_dbm,
    received_power_dbm,
    road_position,
    select_serving,
    simulate_campaign,
    throughput_sample,
    zero_shadow_field,
)
from pqos.records import CellState, PhyMeasurement
from pqos.trace_store import store_csv

QUIET = dict(load_process=LoadProcessConfig(load_std=0.0), throughput_noise=0.0)


def _csv_bytes(traces, tmp_path, name):
    p = tmp_path / name
    store_csv(traces, p)
    return p.read_bytes()


def test_same_seed_gives_identical_campaign(tmp_path):
    env, camp = EnvironmentConfig(), CampaignConfig(seed=7)
    a = simulate_campaign(env, camp)
    b = simulate_campaign(env, camp)
    assert _csv_bytes(a, tmp_path, "a.csv") == _csv_bytes(b, tmp_path, "b.csv")
    for ta, tb in zip(a, b):
        for name in ta.columns:
            assert np.array_equal(ta.columns[name], tb.columns[name])


def test_different_seed_changes_campaign():
    a = simulate_campaign(EnvironmentConfig(), CampaignConfig(seed=1, n_rounds=1))
    b = simulate_campaign(EnvironmentConfig(), CampaignConfig(seed=2, n_rounds=1))
    assert not np.array_equal(a[0].column("rsrp_dbm")[:100], b[0].column("rsrp_dbm")[:100])


def test_start_gap():
    traces = simulate_campaign(EnvironmentConfig(), CampaignConfig(n_vehicles=4, start_gap_s=180, n_rounds=1))
    assert [t.vehicle_id for t in traces] == ["1", "2", "3", "4"]
    assert traces[3].t[0] - traces[0].t[0] == 540.0


def test_single_round_spans_road_at_nominal_speed():
    env = EnvironmentConfig()
    camp = CampaignConfig(n_rounds=1)
    min_span = env.road_length_m / camp.nominal_speed_mps  # 600 s
    for tr in simulate_campaign(env, camp):
        assert tr.t[-1] - tr.t[0] >= min_span
        assert tr.column("position_m")[-1] == pytest.approx(env.road_length_m)
        assert np.all(np.diff(tr.column("position_m")) > 0)
        assert np.all(tr.column("speed_mps") > 0)
        assert np.all(tr.column("speed_mps") <= camp.nominal_speed_mps)


def test_equidistant_identical_cells_tie_to_lower_id():
    env = EnvironmentConfig(road_length_m=4000, cell_positions_m=(1000, 3000), cells_per_site=1, shadowing_sigma_db=0)
    shadow = zero_shadow_field(env)
    p = received_power_dbm(env, np.array([2000.0]), shadow)[:, 0]
    assert p[0] == p[1]
    assert link_quality(env, 2000.0, shadow).serving_cell_id == 0


def test_rsrp_decreases_away_from_single_cell():
    env = EnvironmentConfig(road_length_m=5000, cell_positions_m=(0.0,), cells_per_site=1, shadowing_sigma_db=0)
    shadow = zero_shadow_field(env)
    rsrp = [link_quality(env, x, shadow).rsrp_dbm for x in np.linspace(0, 5000, 60)]
    assert np.all(np.diff(rsrp) < 0)


def test_received_power_follows_log_distance_formula():
    env = EnvironmentConfig(road_length_m=5000, cell_positions_m=(0.0,), cells_per_site=1, shadowing_sigma_db=0)
    x = 1234.0
    d = math.hypot(x, env.site_offset_m)
    expected = env.tx_power_dbm - (env.pathloss_ref_db + 10 * env.pathloss_exponent * math.log10(d))
    got = link_quality(env, x, zero_shadow_field(env)).rsrp_dbm
    assert got == pytest.approx(expected, abs=1e-9)


def test_shadowing_std_matches_sigma():
    env = EnvironmentConfig(
        road_length_m=200_000.0,
        cell_positions_m=(100_000.0,),
        cells_per_site=1,
        shadowing_sigma_db=6.0,
        shadowing_corr_length_m=50.0,
    )
    rng = np.random.default_rng(11)
    field = make_shadow_field(env, rng)
    pos = np.random.default_rng(12).uniform(0, env.road_length_m, 100_000)
    # independent mean path loss, written out rather than reusing the module
    d = np.sqrt((pos - 100_000.0) ** 2 + env.site_offset_m**2)
    mean_rx = env.tx_power_dbm - (env.pathloss_ref_db + 10 * env.pathloss_exponent * np.log10(d))
    dev = received_power_dbm(env, pos, field)[0] - mean_rx
    assert abs(np.std(dev) - 6.0) <= 0.5


def test_shadowing_correlation_decays_with_separation():
    L = 50.0
    env = EnvironmentConfig(road_length_m=100_000.0, cell_positions_m=(0.0,), cells_per_site=1, shadowing_corr_length_m=L)
    field = make_shadow_field(env, np.random.default_rng(3))
    x = np.random.default_rng(4).uniform(0, env.road_length_m - 2 * L, 20_000)
    s0 = field.at(x)[0]

    def corr(delta):
        return np.corrcoef(s0, field.at(x + delta)[0])[0, 1]

    assert corr(L) < corr(0.2 * L)
    assert corr(0.2 * L) == pytest.approx(math.exp(-0.2), abs=0.05)
    assert corr(L) == pytest.approx(math.exp(-1), abs=0.05)


def test_vehicles_at_same_position_see_same_phy():
    env = EnvironmentConfig(**QUIET)
    camp = CampaignConfig(n_vehicles=2, speed_jitter=0.0, n_rounds=1, seed=5)
    a, b = simulate_campaign(env, camp)
    assert np.array_equal(a.column("position_m"), b.column("position_m"))
    for col in ("rsrp_dbm", "rsrq_db", "rssi_dbm", "snr_db", "serving_cell_id"):
        assert np.array_equal(a.column(col), b.column(col))


def test_handover_happens_over_a_round():
    (tr, _) = simulate_campaign(EnvironmentConfig(), CampaignConfig(n_vehicles=2, n_rounds=1))
    assert len(np.unique(tr.column("serving_cell_id"))) >= 2


def test_measurement_invariants_on_campaign():
    env = EnvironmentConfig()
    for tr in simulate_campaign(env, CampaignConfig(n_rounds=2, seed=3)):
        assert np.all(tr.column("rsrp_dbm") <= tr.column("rssi_dbm"))
        assert set(np.unique(tr.column("serving_cell_id"))) <= set(range(env.n_cells))
        load = tr.column("cell_load")
        assert np.all((load >= 0) & (load <= 1))
        assert np.all(tr.column("connected_devices") >= 0)
        assert np.all(tr.column("throughput_mbps") >= 0)


def test_load_shared_by_vehicles_on_same_cell_at_same_time():
    env = EnvironmentConfig()
    camp = CampaignConfig(n_vehicles=2, start_gap_s=60, n_rounds=1, seed=2)
    a, b = simulate_campaign(env, camp)
    common, ia, ib = np.intersect1d(a.t, b.t, return_indices=True)
    same_cell = a.column("serving_cell_id")[ia] == b.column("serving_cell_id")[ib]
    assert same_cell.any()
    assert np.array_equal(a.column("cell_load")[ia][same_cell], b.column("cell_load")[ib][same_cell])


def test_hysteresis_keeps_serving_cell():
    p = np.array([-80.0, -80.0 + HANDOVER_HYSTERESIS_DB - 0.1])
    assert select_serving(p, previous=0) == 0
    p = np.array([-80.0, -80.0 + HANDOVER_HYSTERESIS_DB + 0.1])
    assert select_serving(p, previous=0) == 1
    assert select_serving(np.array([-70.0, -70.0])) == 0


def test_sector_backlobe_attenuates_behind_cell():
    env = EnvironmentConfig(road_length_m=2000, cell_positions_m=(1000.0,), cells_per_site=2, shadowing_sigma_db=0)
    ahead, behind = mean_received_power_dbm(env, np.array([1500.0, 500.0])).T
    # cell 0 faces backwards, cell 1 forwards
    assert behind[0] - behind[1] == pytest.approx(env.sector_backlobe_db)
    assert ahead[1] - ahead[0] == pytest.approx(env.sector_backlobe_db)


def test_link_quality_rejects_positions_off_road():
    env = EnvironmentConfig()
    with pytest.raises(DomainError):
        link_quality(env, -1.0, zero_shadow_field(env))
    with pytest.raises(DomainError):
        link_quality(env, env.road_length_m + 1, zero_shadow_field(env))


def test_road_position_folds_out_and_back():
    assert road_position(np.array([0.0, 500.0, 1000.0, 1500.0, 2000.0, 2500.0]), 1000.0).tolist() == [
        0.0,
        500.0,
        1000.0,
        500.0,
        0.0,
        500.0,
    ]


def _phy(snr):
    return PhyMeasurement(rsrp_dbm=-90.0, rsrq_db=-10.0, rssi_dbm=-60.0, snr_db=snr, serving_cell_id=0)


def test_throughput_full_load_is_zero():
    assert throughput_sample(_phy(20.0), CellState(0, 1.0, 10)) == 0.0


def test_throughput_zero_db_snr_empty_cell():
    # 10 MHz * log2(1 + 1) = 10 Mbps
    assert throughput_sample(_phy(0.0), CellState(0, 0.0, 0), bandwidth_mhz=10.0) == 10.0


def test_throughput_very_low_snr():
    bw = 10.0
    assert throughput_sample(_phy(-40.0), CellState(0, 0.0, 0), bandwidth_mhz=bw) < 0.002 * bw


def test_throughput_noise_is_seeded_and_nonnegative():
    cell = CellState(0, 0.3, 5)
    a = [throughput_sample(_phy(5.0), cell, np.random.default_rng(1), noise_rel=0.5) for _ in range(3)]
    b = [throughput_sample(_phy(5.0), cell, np.random.default_rng(1), noise_rel=0.5) for _ in range(3)]
    assert a == b
    rng = np.random.default_rng(0)
    assert min(throughput_sample(_phy(5.0), cell, rng, noise_rel=3.0) for _ in range(200)) == 0.0


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(road_length_m=0), "road_length_m"),
        (dict(cell_positions_m=(20000.0,)), "cell_positions_m"),
        (dict(pathloss_exponent=1.5), "pathloss_exponent"),
        (dict(shadowing_sigma_db=-1), "shadowing_sigma_db"),
        (dict(load_process={"mean_load": 1.5}), "load_process.mean_load"),
        (dict(load_process={"bogus": 1}), "load_process.bogus"),
    ],
)
def test_environment_config_errors_name_field(kwargs, field):
    with pytest.raises(ConfigError) as exc:
        EnvironmentConfig(**kwargs)
    assert exc.value.field == field


@pytest.mark.parametrize(
    "kwargs, field",
    [(dict(n_vehicles=1), "n_vehicles"), (dict(start_gap_s=0), "start_gap_s"), (dict(sample_period_s=0), "sample_period_s")],
)
def test_campaign_config_errors_name_field(kwargs, field):
    with pytest.raises(ConfigError) as exc:
        CampaignConfig(**kwargs)
    assert exc.value.field == field


def test_json_config_roundtrip_and_unknown_keys(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"environment": {"shadowing_sigma_db": 4.0, "load_process": {"mean_load": 0.3}},
                             "campaign": {"n_vehicles": 3}}))
    env, camp = load_config(p)
    assert env.shadowing_sigma_db == 4.0 and env.load_process.mean_load == 0.3 and camp.n_vehicles == 3
    again, _ = configs_from_dict({"environment": env.to_dict()})
    assert again == env
    with pytest.raises(ConfigError) as exc:
        configs_from_dict({"campaign": {"n_vehicle": 3}})
    assert exc.value.field == "n_vehicle"
    with pytest.raises(ConfigError):
        configs_from_dict({"vehicles": {}})

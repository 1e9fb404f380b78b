"""Synthetic highway radio environment and multi-vehicle drive campaigns.

Received power follows a log-distance path loss with exponentially
correlated log-normal shadowing.  The shadowing field is a function of road
position only and is frozen for a campaign, so every vehicle passing a spot
sees the same large-scale fading.  Cell load is a mean-reverting process in
time shared by all vehicles.

Vehicles drive an out-and-back route: one *round* is a single pass over the
road, odd rounds drive back towards the origin.  Trace positions are route
distances; :func:`road_position` folds them back onto the road.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, DomainError
from .records import CellState, PhyMeasurement, VehicleTrace

HANDOVER_HYSTERESIS_DB = 3.0
SUBCARRIERS_PER_RB = 12


@dataclass(frozen=True)
class LoadProcessConfig:
    mean_load: float = 0.5
    load_std: float = 0.1
    correlation_time_s: float = 300.0
    max_devices: int = 40

    def validate(self):
        if not 0.0 <= self.mean_load <= 1.0:
            raise ConfigError("load_process.mean_load", "must lie in [0, 1]")
        if self.load_std < 0:
            raise ConfigError("load_process.load_std", "must be >= 0")
        if self.correlation_time_s < 0:
            raise ConfigError("load_process.correlation_time_s", "must be >= 0")
        if self.max_devices < 0:
            raise ConfigError("load_process.max_devices", "must be >= 0")


@dataclass(frozen=True)
class EnvironmentConfig:
    road_length_m: float = 18000.0
    # Site positions; each site hosts ``cells_per_site`` cells.
    cell_positions_m: tuple[float, ...] = (3000.0, 9000.0, 15000.0)
    cells_per_site: int = 2
    site_offset_m: float = 35.0
    tx_power_dbm: float = 33.0
    sector_backlobe_db: float = 20.0
    pathloss_exponent: float = 3.2
    pathloss_ref_db: float = 38.0
    shadowing_sigma_db: float = 6.0
    shadowing_corr_length_m: float = 300.0
    effective_bandwidth_mhz: float = 10.0
    load_process: LoadProcessConfig = field(default_factory=LoadProcessConfig)
    noise_floor_dbm: float = -97.0
    throughput_noise: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "cell_positions_m", tuple(float(p) for p in self.cell_positions_m))
        if isinstance(self.load_process, dict):
            object.__setattr__(self, "load_process", _from_dict(LoadProcessConfig, self.load_process, "load_process."))
        self.validate()

    def validate(self):
        if not self.road_length_m > 0:
            raise ConfigError("road_length_m", "must be > 0")
        if not self.cell_positions_m:
            raise ConfigError("cell_positions_m", "at least one site is required")
        for p in self.cell_positions_m:
            if not 0.0 <= p <= self.road_length_m:
                raise ConfigError("cell_positions_m", f"position {p} outside [0, road_length_m]")
        if self.cells_per_site not in (1, 2):
            raise ConfigError("cells_per_site", "only omni (1) or two opposing sectors (2) are modelled")
        if self.site_offset_m <= 0:
            raise ConfigError("site_offset_m", "must be > 0")
        if self.pathloss_exponent < 2:
            raise ConfigError("pathloss_exponent", "must be >= 2")
        if self.shadowing_sigma_db < 0:
            raise ConfigError("shadowing_sigma_db", "must be >= 0")
        if self.shadowing_corr_length_m < 0:
            raise ConfigError("shadowing_corr_length_m", "must be >= 0")
        if self.effective_bandwidth_mhz <= 0:
            raise ConfigError("effective_bandwidth_mhz", "must be > 0")
        if self.throughput_noise < 0:
            raise ConfigError("throughput_noise", "must be >= 0")
        if self.sector_backlobe_db < 0:
            raise ConfigError("sector_backlobe_db", "must be >= 0")
        self.load_process.validate()

    @property
    def n_cells(self) -> int:
        return len(self.cell_positions_m) * self.cells_per_site

    @property
    def n_resource_blocks(self) -> int:
        return max(1, round(5 * self.effective_bandwidth_mhz))

    def cell_sites(self) -> np.ndarray:
        return np.repeat(np.asarray(self.cell_positions_m), self.cells_per_site)

    def cell_facing(self) -> np.ndarray:
        """+1 for sectors facing increasing road position, -1 backwards, 0 omni."""
        if self.cells_per_site == 1:
            return np.zeros(self.n_cells)
        return np.tile([-1.0, 1.0], len(self.cell_positions_m))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cell_positions_m"] = list(self.cell_positions_m)
        return d


@dataclass(frozen=True)
class CampaignConfig:
    n_vehicles: int = 4
    start_gap_s: float = 180.0
    nominal_speed_mps: float = 30.0
    # Vehicles slow down from nominal by at most this fraction.
    speed_jitter: float = 0.03
    speed_corr_time_s: float = 60.0
    n_rounds: int = 6
    sample_period_s: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_vehicles < 2:
            raise ConfigError("n_vehicles", "must be >= 2")
        if not self.start_gap_s > 0:
            raise ConfigError("start_gap_s", "must be > 0")
        if not self.nominal_speed_mps > 0:
            raise ConfigError("nominal_speed_mps", "must be > 0")
        if not 0.0 <= self.speed_jitter < 0.9:
            raise ConfigError("speed_jitter", "must lie in [0, 0.9)")
        if self.speed_corr_time_s < 0:
            raise ConfigError("speed_corr_time_s", "must be >= 0")
        if self.n_rounds < 1:
            raise ConfigError("n_rounds", "must be >= 1")
        if not self.sample_period_s > 0:
            raise ConfigError("sample_period_s", "must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


def _from_dict(cls, data: dict, prefix: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or cls.__name__, "expected a JSON object")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(prefix + key, "unknown key")
    return cls(**data)


def environment_from_dict(data: dict) -> EnvironmentConfig:
    return _from_dict(EnvironmentConfig, data)


def campaign_from_dict(data: dict) -> CampaignConfig:
    return _from_dict(CampaignConfig, data)


def load_config(path) -> tuple[EnvironmentConfig, CampaignConfig]:
    """Read ``{"environment": {...}, "campaign": {...}}``; both keys optional."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return configs_from_dict(data)


def configs_from_dict(data: dict) -> tuple[EnvironmentConfig, CampaignConfig]:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    for key in data:
        if key not in ("environment", "campaign"):
            raise ConfigError(key, "unknown key")
    env = environment_from_dict(data.get("environment", {}))
    camp = campaign_from_dict(data.get("campaign", {}))
    return env, camp


def road_position(route_m, road_length_m: float):
    """Fold a route distance onto the road for an out-and-back route."""
    x = np.mod(np.asarray(route_m, dtype=float), 2.0 * road_length_m)
    return np.where(x > road_length_m, 2.0 * road_length_m - x, x)


def round_index(route_m, road_length_m: float, n_rounds: int | None = None):
    r = np.floor(np.asarray(route_m, dtype=float) / road_length_m).astype(np.int64)
    if n_rounds is not None:
        r = np.minimum(r, n_rounds - 1)
    return r


def _ar1(w: np.ndarray, rho: float) -> np.ndarray:
    """Unit-variance stationary AR(1) along the last axis driven by ``w``."""
    out = np.empty_like(w)
    out[..., 0] = w[..., 0]
    if w.shape[-1] > 1:
        innov = math.sqrt(1.0 - rho * rho)
        out[..., 1:], _ = lfilter([innov], [1.0, -rho], w[..., 1:], axis=-1, zi=rho * w[..., :1])
    return out


@dataclass(frozen=True)
class ShadowField:
    """Per-cell shadowing (dB) on a regular grid over the road."""

    step_m: float
    values: np.ndarray  # shape (n_cells, n_grid)

    def at(self, position_m) -> np.ndarray:
        """Linearly interpolated shadowing, shape ``(n_cells,) + position.shape``."""
        pos = np.asarray(position_m, dtype=float)
        u = pos / self.step_m
        n = self.values.shape[1]
        i0 = np.clip(np.floor(u).astype(np.int64), 0, n - 2) if n > 1 else np.zeros(pos.shape, np.int64)
        if n == 1:
            return self.values[:, i0]
        w = np.clip(u - i0, 0.0, 1.0)
        return self.values[:, i0] * (1.0 - w) + self.values[:, i0 + 1] * w


def make_shadow_field(env: EnvironmentConfig, rng: np.random.Generator) -> ShadowField:
    """Exponentially correlated Gaussian field (Gudmundson) per cell via AR(1)."""
    corr = env.shadowing_corr_length_m
    step = min(1.0, corr / 20.0) if corr > 0 else 1.0
    n = int(math.ceil(env.road_length_m / step)) + 2
    rho = math.exp(-step / corr) if corr > 0 else 0.0
    vals = _ar1(rng.standard_normal((env.n_cells, n)), rho)
    return ShadowField(step_m=step, values=env.shadowing_sigma_db * vals)


def zero_shadow_field(env: EnvironmentConfig) -> ShadowField:
    return ShadowField(step_m=env.road_length_m, values=np.zeros((env.n_cells, 2)))


def mean_received_power_dbm(env: EnvironmentConfig, position_m) -> np.ndarray:
    """Received power without shadowing, shape ``(n_cells,) + position.shape``."""
    pos = np.asarray(position_m, dtype=float)
    sites = env.cell_sites().reshape((-1,) + (1,) * pos.ndim)
    facing = env.cell_facing().reshape((-1,) + (1,) * pos.ndim)
    along = pos[None, ...] - sites
    d = np.sqrt(along**2 + env.site_offset_m**2)
    pl = env.pathloss_ref_db + 10.0 * env.pathloss_exponent * np.log10(d)
    behind = ((facing > 0) & (along < 0)) | ((facing < 0) & (along >= 0))
    return env.tx_power_dbm - pl - np.where(behind, env.sector_backlobe_db, 0.0)


def received_power_dbm(env: EnvironmentConfig, position_m, shadow_field: ShadowField) -> np.ndarray:
    return mean_received_power_dbm(env, position_m) - shadow_field.at(position_m)


def select_serving(powers_dbm: np.ndarray, previous: int | None = None) -> int:
    """Strongest cell, keeping ``previous`` unless beaten by the hysteresis margin.

    ``np.argmax`` returns the first maximum, so ties go to the lower cell id.
    """
    best = int(np.argmax(powers_dbm))
    if previous is None or previous == best:
        return best
    if powers_dbm[best] > powers_dbm[previous] + HANDOVER_HYSTERESIS_DB:
        return best
    return int(previous)


def _kpis(env: EnvironmentConfig, powers_dbm: np.ndarray, serving: np.ndarray, loads: np.ndarray):
    """Vectorised KPI computation.

    ``powers_dbm`` and ``loads`` are (n_cells, n); interferers radiate in
    proportion to their load.
    """
    n_sc = SUBCARRIERS_PER_RB * env.n_resource_blocks
    p_mw = 10.0 ** (powers_dbm / 10.0)
    idx = np.arange(p_mw.shape[1])
    p_serv = p_mw[serving, idx]
    activity = loads.copy()
    activity[serving, idx] = 0.0
    interf = np.sum(p_mw * activity, axis=0)
    noise_total = 10.0 ** (env.noise_floor_dbm / 10.0)
    noise_re = noise_total / n_sc
    rsrp = 10.0 * np.log10(p_serv)
    rssi = 10.0 * np.log10(n_sc * (p_serv + interf) + noise_total)
    snr = rsrp - 10.0 * np.log10(interf + noise_re)
    rsrq = 10.0 * math.log10(env.n_resource_blocks) + rsrp - rssi
    return rsrp, rsrq, rssi, snr


def link_quality(
    env: EnvironmentConfig,
    position_m: float,
    shadow_field: ShadowField,
    t_s: float = 0.0,
    *,
    loads: LoadTimeline | None = None,
    previous_serving: int | None = None,
) -> PhyMeasurement:
    """PHY KPIs seen at one road position.

    :param t_s: time, used to look up interferer activity in ``loads``; when
        ``loads`` is None every cell is taken at its mean load.
    :param previous_serving: serving cell before this sample, for hysteresis.
    """
    if not 0.0 <= position_m <= env.road_length_m:
        raise DomainError(f"position {position_m} m outside road [0, {env.road_length_m}]")
    powers = received_power_dbm(env, np.array([position_m]), shadow_field)
    serving = select_serving(powers[:, 0], previous_serving)
    if loads is None:
        load_now = np.full((env.n_cells, 1), env.load_process.mean_load)
    else:
        load_now = loads.load_at(np.array([t_s]))
    rsrp, rsrq, rssi, snr = _kpis(env, powers, np.array([serving]), load_now)
    return PhyMeasurement(float(rsrp[0]), float(rsrq[0]), float(rssi[0]), float(snr[0]), serving)


def throughput_sample(
    phy: PhyMeasurement,
    cell: CellState,
    rng: np.random.Generator | None = None,
    *,
    bandwidth_mhz: float = 10.0,
    noise_rel: float = 0.0,
) -> float:
    """Shannon rate scaled by the free share of the cell, in Mbps.

    Noise is multiplicative, ``1 + noise_rel * N(0, 1)``, and skipped when
    ``rng`` is None.
    """
    rate = bandwidth_mhz * math.log2(1.0 + 10.0 ** (phy.snr_db / 10.0)) * (1.0 - cell.load)
    if rng is not None and noise_rel > 0:
        rate *= 1.0 + noise_rel * rng.standard_normal()
    return max(rate, 0.0)


@dataclass(frozen=True)
class LoadTimeline:
    """Cell load and connected devices on a regular time grid."""

    period_s: float
    loads: np.ndarray  # (n_cells, n_t)
    devices: np.ndarray  # (n_cells, n_t)

    def _index(self, t_s) -> np.ndarray:
        i = np.rint(np.asarray(t_s, dtype=float) / self.period_s).astype(np.int64)
        return np.clip(i, 0, self.loads.shape[1] - 1)

    def load_at(self, t_s) -> np.ndarray:
        return self.loads[:, self._index(t_s)]

    def devices_at(self, t_s) -> np.ndarray:
        return self.devices[:, self._index(t_s)]


def make_load_timeline(env: EnvironmentConfig, duration_s: float, period_s: float, rng) -> LoadTimeline:
    lp = env.load_process
    n_t = int(math.ceil(duration_s / period_s)) + 2
    a = math.exp(-period_s / lp.correlation_time_s) if lp.correlation_time_s > 0 else 0.0
    x = _ar1(rng.standard_normal((env.n_cells, n_t)), a)
    loads = np.clip(lp.mean_load + lp.load_std * x, 0.0, 1.0)
    devices = rng.poisson(lp.max_devices * loads).astype(float)
    return LoadTimeline(period_s=period_s, loads=loads, devices=devices)


def _speed_profile(campaign: CampaignConfig, n: int, rng) -> np.ndarray:
    dt = campaign.sample_period_s
    tc = campaign.speed_corr_time_s
    a = math.exp(-dt / tc) if tc > 0 else 0.0
    u = _ar1(rng.standard_normal(n), a)
    slowdown = 1.0 / (1.0 + np.exp(-u))
    return campaign.nominal_speed_mps * (1.0 - campaign.speed_jitter * slowdown)


def simulate_campaign(env: EnvironmentConfig, campaign: CampaignConfig) -> list[VehicleTrace]:
    """Drive ``n_vehicles`` over the same route, vehicle k starting at (k-1)*gap.

    Every vehicle covers ``n_rounds`` passes of the road.  The result depends
    only on the two configs (including ``campaign.seed``).
    """
    env.validate()
    campaign.validate()
    dt = campaign.sample_period_s
    route_len = campaign.n_rounds * env.road_length_m
    v_min = campaign.nominal_speed_mps * (1.0 - campaign.speed_jitter)
    n_max = int(math.ceil(route_len / (v_min * dt))) + 2
    duration = (campaign.n_vehicles - 1) * campaign.start_gap_s + n_max * dt

    seeds = np.random.SeedSequence(campaign.seed).spawn(2 + 2 * campaign.n_vehicles)
    shadow = make_shadow_field(env, np.random.default_rng(seeds[0]))
    timeline = make_load_timeline(env, duration, dt, np.random.default_rng(seeds[1]))

    traces = []
    for k in range(campaign.n_vehicles):
        speed_rng = np.random.default_rng(seeds[2 + 2 * k])
        tput_rng = np.random.default_rng(seeds[3 + 2 * k])
        speed = _speed_profile(campaign, n_max, speed_rng)
        route = np.concatenate([[0.0], np.cumsum(speed[:-1] * dt)])
        n = int(np.searchsorted(route, route_len, side="left")) + 1
        route = np.minimum(route[:n], route_len)
        speed = speed[:n]
        t = k * campaign.start_gap_s + dt * np.arange(n)

        x = road_position(route, env.road_length_m)
        powers = received_power_dbm(env, x, shadow)
        serving = np.empty(n, dtype=np.int64)
        prev = None
        for i in range(n):
            prev = select_serving(powers[:, i], prev)
            serving[i] = prev
        loads_all = timeline.load_at(t)
        rsrp, rsrq, rssi, snr = _kpis(env, powers, serving, loads_all)
        idx = np.arange(n)
        own_load = loads_all[serving, idx]
        devices = timeline.devices_at(t)[serving, idx]
        rate = env.effective_bandwidth_mhz * np.log2(1.0 + 10.0 ** (snr / 10.0)) * (1.0 - own_load)
        if env.throughput_noise > 0:
            rate = rate * (1.0 + env.throughput_noise * tput_rng.standard_normal(n))
        rate = np.maximum(rate, 0.0)

        traces.append(
            VehicleTrace(
                str(k + 1),
                {
                    "t_s": t,
                    "position_m": route,
                    "speed_mps": speed,
                    "rsrp_dbm": rsrp,
                    "rsrq_db": rsrq,
                    "rssi_dbm": rssi,
                    "snr_db": snr,
                    "serving_cell_id": serving,
                    "cell_load": own_load,
                    "connected_devices": devices,
                    "throughput_mbps": rate,
                },
            )
        )
    return traces

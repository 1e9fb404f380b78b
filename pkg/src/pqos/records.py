"""Per-sample record types and the columnar vehicle trace container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SchemaError

# CSV/trace column order; also the order of VehicleTrace.columns.
NUMERIC_COLUMNS = (
    "t_s",
    "position_m",
    "speed_mps",
    "rsrp_dbm",
    "rsrq_db",
    "rssi_dbm",
    "snr_db",
    "cell_load",
    "connected_devices",
    "throughput_mbps",
)
ID_COLUMNS = ("serving_cell_id",)
CSV_COLUMNS = (
    "vehicle_id",
    "t_s",
    "position_m",
    "speed_mps",
    "rsrp_dbm",
    "rsrq_db",
    "rssi_dbm",
    "snr_db",
    "serving_cell_id",
    "cell_load",
    "connected_devices",
    "throughput_mbps",
)


@dataclass(frozen=True)
class PhyMeasurement:
    rsrp_dbm: float
    rsrq_db: float
    rssi_dbm: float
    snr_db: float
    serving_cell_id: int


@dataclass(frozen=True)
class CellState:
    cell_id: int
    load: float
    connected_devices: float

    def __post_init__(self):
        if not 0.0 <= self.load <= 1.0:
            raise DomainError(f"cell load {self.load} outside [0, 1]")
        if self.connected_devices < 0:
            raise DomainError("connected_devices must be >= 0")


@dataclass(frozen=True)
class TraceSample:
    t_s: float
    position_m: float
    speed_mps: float
    phy: PhyMeasurement
    cell: CellState
    throughput_mbps: float


@dataclass(eq=False)
class VehicleTrace:
    """Time series of one vehicle, stored column-wise.

    ``columns`` maps every name in ``NUMERIC_COLUMNS`` to a float array and
    ``serving_cell_id`` to an int array, all of equal length.  Position is the
    route distance travelled since the vehicle's start, in meters.
    """

    vehicle_id: str
    columns: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        self.vehicle_id = str(self.vehicle_id)
        cols = {}
        for name in NUMERIC_COLUMNS:
            if name not in self.columns:
                raise SchemaError(f"trace is missing column {name!r}")
            cols[name] = np.ascontiguousarray(self.columns[name], dtype=float)
        if "serving_cell_id" not in self.columns:
            raise SchemaError("trace is missing column 'serving_cell_id'")
        cols["serving_cell_id"] = np.ascontiguousarray(self.columns["serving_cell_id"], dtype=np.int64)
        n = len(cols["t_s"])
        if any(len(v) != n for v in cols.values()):
            raise SchemaError("trace columns have unequal lengths")
        if n > 1 and not np.all(np.diff(cols["t_s"]) > 0):
            raise DomainError(f"timestamps of vehicle {self.vehicle_id} are not strictly increasing")
        for v in cols.values():
            v.flags.writeable = False
        self.columns = cols

    def __len__(self) -> int:
        return len(self.columns["t_s"])

    def __getitem__(self, i: int) -> TraceSample:
        c = self.columns
        return TraceSample(
            t_s=float(c["t_s"][i]),
            position_m=float(c["position_m"][i]),
            speed_mps=float(c["speed_mps"][i]),
            phy=PhyMeasurement(
                rsrp_dbm=float(c["rsrp_dbm"][i]),
                rsrq_db=float(c["rsrq_db"][i]),
                rssi_dbm=float(c["rssi_dbm"][i]),
                snr_db=float(c["snr_db"][i]),
                serving_cell_id=int(c["serving_cell_id"][i]),
            ),
            cell=CellState(
                cell_id=int(c["serving_cell_id"][i]),
                load=float(c["cell_load"][i]),
                connected_devices=float(c["connected_devices"][i]),
            ),
            throughput_mbps=float(c["throughput_mbps"][i]),
        )

    @property
    def samples(self) -> list[TraceSample]:
        return [self[i] for i in range(len(self))]

    @property
    def t(self) -> np.ndarray:
        return self.columns["t_s"]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(f"unknown trace column {name!r}") from None

    @classmethod
    def from_samples(cls, vehicle_id, samples: list[TraceSample]) -> VehicleTrace:
        cols = {
            "t_s": [s.t_s for s in samples],
            "position_m": [s.position_m for s in samples],
            "speed_mps": [s.speed_mps for s in samples],
            "rsrp_dbm": [s.phy.rsrp_dbm for s in samples],
            "rsrq_db": [s.phy.rsrq_db for s in samples],
            "rssi_dbm": [s.phy.rssi_dbm for s in samples],
            "snr_db": [s.phy.snr_db for s in samples],
            "serving_cell_id": [s.phy.serving_cell_id for s in samples],
            "cell_load": [s.cell.load for s in samples],
            "connected_devices": [s.cell.connected_devices for s in samples],
            "throughput_mbps": [s.throughput_mbps for s in samples],
        }
        return cls(vehicle_id, cols)

    def equals(self, other: VehicleTrace, decimals: int | None = None) -> bool:
        """Column-wise equality, optionally after rounding to ``decimals``."""
        if self.vehicle_id != other.vehicle_id or len(self) != len(other):
            return False
        for name, a in self.columns.items():
            b = other.columns[name]
            if decimals is not None and a.dtype.kind == "f":
                if not np.allclose(a, b, rtol=0, atol=0.5 * 10.0 ** -decimals + 1e-12):
                    return False
            elif not np.array_equal(a, b):
                return False
        return True

"""Ground-world model: areas of interest and ground stations, CSV-backed.

The bundled data files are representative: AoI grids laid out along the
default orbit ground track (11 regions x 3x15 cells) and twelve ground
stations at cities hosting commercial antenna sites.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path

from .orbit import GeoPoint

_world_counter = itertools.count()

AOI_CSV_COLUMNS = ["region_id", "lat_deg", "lon_deg", "priority", "cloud_cover"]
STATION_CSV_COLUMNS = ["station_id", "lat_deg", "lon_deg", "min_elevation_deg"]


class WorldDataError(ValueError):
    """Malformed AoI or ground-station data file."""


@dataclass
class AreaOfInterest:
    id: str
    location: GeoPoint
    priority: float
    cloud_cover: float
    region_id: str
    captured_by: str | None = None

    def __post_init__(self):
        if not 0.0 < self.priority < 1.0:
            raise WorldDataError(f"AoI {self.id}: priority must be in (0, 1), got {self.priority}")
        if not 0.0 < self.cloud_cover < 1.0:
            raise WorldDataError(f"AoI {self.id}: cloud_cover must be in (0, 1), got {self.cloud_cover}")


@dataclass(frozen=True)
class GroundStation:
    id: str
    location: GeoPoint
    min_elevation_deg: float = 10.0


def bundled_data_path(name: str) -> Path:
    return Path(str(importlib_resources.files("satcluster").joinpath("data", name)))


def _read_rows(path: str | Path, columns: list[str]) -> list[dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise WorldDataError(f"data file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise WorldDataError(f"{path}: empty file")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise WorldDataError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise WorldDataError(f"{path}: no data rows")
    return rows


def _parse_float(path: Path | str, row_num: int, name: str, raw: str) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise WorldDataError(f"{path} row {row_num}: bad {name} value {raw!r}") from None


def load_aoi_csv(path: str | Path) -> list[AreaOfInterest]:
    """Load AoIs; row numbers are 1-based over data rows for diagnostics."""
    aois = []
    counters: dict[str, int] = {}
    for row_num, row in enumerate(_read_rows(path, AOI_CSV_COLUMNS), start=1):
        region = row["region_id"].strip()
        lat = _parse_float(path, row_num, "lat_deg", row["lat_deg"])
        lon = _parse_float(path, row_num, "lon_deg", row["lon_deg"])
        priority = _parse_float(path, row_num, "priority", row["priority"])
        cloud = _parse_float(path, row_num, "cloud_cover", row["cloud_cover"])
        if not 0.0 < priority < 1.0:
            raise WorldDataError(f"{path} row {row_num}: priority {priority} outside (0, 1)")
        if not 0.0 < cloud < 1.0:
            raise WorldDataError(f"{path} row {row_num}: cloud_cover {cloud} outside (0, 1)")
        try:
            location = GeoPoint(lat, lon)
        except ValueError as exc:
            raise WorldDataError(f"{path} row {row_num}: {exc}") from None
        counters[region] = counters.get(region, 0) + 1
        aois.append(
            AreaOfInterest(
                id=f"{region}:{counters[region]:02d}",
                location=location,
                priority=priority,
                cloud_cover=cloud,
                region_id=region,
            )
        )
    return aois


def load_ground_stations(path: str | Path) -> list[GroundStation]:
    stations = []
    for row_num, row in enumerate(_read_rows(path, STATION_CSV_COLUMNS), start=1):
        lat = _parse_float(path, row_num, "lat_deg", row["lat_deg"])
        lon = _parse_float(path, row_num, "lon_deg", row["lon_deg"])
        min_el = _parse_float(path, row_num, "min_elevation_deg", row["min_elevation_deg"])
        if not 0.0 <= min_el < 90.0:
            raise WorldDataError(f"{path} row {row_num}: min_elevation {min_el} outside [0, 90)")
        try:
            location = GeoPoint(lat, lon)
        except ValueError as exc:
            raise WorldDataError(f"{path} row {row_num}: {exc}") from None
        stations.append(GroundStation(id=row["station_id"].strip(), location=location,
                                      min_elevation_deg=min_el))
    return stations


@dataclass
class WorldData:
    """One episode's ground truth: AoIs (mutable capture state) + stations."""

    aois: list[AreaOfInterest]
    stations: list[GroundStation]
    aoi_path: str = "custom"
    station_path: str = "custom"
    cache_token: str | None = None   # identity key for cached episode geometry

    def __post_init__(self):
        if self.cache_token is None:
            self.cache_token = f"world-{next(_world_counter)}"

    @classmethod
    def bundled(cls) -> "WorldData":
        return cls(
            aois=load_aoi_csv(bundled_data_path("aois.csv")),
            stations=load_ground_stations(bundled_data_path("ground_stations.csv")),
            aoi_path="bundled",
            station_path="bundled",
            cache_token="bundled",
        )

    @classmethod
    def from_files(cls, aoi_path: str | Path, station_path: str | Path) -> "WorldData":
        return cls(
            aois=load_aoi_csv(aoi_path),
            stations=load_ground_stations(station_path),
            aoi_path=str(aoi_path),
            station_path=str(station_path),
            cache_token=f"files:{aoi_path}|{station_path}",
        )

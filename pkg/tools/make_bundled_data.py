"""Regenerate the bundled AoI and ground-station CSV files.

AoI regions are laid out along the default single-satellite ground track
(inclination 40 deg, RAAN -75 deg, 500 km) so that every cluster member
passes near them. Each region is a 3x15 grid: 15 cells along track, 3
across. Region priorities and cloud-cover ratios are representative values
chosen to cover all payload-suitability branches: four mostly-clear regions
favouring optical payloads and seven cloudy regions favouring SAR.

Run from the repository root:  python tools/make_bundled_data.py
"""

from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from satcluster.orbit import OrbitElements, position_eci, subsatellite_point

# (cloud_cover, priority) per region; ~clear regions reward optical capture,
# cloudy ones reward SAR.
REGION_PROFILES = [
    (0.05, 0.90),
    (0.92, 0.15),
    (0.10, 0.95),
    (0.88, 0.18),
    (0.20, 0.80),
    (0.93, 0.12),
    (0.75, 0.20),
    (0.85, 0.15),
    (0.45, 0.60),
    (0.78, 0.22),
    (0.70, 0.25),
]

GROUND_STATIONS = [
    ("boardman", 45.84, -119.70),
    ("columbus", 39.96, -83.00),
    ("wahiawa", 21.50, -158.02),
    ("anchorage", 61.22, -149.90),
    ("manama", 26.22, 50.58),
    ("dublin", 53.35, -6.26),
    ("stockholm", 59.33, 18.07),
    ("cape-town", -33.92, 18.42),
    ("dubbo", -32.24, 148.61),
    ("seoul", 37.57, 126.98),
    ("singapore", 1.35, 103.82),
    ("punta-arenas", -53.16, -70.91),
]

ALONG_TRACK_CELLS = 15
ACROSS_TRACK_CELLS = 3
CELL_SPACING_S = 20.0      # seconds of flight between along-track cells
ACROSS_SPACING_DEG = 0.35  # cross-track cell offset


def region_rows(elements: OrbitElements) -> list[tuple]:
    period = elements.period_s
    rows = []
    for region_idx, (cloud, priority) in enumerate(REGION_PROFILES):
        # Center each region partway into its slice of the orbit so region 0
        # is not glued to t = 0.
        t_center = (region_idx + 0.45) * period / len(REGION_PROFILES)
        for j in range(ALONG_TRACK_CELLS):
            t = t_center + (j - ALONG_TRACK_CELLS // 2) * CELL_SPACING_S
            point = subsatellite_point(position_eci(elements, t), t)
            # Cross-track offset approximately perpendicular to the track.
            p2 = subsatellite_point(position_eci(elements, t + 1.0), t + 1.0)
            dlat = p2.latitude_deg - point.latitude_deg
            dlon = (p2.longitude_deg - point.longitude_deg + 540.0) % 360.0 - 180.0
            dlon *= math.cos(math.radians(point.latitude_deg))
            norm = math.hypot(dlat, dlon)
            perp_lat, perp_lon = -dlon / norm, dlat / norm
            for i in range(ACROSS_TRACK_CELLS):
                off = (i - ACROSS_TRACK_CELLS // 2) * ACROSS_SPACING_DEG
                lat = point.latitude_deg + off * perp_lat
                lon = point.longitude_deg + off * perp_lon / max(
                    math.cos(math.radians(point.latitude_deg)), 0.2
                )
                lon = (lon + 180.0) % 360.0 - 180.0
                rows.append((f"region-{region_idx:02d}", round(lat, 4), round(lon, 4),
                             priority, cloud))
    return rows


def main() -> None:
    data_dir = Path(__file__).resolve().parents[1] / "src" / "satcluster" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    elements = OrbitElements(altitude_km=500.0, inclination_deg=40.0, raan_offset_deg=-75.0)
    rows = region_rows(elements)
    with open(data_dir / "aois.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id", "lat_deg", "lon_deg", "priority", "cloud_cover"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} AoIs")

    with open(data_dir / "ground_stations.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "lat_deg", "lon_deg", "min_elevation_deg"])
        for name, lat, lon in GROUND_STATIONS:
            writer.writerow([name, lat, lon, 10.0])
    print(f"wrote {len(GROUND_STATIONS)} ground stations")


if __name__ == "__main__":
    main()

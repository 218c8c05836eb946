"""Circular two-body orbit propagation, ground geometry and access windows.

Everything here is deterministic and side-effect free: positions are pure
functions of (elements, t), and window search operates on a fixed sampling
grid with bisection refinement. Earth is modelled as a rotating sphere; the
sun as a fixed inertial direction with a cylindrical shadow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MU_EARTH_KM3_S2 = 398600.4418
EARTH_RADIUS_KM = 6378.137
EARTH_ROTATION_RAD_S = 7.2921159e-5  # sidereal rate

# Window search resolution: coarse scan step and bisection tolerance.
COARSE_SCAN_S = 10.0
REFINE_TOL_S = 0.1


@dataclass(frozen=True)
class OrbitElements:
    """Circular orbit: altitude plus orientation angles (degrees)."""

    altitude_km: float = 500.0
    inclination_deg: float = 0.0
    raan_offset_deg: float = 0.0
    initial_phase_deg: float = 0.0

    def __post_init__(self):
        if self.altitude_km <= 0:
            raise ValueError(f"altitude must be positive, got {self.altitude_km}")
        if not 0.0 <= self.inclination_deg < 180.0:
            raise ValueError(f"inclination must be in [0, 180), got {self.inclination_deg}")

    @property
    def radius_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km

    @property
    def period_s(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.radius_km**3 / MU_EARTH_KM3_S2)

    @property
    def mean_motion_rad_s(self) -> float:
        return math.sqrt(MU_EARTH_KM3_S2 / self.radius_km**3)


@dataclass(frozen=True)
class GeoPoint:
    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        lon = ((self.longitude_deg + 180.0) % 360.0) - 180.0
        object.__setattr__(self, "longitude_deg", lon)


@dataclass(frozen=True)
class AccessWindow:
    target_id: str
    start_s: float
    end_s: float
    max_elevation_deg: float

    def __post_init__(self):
        if self.start_s >= self.end_s:
            raise ValueError(f"empty window for {self.target_id}: [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def contains(self, t: float) -> bool:
        return self.start_s <= t <= self.end_s

    def overlaps(self, t0: float, t1: float) -> bool:
        return self.start_s < t1 and self.end_s > t0


@dataclass(frozen=True)
class EclipseState:
    in_shadow: bool
    sun_unit_vector: np.ndarray = field(compare=False)


def _rotation_matrix(elements: OrbitElements) -> np.ndarray:
    """Orbital plane -> inertial frame: Rz(raan) @ Rx(inclination)."""
    i = math.radians(elements.inclination_deg)
    raan = math.radians(elements.raan_offset_deg)
    ci, si = math.cos(i), math.sin(i)
    cr, sr = math.cos(raan), math.sin(raan)
    return np.array(
        [
            [cr, -sr * ci, sr * si],
            [sr, cr * ci, -cr * si],
            [0.0, si, ci],
        ]
    )


def position_eci(elements: OrbitElements, t: float | np.ndarray) -> np.ndarray:
    """Inertial position (km) at time(s) t. Returns shape (3,) or (T, 3)."""
    t = np.asarray(t, dtype=float)
    u = math.radians(elements.initial_phase_deg) + elements.mean_motion_rad_s * t
    r = elements.radius_km
    in_plane = np.stack([r * np.cos(u), r * np.sin(u), np.zeros_like(u)], axis=-1)
    return in_plane @ _rotation_matrix(elements).T


def eci_to_ecef(position: np.ndarray, t: float | np.ndarray) -> np.ndarray:
    """Rotate inertial coordinates into the Earth-fixed frame at time t."""
    t = np.asarray(t, dtype=float)
    theta = EARTH_ROTATION_RAD_S * t
    c, s = np.cos(theta), np.sin(theta)
    x, y, z = position[..., 0], position[..., 1], position[..., 2]
    return np.stack([c * x + s * y, -s * x + c * y, z], axis=-1)


def geopoint_to_ecef(point: GeoPoint) -> np.ndarray:
    """Earth-fixed position (km) of a ground point on the spherical Earth."""
    lat = math.radians(point.latitude_deg)
    lon = math.radians(point.longitude_deg)
    r = EARTH_RADIUS_KM + point.altitude_m / 1000.0
    return np.array(
        [r * math.cos(lat) * math.cos(lon), r * math.cos(lat) * math.sin(lon), r * math.sin(lat)]
    )


def subsatellite_point(position: np.ndarray, t: float) -> GeoPoint:
    ecef = eci_to_ecef(position, t)
    r = float(np.linalg.norm(ecef))
    lat = math.degrees(math.asin(ecef[2] / r))
    lon = math.degrees(math.atan2(ecef[1], ecef[0]))
    return GeoPoint(lat, lon, 0.0)


def propagate_position(elements: OrbitElements, t: float) -> tuple[np.ndarray, GeoPoint]:
    """Inertial position plus the rotating-Earth subsatellite point at t >= 0."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    pos = position_eci(elements, t)
    return pos, subsatellite_point(pos, t)


def elevation_angle(sat_position: np.ndarray, ground: GeoPoint, t: float) -> float:
    """Elevation (deg) of the satellite above the ground point's local horizon."""
    if np.linalg.norm(sat_position) <= EARTH_RADIUS_KM:
        raise ValueError("satellite position is below the Earth surface")
    gs_ecef = geopoint_to_ecef(ground)
    sat_ecef = eci_to_ecef(sat_position, t)
    rho = sat_ecef - gs_ecef
    up = gs_ecef / np.linalg.norm(gs_ecef)
    sin_el = float(np.dot(rho, up) / np.linalg.norm(rho))
    return math.degrees(math.asin(max(-1.0, min(1.0, sin_el))))


def elevation_series(
    elements: OrbitElements, target: GeoPoint, times: np.ndarray
) -> np.ndarray:
    """Vectorised elevation over a time grid (used by the window scan)."""
    sat_ecef = eci_to_ecef(position_eci(elements, times), times)
    gs = geopoint_to_ecef(target)
    rho = sat_ecef - gs
    up = gs / np.linalg.norm(gs)
    sin_el = (rho @ up) / np.linalg.norm(rho, axis=-1)
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))


def _bisect_crossing(
    elements: OrbitElements, target: GeoPoint, threshold: float, lo: float, hi: float
) -> float:
    """Refine an elevation threshold crossing inside (lo, hi) to REFINE_TOL_S."""

    def above(t: float) -> bool:
        return elevation_angle(position_eci(elements, t), target, t) >= threshold

    above_lo = above(lo)
    while hi - lo > REFINE_TOL_S:
        mid = 0.5 * (lo + hi)
        if above(mid) == above_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compute_access_windows(
    elements: OrbitElements,
    target: GeoPoint,
    horizon_s: float,
    min_elevation_deg: float,
    target_id: str = "target",
) -> list[AccessWindow]:
    """Find all intervals within [0, horizon] where elevation >= threshold.

    Coarse sign-change scan at COARSE_SCAN_S followed by bisection refinement
    of each boundary. Windows open at t=0 or still open at the horizon are
    truncated to the horizon.
    """
    if horizon_s <= 0:
        raise ValueError(f"horizon must be positive, got {horizon_s}")
    if not 0.0 <= min_elevation_deg < 90.0:
        raise ValueError(f"min elevation must be in [0, 90), got {min_elevation_deg}")

    times = np.arange(0.0, horizon_s + COARSE_SCAN_S, COARSE_SCAN_S)
    times[-1] = min(times[-1], horizon_s)
    elev = elevation_series(elements, target, times)
    above = elev >= min_elevation_deg

    windows: list[AccessWindow] = []
    start: float | None = times[0] if above[0] else None
    for k in range(1, len(times)):
        if above[k] and not above[k - 1]:
            start = _bisect_crossing(elements, target, min_elevation_deg, times[k - 1], times[k])
        elif not above[k] and above[k - 1] and start is not None:
            end = _bisect_crossing(elements, target, min_elevation_deg, times[k - 1], times[k])
            windows.append(_finish_window(elements, target, target_id, start, end))
            start = None
    if start is not None and horizon_s - start > REFINE_TOL_S:
        windows.append(_finish_window(elements, target, target_id, start, horizon_s))
    return windows


def _finish_window(
    elements: OrbitElements, target: GeoPoint, target_id: str, start: float, end: float
) -> AccessWindow:
    times = np.linspace(start, end, max(3, int(end - start) + 1))
    max_el = float(np.max(elevation_series(elements, target, times)))
    return AccessWindow(target_id, start, end, max_el)


def eclipse_state(position: np.ndarray, sun_unit_vector: np.ndarray) -> EclipseState:
    """Cylindrical Earth-shadow model for a fixed inertial sun direction."""
    if np.linalg.norm(position) <= EARTH_RADIUS_KM:
        raise ValueError("position is below the Earth surface")
    sun = np.asarray(sun_unit_vector, dtype=float)
    norm = np.linalg.norm(sun)
    if abs(norm - 1.0) > 1e-9:
        sun = sun / norm
    along = float(np.dot(position, sun))
    lateral = position - along * sun
    in_shadow = along < 0.0 and float(np.linalg.norm(lateral)) < EARTH_RADIUS_KM
    return EclipseState(in_shadow=in_shadow, sun_unit_vector=sun)

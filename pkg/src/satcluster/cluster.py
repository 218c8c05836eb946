"""Cluster layouts: which satellites fly, on which orbits.

Three presets mirror the experiment grid: a single optical satellite, a
homogeneous 3-optical cluster, and a heterogeneous 2-optical + 1-SAR
cluster. Cluster members fly a close trailing formation (small phase
offsets) on near-identical planes, so they cover the same ground track
minutes apart and must divide targets between them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .orbit import OrbitElements
from .resources import Payload, SatelliteSpec

CLUSTER_NAMES = ("single", "homogeneous-3opt", "heterogeneous-2opt-1sar")

# Trailing-formation phase offsets (deg along orbit) for 3-satellite clusters.
_FORMATION_PHASES = (0.0, 5.0, 10.0)


@dataclass(frozen=True)
class SatelliteConfig:
    name: str
    elements: OrbitElements
    spec: SatelliteSpec


@dataclass(frozen=True)
class ClusterLayout:
    name: str
    satellites: tuple[SatelliteConfig, ...]

    @property
    def n_agents(self) -> int:
        return len(self.satellites)

    @property
    def agent_names(self) -> tuple[str, ...]:
        return tuple(sat.name for sat in self.satellites)


def cluster_preset(name: str, min_battery_fraction: float = 0.8) -> ClusterLayout:
    if name == "single":
        return ClusterLayout(
            name=name,
            satellites=(
                SatelliteConfig(
                    "opt-1",
                    OrbitElements(altitude_km=500.0, inclination_deg=40.0, raan_offset_deg=-75.0),
                    SatelliteSpec(payload=Payload.OPT, min_battery_fraction=min_battery_fraction),
                ),
            ),
        )
    if name == "homogeneous-3opt":
        payloads = (Payload.OPT, Payload.OPT, Payload.OPT)
    elif name == "heterogeneous-2opt-1sar":
        payloads = (Payload.OPT, Payload.OPT, Payload.SAR)
    else:
        raise ValueError(f"unknown cluster {name!r}; expected one of {CLUSTER_NAMES}")

    inclinations = (41.0, 41.0, 40.0)
    raans = (-74.0, -74.0, -75.0)
    sats = []
    for k, payload in enumerate(payloads):
        label = "sar" if payload is Payload.SAR else "opt"
        count = sum(1 for p in payloads[: k + 1] if p is payload)
        sats.append(
            SatelliteConfig(
                f"{label}-{count}",
                OrbitElements(
                    altitude_km=500.0,
                    inclination_deg=inclinations[k],
                    raan_offset_deg=raans[k],
                    initial_phase_deg=_FORMATION_PHASES[k],
                ),
                SatelliteSpec(payload=payload, min_battery_fraction=min_battery_fraction),
            )
        )
    return ClusterLayout(name=name, satellites=tuple(sats))

"""Per-satellite resource dynamics: battery, data storage, reaction wheels.

All transitions are pure: they take a state, return a new state plus a
ledger of what moved, and never touch shared mutable data. Units are Wh for
energy, GB (1e9 bytes) for data, rpm for wheel speeds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

SOLAR_CONSTANT_W_M2 = 1361.0


class Payload(str, enum.Enum):
    OPT = "OPT"
    SAR = "SAR"


class ActionClass(str, enum.Enum):
    IMAGE = "image"
    DOWNLINK = "downlink"
    CHARGE = "charge"
    DESATURATE = "desaturate"
    IDLE = "idle"  # degraded/infeasible tasking: base power draw only


@dataclass(frozen=True)
class SatelliteSpec:
    """Capability tuple of one satellite (payload, power, storage, wheels)."""

    payload: Payload = Payload.OPT
    battery_capacity_wh: float = 400.0
    storage_capacity_gb: float = 500.0
    instrument_baud_kbps: float = 500.0
    transmitter_baud_mbps: float = 100.0
    solar_panel_area_m2: float = 1.0
    solar_efficiency: float = 0.20
    base_power_w: float = -10.0
    instrument_power_w: float = -30.0
    thruster_power_w: float = -80.0
    rw_max_rpm: float = 6000.0
    min_battery_fraction: float = 0.8
    imaging_duration_s: float = 30.0

    def __post_init__(self):
        if isinstance(self.payload, str) and not isinstance(self.payload, Payload):
            object.__setattr__(self, "payload", Payload(self.payload))
        for name in ("battery_capacity_wh", "storage_capacity_gb", "instrument_baud_kbps",
                     "transmitter_baud_mbps", "solar_panel_area_m2", "rw_max_rpm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.solar_efficiency <= 1.0:
            raise ValueError(f"solar_efficiency must be in (0, 1], got {self.solar_efficiency}")
        if not 0.0 <= self.min_battery_fraction < 1.0:
            raise ValueError(f"min_battery_fraction must be in [0, 1), got {self.min_battery_fraction}")
        for name in ("base_power_w", "instrument_power_w", "thruster_power_w"):
            if getattr(self, name) > 0:
                raise ValueError(f"{name} is a draw and must be <= 0")

    @property
    def capture_size_gb(self) -> float:
        """Data volume of one capture: instrument baud x imaging duration."""
        return self.instrument_baud_kbps * 1e3 * self.imaging_duration_s / 8.0 / 1e9


@dataclass(frozen=True)
class ResourceState:
    battery_wh: float
    storage_used_gb: float
    rw_speeds_rpm: tuple[float, float, float]
    failed: bool = False

    def battery_fraction(self, spec: SatelliteSpec) -> float:
        return self.battery_wh / spec.battery_capacity_wh

    def storage_fraction(self, spec: SatelliteSpec) -> float:
        return self.storage_used_gb / spec.storage_capacity_gb


@dataclass(frozen=True)
class PowerLedger:
    generated_wh: float
    consumed_wh: float
    base_wh: float
    instrument_wh: float
    thruster_wh: float

    def __post_init__(self):
        for name in ("generated_wh", "consumed_wh", "base_wh", "instrument_wh", "thruster_wh"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def initial_state(spec: SatelliteSpec, battery_frac: float = 1.0,
                  storage_frac: float = 0.0,
                  rw_rpm: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> ResourceState:
    return ResourceState(
        battery_wh=battery_frac * spec.battery_capacity_wh,
        storage_used_gb=storage_frac * spec.storage_capacity_gb,
        rw_speeds_rpm=tuple(float(w) for w in rw_rpm),
    )


def step_power(
    spec: SatelliteSpec,
    state: ResourceState,
    action_class: ActionClass,
    in_shadow: bool,
    sun_incidence_cos: float,
    dt: float,
) -> tuple[ResourceState, PowerLedger]:
    """One power step: base draw always, instrument while imaging/downlinking,
    thruster while desaturating; solar generation unless shadowed.

    The charge action idealises sun pointing (incidence 1) when unshadowed.
    Battery is clamped to [0, capacity].
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not 0.0 <= sun_incidence_cos <= 1.0:
        raise ValueError(f"sun_incidence_cos must be in [0, 1], got {sun_incidence_cos}")
    if state.failed:
        raise ValueError("cannot step a failed satellite")

    hours = dt / 3600.0
    base = abs(spec.base_power_w) * hours
    instrument = abs(spec.instrument_power_w) * hours if action_class in (
        ActionClass.IMAGE, ActionClass.DOWNLINK) else 0.0
    thruster = abs(spec.thruster_power_w) * hours if action_class is ActionClass.DESATURATE else 0.0
    consumed = base + instrument + thruster

    if in_shadow:
        generated = 0.0
    else:
        cos = 1.0 if action_class is ActionClass.CHARGE else sun_incidence_cos
        generated = SOLAR_CONSTANT_W_M2 * spec.solar_panel_area_m2 * spec.solar_efficiency * cos * hours

    battery = min(max(state.battery_wh + generated - consumed, 0.0), spec.battery_capacity_wh)
    ledger = PowerLedger(generated, consumed, base, instrument, thruster)
    return replace(state, battery_wh=battery), ledger


def step_storage(
    spec: SatelliteSpec,
    state: ResourceState,
    action_class: ActionClass,
    downlink_window_open: bool,
    dt: float,
    transmitter_derate: float = 1.0,
) -> tuple[ResourceState, float, bool]:
    """One storage step.

    Imaging adds one capture worth of data if it fits (otherwise the capture
    is infeasible and storage is unchanged). Downlinking with an open window
    removes transmitter_baud x dt, clamped at empty. Returns
    (state, removed_gb, capture_ok).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    if action_class is ActionClass.IMAGE:
        size = spec.capture_size_gb
        if state.storage_used_gb + size > spec.storage_capacity_gb:
            return state, 0.0, False
        return replace(state, storage_used_gb=state.storage_used_gb + size), 0.0, True

    if action_class is ActionClass.DOWNLINK and downlink_window_open:
        rate_gb = spec.transmitter_baud_mbps * transmitter_derate * 1e6 * dt / 8.0 / 1e9
        removed = min(state.storage_used_gb, rate_gb)
        return replace(state, storage_used_gb=state.storage_used_gb - removed), removed, True

    return state, 0.0, True


def step_wheels(
    spec: SatelliteSpec,
    state: ResourceState,
    action_class: ActionClass,
    slew_torque_proxy: float,
    dt: float,
    rng: np.random.Generator,
    disturbance_scale: float = 0.0,
) -> ResourceState:
    """One wheel-momentum step.

    Imaging/downlink slews dump |slew_torque_proxy| x dt rpm onto one
    rng-chosen axis (repeated tracking slews accumulate in the same sense, so
    momentum builds up). Desaturation drives every wheel toward zero at the
    unload rate. Disturbance noise (std = disturbance_scale rpm/s) applies
    each step. Speeds are never clamped here; saturation is a failure.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    wheels = list(state.rw_speeds_rpm)
    if action_class in (ActionClass.IMAGE, ActionClass.DOWNLINK):
        axis = int(rng.integers(3))
        wheels[axis] += abs(slew_torque_proxy) * dt
    elif action_class is ActionClass.DESATURATE:
        unload = abs(slew_torque_proxy) * dt
        wheels = [math.copysign(max(abs(w) - unload, 0.0), w) for w in wheels]
    if disturbance_scale > 0.0:
        noise = rng.normal(0.0, disturbance_scale, size=3) * dt
        wheels = [w + n for w, n in zip(wheels, noise)]
    return replace(state, rw_speeds_rpm=tuple(wheels))


def check_failure(spec: SatelliteSpec, state: ResourceState) -> bool:
    """Fault condition: battery fraction below the minimum, or any wheel at
    or beyond the speed limit. Latches once tripped."""
    if state.failed:
        return True
    if state.battery_fraction(spec) < spec.min_battery_fraction:
        return True
    return any(abs(w) >= spec.rw_max_rpm for w in state.rw_speeds_rpm)

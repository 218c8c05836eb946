"""The multi-satellite mission environment (a cooperative Dec-POMDP).

Each agent picks one discrete action per decision interval: capture one of
the K nearest upcoming target windows, downlink, charge, or desaturate.
Infeasible tasking degrades to an idle, power-only step. The global reward
is the sum of per-agent terms: priority + payload suitability on unique
captures, a transmission bonus on downlinked data, an energy penalty scaled
by battery depletion, and a large penalty on resource failures.

All randomness flows through one per-episode generator seeded at reset, so
an episode is bit-reproducible from (configs, seed, actions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cluster import ClusterLayout
from .orbit import (
    COARSE_SCAN_S,
    EARTH_RADIUS_KM,
    REFINE_TOL_S,
    eci_to_ecef,
    eclipse_state,
    geopoint_to_ecef,
    position_eci,
)
from .resources import (
    ActionClass,
    Payload,
    PowerLedger,
    ResourceState,
    SatelliteSpec,
    check_failure,
    initial_state,
    step_power,
    step_storage,
    step_wheels,
)
from .scenario import ScenarioConfig, sample_ranged
from .world import WorldData

FAILURE_PENALTY = -100.0

# Observation normalisation scales.
_AOI_DURATION_SCALE_S = 120.0
_GS_DURATION_SCALE_S = 600.0


@dataclass(frozen=True)
class RewardParams:
    """Constants of the reward terms left free by the mission design."""

    alpha: float = 300.0   # energy-penalty scale on battery-fraction drops
    beta: float = 0.02     # downlink bonus per GB transmitted


@dataclass(frozen=True)
class EnvParams:
    k_slots: int = 8
    min_imaging_elevation_deg: float = 60.0
    noncharge_sun_incidence: float = 0.0
    slew_rpm_per_action: float = 150.0
    desat_rpm_per_action: float = 1500.0
    terminate_on_failure: bool = False
    sun_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)


@dataclass
class StepResult:
    observations: list[np.ndarray]
    reward: float
    components: list[dict]
    done: bool
    info: dict


def payload_suitability(payload: Payload, cloud_cover: float) -> float:
    """Reward term matching payload to sky condition: optical wants clear
    skies, radar wants clouds."""
    if payload is Payload.SAR:
        return -1.0 + cloud_cover if cloud_cover < 0.5 else cloud_cover
    return 1.0 - cloud_cover if cloud_cover < 0.5 else -cloud_cover


def reward_step(
    payload: Payload,
    battery_frac_prev: float,
    battery_frac_new: float,
    downlinked_gb: float,
    captured: tuple[float, float] | None,
    failed: bool,
    params: RewardParams,
) -> tuple[float, dict]:
    """One agent's reward for one transition; returns (r, components).

    Exactly one branch applies: failure, capture, downlink, power-only (only
    when net power was consumed), else zero. `captured` carries (priority,
    cloud_cover) when a new unique capture succeeded.
    """
    delta_q = battery_frac_prev - battery_frac_new
    rho = params.alpha * delta_q * (1.0 - battery_frac_new)
    comps = {"branch": "none", "q": 0.0, "rho": 0.0, "delta": 0.0, "c": 0.0,
             "failure": False, "reward": 0.0}
    if failed:
        comps.update(branch="failure", failure=True, reward=FAILURE_PENALTY)
    elif captured is not None:
        priority, cloud = captured
        c = payload_suitability(payload, cloud)
        comps.update(branch="capture", q=priority, rho=rho, c=c,
                     reward=priority - rho + c)
    elif downlinked_gb > 0.0:
        delta = params.beta * downlinked_gb
        comps.update(branch="downlink", rho=rho, delta=delta, reward=-rho + delta)
    elif delta_q > 0.0:
        comps.update(branch="power", rho=rho, reward=-rho)
    return comps["reward"], comps


def recompose_reward(comps: dict) -> float:
    """Rebuild the reward from its components; used by replay checks."""
    branch = comps["branch"]
    if branch == "failure":
        return FAILURE_PENALTY
    if branch == "capture":
        return comps["q"] - comps["rho"] + comps["c"]
    if branch == "downlink":
        return -comps["rho"] + comps["delta"]
    if branch == "power":
        return -comps["rho"]
    return 0.0


# ---------------------------------------------------------------------------
# Episode geometry: access windows and ephemerides, cached per configuration.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _AgentGeometry:
    aoi_windows: tuple[tuple[int, float, float], ...]   # (aoi index, start, end)
    gs_windows: tuple[tuple[float, float], ...]         # merged (start, end)
    positions: np.ndarray                               # (steps+1, 3) ECI km
    in_shadow: np.ndarray                               # (steps+1,) bool


def _batched_windows(
    elements, targets_ecef: np.ndarray, horizon_s: float, min_elevation_deg: float
) -> list[list[tuple[float, float]]]:
    """Access windows for many targets at once: coarse scan on a shared grid,
    then vectorised bisection of every threshold crossing."""
    times = np.arange(0.0, horizon_s + COARSE_SCAN_S, COARSE_SCAN_S)
    times[-1] = min(times[-1], horizon_s)
    sat_ecef = eci_to_ecef(position_eci(elements, times), times)       # (T, 3)
    rho = sat_ecef[:, None, :] - targets_ecef[None, :, :]              # (T, N, 3)
    up = targets_ecef / np.linalg.norm(targets_ecef, axis=1, keepdims=True)
    sin_el = np.einsum("tnk,nk->tn", rho, up) / np.linalg.norm(rho, axis=2)
    above = np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0))) >= min_elevation_deg

    rises = np.argwhere(above[1:] & ~above[:-1])   # crossing in (times[k], times[k+1])
    sets_ = np.argwhere(~above[1:] & above[:-1])

    def refine(crossings: np.ndarray, rising: bool) -> dict[tuple[int, int], float]:
        if len(crossings) == 0:
            return {}
        lo = times[crossings[:, 0]].astype(float)
        hi = times[crossings[:, 0] + 1].astype(float)
        tgt = crossings[:, 1]
        tgt_ecef = targets_ecef[tgt]
        tgt_up = up[tgt]
        while np.max(hi - lo) > REFINE_TOL_S:
            mid = 0.5 * (lo + hi)
            sat = eci_to_ecef(position_eci(elements, mid), mid)
            d = sat - tgt_ecef
            s = np.einsum("nk,nk->n", d, tgt_up) / np.linalg.norm(d, axis=1)
            el = np.degrees(np.arcsin(np.clip(s, -1.0, 1.0)))
            is_above = el >= min_elevation_deg
            # Rising: below before crossing; keep the half that brackets it.
            take_hi = is_above == rising
            hi = np.where(take_hi, mid, hi)
            lo = np.where(take_hi, lo, mid)
        out = {}
        mids = 0.5 * (lo + hi)
        for (k, n), t in zip(crossings, mids):
            out[(int(n), int(k))] = float(t)
        return out

    rise_t = refine(rises, rising=True)
    set_t = refine(sets_, rising=False)

    n_targets = targets_ecef.shape[0]
    windows: list[list[tuple[float, float]]] = [[] for _ in range(n_targets)]
    for n in range(n_targets):
        col = above[:, n]
        start: float | None = float(times[0]) if col[0] else None
        for k in range(1, len(times)):
            if col[k] and not col[k - 1]:
                start = rise_t[(n, k - 1)]
            elif not col[k] and col[k - 1] and start is not None:
                windows[n].append((start, set_t[(n, k - 1)]))
                start = None
        if start is not None and horizon_s - start > REFINE_TOL_S:
            windows[n].append((start, float(horizon_s)))
    return windows


def _merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(a, b) for a, b in merged]


_GEOMETRY_CACHE: dict[tuple, list[_AgentGeometry]] = {}


def _build_geometry(
    cluster: ClusterLayout,
    world: WorldData,
    n_steps: int,
    dt: float,
    params: EnvParams,
) -> list[_AgentGeometry]:
    key = (
        tuple((s.elements, s.spec.payload) for s in cluster.satellites),
        world.cache_token, len(world.aois), len(world.stations),
        n_steps, dt, params.min_imaging_elevation_deg, params.sun_direction,
    )
    if key in _GEOMETRY_CACHE:
        return _GEOMETRY_CACHE[key]

    horizon = n_steps * dt
    aoi_ecef = np.stack([geopoint_to_ecef(a.location) for a in world.aois])
    sun = np.asarray(params.sun_direction, dtype=float)
    sun = sun / np.linalg.norm(sun)

    geoms = []
    for sat in cluster.satellites:
        per_target = _batched_windows(
            sat.elements, aoi_ecef, horizon, params.min_imaging_elevation_deg
        )
        aoi_windows = sorted(
            (
                (idx, start, end)
                for idx, wins in enumerate(per_target)
                for start, end in wins
            ),
            key=lambda w: (w[1], w[0]),
        )

        gs_intervals = []
        for station in world.stations:
            gs_ecef = geopoint_to_ecef(station.location)[None, :]
            wins = _batched_windows(sat.elements, gs_ecef, horizon, station.min_elevation_deg)
            gs_intervals.extend(wins[0])
        gs_windows = _merge_intervals(gs_intervals)

        instants = np.arange(n_steps + 1) * dt
        positions = position_eci(sat.elements, instants)
        along = positions @ sun
        lateral = positions - along[:, None] * sun[None, :]
        in_shadow = (along < 0.0) & (np.linalg.norm(lateral, axis=1) < EARTH_RADIUS_KM)

        geoms.append(
            _AgentGeometry(
                aoi_windows=tuple(aoi_windows),
                gs_windows=tuple(gs_windows),
                positions=positions,
                in_shadow=in_shadow,
            )
        )
    _GEOMETRY_CACHE[key] = geoms
    return geoms


# ---------------------------------------------------------------------------
# The environment.
# ---------------------------------------------------------------------------


class ClusterEnv:
    """Cooperative satellite-cluster environment with discrete actions.

    Action space per agent: slots 0..K-1 capture the k-th upcoming target
    window shown in the agent's observation; K is downlink, K+1 charge,
    K+2 desaturate.
    """

    def __init__(
        self,
        cluster: ClusterLayout,
        scenario: ScenarioConfig,
        world: WorldData | None = None,
        reward_params: RewardParams = RewardParams(),
        params: EnvParams = EnvParams(),
        record_log: bool = True,
    ):
        self.cluster = cluster
        self.scenario = scenario
        self.world = world if world is not None else WorldData.bundled()
        self.reward_params = reward_params
        self.params = params
        self.record_log = record_log

        self.n_agents = cluster.n_agents
        self.dt = scenario.decision_interval_s
        period = cluster.satellites[0].elements.period_s
        self.n_steps = int(round(scenario.episode_orbits * period / self.dt))
        self.k_slots = params.k_slots
        self.n_actions = self.k_slots + 3
        self.action_downlink = self.k_slots
        self.action_charge = self.k_slots + 1
        self.action_desaturate = self.k_slots + 2

        self._geometry = _build_geometry(cluster, self.world, self.n_steps, self.dt, params)
        self.obs_dim = 7 + 4 * self.k_slots + 2 + 2
        self.global_state_dim = self.n_agents * (self.obs_dim + 5)

        self._rng: np.random.Generator | None = None
        self._seed: int | None = None

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed: int) -> list[np.ndarray]:
        self._seed = int(seed)
        self._rng = np.random.default_rng(self._seed)
        self._step_idx = 0
        self._done = False
        self._captured_by: list[int] = [-1] * len(self.world.aois)
        self._states: list[ResourceState] = []
        self._win_ptr = [0] * self.n_agents
        self._gs_ptr = [0] * self.n_agents
        self._slots: list[list[tuple[int, float, float]]] = [[] for _ in range(self.n_agents)]
        for sat in self.cluster.satellites:
            battery = sample_ranged(self.scenario.initial_battery, self._rng)
            storage = sample_ranged(self.scenario.initial_storage, self._rng)
            rw = tuple(
                sample_ranged(self.scenario.initial_rw_rpm, self._rng) for _ in range(3)
            )
            self._states.append(initial_state(sat.spec, battery, storage, rw))
        self._log_steps: list[dict] = []
        self._info_totals = {"captures": 0, "unique_captures": 0, "downlinked_gb": 0.0,
                             "failures": 0}
        self._min_battery_frac = min(
            st.battery_fraction(sat.spec)
            for st, sat in zip(self._states, self.cluster.satellites)
        )
        self._last_obs = self._build_observations()
        self._last_global = self._build_global_state()
        return self._last_obs

    def _require_live(self):
        if self._rng is None:
            raise RuntimeError("reset() must be called before stepping")
        if self._done:
            raise RuntimeError("episode is done; call reset()")

    # -- observations -------------------------------------------------------

    def _advance_pointers(self, t: float):
        for i in range(self.n_agents):
            wins = self._geometry[i].aoi_windows
            ptr = self._win_ptr[i]
            while ptr < len(wins) and wins[ptr][2] <= t:
                ptr += 1
            self._win_ptr[i] = ptr
            gs = self._geometry[i].gs_windows
            gptr = self._gs_ptr[i]
            while gptr < len(gs) and gs[gptr][1] <= t:
                gptr += 1
            self._gs_ptr[i] = gptr

    def _collect_slots(self, agent: int, t: float) -> list[tuple[int, float, float]]:
        wins = self._geometry[agent].aoi_windows
        slots = []
        ptr = self._win_ptr[agent]
        while ptr < len(wins) and len(slots) < self.k_slots:
            idx, start, end = wins[ptr]
            if end > t and self._captured_by[idx] < 0:
                slots.append((idx, start, end))
            ptr += 1
        return slots

    def _build_observations(self) -> list[np.ndarray]:
        t = self._step_idx * self.dt
        horizon = self.n_steps * self.dt
        self._advance_pointers(t)
        observations = []
        for i, sat in enumerate(self.cluster.satellites):
            state = self._states[i]
            spec = sat.spec
            obs = np.full(self.obs_dim, -1.0)
            obs[0] = state.battery_fraction(spec)
            obs[1] = 1.0 - state.storage_fraction(spec)
            obs[2:5] = np.clip(np.asarray(state.rw_speeds_rpm) / spec.rw_max_rpm, -1.0, 1.0)
            obs[5] = 1.0 if self._geometry[i].in_shadow[self._step_idx] else 0.0
            obs[6] = t / horizon
            slots = self._collect_slots(i, t)
            self._slots[i] = slots
            for k, (idx, start, end) in enumerate(slots):
                aoi = self.world.aois[idx]
                base = 7 + 4 * k
                obs[base] = max(start - t, 0.0) / horizon
                obs[base + 1] = min((end - max(start, t)) / _AOI_DURATION_SCALE_S, 1.0)
                obs[base + 2] = aoi.priority
                obs[base + 3] = aoi.cloud_cover
            gs = self._geometry[i].gs_windows
            gbase = 7 + 4 * self.k_slots
            if self._gs_ptr[i] < len(gs):
                start, end = gs[self._gs_ptr[i]]
                obs[gbase] = max(start - t, 0.0) / horizon
                obs[gbase + 1] = min((end - max(start, t)) / _GS_DURATION_SCALE_S, 1.0)
            obs[gbase + 2] = 1.0 if spec.payload is Payload.OPT else 0.0
            obs[gbase + 3] = 1.0 if spec.payload is Payload.SAR else 0.0
            observations.append(obs)
        return observations

    def _build_global_state(self) -> np.ndarray:
        parts = list(self._last_obs)
        for i, sat in enumerate(self.cluster.satellites):
            st = self._states[i]
            spec = sat.spec
            parts.append(
                np.array(
                    [st.battery_fraction(spec), st.storage_fraction(spec),
                     st.rw_speeds_rpm[0] / spec.rw_max_rpm,
                     st.rw_speeds_rpm[1] / spec.rw_max_rpm,
                     st.rw_speeds_rpm[2] / spec.rw_max_rpm]
                )
            )
        return np.concatenate(parts)

    @property
    def observations(self) -> list[np.ndarray]:
        return self._last_obs

    def global_state(self) -> np.ndarray:
        return self._last_global

    # -- stepping -----------------------------------------------------------

    def step(self, joint_action) -> StepResult:
        self._require_live()
        actions = [int(a) for a in joint_action]
        if len(actions) != self.n_agents:
            raise ValueError(f"expected {self.n_agents} actions, got {len(actions)}")
        for i, a in enumerate(actions):
            if not 0 <= a < self.n_actions:
                raise ValueError(
                    f"action {a} for agent {self.cluster.agent_names[i]} outside "
                    f"[0, {self.n_actions})"
                )

        t = self._step_idx * self.dt
        t_end = t + self.dt

        # Interpret tasking actions against the slots shown in the last
        # observation; infeasible tasking degrades to idle.
        intents: list[tuple[ActionClass, int | None]] = []
        for i, action in enumerate(actions):
            state = self._states[i]
            spec = self.cluster.satellites[i].spec
            if state.failed:
                intents.append((ActionClass.IDLE, None))
                continue
            if action < self.k_slots:
                feasible = False
                aoi_idx = None
                if action < len(self._slots[i]):
                    idx, start, end = self._slots[i][action]
                    fits = (
                        state.storage_used_gb + spec.capture_size_gb
                        <= spec.storage_capacity_gb
                    )
                    if start < t_end and end > t and self._captured_by[idx] < 0 and fits:
                        feasible = True
                        aoi_idx = idx
                intents.append((ActionClass.IMAGE, aoi_idx) if feasible
                               else (ActionClass.IDLE, None))
            elif action == self.action_downlink:
                gs = self._geometry[i].gs_windows
                ptr = self._gs_ptr[i]
                open_now = ptr < len(gs) and gs[ptr][0] < t_end and gs[ptr][1] > t
                intents.append((ActionClass.DOWNLINK, None) if open_now
                               else (ActionClass.IDLE, None))
            elif action == self.action_charge:
                intents.append((ActionClass.CHARGE, None))
            else:
                intents.append((ActionClass.DESATURATE, None))

        # Unique-capture conflict resolution: lowest agent index wins, the
        # loser's action degrades to idle.
        winners: dict[int, int] = {}
        for i, (cls, aoi_idx) in enumerate(intents):
            if cls is ActionClass.IMAGE and aoi_idx is not None:
                if aoi_idx not in winners:
                    winners[aoi_idx] = i
                else:
                    intents[i] = (ActionClass.IDLE, None)

        components: list[dict] = []
        step_reward = 0.0
        log_agents: list[dict] = []
        captures_this_step = 0
        downlinked_this_step = 0.0
        new_failures = 0

        for i, (effective, aoi_idx) in enumerate(intents):
            sat = self.cluster.satellites[i]
            spec = sat.spec
            state = self._states[i]
            was_failed = state.failed

            if was_failed:
                comps = {"branch": "inactive", "q": 0.0, "rho": 0.0, "delta": 0.0,
                         "c": 0.0, "failure": False, "reward": 0.0}
                components.append(comps)
                if self.record_log:
                    q_frozen = state.battery_fraction(spec)
                    log_agents.append(self._log_agent(i, actions[i], effective, comps,
                                                      state, 0.0, None,
                                                      PowerLedger(0, 0, 0, 0, 0),
                                                      q_prev=q_frozen))
                continue

            q_prev = state.battery_fraction(spec)
            in_shadow = bool(self._geometry[i].in_shadow[self._step_idx])
            state, ledger = step_power(
                spec, state, effective, in_shadow,
                self.params.noncharge_sun_incidence, self.dt,
            )
            gs_open = effective is ActionClass.DOWNLINK
            state, removed_gb, _ = step_storage(
                spec, state, effective, gs_open, self.dt,
                transmitter_derate=self.scenario.transmitter_derate,
            )
            if effective in (ActionClass.IMAGE, ActionClass.DOWNLINK):
                proxy = self.params.slew_rpm_per_action / self.dt
            else:
                proxy = self.params.desat_rpm_per_action / self.dt
            state = step_wheels(
                spec, state, effective, proxy, self.dt, self._rng,
                disturbance_scale=self.scenario.disturbance_scale,
            )

            captured = None
            if effective is ActionClass.IMAGE and aoi_idx is not None:
                aoi = self.world.aois[aoi_idx]
                self._captured_by[aoi_idx] = i
                captured = (aoi.priority, aoi.cloud_cover)
                captures_this_step += 1

            newly_failed = check_failure(spec, state)
            if newly_failed:
                state = replace(state, failed=True)
                new_failures += 1

            q_new = state.battery_fraction(spec)
            r, comps = reward_step(
                spec.payload, q_prev, q_new, removed_gb, captured, newly_failed,
                self.reward_params,
            )
            self._states[i] = state
            step_reward += r
            components.append(comps)
            downlinked_this_step += removed_gb
            self._min_battery_frac = min(self._min_battery_frac, q_new)
            if self.record_log:
                cap_id = self.world.aois[aoi_idx].id if captured is not None else None
                log_agents.append(self._log_agent(i, actions[i], effective, comps,
                                                  state, removed_gb, cap_id, ledger,
                                                  q_prev=q_prev))

        self._info_totals["captures"] += captures_this_step
        self._info_totals["unique_captures"] += captures_this_step
        self._info_totals["downlinked_gb"] += downlinked_this_step
        self._info_totals["failures"] += new_failures

        self._step_idx += 1
        done = self._step_idx >= self.n_steps
        if self.params.terminate_on_failure and any(s.failed for s in self._states):
            done = True
        self._done = done

        self._last_obs = self._build_observations()
        self._last_global = self._build_global_state()

        if self.record_log:
            self._log_steps.append(
                {
                    "step": self._step_idx - 1,
                    "t": t,
                    "actions": actions,
                    "agents": log_agents,
                    "reward": step_reward,
                }
            )

        info = dict(self._info_totals)
        info["min_battery_frac"] = self._min_battery_frac
        info["step"] = self._step_idx
        return StepResult(
            observations=self._last_obs,
            reward=step_reward,
            components=components,
            done=done,
            info=info,
        )

    def _log_agent(self, i, action, effective, comps, state, removed_gb,
                   captured_id, ledger: PowerLedger, q_prev: float):
        spec = self.cluster.satellites[i].spec
        return {
            "action": action,
            "effective": effective.value,
            "branch": comps["branch"],
            "q": comps["q"],
            "rho": comps["rho"],
            "delta": comps["delta"],
            "c": comps["c"],
            "failure": comps["failure"],
            "reward": comps["reward"],
            "q_prev": q_prev,
            "q_new": state.battery_fraction(spec),
            "dd_gb": removed_gb,
            "consumed_wh": ledger.consumed_wh,
            "generated_wh": ledger.generated_wh,
            "battery_frac": state.battery_fraction(spec),
            "storage_frac": state.storage_fraction(spec),
            "wheels_rpm": list(state.rw_speeds_rpm),
            "captured_aoi": captured_id,
        }

    # -- episode log --------------------------------------------------------

    def episode_log(self) -> dict:
        """Replayable record of the episode so far (meta + per-step entries)."""
        if not self.record_log:
            raise RuntimeError("environment was created with record_log=False")
        return {
            "meta": {
                "cluster": self.cluster.name,
                "scenario": self.scenario.to_dict(),
                "seed": self._seed,
                "n_agents": self.n_agents,
                "agent_names": list(self.cluster.agent_names),
                "payloads": [s.spec.payload.value for s in self.cluster.satellites],
                "alpha": self.reward_params.alpha,
                "beta": self.reward_params.beta,
                "aoi_path": self.world.aoi_path,
                "station_path": self.world.station_path,
                "complete": self._done,
            },
            "steps": self._log_steps,
        }

    # -- checkpoint support ---------------------------------------------------

    def get_state(self) -> dict:
        """Snapshot of all mutable episode state (JSON-serialisable)."""
        if self._rng is None:
            raise RuntimeError("reset() must be called before get_state()")
        return {
            "seed": self._seed,
            "step_idx": self._step_idx,
            "done": self._done,
            "captured_by": list(self._captured_by),
            "rng_state": self._rng.bit_generator.state,
            "min_battery_frac": self._min_battery_frac,
            "info_totals": dict(self._info_totals),
            "agents": [
                {
                    "battery_wh": st.battery_wh,
                    "storage_used_gb": st.storage_used_gb,
                    "rw_speeds_rpm": list(st.rw_speeds_rpm),
                    "failed": st.failed,
                }
                for st in self._states
            ],
        }

    def set_state(self, snapshot: dict) -> None:
        self._seed = snapshot["seed"]
        self._rng = np.random.default_rng(0)
        self._rng.bit_generator.state = snapshot["rng_state"]
        self._step_idx = snapshot["step_idx"]
        self._done = snapshot["done"]
        self._captured_by = list(snapshot["captured_by"])
        self._min_battery_frac = snapshot["min_battery_frac"]
        self._info_totals = dict(snapshot["info_totals"])
        self._states = [
            ResourceState(
                battery_wh=a["battery_wh"],
                storage_used_gb=a["storage_used_gb"],
                rw_speeds_rpm=tuple(a["rw_speeds_rpm"]),
                failed=a["failed"],
            )
            for a in snapshot["agents"]
        ]
        self._win_ptr = [0] * self.n_agents
        self._gs_ptr = [0] * self.n_agents
        self._slots = [[] for _ in range(self.n_agents)]
        self._log_steps = []
        self._last_obs = self._build_observations()
        self._last_global = self._build_global_state()

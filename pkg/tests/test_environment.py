import math
from dataclasses import replace

import numpy as np
import pytest

from satcluster.cluster import ClusterLayout, SatelliteConfig, cluster_preset
from satcluster.environment import (
    FAILURE_PENALTY,
    ClusterEnv,
    EnvParams,
    RewardParams,
    payload_suitability,
    recompose_reward,
    reward_step,
)
from satcluster.orbit import OrbitElements, position_eci, subsatellite_point
from satcluster.resources import Payload, SatelliteSpec
from satcluster.scenario import ScenarioConfig, scenario_preset
from satcluster.world import AreaOfInterest, GroundStation, WorldData

from conftest import run_random_episode


def make_track_world(priority=0.9, cloud=0.2, t_on_track=300.0, n_aois=1,
                     station_lat=None):
    """A world with AoIs directly on the default orbit track at a known time."""
    elements = OrbitElements(altitude_km=500.0, inclination_deg=40.0, raan_offset_deg=-75.0)
    aois = []
    for k in range(n_aois):
        t = t_on_track + 40.0 * k
        sub = subsatellite_point(position_eci(elements, t), t)
        aois.append(AreaOfInterest(f"t:{k}", sub, priority, cloud, "t"))
    stations = [GroundStation("gs", aois[0].location if station_lat is None
                              else aois[0].location, 10.0)]
    return WorldData(aois=aois, stations=stations)


def single_sat_cluster(payload=Payload.OPT, n=1, same_orbit=False):
    elements = OrbitElements(altitude_km=500.0, inclination_deg=40.0, raan_offset_deg=-75.0)
    sats = tuple(
        SatelliteConfig(f"sat-{i}", elements if same_orbit else
                        replace(elements, initial_phase_deg=5.0 * i),
                        SatelliteSpec(payload=payload))
        for i in range(n)
    )
    return ClusterLayout(name="custom", satellites=sats)


def step_until_slot_open(env, obs, agent=0):
    """Charge until the first capture slot's window is open, then return obs."""
    for _ in range(env.n_steps):
        if obs[agent][7] == 0.0 and obs[agent][8] > 0.0:
            return obs
        obs = env.step([env.action_charge] * env.n_agents).observations
    raise AssertionError("no capture window opened within the episode")


class TestReset:
    def test_easy_initial_conditions(self, easy_env):
        obs = easy_env.reset(seed=3)
        assert obs[0][0] == 1.0          # battery fraction
        assert obs[0][1] == 1.0          # storage free fraction
        assert tuple(obs[0][2:5]) == (0.0, 0.0, 0.0)

    def test_hard_initial_conditions(self, single_cluster, world):
        env = ClusterEnv(single_cluster, scenario_preset("hard"), world)
        obs = env.reset(seed=3)
        assert obs[0][0] == pytest.approx(0.85)
        assert obs[0][1] == pytest.approx(0.40)
        assert env.scenario.transmitter_derate == pytest.approx(0.7)

    def test_random_res_sampling_in_range(self, single_cluster, world):
        env = ClusterEnv(single_cluster, scenario_preset("easy-random-res"), world)
        for seed in range(5):
            obs = env.reset(seed=seed)
            assert 0.80 <= obs[0][0] <= 0.95
            assert 0.20 <= obs[0][1] <= 0.40   # storage used 60-80%
            assert np.all(np.abs(obs[0][2:5]) <= 0.5)   # wheels within 3000 rpm

    def test_same_seed_bitwise_identical(self, hetero_env):
        a = hetero_env.reset(seed=99)
        b = hetero_env.reset(seed=99)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_different_seed_differs_in_random_scenario(self, single_cluster, world):
        env = ClusterEnv(single_cluster, scenario_preset("hard-random-res"), world)
        a = env.reset(seed=1)[0].copy()
        b = env.reset(seed=2)[0].copy()
        assert not np.array_equal(a, b)


class TestStepSemantics:
    def test_all_charge_sunlit_nonpositive_reward(self, hetero_env):
        hetero_env.reset(seed=0)
        total = 0.0
        done = False
        while not done:
            result = hetero_env.step([hetero_env.action_charge] * 3)
            total += result.reward
            assert result.reward <= 0.0
            done = result.done
        assert total <= 0.0

    def test_out_of_range_action_rejected(self, easy_env):
        easy_env.reset(seed=0)
        with pytest.raises(ValueError, match="action"):
            easy_env.step([easy_env.n_actions])

    def test_wrong_arity_rejected(self, hetero_env):
        hetero_env.reset(seed=0)
        with pytest.raises(ValueError, match="expected 3 actions"):
            hetero_env.step([0])

    def test_step_after_done_rejected(self, easy_env):
        easy_env.reset(seed=0)
        for _ in range(easy_env.n_steps):
            easy_env.step([easy_env.action_charge])
        with pytest.raises(RuntimeError, match="done"):
            easy_env.step([easy_env.action_charge])

    def test_step_before_reset_rejected(self, single_cluster, world):
        env = ClusterEnv(single_cluster, scenario_preset("easy"), world)
        with pytest.raises(RuntimeError, match="reset"):
            env.step([0])

    def test_episode_length_about_one_orbit(self, easy_env):
        # ~5677 s orbit at 60 s decisions.
        assert easy_env.n_steps == 95

    def test_capture_gives_capture_branch(self):
        world = make_track_world(priority=0.9, cloud=0.2)
        env = ClusterEnv(single_sat_cluster(), scenario_preset("easy"), world)
        obs = env.reset(seed=0)
        step_until_slot_open(env, obs)
        result = env.step([0])
        comp = result.components[0]
        assert comp["branch"] == "capture"
        assert comp["q"] == pytest.approx(0.9)
        assert comp["c"] == pytest.approx(0.8)
        assert result.info["unique_captures"] == 1

    def test_infeasible_capture_degrades_to_power_only(self):
        world = make_track_world()
        env = ClusterEnv(single_sat_cluster(), scenario_preset("easy"), world)
        env.reset(seed=0)
        result = env.step([3])   # no window open at t=0 in this world
        assert result.components[0]["branch"] in ("power", "none")
        assert result.info["unique_captures"] == 0

    def test_unique_capture_conflict_lowest_index_wins(self):
        world = make_track_world(priority=0.9, cloud=0.2)
        cluster = single_sat_cluster(n=2, same_orbit=True)
        env = ClusterEnv(cluster, scenario_preset("easy"), world)
        obs = env.reset(seed=0)
        step_until_slot_open(env, obs)
        result = env.step([0, 0])   # both try the same single AoI
        b0, b1 = result.components[0]["branch"], result.components[1]["branch"]
        assert b0 == "capture"
        assert b1 in ("power", "none")
        assert result.info["unique_captures"] == 1
        # The same AoI cannot be captured again later.
        for _ in range(3):
            result = env.step([0, 0])
            assert result.info["unique_captures"] == 1

    def test_battery_failure_penalty_and_latch(self, single_cluster, world):
        scenario = ScenarioConfig(name="knife-edge", initial_battery=0.8005)
        env = ClusterEnv(single_cluster, scenario, world)
        env.reset(seed=0)
        result = env.step([env.action_desaturate])   # 1.5 Wh drain, no generation
        comp = result.components[0]
        assert comp["failure"] and comp["reward"] == FAILURE_PENALTY
        assert result.reward == FAILURE_PENALTY
        # Failed agent is inactive afterwards; episode continues to horizon.
        result = env.step([env.action_charge])
        assert result.components[0]["branch"] == "inactive"
        assert result.components[0]["reward"] == 0.0
        assert not result.done

    def test_terminate_on_failure_flag(self, single_cluster, world):
        scenario = ScenarioConfig(name="knife-edge", initial_battery=0.8005)
        env = ClusterEnv(single_cluster, scenario, world,
                         params=EnvParams(terminate_on_failure=True))
        env.reset(seed=0)
        result = env.step([env.action_desaturate])
        assert result.done

    def test_downlink_without_window_degrades(self):
        world = make_track_world()
        # Station at the AoI: no window open at t=0.
        env = ClusterEnv(single_sat_cluster(), scenario_preset("hard"), world)
        env.reset(seed=0)
        result = env.step([env.action_downlink])
        assert result.components[0]["delta"] == 0.0
        assert result.info["downlinked_gb"] == 0.0


class TestObservations:
    def test_entries_bounded_and_finite(self, hetero_env):
        rng = np.random.default_rng(5)
        obs = hetero_env.reset(seed=7)
        done = False
        while not done:
            for o in obs:
                assert np.all(np.isfinite(o))
                assert np.all(o >= -1.0 - 1e-12) and np.all(o <= 1.0 + 1e-12)
            result = hetero_env.step(
                [int(rng.integers(hetero_env.n_actions)) for _ in range(3)]
            )
            obs = result.observations
            done = result.done

    def test_wheel_normalisation(self, single_cluster, world):
        scenario = ScenarioConfig(name="spin", initial_rw_rpm=3000.0)
        env = ClusterEnv(single_cluster, scenario, world)
        obs = env.reset(seed=0)
        assert np.allclose(obs[0][2:5], 0.5)

    def test_payload_one_hot_differs_across_payloads(self, hetero_env):
        obs = hetero_env.reset(seed=0)
        payload_features = [tuple(o[-2:]) for o in obs]
        assert payload_features[0] == (1.0, 0.0)   # OPT
        assert payload_features[2] == (0.0, 1.0)   # SAR

    def test_empty_slots_use_sentinel(self):
        world = make_track_world()
        env = ClusterEnv(single_sat_cluster(), scenario_preset("easy"), world)
        obs = env.reset(seed=0)
        # One AoI means slots 1..K-1 are empty from the start.
        assert np.all(obs[0][11:7 + 4 * env.k_slots] == -1.0)

    def test_observation_never_exposes_other_agents_resources(self, hetero_cluster, world):
        env = ClusterEnv(hetero_cluster, scenario_preset("easy"), world)
        env.reset(seed=0)
        snapshot = env.get_state()
        obs_before = [o.copy() for o in env.observations]
        snapshot["agents"][1]["battery_wh"] = 123.0
        snapshot["agents"][1]["storage_used_gb"] = 321.0
        env.set_state(snapshot)
        obs_after = env.observations
        assert np.array_equal(obs_before[0], obs_after[0])
        assert np.array_equal(obs_before[2], obs_after[2])
        assert not np.array_equal(obs_before[1], obs_after[1])

    def test_global_state_contains_all_agents(self, hetero_env):
        hetero_env.reset(seed=0)
        gs = hetero_env.global_state()
        assert gs.shape == (hetero_env.global_state_dim,)
        assert hetero_env.global_state_dim == 3 * (hetero_env.obs_dim + 5)


class TestRewardFunction:
    P = RewardParams(alpha=1.0, beta=0.1)

    def test_capture_branch_direct_substitution(self):
        # q=0.8, sigma=0.2, OPT, rho=0.05 -> 0.8 - 0.05 + 0.8 = 1.55
        r, comps = reward_step(Payload.OPT, 0.6, 0.5, 0.0, (0.8, 0.2), False, self.P)
        assert comps["rho"] == pytest.approx(0.05, abs=1e-12)
        assert r == pytest.approx(1.55, abs=1e-12)

    def test_capture_sar_under_clear_sky_penalised(self):
        r, comps = reward_step(Payload.SAR, 0.6, 0.5, 0.0, (0.8, 0.2), False, self.P)
        assert comps["c"] == pytest.approx(-0.8, abs=1e-12)

    def test_no_consumption_no_event_zero(self):
        r, comps = reward_step(Payload.OPT, 0.7, 0.7, 0.0, None, False, self.P)
        assert r == 0.0 and comps["branch"] == "none"

    def test_charging_step_is_not_power_branch(self):
        r, comps = reward_step(Payload.OPT, 0.7, 0.8, 0.0, None, False, self.P)
        assert r == 0.0 and comps["branch"] == "none"

    def test_downlink_branch(self):
        # dD=2 GB, beta=0.1, rho=0.01 -> -0.01 + 0.2 = 0.19
        r, comps = reward_step(Payload.OPT, 0.52, 0.5, 2.0, None, False, self.P)
        assert comps["rho"] == pytest.approx(0.01, abs=1e-12)
        assert r == pytest.approx(0.19, abs=1e-12)

    def test_failure_branch_dominates(self):
        r, comps = reward_step(Payload.OPT, 0.9, 0.3, 2.0, (0.9, 0.1), True, self.P)
        assert r == FAILURE_PENALTY and comps["branch"] == "failure"

    def test_suitability_branches(self):
        assert payload_suitability(Payload.OPT, 0.2) == pytest.approx(0.8)
        assert payload_suitability(Payload.SAR, 0.2) == pytest.approx(-0.8)
        assert payload_suitability(Payload.OPT, 0.7) == pytest.approx(-0.7)
        assert payload_suitability(Payload.SAR, 0.7) == pytest.approx(0.7)

    def test_components_recompose_over_random_episode(self, hetero_env):
        rng = np.random.default_rng(17)
        hetero_env.reset(seed=11)
        done = False
        while not done:
            result = hetero_env.step(
                [int(rng.integers(hetero_env.n_actions)) for _ in range(3)]
            )
            assert result.reward == sum(c["reward"] for c in result.components)
            for comp in result.components:
                assert recompose_reward(comp) == comp["reward"]
            done = result.done


class TestHeterogeneity:
    def test_opposite_suitability_via_env_steps(self):
        for payload, expected_c in ((Payload.OPT, 0.8), (Payload.SAR, -0.8)):
            world = make_track_world(priority=0.6, cloud=0.2)
            env = ClusterEnv(single_sat_cluster(payload=payload),
                             scenario_preset("easy"), world)
            obs = env.reset(seed=0)
            step_until_slot_open(env, obs)
            result = env.step([0])
            assert result.components[0]["branch"] == "capture"
            assert result.components[0]["c"] == pytest.approx(expected_c, abs=1e-12)

    def test_sign_swap_above_half_cloud(self):
        for payload, expected_c in ((Payload.OPT, -0.7), (Payload.SAR, 0.7)):
            world = make_track_world(priority=0.6, cloud=0.7)
            env = ClusterEnv(single_sat_cluster(payload=payload),
                             scenario_preset("easy"), world)
            obs = env.reset(seed=0)
            step_until_slot_open(env, obs)
            result = env.step([0])
            assert result.components[0]["c"] == pytest.approx(expected_c, abs=1e-12)


class TestDeterminismAndState:
    def test_replay_equality(self, hetero_cluster, world):
        env = ClusterEnv(hetero_cluster, scenario_preset("hard-random-res"), world)
        rng = np.random.default_rng(2)
        r1, res1 = run_random_episode(env, rng, seed=5)
        rng = np.random.default_rng(2)
        r2, res2 = run_random_episode(env, rng, seed=5)
        assert r1 == r2
        assert res1.info == res2.info

    def test_state_roundtrip_continues_identically(self, hetero_cluster, world):
        env = ClusterEnv(hetero_cluster, scenario_preset("easy-random-res"), world)
        env.reset(seed=8)
        rng = np.random.default_rng(0)
        acts = [[int(rng.integers(env.n_actions)) for _ in range(3)] for _ in range(30)]
        for a in acts[:10]:
            env.step(a)
        snap = env.get_state()
        rest_a = [env.step(a) for a in acts[10:]]
        env2 = ClusterEnv(hetero_cluster, scenario_preset("easy-random-res"), world)
        env2.reset(seed=8)
        env2.set_state(snap)
        rest_b = [env2.step(a) for a in acts[10:]]
        for ra, rb in zip(rest_a, rest_b):
            assert ra.reward == rb.reward
            for oa, ob in zip(ra.observations, rb.observations):
                assert np.array_equal(oa, ob)

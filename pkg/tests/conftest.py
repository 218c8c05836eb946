import numpy as np
import pytest

from satcluster.cluster import cluster_preset
from satcluster.environment import ClusterEnv, EnvParams, RewardParams
from satcluster.scenario import scenario_preset
from satcluster.world import WorldData


@pytest.fixture(scope="session")
def world():
    return WorldData.bundled()


@pytest.fixture(scope="session")
def single_cluster():
    return cluster_preset("single")


@pytest.fixture(scope="session")
def hetero_cluster():
    return cluster_preset("heterogeneous-2opt-1sar")


@pytest.fixture()
def easy_env(single_cluster, world):
    return ClusterEnv(single_cluster, scenario_preset("easy"), world)


@pytest.fixture()
def hetero_env(hetero_cluster, world):
    return ClusterEnv(hetero_cluster, scenario_preset("easy"), world)


def run_random_episode(env, policy_rng, seed):
    env.reset(seed=seed)
    total = 0.0
    done = False
    result = None
    while not done:
        actions = [int(policy_rng.integers(env.n_actions)) for _ in range(env.n_agents)]
        result = env.step(actions)
        total += result.reward
        done = result.done
    return total, result

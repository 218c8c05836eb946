"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Learning-based criteria run real desk-scale training and are
the slowest part of the test run (a few minutes total).
"""

import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest

from satcluster.cluster import cluster_preset
from satcluster.environment import ClusterEnv, RewardParams
from satcluster.experiment import ExperimentConfig, run_training
from satcluster.gae import compute_gae
from satcluster.losses import (
    entropy_bonus,
    policy_log_probs,
    ppo_surrogate,
    total_loss,
    value_loss,
)
from satcluster.nn import MLPSpec, init_params
from satcluster.policies import PolicySet
from satcluster.resources import Payload
from satcluster.rollout import RolloutCollector, RolloutConfig, evaluate_policy
from satcluster.scenario import SCENARIO_NAMES, scenario_preset
from satcluster.trajectory import TrajectoryBatch
from satcluster.trust_region import (
    conjugate_gradient,
    fisher_vector_product,
    natural_step_size,
)
from satcluster.updates import AlgoConfig, happo_update, hatrpo_update, mappo_update, ppo_update
from satcluster.world import WorldData

from test_gae import brute_force_gae
from test_losses import fd_grad, make_case, rel_err, ACTOR, CRITIC
from test_trust_region import explicit_fisher, TINY
from test_updates import build_policies, synthetic_batch, params_equal
from test_environment import make_track_world, single_sat_cluster, step_until_slot_open


def report(tag: str, ok: bool, detail: str = ""):
    print(f"ACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{tag} failed: {detail}"


@pytest.fixture(scope="module")
def world():
    return WorldData.bundled()


def uniform_random_policies(env) -> PolicySet:
    """Zero-weight actors: exactly uniform action sampling."""
    policies = PolicySet.build([env.obs_dim] * env.n_agents, env.n_actions,
                               env.global_state_dim, True, seed=0)
    for actor in policies.actors:
        actor.params = np.zeros_like(actor.params)
    return policies


def test_c01_reward_oracle_equivalence(world):
    """1000 random steps per scenario: environment cumulative reward equals
    an independent branch-by-branch recomputation from the raw log."""
    start = time.perf_counter()
    cluster = cluster_preset("heterogeneous-2opt-1sar")
    payloads = [s.spec.payload for s in cluster.satellites]
    sigma_of = {a.id: a.cloud_cover for a in world.aois}
    prio_of = {a.id: a.priority for a in world.aois}
    for scenario_name in SCENARIO_NAMES:
        env = ClusterEnv(cluster, scenario_preset(scenario_name), world)
        rng = np.random.default_rng(hash(scenario_name) % 2**32)
        env_total = 0.0
        logs = []
        steps_done = 0
        episode = 0
        while steps_done < 1000:
            env.reset(seed=1000 + episode)
            done = False
            while not done and steps_done < 1000:
                res = env.step([int(rng.integers(env.n_actions)) for _ in range(3)])
                env_total += res.reward
                steps_done += 1
                done = res.done
            logs.append(env.episode_log())
            episode += 1

        alpha = env.reward_params.alpha
        beta = env.reward_params.beta
        oracle_total = 0.0
        for log in logs:
            for step in log["steps"]:
                for i, agent in enumerate(step["agents"]):
                    if agent["branch"] == "inactive":
                        continue
                    rho = alpha * (agent["q_prev"] - agent["q_new"]) * (1.0 - agent["q_new"])
                    if agent["failure"]:
                        oracle_total += -100.0
                    elif agent["captured_aoi"] is not None:
                        sigma = sigma_of[agent["captured_aoi"]]
                        if payloads[i] is Payload.SAR:
                            c = (-1.0 + sigma) if sigma < 0.5 else sigma
                        else:
                            c = (1.0 - sigma) if sigma < 0.5 else -sigma
                        oracle_total += prio_of[agent["captured_aoi"]] - rho + c
                    elif agent["dd_gb"] > 0.0:
                        oracle_total += -rho + beta * agent["dd_gb"]
                    elif agent["q_prev"] - agent["q_new"] > 0.0:
                        oracle_total += -rho
        assert abs(env_total - oracle_total) <= 1e-9, scenario_name
    elapsed = time.perf_counter() - start
    report("C1 reward-oracle", elapsed < 60.0,
           f"(4 scenarios x 1000 steps, exact to 1e-9, {elapsed:.1f}s)")


def test_c02_gradient_suite():
    """Analytic gradients of surrogate, value, entropy and total losses vs
    central finite differences: 100 random cases, rel err <= 1e-4."""
    start = time.perf_counter()
    assert ACTOR.n_params <= 200 and CRITIC.n_params <= 200
    rng = np.random.default_rng(0)
    checked = 0
    for case in range(25):
        params, obs, actions, old, adv = make_case(case)
        _, grad, _ = ppo_surrogate(ACTOR, params, obs, actions, old, adv, 0.2)
        fd = fd_grad(lambda p: ppo_surrogate(ACTOR, p, obs, actions, old, adv, 0.2)[0],
                     params)
        assert rel_err(grad, fd) <= 1e-4
        checked += 1
    for case in range(25):
        params = init_params(ACTOR, np.random.default_rng(1000 + case))
        obs = np.random.default_rng(case).standard_normal((6, ACTOR.in_dim))
        _, grad = entropy_bonus(ACTOR, params, obs)
        fd = fd_grad(lambda p: entropy_bonus(ACTOR, p, obs)[0], params)
        assert rel_err(grad, fd) <= 1e-4
        checked += 1
    for case in range(25):
        r = np.random.default_rng(2000 + case)
        params = init_params(CRITIC, r)
        states = r.standard_normal((6, CRITIC.in_dim))
        targets = r.standard_normal(6)
        _, grad = value_loss(CRITIC, params, states, targets)
        fd = fd_grad(lambda p: value_loss(CRITIC, p, states, targets)[0], params)
        assert rel_err(grad, fd) <= 1e-4
        checked += 1
    for case in range(25):
        r = np.random.default_rng(3000 + case)
        actor_params, obs, actions, old, adv = make_case(3000 + case)
        critic_params = init_params(CRITIC, r)
        states = r.standard_normal((len(actions), CRITIC.in_dim))
        targets = r.standard_normal(len(actions))
        args = (obs, actions, old, adv, states, targets, 0.2, 0.5, 0.01)
        _, ga, gc = total_loss(ACTOR, actor_params, CRITIC, critic_params, *args)
        fa = fd_grad(lambda p: total_loss(ACTOR, p, CRITIC, critic_params, *args)[0],
                     actor_params)
        fc = fd_grad(lambda p: total_loss(ACTOR, actor_params, CRITIC, p, *args)[0],
                     critic_params)
        assert rel_err(ga, fa) <= 1e-4 and rel_err(gc, fc) <= 1e-4
        checked += 1
    elapsed = time.perf_counter() - start
    report("C2 gradient-suite", checked == 100 and elapsed < 120.0,
           f"({checked} cases, {elapsed:.1f}s)")


def test_c03_trust_region_machinery():
    rng = np.random.default_rng(0)
    # (a) Fisher-vector products vs the explicitly assembled Fisher.
    assert TINY.n_params <= 64
    max_diff = 0.0
    for seed in range(3):
        r = np.random.default_rng(seed)
        params = init_params(TINY, r)
        obs = r.standard_normal((8, TINY.in_dim))
        hess = explicit_fisher(TINY, params, obs)
        for _ in range(3):
            v = r.standard_normal(len(params))
            diff = np.max(np.abs(fisher_vector_product(TINY, params, obs, v, 0.0) - hess @ v))
            max_diff = max(max_diff, diff)
    assert max_diff <= 1e-6
    # (b) CG vs direct solve on a random SPD 20x20 system.
    a = rng.standard_normal((20, 20))
    spd = a @ a.T + 20 * np.eye(20)
    g = rng.standard_normal(20)
    solution = conjugate_gradient(lambda v: spd @ v, g, max_iterations=100, tol=1e-13)
    direct = np.linalg.solve(spd, g)
    cg_err = np.linalg.norm(solution.solution - direct) / np.linalg.norm(direct)
    assert cg_err <= 1e-8
    # (c) Closed-form step scale.
    alpha = natural_step_size(0.01, 0.08)
    assert alpha == pytest.approx(0.5, abs=1e-12)
    report("C3 trust-region", True,
           f"(FVP max diff {max_diff:.2e}, CG rel err {cg_err:.2e}, alpha=0.5)")


def test_c04_kl_certificate(world):
    """50 HATRPO updates on the easy heterogeneous cluster: every accepted
    step must respect the trust radius; >=95% within delta, 100% within
    1.5*delta."""
    start = time.perf_counter()
    cluster = cluster_preset("heterogeneous-2opt-1sar")
    cfg = AlgoConfig()
    collector = RolloutCollector(
        cluster, scenario_preset("easy"),
        RolloutConfig(num_envs=6, steps_per_env=95, seed=0), world=world,
    )
    env = collector.envs[0]
    policies = PolicySet.build([env.obs_dim] * 3, env.n_actions, env.global_state_dim,
                               shared_critic=False, seed=0)
    kls = []
    accepted_count = 0
    total_steps_attempted = 0
    for update in range(50):
        batch, _ = collector.collect(policies)
        metrics = hatrpo_update(policies, batch, cfg, update_seed=update)
        for agent_stats in metrics["agents"]:
            total_steps_attempted += 1
            if agent_stats["accepted"]:
                accepted_count += 1
                kls.append(agent_stats["kl"])
    kls = np.array(kls)
    within_delta = float(np.mean(kls <= cfg.trust_radius))
    within_slack = float(np.mean(kls <= 1.5 * cfg.trust_radius))
    elapsed = time.perf_counter() - start
    ok = (len(kls) >= 30 and within_delta >= 0.95 and within_slack == 1.0
          and elapsed < 1200.0)
    report("C4 kl-certificate", ok,
           f"({accepted_count}/{total_steps_attempted} accepted, "
           f"{within_delta:.0%} within delta, {within_slack:.0%} within 1.5x, "
           f"{elapsed:.0f}s)")


def test_c05_single_agent_reductions():
    cfg = AlgoConfig(epochs=3, minibatches=2)
    # MAPPO(1) == PPO bit-for-bit.
    a, b = build_policies(1, True), build_policies(1, True)
    batch = synthetic_batch(a)
    ppo_update(a, batch, cfg, update_seed=7)
    mappo_update(b, batch, cfg, update_seed=7)
    mappo_ok = params_equal(a, b)
    # HAPPO(1) == PPO bit-for-bit (per-agent critic path).
    c, d = build_policies(1, True), build_policies(1, False)
    batch = synthetic_batch(c)
    ppo_update(c, batch, cfg, update_seed=11)
    happo_update(d, batch, cfg, update_seed=11)
    happo_ok = params_equal(c, d)
    # HAPPO compound flag with neutral ratios == flag off.
    from satcluster.seeding import rng_for
    order = rng_for(13, "permutation").permutation(2)
    first = int(order[0])
    outs = []
    for compound in (True, False):
        pol = build_policies(2, False, seed=2)
        pol.critics[first].params = np.zeros_like(pol.critics[first].params)
        raw = synthetic_batch(pol, seed=3)
        zero = TrajectoryBatch(raw.observations, raw.actions, raw.log_probs,
                               np.zeros_like(raw.rewards), raw.dones,
                               raw.global_states, raw.final_global_states)
        happo_update(pol, zero, AlgoConfig(epochs=2, minibatches=2, entropy_coeff=0.0,
                                           normalize_advantage=False,
                                           compound_ratios=compound), update_seed=13)
        outs.append(pol)
    neutral_ok = all(
        np.array_equal(outs[0].actors[i].params, outs[1].actors[i].params)
        for i in range(2)
    )
    report("C5 reductions", mappo_ok and happo_ok and neutral_ok,
           f"(mappo={mappo_ok}, happo={happo_ok}, neutral-compound={neutral_ok})")


def test_c06_desk_scale_learning(world):
    """PPO, single optical satellite, easy scenario, 100k env steps, 3 seeds:
    final argmax eval must reach at least 3x the random-policy baseline."""
    start = time.perf_counter()
    cluster = cluster_preset("single")
    probe = ClusterEnv(cluster, scenario_preset("easy"), world, record_log=False)
    baseline, _ = evaluate_policy(
        uniform_random_policies(probe), cluster, scenario_preset("easy"),
        episodes=100, seed=77, mode="sample", world=world, record=False,
    )
    config = ExperimentConfig(algo="ppo", cluster="single", scenario="easy",
                              seeds=(0, 1, 2), total_steps=100_000, num_envs=20,
                              steps_per_env=95, eval_episodes=10)
    finals = []
    for seed in config.seeds:
        summary = run_training(config, seed, Path("/tmp/satcluster-accept-c6") / str(seed),
                               quiet=True)
        finals.append(summary["mean_return"])
    trained_mean = float(np.mean(finals))
    threshold = 3.0 * baseline.mean_return
    elapsed = time.perf_counter() - start
    ok = trained_mean >= threshold and elapsed < 1800.0
    report("C6 desk-scale-learning", ok,
           f"(trained {trained_mean:.2f} vs 3x baseline {threshold:.2f} "
           f"[baseline {baseline.mean_return:.2f}], {elapsed:.0f}s)")


SMALL_BUDGET = dict(total_steps=19_000, num_envs=10, steps_per_env=95, eval_episodes=5)


def test_c07_scenario_ordering(world):
    """Matched PPO runs: easy beats hard; random-resource variants spread
    across seeds more than their fixed counterparts."""
    start = time.perf_counter()
    finals = {}
    for scenario in SCENARIO_NAMES:
        config = ExperimentConfig(algo="ppo", cluster="single", scenario=scenario,
                                  seeds=(0, 1, 2), **SMALL_BUDGET)
        finals[scenario] = [
            run_training(config, seed, Path("/tmp/satcluster-accept-c7") / scenario / str(seed),
                         quiet=True)["mean_return"]
            for seed in config.seeds
        ]
    easy, hard = np.mean(finals["easy"]), np.mean(finals["hard"])
    std_fixed = np.std(finals["easy"] + finals["hard"])
    std_random = np.std(finals["easy-random-res"] + finals["hard-random-res"])
    rr_easy = np.std(finals["easy-random-res"])
    rr_hard = np.std(finals["hard-random-res"])
    elapsed = time.perf_counter() - start
    ok = (easy > hard) and rr_easy > 0 and rr_hard > 0 and std_random > std_fixed
    report("C7 scenario-ordering", ok,
           f"(easy {easy:.2f} > hard {hard:.2f}; std random {std_random:.2f} > "
           f"fixed {std_fixed:.2f}, {elapsed:.0f}s)")


def test_c08_cluster_benefit(world):
    """Heterogeneous 3-satellite MAPPO beats single-satellite PPO at a
    matched per-agent step budget on easy."""
    start = time.perf_counter()
    ppo_cfg = ExperimentConfig(algo="ppo", cluster="single", scenario="easy",
                               seeds=(0,), **SMALL_BUDGET)
    mappo_cfg = ExperimentConfig(algo="mappo", cluster="heterogeneous-2opt-1sar",
                                 scenario="easy", seeds=(0,), **SMALL_BUDGET)
    ppo_ret = run_training(ppo_cfg, 0, Path("/tmp/satcluster-accept-c8/ppo"),
                           quiet=True)["mean_return"]
    mappo_ret = run_training(mappo_cfg, 0, Path("/tmp/satcluster-accept-c8/mappo"),
                             quiet=True)["mean_return"]
    elapsed = time.perf_counter() - start
    report("C8 cluster-benefit", mappo_ret > ppo_ret,
           f"(mappo {mappo_ret:.2f} > ppo {ppo_ret:.2f}, {elapsed:.0f}s)")


def test_c09_heterogeneity_semantics():
    """Targeted env steps: payload-suitability signs per cloud cover."""
    observed = {}
    for payload in (Payload.OPT, Payload.SAR):
        for sigma in (0.2, 0.7):
            world = make_track_world(priority=0.6, cloud=sigma)
            env = ClusterEnv(single_sat_cluster(payload=payload),
                             scenario_preset("easy"), world)
            obs = env.reset(seed=0)
            step_until_slot_open(env, obs)
            result = env.step([0])
            assert result.components[0]["branch"] == "capture"
            observed[(payload.value, sigma)] = result.components[0]["c"]
    ok = (observed[("OPT", 0.2)] == pytest.approx(0.8)
          and observed[("SAR", 0.2)] == pytest.approx(-0.8)
          and observed[("OPT", 0.7)] == pytest.approx(-0.7)
          and observed[("SAR", 0.7)] == pytest.approx(0.7))
    report("C9 heterogeneity", ok, f"({observed})")


def test_c10_determinism_and_persistence(tmp_path):
    """Same seed -> identical metrics rows (wall-clock column aside, which
    cannot be byte-reproducible); checkpoint resume after a simulated crash
    continues bit-exactly."""
    config = ExperimentConfig(algo="ppo", cluster="single", scenario="easy", seeds=(0,),
                              total_steps=4 * 3 * 60, num_envs=3, steps_per_env=60,
                              eval_episodes=2, checkpoint_every=1)
    run_training(config, 0, tmp_path / "a", quiet=True)
    run_training(config, 0, tmp_path / "b", quiet=True)
    rows_a = list(csv.reader(open(tmp_path / "a/metrics.csv")))
    rows_b = list(csv.reader(open(tmp_path / "b/metrics.csv")))
    deterministic = [r[:-1] for r in rows_a] == [r[:-1] for r in rows_b]
    ckpt_a = (tmp_path / "a/checkpoint.bin").read_bytes()

    # Simulated crash after 2 of 4 updates, then resume.
    from satcluster import experiment as exp_mod
    real = exp_mod.updater_for
    calls = {"n": 0}

    def crashing(algo):
        updater = real(algo)

        def wrapped(*args, **kwargs):
            if calls["n"] == 2:
                raise KeyboardInterrupt
            calls["n"] += 1
            return updater(*args, **kwargs)

        return wrapped

    exp_mod.updater_for = crashing
    try:
        with pytest.raises(KeyboardInterrupt):
            run_training(config, 0, tmp_path / "c", quiet=True)
    finally:
        exp_mod.updater_for = real
    run_training(config, 0, tmp_path / "c", resume=True, quiet=True)
    rows_c = list(csv.reader(open(tmp_path / "c/metrics.csv")))
    resumed = [r[:-1] for r in rows_c] == [r[:-1] for r in rows_a]
    bit_exact = (tmp_path / "c/checkpoint.bin").read_bytes() == ckpt_a
    report("C10 determinism-persistence", deterministic and resumed and bit_exact,
           f"(metrics deterministic={deterministic}, resume rows={resumed}, "
           f"checkpoint bit-exact={bit_exact})")


def test_c11_gae_brute_force():
    rng = np.random.default_rng(0)
    worst = 0.0
    for trial in range(100):
        t_n = int(rng.integers(1, 33))
        rewards = rng.standard_normal(t_n)
        values = rng.standard_normal(t_n)
        bootstrap = rng.standard_normal()
        dones = (rng.random(t_n) < 0.15).astype(float)
        gamma = float(rng.uniform(0.8, 1.0))
        lam = float(rng.uniform(0.0, 1.0))
        adv, _ = compute_gae(rewards, values, np.array([bootstrap]), dones, gamma, lam)
        oracle = brute_force_gae(rewards, values, bootstrap, dones, gamma, lam)
        worst = max(worst, float(np.max(np.abs(adv[0] - oracle))))
    report("C11 gae-brute-force", worst <= 1e-10, f"(100 trials, max diff {worst:.2e})")

"""Training loop: returns oracle, rollout determinism, update gradients
against finite differences, linearity properties, and full-run determinism."""

import numpy as np
import pytest

from rts_rep_lab.a2c import (Hyperparams, Trajectory, compute_returns,
                             episode_loss, head_layout_for, loss_and_grads,
                             make_networks, rollout, train, train_run, update)
from rts_rep_lab.encoding import Mode
from rts_rep_lab.env import EnvConfig, HarvestEnv
from rts_rep_lab.neural import (AdamState, HeadLayout, Mlp,
                                head_distributions, joint_log_prob)

from test_neural import finite_difference_grads, max_relative_error


def brute_force_returns(rewards, gamma):
    """O(T^2) oracle: G_t = sum_k gamma^k r_{t+k}."""
    T = len(rewards)
    return np.array([sum(gamma ** k * rewards[t + k] for k in range(T - t))
                     for t in range(T)])


def toy_trajectory(rng, n_obs=10, T=3, n_heads=2, head_size=4):
    obs = rng.normal(size=(T, n_obs))
    indices = rng.integers(0, head_size, size=(T, n_heads))
    rewards = rng.uniform(0, 10, size=T)
    return Trajectory(observations=obs, indices=indices, rewards=rewards,
                      logits=np.zeros((T, n_heads * head_size)))


class TestComputeReturns:
    def test_frozen_example(self):
        got = compute_returns(np.array([0.0, 0.0, 10.0]), 0.99)
        assert np.allclose(got, [9.801, 9.9, 10.0], atol=1e-12)

    def test_gamma_near_zero_keeps_raw_rewards(self):
        rewards = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(compute_returns(rewards, 1e-300), rewards)

    def test_zero_rewards_give_zero_returns(self):
        assert np.array_equal(compute_returns(np.zeros(50), 0.99), np.zeros(50))

    def test_matches_brute_force_on_random_sequences(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            T = int(rng.integers(1, 40))
            rewards = rng.uniform(-5, 15, size=T)
            gamma = float(rng.uniform(0.5, 0.999))
            fast = compute_returns(rewards, gamma)
            slow = brute_force_returns(rewards, gamma)
            assert np.max(np.abs(fast - slow)) < 1e-9


class TestRollout:
    def test_full_episode_with_rewards_in_range(self):
        cfg = EnvConfig(map="4x4", mode=Mode.GLOBAL, episode_length=200)
        hp = Hyperparams(total_steps=200, episode_length=200)
        rng = np.random.default_rng(1)
        policy, _ = make_networks(cfg, hp, rng)
        traj = rollout(HarvestEnv(cfg), policy, head_layout_for(cfg), rng)
        assert traj.steps == 200
        assert set(np.unique(traj.rewards)) <= {0.0, 10.0, 20.0}
        assert traj.observations.shape == (200, 560)
        assert traj.indices.shape == (200, 4)

    def test_same_seed_gives_identical_trajectories(self):
        cfg = EnvConfig(map="4x4", mode=Mode.LOCAL, window=1,
                        episode_length=100)
        hp = Hyperparams(total_steps=100, episode_length=100)

        def run():
            rng = np.random.default_rng(3)
            policy, _ = make_networks(cfg, hp, rng)
            return rollout(HarvestEnv(cfg), policy, head_layout_for(cfg), rng)

        t1, t2 = run(), run()
        assert np.array_equal(t1.indices, t2.indices)
        assert np.array_equal(t1.rewards, t2.rewards)
        assert np.array_equal(t1.observations, t2.observations)
        assert np.array_equal(t1.logits, t2.logits)

    def test_local_mode_uses_two_index_actions(self):
        cfg = EnvConfig(map="4x4", mode=Mode.LOCAL, window=1,
                        episode_length=60)
        hp = Hyperparams(total_steps=60, episode_length=60)
        rng = np.random.default_rng(5)
        policy, _ = make_networks(cfg, hp, rng)
        traj = rollout(HarvestEnv(cfg), policy, head_layout_for(cfg), rng)
        assert traj.indices.shape == (60, 2)
        assert traj.observations.shape == (60, 360)


class TestLossAndGrads:
    def test_gradient_matches_finite_differences_on_toy_episode(self):
        """Full A2C loss (advantages pinned) against central differences."""
        rng = np.random.default_rng(7)
        traj = toy_trajectory(rng, n_obs=10, T=3)
        hp = Hyperparams(total_steps=2000, episode_length=2000)
        layout = HeadLayout((4, 4))
        policy = Mlp.create(rng, 10, 8, n_hidden=6, out_scale=0.5)
        value = Mlp.create(rng, 10, 1, n_hidden=6, out_scale=0.5)
        returns = compute_returns(traj.rewards, hp.gamma)

        _, pol_grads, val_grads, _ = loss_and_grads(
            policy, value, traj, returns, hp, layout)
        advantages = returns - value.forward(traj.observations)[0][:, 0]

        def loss():
            return episode_loss(policy, value, traj, returns, advantages,
                                hp, layout)

        numeric = finite_difference_grads(loss, policy.params() + value.params())
        assert max_relative_error(pol_grads + val_grads, numeric) < 1e-4

    def test_zero_advantage_zero_eta_freezes_the_policy(self):
        rng = np.random.default_rng(9)
        traj = toy_trajectory(rng, T=4)
        traj.rewards[:] = 0.0  # G = 0 everywhere
        hp = Hyperparams(eta=0.0, total_steps=2000, episode_length=2000)
        layout = HeadLayout((4, 4))
        policy = Mlp.create(rng, 10, 8, n_hidden=6)
        value = Mlp.create(rng, 10, 1, n_hidden=6)
        value.w2[:] = 0.0
        value.b2[:] = 0.0  # v = 0, so A = G - v = 0 and G - v = 0
        returns = compute_returns(traj.rewards, hp.gamma)
        _, pol_grads, val_grads, _ = loss_and_grads(
            policy, value, traj, returns, hp, layout)
        for g in pol_grads + val_grads:
            assert np.array_equal(g, np.zeros_like(g))

        before = [p.copy() for p in policy.params() + value.params()]
        opt = AdamState.for_params(policy.params() + value.params())
        update(policy, value, opt, traj, hp, layout)
        for b, p in zip(before, policy.params() + value.params()):
            assert np.array_equal(b, p)

    def test_doubling_beta_doubles_value_grads_only(self):
        rng = np.random.default_rng(13)
        traj = toy_trajectory(rng, T=5)
        layout = HeadLayout((4, 4))
        policy = Mlp.create(rng, 10, 8, n_hidden=6)
        value = Mlp.create(rng, 10, 1, n_hidden=6, out_scale=0.5)
        returns = compute_returns(traj.rewards, 0.99)

        hp1 = Hyperparams(beta=0.25, total_steps=2000, episode_length=2000)
        hp2 = Hyperparams(beta=0.5, total_steps=2000, episode_length=2000)
        _, pol1, val1, _ = loss_and_grads(policy, value, traj, returns, hp1, layout)
        _, pol2, val2, _ = loss_and_grads(policy, value, traj, returns, hp2, layout)
        for a, b in zip(val1, val2):
            assert np.allclose(2.0 * a, b, atol=1e-12)
        for a, b in zip(pol1, pol2):
            assert np.array_equal(a, b)

    def test_entropy_diagnostic_equals_per_head_sum(self):
        rng = np.random.default_rng(15)
        traj = toy_trajectory(rng, T=6)
        layout = HeadLayout((4, 4))
        hp = Hyperparams(total_steps=2000, episode_length=2000)
        policy = Mlp.create(rng, 10, 8, n_hidden=6, out_scale=0.5)
        value = Mlp.create(rng, 10, 1, n_hidden=6)
        returns = compute_returns(traj.rewards, hp.gamma)
        _, _, _, diags = loss_and_grads(policy, value, traj, returns, hp, layout)

        logits, _ = policy.forward(traj.observations)
        expected = head_distributions(logits, layout).entropies.sum()
        assert abs(diags.entropy - expected) < 1e-12

    def test_mean_mode_scales_gradients_by_episode_length(self):
        rng = np.random.default_rng(16)
        traj = toy_trajectory(rng, T=5)
        layout = HeadLayout((4, 4))
        policy = Mlp.create(rng, 10, 8, n_hidden=6)
        value = Mlp.create(rng, 10, 1, n_hidden=6)
        returns = compute_returns(traj.rewards, 0.99)
        hp_sum = Hyperparams(total_steps=2000, episode_length=2000)
        hp_mean = Hyperparams(total_steps=2000, episode_length=2000,
                              grad_mode="mean")
        _, ps, vs, _ = loss_and_grads(policy, value, traj, returns, hp_sum, layout)
        _, pm, vm, _ = loss_and_grads(policy, value, traj, returns, hp_mean, layout)
        for a, b in zip(ps + vs, pm + vm):
            assert np.allclose(a / 5, b, atol=1e-12)


class TestPolicyImprovement:
    def test_positive_advantage_raises_chosen_action_log_prob(self):
        """Bandit-sized check: with eta = beta = 0 and a constant positive
        advantage for one fixed action, each update raises its probability."""
        rng = np.random.default_rng(17)
        obs = np.ones((1, 4))
        layout = HeadLayout((4,))
        policy = Mlp.create(rng, 4, 4, n_hidden=4, out_scale=0.5)
        value = Mlp.create(rng, 4, 1, n_hidden=4)
        value.w2[:] = 0.0
        value.b2[:] = 0.0
        hp = Hyperparams(beta=0.0, eta=0.0, total_steps=2000,
                         episode_length=2000)
        traj = Trajectory(observations=obs, indices=np.array([[2]]),
                          rewards=np.array([1.0]), logits=np.zeros((1, 4)))
        opt = AdamState.for_params(policy.params() + value.params())

        def log_prob():
            logits, _ = policy.forward(obs)
            dists = head_distributions(logits, layout)
            return float(joint_log_prob(dists, [[2]])[0])

        history = [log_prob()]
        for _ in range(25):
            update(policy, value, opt, traj, hp, layout)
            history.append(log_prob())
        assert all(a < b for a, b in zip(history, history[1:])), history


class TestTrain:
    def test_total_steps_4000_runs_two_episodes(self, tmp_path):
        cfg = EnvConfig(map="4x4", mode=Mode.LOCAL, window=1)
        hp = Hyperparams(total_steps=4000, episode_length=2000, seeds=(1,))
        artifacts = train_run(cfg, hp, seed=1, out_dir=tmp_path / "run")
        assert len(artifacts.records) == 2
        assert [r.episode for r in artifacts.records] == [1, 2]
        assert artifacts.records[1].total_steps == 4000
        assert (tmp_path / "run" / "final.json").exists()
        assert (tmp_path / "run" / "curve.csv").exists()
        assert (tmp_path / "run" / "manifest.json").exists()

    def test_three_seeds_give_three_distinct_runs(self):
        cfg = EnvConfig(map="4x4", mode=Mode.LOCAL, window=1)
        hp = Hyperparams(total_steps=200, episode_length=200, seeds=(1, 2, 3))
        runs = train(cfg, hp)
        assert [r.seed for r in runs] == [1, 2, 3]
        # Distinct seeds explore distinctly: initial policies and samplers
        # differ, so the sampled index streams cannot all coincide.
        nets = [r.policy.w1 for r in runs]
        assert not np.array_equal(nets[0], nets[1])
        assert not np.array_equal(nets[1], nets[2])

    def test_identical_config_and_seed_reproduce_episode_rewards(self):
        cfg = EnvConfig(map="4x4", mode=Mode.GLOBAL)
        hp = Hyperparams(total_steps=1000, episode_length=100, seeds=(1,))
        r1 = train_run(cfg, hp, seed=1)
        r2 = train_run(cfg, hp, seed=1)
        assert r1.episode_rewards == r2.episode_rewards
        for a, b in zip(r1.policy.params(), r2.policy.params()):
            assert np.array_equal(a, b)

    def test_curve_csv_is_byte_identical_across_invocations(self, tmp_path):
        cfg = EnvConfig(map="4x4", mode=Mode.GLOBAL)
        hp = Hyperparams(total_steps=500, episode_length=100, seeds=(1,))
        train_run(cfg, hp, seed=1, out_dir=tmp_path / "a")
        train_run(cfg, hp, seed=1, out_dir=tmp_path / "b")
        assert (tmp_path / "a" / "curve.csv").read_bytes() == \
            (tmp_path / "b" / "curve.csv").read_bytes()

    def test_checkpoint_cadence(self, tmp_path):
        cfg = EnvConfig(map="4x4", mode=Mode.GLOBAL)
        hp = Hyperparams(total_steps=6000, episode_length=100, seeds=(1,))
        train_run(cfg, hp, seed=1, out_dir=tmp_path / "run")
        names = sorted(p.name for p in (tmp_path / "run").glob("*.json"))
        assert "checkpoint_ep00050.json" in names
        assert "final.json" in names

    def test_nonfinite_loss_aborts_with_diagnostic_checkpoint(self, tmp_path,
                                                              monkeypatch):
        import rts_rep_lab.a2c as a2c_mod

        def poison(policy, value, opt, traj, hp, layout):
            policy.w1[0, 0] = np.nan
            return original(policy, value, opt, traj, hp, layout)

        original = a2c_mod.update
        monkeypatch.setattr(a2c_mod, "update", poison)
        cfg = EnvConfig(map="4x4", mode=Mode.LOCAL, window=1)
        hp = Hyperparams(total_steps=200, episode_length=100, seeds=(1,))
        with pytest.raises(FloatingPointError):
            train_run(cfg, hp, seed=1, out_dir=tmp_path / "run")
        crashes = list((tmp_path / "run").glob("crash_ep*.json"))
        assert len(crashes) == 1

    def test_hyperparam_validation(self):
        with pytest.raises(ValueError):
            Hyperparams(total_steps=100, episode_length=33)
        with pytest.raises(ValueError):
            Hyperparams(gamma=0.0)
        with pytest.raises(ValueError):
            Hyperparams(grad_mode="median")
        with pytest.raises(ValueError):
            Hyperparams(beta=-0.1)

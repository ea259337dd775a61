"""Episodic advantage actor-critic training loop.

Each episode: roll the policy out for the full fixed-length episode,
compute Monte-Carlo discounted returns G_t by backward recursion (no
bootstrapping), then take exactly one optimizer step on

    loss = sum_t [ -A_t * log pi(a_t|s_t)
                   + beta * 0.5 * (G_t - v(s_t))^2
                   - eta * H(pi(.|s_t)) ]

with A_t = G_t - v(s_t) held constant in the policy term.  Policy and
value gradients are clipped together by one global-norm threshold and
both networks update from the same pass.  Runs are deterministic per
seed: one generator drives initialization and action sampling.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .encoding import (GlobalAction, LocalAction, Mode, global_head_sizes,
                       local_head_sizes, observation_size)
from .env import EnvConfig, HarvestEnv
from .neural import (AdamState, HeadLayout, Mlp, clip_and_step,
                     head_distributions, joint_log_prob, sample_heads,
                     save_checkpoint)

CHECKPOINT_EVERY_EPISODES = 50


@dataclass(frozen=True)
class Hyperparams:
    gamma: float = 0.99
    beta: float = 0.25          # value-loss coefficient
    eta: float = 0.01           # entropy-bonus coefficient
    omega: float = 0.5          # global gradient-norm threshold
    lr: float = 0.0007
    total_steps: int = 2_000_000
    episode_length: int = 2000
    seeds: tuple[int, ...] = (1, 2, 3)
    hidden_units: int = 128
    grad_mode: str = "sum"      # accumulate per-step gradients, or "mean"

    def __post_init__(self):
        for name in ("gamma", "omega", "lr", "total_steps", "episode_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        # Zero switches the term off; useful for ablations and sanity tests.
        if self.beta < 0 or self.eta < 0:
            raise ValueError("beta and eta must be non-negative")
        if self.total_steps % self.episode_length != 0:
            raise ValueError("total_steps must be divisible by episode_length")
        if self.grad_mode not in ("sum", "mean"):
            raise ValueError(f"unknown grad_mode {self.grad_mode!r}")

    @property
    def episodes(self) -> int:
        return self.total_steps // self.episode_length


@dataclass
class Trajectory:
    """One episode of rollout data, step-aligned."""

    observations: np.ndarray  # (T, obs_width)
    indices: np.ndarray       # (T, n_heads) sampled head indices
    rewards: np.ndarray       # (T,)
    logits: np.ndarray        # (T, head total) as seen during the rollout

    @property
    def steps(self) -> int:
        return int(self.rewards.shape[0])


@dataclass
class UpdateDiagnostics:
    policy_loss: float
    value_loss: float
    entropy: float
    grad_norm: float


def head_layout_for(cfg: EnvConfig) -> HeadLayout:
    spec = cfg.map_spec()
    if cfg.mode == Mode.GLOBAL:
        return HeadLayout(global_head_sizes(spec.width, spec.height))
    return HeadLayout(local_head_sizes())


def make_networks(cfg: EnvConfig, hp: Hyperparams,
                  rng: np.random.Generator) -> tuple[Mlp, Mlp]:
    spec = cfg.map_spec()
    n_in = observation_size(cfg.mode, spec.width, spec.height, cfg.window)
    layout = head_layout_for(cfg)
    policy = Mlp.create(rng, n_in, layout.total, n_hidden=hp.hidden_units)
    value = Mlp.create(rng, n_in, 1, n_hidden=hp.hidden_units, out_scale=0.1)
    return policy, value


def action_from_indices(mode: Mode, indices: tuple[int, ...]):
    if mode == Mode.GLOBAL:
        return GlobalAction(*indices)
    return LocalAction(*indices)


def rollout(env: HarvestEnv, policy: Mlp, layout: HeadLayout,
            rng: np.random.Generator) -> Trajectory:
    """Sample one full episode from the categorical heads."""
    obs = env.reset()
    observations, indices, rewards, logits_log = [], [], [], []
    done = False
    while not done:
        x = obs.flat
        logits, _ = policy.forward(x)
        dists = head_distributions(logits, layout)
        picks = sample_heads(dists, rng)
        result = env.step(action_from_indices(env.cfg.mode, picks))
        observations.append(x)
        indices.append(picks)
        rewards.append(result.reward)
        logits_log.append(logits[0])
        obs = result.obs
        done = result.done
    return Trajectory(
        observations=np.asarray(observations),
        indices=np.asarray(indices, dtype=int),
        rewards=np.asarray(rewards),
        logits=np.asarray(logits_log),
    )


def compute_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """Discounted returns by backward recursion: G_t = r_t + gamma * G_{t+1}."""
    rewards = np.asarray(rewards, dtype=float)
    returns = np.zeros_like(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        returns[t] = acc
    return returns


def episode_loss(policy: Mlp, value: Mlp, traj: Trajectory,
                 returns: np.ndarray, advantages: np.ndarray,
                 hp: Hyperparams, layout: HeadLayout) -> float:
    """Scalar episode loss with the advantages pinned as constants.

    This is the exact function the gradients below differentiate, which is
    what a finite-difference check must perturb.
    """
    logits, _ = policy.forward(traj.observations)
    v = value.forward(traj.observations)[0][:, 0]
    dists = head_distributions(logits, layout)
    logp_actions = joint_log_prob(dists, traj.indices)
    loss = float(-(advantages * logp_actions).sum()
                 + hp.beta * 0.5 * ((returns - v) ** 2).sum()
                 - hp.eta * dists.entropies.sum())
    if hp.grad_mode == "mean":
        loss /= traj.steps
    return loss


def loss_and_grads(policy: Mlp, value: Mlp, traj: Trajectory,
                   returns: np.ndarray, hp: Hyperparams, layout: HeadLayout,
                   ) -> tuple[float, list[np.ndarray], list[np.ndarray],
                              UpdateDiagnostics]:
    """Episode loss plus exact parameter gradients for both networks,
    accumulated over all steps of the episode."""
    T = traj.steps
    logits, pol_cache = policy.forward(traj.observations)
    values_out, val_cache = value.forward(traj.observations)
    v = values_out[:, 0]
    advantages = returns - v  # constant in the policy term

    dists = head_distributions(logits, layout)
    logp_actions = joint_log_prob(dists, traj.indices)
    entropies = dists.entropies

    policy_loss = float(-(advantages * logp_actions).sum())
    value_err = returns - v
    value_loss = float(hp.beta * 0.5 * (value_err ** 2).sum())
    entropy_total = float(entropies.sum())
    loss = policy_loss + value_loss - hp.eta * entropy_total

    # d loss / d logits, head by head:
    #   policy term:   -A * (onehot(a) - p)
    #   entropy bonus: d(-eta*H_head)/dz_j = eta * p_j * (log p_j + H_head)
    # (a head's logits only touch its own entropy, so H_head, not the sum)
    dlogits = np.zeros_like(logits)
    batch = np.arange(T)
    for head, sl in enumerate(layout.slices()):
        p = dists.probs[head]
        logp = dists.log_probs[head]
        grad = advantages[:, None] * p
        grad[batch, traj.indices[:, head]] -= advantages
        grad += hp.eta * p * (logp + dists.head_entropies[head][:, None])
        dlogits[:, sl] = grad
    # d loss / d v = -beta * (G - v)
    dvalue = (-hp.beta * value_err)[:, None]

    pol_grads = policy.backward(pol_cache, dlogits)
    val_grads = value.backward(val_cache, dvalue)
    if hp.grad_mode == "mean":
        pol_grads = [g / T for g in pol_grads]
        val_grads = [g / T for g in val_grads]
        loss /= T

    diags = UpdateDiagnostics(policy_loss=policy_loss, value_loss=value_loss,
                              entropy=entropy_total, grad_norm=0.0)
    return loss, pol_grads, val_grads, diags


def update(policy: Mlp, value: Mlp, opt: AdamState, traj: Trajectory,
           hp: Hyperparams, layout: HeadLayout) -> UpdateDiagnostics:
    """One clipped optimizer step from one finished episode; both networks
    share the step and the norm threshold."""
    returns = compute_returns(traj.rewards, hp.gamma)
    loss, pol_grads, val_grads, diags = loss_and_grads(
        policy, value, traj, returns, hp, layout)
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss}")
    params = policy.params() + value.params()
    diags.grad_norm = clip_and_step(params, pol_grads + val_grads, opt,
                                    max_norm=hp.omega)
    return diags


@dataclass
class EpisodeRecord:
    episode: int
    total_steps: int
    episode_reward: float
    policy_loss: float
    value_loss: float
    entropy: float
    grad_norm: float
    wall_ms: float


@dataclass
class RunArtifacts:
    seed: int
    out_dir: Optional[Path]
    records: list[EpisodeRecord]
    policy: Mlp
    value: Mlp

    @property
    def episode_rewards(self) -> list[float]:
        return [r.episode_reward for r in self.records]


def run_config_dict(cfg: EnvConfig, hp: Hyperparams, seed: int) -> dict:
    map_name = cfg.map if isinstance(cfg.map, str) else "custom"
    return {
        "map": map_name,
        "mode": cfg.mode.value,
        "window": cfg.window,
        "episode_length": cfg.episode_length,
        "seed": seed,
        "hyperparams": {k: (list(v) if isinstance(v, tuple) else v)
                        for k, v in asdict(hp).items()},
    }


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def train_run(cfg: EnvConfig, hp: Hyperparams, seed: int,
              out_dir: Optional[Path] = None,
              on_episode: Optional[Callable[[EpisodeRecord], None]] = None,
              ) -> RunArtifacts:
    """One seed: rollout -> returns -> update, episode after episode.

    When out_dir is given, writes episodes.jsonl (full diagnostics),
    curve.csv (the deterministic episode-reward log), periodic and final
    checkpoints, and a manifest echoing the config.
    """
    cfg = EnvConfig(map=cfg.map, mode=cfg.mode, window=cfg.window,
                    episode_length=hp.episode_length, seed=seed)
    env = HarvestEnv(cfg)
    rng = np.random.default_rng(seed)
    policy, value = make_networks(cfg, hp, rng)
    layout = head_layout_for(cfg)
    opt = AdamState.for_params(policy.params() + value.params(), lr=hp.lr)
    config = run_config_dict(cfg, hp, seed)

    log_fp = curve_fp = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {"config": config, "config_hash": config_hash(config),
                    "checkpoint_version": 1}
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n")
        log_fp = open(out_dir / "episodes.jsonl", "w")
        curve_fp = open(out_dir / "curve.csv", "w")
        curve_fp.write("episode,total_steps,episode_reward\n")

    records: list[EpisodeRecord] = []
    try:
        for episode in range(1, hp.episodes + 1):
            start = time.perf_counter()
            traj = rollout(env, policy, layout, rng)
            try:
                diags = update(policy, value, opt, traj, hp, layout)
            except FloatingPointError:
                # Abort the run but leave the pre-update state on disk for
                # diagnosis.
                if out_dir is not None:
                    with open(out_dir / f"crash_ep{episode:05d}.json", "w") as fp:
                        save_checkpoint(fp, policy, value, opt, config)
                raise
            wall_ms = (time.perf_counter() - start) * 1000.0
            record = EpisodeRecord(
                episode=episode,
                total_steps=episode * hp.episode_length,
                episode_reward=float(traj.rewards.sum()),
                policy_loss=diags.policy_loss,
                value_loss=diags.value_loss,
                entropy=diags.entropy,
                grad_norm=diags.grad_norm,
                wall_ms=wall_ms,
            )
            records.append(record)
            if log_fp is not None:
                log_fp.write(json.dumps(asdict(record)) + "\n")
            if curve_fp is not None:
                curve_fp.write(f"{record.episode},{record.total_steps},"
                               f"{record.episode_reward!r}\n")
            if on_episode is not None:
                on_episode(record)
            if out_dir is not None and (episode % CHECKPOINT_EVERY_EPISODES == 0
                                        or episode == hp.episodes):
                name = ("final.json" if episode == hp.episodes
                        else f"checkpoint_ep{episode:05d}.json")
                with open(out_dir / name, "w") as fp:
                    save_checkpoint(fp, policy, value, opt, config)
    finally:
        if log_fp is not None:
            log_fp.close()
        if curve_fp is not None:
            curve_fp.close()

    return RunArtifacts(seed=seed, out_dir=out_dir, records=records,
                        policy=policy, value=value)


def train(cfg: EnvConfig, hp: Hyperparams, out_root: Optional[Path] = None,
          on_episode: Optional[Callable[[int, EpisodeRecord], None]] = None,
          ) -> list[RunArtifacts]:
    """Independent run per seed in hp.seeds; each writes its own directory."""
    runs = []
    for seed in hp.seeds:
        out_dir = None
        if out_root is not None:
            out_dir = Path(out_root) / f"seed{seed}"
        callback = None
        if on_episode is not None:
            callback = lambda rec, s=seed: on_episode(s, rec)
        runs.append(train_run(cfg, hp, seed, out_dir=out_dir,
                              on_episode=callback))
    return runs

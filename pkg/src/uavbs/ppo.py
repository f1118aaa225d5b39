"""Clipped-surrogate policy optimization over the continuous flight action.

The policy is a diagonal Gaussian in an unbounded pre-squash space; a
tanh squash plus an affine decode maps samples onto (direction, step
length). Log-probabilities carry the tanh change-of-variables term so
probability ratios stay exact on the bounded action space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .environment import ActionCommand
from .neural import (
    AdamState,
    Mlp,
    adam_step,
    clip_global_norm,
    init_adam,
    init_mlp,
    mlp_backward,
    mlp_forward,
)

CHECKPOINT_VERSION = 1
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class PpoHyperParams:
    discount: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    learning_rate: float = 3e-4
    epochs_per_update: int = 10
    minibatch_size: int = 32
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    episodes_total: int = 4000
    frames_per_episode: int = 128
    hidden_sizes: tuple[int, ...] = (128, 128, 128)
    log_std_init: float = 0.0
    advantage_mode: str = "gae"  # "gae" or "one_step" (reward minus value)
    normalize_advantages: bool = True
    terminal_bootstrap: str = "critic"  # "critic" or "zero" at the time limit
    max_grad_norm: float = 1.0
    # stop an update early once the policy moved this far (approx KL); with a
    # near-deterministic policy, 10 full epochs on 128 samples otherwise walk
    # the policy away from its optimum. None runs every epoch unconditionally.
    target_kl: float | None = 0.03

    def __post_init__(self) -> None:
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.clip_epsilon <= 0:
            raise ValueError("clip_epsilon must be > 0")
        if self.episodes_total < 1:
            raise ValueError("episodes_total must be >= 1")
        if self.frames_per_episode < 1:
            raise ValueError("frames_per_episode must be >= 1")
        if self.epochs_per_update < 1 or self.minibatch_size < 1:
            raise ValueError("epochs_per_update and minibatch_size must be >= 1")
        if self.advantage_mode not in ("gae", "one_step"):
            raise ValueError("advantage_mode must be 'gae' or 'one_step'")
        if self.terminal_bootstrap not in ("critic", "zero"):
            raise ValueError("terminal_bootstrap must be 'critic' or 'zero'")
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)


LOG_STD_MIN = -5.0
LOG_STD_MAX = 1.0


@dataclass
class GaussianPolicy:
    """Actor network emitting pre-squash means plus a learned global std."""

    actor: Mlp
    log_std: np.ndarray  # (2,), clamped to [LOG_STD_MIN, LOG_STD_MAX]
    r_max: float

    def params(self) -> list[np.ndarray]:
        return self.actor.params() + [self.log_std]

    def clamp_log_std(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)


def decode_action(squashed: np.ndarray, r_max: float) -> ActionCommand:
    """Map tanh outputs in (-1, 1)^2 onto (direction deg, step metres)."""
    return ActionCommand(
        direction_deg=float(180.0 * squashed[0]),
        magnitude_m=float(r_max * (squashed[1] + 1.0) / 2.0),
    )


def _squash_correction(z: np.ndarray) -> np.ndarray:
    # log(1 - tanh(z)^2) = 2*(log 2 - z - softplus(-2z)), stable for any z
    return 2.0 * (np.log(2.0) - z - np.logaddexp(0.0, -2.0 * z))


def _gaussian_log_prob(z: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    std = np.exp(log_std)
    quad = ((z - mean) / std) ** 2
    per_dim = -0.5 * quad - log_std - 0.5 * _LOG_2PI
    return per_dim.sum(axis=-1)


def _squashed_log_prob(z: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    return _gaussian_log_prob(z, mean, log_std) - _squash_correction(z).sum(axis=-1)


def policy_sample(
    policy: GaussianPolicy,
    observation: np.ndarray,
    rng: np.random.Generator,
    deterministic: bool = False,
) -> tuple[ActionCommand, np.ndarray, float]:
    """Draw an action; returns (command, pre-squash sample, log-probability)."""
    mean, _ = mlp_forward(policy.actor, observation)
    if deterministic:
        z = mean.copy()
    else:
        z = mean + np.exp(policy.log_std) * rng.standard_normal(mean.shape)
    log_prob = float(_squashed_log_prob(z, mean, policy.log_std))
    return decode_action(np.tanh(z), policy.r_max), z, log_prob


def policy_log_prob(
    policy: GaussianPolicy, observation: np.ndarray, raw_action: np.ndarray
) -> float:
    """Log-probability of a stored pre-squash sample under the current policy."""
    mean, _ = mlp_forward(policy.actor, observation)
    return float(_squashed_log_prob(raw_action, mean, policy.log_std))


def policy_entropy(policy: GaussianPolicy) -> float:
    """Entropy of the pre-squash Gaussian (state-independent by design)."""
    dim = policy.log_std.shape[0]
    return float(np.sum(policy.log_std) + 0.5 * dim * (1.0 + _LOG_2PI))


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    terminal_value: float,
    discount: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Lambda-weighted advantages and value targets for one episode.

    delta_t = r_t + discount * V_{t+1} - V_t with V_T = terminal_value;
    advantages accumulate backwards with factor discount * lam and
    returns are advantages + values.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must have the same length")
    T = rewards.shape[0]
    advantages = np.zeros(T)
    next_value = terminal_value
    running = 0.0
    for t in range(T - 1, -1, -1):
        delta = rewards[t] + discount * next_value - values[t]
        running = delta + discount * lam * running
        advantages[t] = running
        next_value = values[t]
    return advantages, advantages + values


def clipped_policy_loss(
    log_prob_new: np.ndarray,
    log_prob_old: np.ndarray,
    advantages: np.ndarray,
    clip_epsilon: float,
) -> float:
    """Negative clipped surrogate, averaged over the batch (lower is better)."""
    ratio = np.exp(np.asarray(log_prob_new) - np.asarray(log_prob_old))
    advantages = np.asarray(advantages)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    return float(-np.mean(np.minimum(unclipped, clipped)))


def value_loss(predicted_values: np.ndarray, returns: np.ndarray) -> float:
    """Mean squared error between critic predictions and value targets."""
    predicted_values = np.asarray(predicted_values, dtype=float)
    returns = np.asarray(returns, dtype=float)
    if predicted_values.shape != returns.shape:
        raise ValueError("predicted values and returns must have the same length")
    return float(np.mean((predicted_values - returns) ** 2))


def policy_loss_and_grads(
    policy: GaussianPolicy,
    obs: np.ndarray,
    raw_actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    clip_epsilon: float,
    entropy_coef: float,
) -> tuple[float, list[np.ndarray], dict]:
    """Clipped-surrogate (+ entropy bonus) loss and exact actor gradients.

    Gradient list follows ``policy.params()`` order (actor weights,
    biases, log_std); verified against finite differences in the tests.
    """
    b = obs.shape[0]
    means, cache = mlp_forward(policy.actor, obs)
    new_logp = _squashed_log_prob(raw_actions, means, policy.log_std)
    ratio = np.exp(new_logp - old_log_probs)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    # d(-min)/d(logp): an active clipped branch contributes zero gradient
    dloss_dlogp = np.where(unclipped <= clipped, -advantages * ratio, 0.0) / b

    std_sq = np.exp(2.0 * policy.log_std)
    residual = raw_actions - means
    grad_means = dloss_dlogp[:, None] * (residual / std_sq)
    grads = mlp_backward(cache, grad_means)
    dlogp_dlogstd = (residual**2) / std_sq - 1.0
    grad_log_std = (dloss_dlogp[:, None] * dlogp_dlogstd).sum(axis=0)
    grad_log_std -= entropy_coef  # entropy bonus: dH/dlog_std = 1
    grads.append(grad_log_std)

    entropy = policy_entropy(policy)
    loss = float(-np.mean(np.minimum(unclipped, clipped)) - entropy_coef * entropy)
    aux = {
        "surrogate_loss": float(-np.mean(np.minimum(unclipped, clipped))),
        "entropy": entropy,
        "approx_kl": float(np.mean((ratio - 1.0) - (new_logp - old_log_probs))),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > clip_epsilon)),
    }
    return loss, grads, aux


def critic_loss_and_grads(
    critic: Mlp, obs: np.ndarray, returns: np.ndarray, value_coef: float
) -> tuple[float, list[np.ndarray]]:
    """Value MSE and critic gradients of value_coef * MSE."""
    b = obs.shape[0]
    values, cache = mlp_forward(critic, obs)
    values = values[:, 0]
    dloss_dv = value_coef * 2.0 * (values - returns) / b
    grads = mlp_backward(cache, dloss_dv[:, None])
    return float(np.mean((values - returns) ** 2)), grads


class RolloutBuffer:
    """Per-episode transition store plus computed advantages/returns."""

    def __init__(self):
        self.observations: list[np.ndarray] = []
        self.raw_actions: list[np.ndarray] = []
        self.actions: list[ActionCommand] = []
        self.log_probs: list[float] = []
        self.rewards: list[float] = []
        self.values: list[float] = []
        self.advantages: np.ndarray | None = None
        self.returns: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.rewards)

    def add(self, observation, raw_action, action, log_prob, reward, value) -> None:
        self.observations.append(np.asarray(observation, dtype=float))
        self.raw_actions.append(np.asarray(raw_action, dtype=float))
        self.actions.append(action)
        self.log_probs.append(float(log_prob))
        self.rewards.append(float(reward))
        self.values.append(float(value))

    def compute_advantages(self, terminal_value: float, hp: PpoHyperParams) -> None:
        rewards = np.asarray(self.rewards)
        values = np.asarray(self.values)
        if hp.advantage_mode == "one_step":
            # plain immediate-reward advantage; the critic then fits r_t
            self.advantages = rewards - values
            self.returns = rewards.copy()
        else:
            self.advantages, self.returns = compute_gae(
                rewards, values, terminal_value, hp.discount, hp.gae_lambda
            )

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        obs = np.stack(self.observations)
        raw = np.stack(self.raw_actions)
        logp = np.asarray(self.log_probs)
        return obs, raw, logp


def ppo_update(
    buffer: RolloutBuffer,
    policy: GaussianPolicy,
    critic: Mlp,
    actor_opt: AdamState,
    critic_opt: AdamState,
    hp: PpoHyperParams,
    rng: np.random.Generator,
) -> dict:
    """Run the clipped-surrogate update over one collected buffer.

    Minibatch gradients combine the policy term, value_coef * MSE critic
    term and an entropy bonus; the joint gradient is clipped to
    ``hp.max_grad_norm`` before the Adam steps. Returns mean diagnostics
    across all minibatches.
    """
    if len(buffer) == 0:
        raise ValueError("cannot update from an empty rollout buffer")
    if buffer.advantages is None or buffer.returns is None:
        raise ValueError("advantages must be computed before updating")

    obs, raw_actions, old_log_probs = buffer.as_arrays()
    advantages = buffer.advantages.copy()
    if hp.normalize_advantages:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    returns = buffer.returns

    T = len(buffer)
    stats = {k: 0.0 for k in
             ("policy_loss", "value_loss", "entropy", "approx_kl", "clip_fraction")}
    n_minibatches = 0

    stop = False
    for _ in range(hp.epochs_per_update):
        order = rng.permutation(T)
        for start in range(0, T, hp.minibatch_size):
            idx = order[start : start + hp.minibatch_size]
            _, actor_grads, aux = policy_loss_and_grads(
                policy,
                obs[idx],
                raw_actions[idx],
                old_log_probs[idx],
                advantages[idx],
                hp.clip_epsilon,
                hp.entropy_coef,
            )
            mse, critic_grads = critic_loss_and_grads(
                critic, obs[idx], returns[idx], hp.value_coef
            )
            stats["policy_loss"] += aux["surrogate_loss"]
            stats["value_loss"] += mse
            stats["entropy"] += aux["entropy"]
            stats["approx_kl"] += aux["approx_kl"]
            stats["clip_fraction"] += aux["clip_fraction"]
            n_minibatches += 1
            if (
                hp.target_kl is not None
                and aux["approx_kl"] > 1.5 * hp.target_kl
                and n_minibatches > 1
            ):
                stop = True  # budget exceeded; skip the remaining minibatches
                break
            clip_global_norm(actor_grads + critic_grads, hp.max_grad_norm)
            adam_step(policy.params(), actor_grads, actor_opt)
            adam_step(critic.params(), critic_grads, critic_opt)
            policy.clamp_log_std()
        if stop:
            break

    return {k: v / n_minibatches for k, v in stats.items()}


class PpoAgent:
    """Actor-critic pair plus optimizers and the action-sampling stream."""

    def __init__(
        self,
        obs_dim: int,
        hp: PpoHyperParams,
        r_max: float,
        seed: int | None = None,
        rng: np.random.Generator | None = None,
    ):
        if obs_dim < 1:
            raise ValueError("obs_dim must be >= 1")
        if r_max <= 0:
            raise ValueError("r_max must be > 0")
        self.obs_dim = obs_dim
        self.hp = hp
        self.r_max = r_max
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        sizes = [obs_dim, *hp.hidden_sizes]
        actor = init_mlp(sizes + [2], self.rng, final_scale=0.01)
        self.critic = init_mlp(sizes + [1], self.rng)
        log_std = np.full(2, float(hp.log_std_init))
        self.policy = GaussianPolicy(actor=actor, log_std=log_std, r_max=r_max)
        self.policy.clamp_log_std()
        self.actor_opt = init_adam(self.policy.params(), hp.learning_rate)
        self.critic_opt = init_adam(self.critic.params(), hp.learning_rate)

    def act(
        self, observation: np.ndarray, deterministic: bool = False
    ) -> tuple[ActionCommand, np.ndarray, float, float]:
        command, z, log_prob = policy_sample(
            self.policy, observation, self.rng, deterministic
        )
        return command, z, log_prob, self.value(observation)

    def value(self, observation: np.ndarray) -> float:
        out, _ = mlp_forward(self.critic, observation)
        return float(out[0])

    def update(self, buffer: RolloutBuffer) -> dict:
        return ppo_update(
            buffer,
            self.policy,
            self.critic,
            self.actor_opt,
            self.critic_opt,
            self.hp,
            self.rng,
        )


def _pack_net(prefix: str, net: Mlp, arrays: dict) -> None:
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"{prefix}_w{i}"] = w
        arrays[f"{prefix}_b{i}"] = b


def _unpack_net(prefix: str, data, n_layers: int) -> Mlp:
    weights = [data[f"{prefix}_w{i}"] for i in range(n_layers)]
    biases = [data[f"{prefix}_b{i}"] for i in range(n_layers)]
    return Mlp(weights, biases)


def _pack_adam(prefix: str, state: AdamState, arrays: dict) -> None:
    for i, (m, v) in enumerate(zip(state.m, state.v)):
        arrays[f"{prefix}_m{i}"] = m
        arrays[f"{prefix}_v{i}"] = v


def _unpack_adam(prefix: str, data, params: list[np.ndarray], meta: dict) -> AdamState:
    state = init_adam(params, meta["learning_rate"])
    state.t = int(meta["t"])
    state.m = [data[f"{prefix}_m{i}"] for i in range(len(params))]
    state.v = [data[f"{prefix}_v{i}"] for i in range(len(params))]
    return state


def save_checkpoint(path, agent: PpoAgent, episode: int) -> None:
    """Write a self-contained training snapshot; round-trips bit-exactly."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "obs_dim": agent.obs_dim,
        "r_max": agent.r_max,
        "episode": int(episode),
        "hyperparams": asdict(agent.hp),
        "rng_state": agent.rng.bit_generator.state,
        "actor_layers": len(agent.policy.actor.weights),
        "critic_layers": len(agent.critic.weights),
        "actor_opt": {"learning_rate": agent.actor_opt.learning_rate, "t": agent.actor_opt.t},
        "critic_opt": {"learning_rate": agent.critic_opt.learning_rate, "t": agent.critic_opt.t},
    }
    arrays: dict = {"log_std": agent.policy.log_std}
    _pack_net("actor", agent.policy.actor, arrays)
    _pack_net("critic", agent.critic, arrays)
    _pack_adam("actor_adam", agent.actor_opt, arrays)
    _pack_adam("critic_adam", agent.critic_opt, arrays)
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> tuple[PpoAgent, int]:
    """Rebuild an agent (weights, optimizer moments, RNG state) from disk."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"].tobytes()).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        hp_dict = dict(meta["hyperparams"])
        hp_dict["hidden_sizes"] = tuple(hp_dict["hidden_sizes"])
        hp = PpoHyperParams(**hp_dict)
        agent = PpoAgent(meta["obs_dim"], hp, meta["r_max"], seed=0)
        agent.policy.actor = _unpack_net("actor", data, meta["actor_layers"])
        agent.critic = _unpack_net("critic", data, meta["critic_layers"])
        agent.policy.log_std = data["log_std"].copy()
        agent.actor_opt = _unpack_adam(
            "actor_adam", data, agent.policy.params(), meta["actor_opt"]
        )
        agent.critic_opt = _unpack_adam(
            "critic_adam", data, agent.critic.params(), meta["critic_opt"]
        )
        agent.rng = np.random.default_rng()
        state = meta["rng_state"]
        agent.rng.bit_generator.state = state
        return agent, int(meta["episode"])

"""Deterministic-policy actor-critic agent with replay and target networks.

The agent is observation-space agnostic: the trainer decides whether
observations are full state deviations or latent coordinates.  Actions are
produced as deviations from the steady-state control; the trainer adds the
steady control back before stepping the environment.
"""

from __future__ import annotations

import numpy as np

from .errors import CheckpointMismatchError, DivergedUpdateError, UsageError
from .nets import AdamOptimizer, MlpNetwork

__all__ = [
    "ReplayBuffer",
    "DdpgAgent",
    "save_checkpoint",
    "load_checkpoint",
]

NETWORK_ORDER = ("actor", "critic", "target_actor", "target_critic")


class ReplayBuffer:
    """Fixed-capacity ring of transitions with seeded uniform sampling."""

    def __init__(self, capacity, obs_dim, action_dim, rng):
        capacity = int(capacity)
        if capacity < 1:
            raise UsageError("replay capacity must be positive")
        self.capacity = capacity
        self._obs = np.zeros((capacity, obs_dim))
        self._actions = np.zeros((capacity, action_dim))
        self._rewards = np.zeros(capacity)
        self._next_obs = np.zeros((capacity, obs_dim))
        self._done = np.zeros(capacity)
        self._size = 0
        self._insert = 0
        self._rng = rng

    def __len__(self):
        return self._size

    def add(self, obs, action, reward, next_obs, done):
        i = self._insert
        self._obs[i] = obs
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_obs[i] = next_obs
        self._done[i] = 1.0 if done else 0.0
        self._insert = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size):
        if self._size == 0:
            raise UsageError("cannot sample from an empty replay buffer")
        idx = self._rng.integers(0, self._size, size=int(batch_size))
        return {
            "obs": self._obs[idx],
            "actions": self._actions[idx],
            "rewards": self._rewards[idx],
            "next_obs": self._next_obs[idx],
            "done": self._done[idx],
        }


def _build_actor(obs_dim, action_dim, hidden, final_activation):
    sizes = (obs_dim, *hidden, action_dim)
    return MlpNetwork(sizes, final_activation=final_activation)


def _build_critic(obs_dim, action_dim, hidden):
    sizes = (obs_dim + action_dim, *hidden, 1)
    return MlpNetwork(sizes, final_activation="identity")


class DdpgAgent:
    """Actor-critic pair plus target copies, updated from sampled batches.

    ``actor_hidden = ()`` selects a single affine actor (a linear gain).
    Actions are bounded to ``[-action_scale, action_scale]`` per entry:
    tanh actors scale their output, identity/elu actors are clipped.
    """

    def __init__(self, obs_dim, action_dim, *,
                 actor_hidden=(20, 10), critic_hidden=(64, 64),
                 actor_final_activation="tanh", action_scale=1.0,
                 actor_learning_rate=1e-3, critic_learning_rate=1e-3,
                 discount=0.99, soft_update_tau=0.005,
                 exploration_noise=0.001, rng=None, noise_rng=None):
        if action_scale <= 0:
            raise UsageError("action_scale must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.obs_dim = int(obs_dim)
        self.action_dim = int(action_dim)
        self.action_scale = float(action_scale)
        self.discount = float(discount)
        self.soft_update_tau = float(soft_update_tau)
        self.exploration_noise = float(exploration_noise)
        self.actor = _build_actor(self.obs_dim, self.action_dim,
                                  tuple(actor_hidden), actor_final_activation)
        self.critic = _build_critic(self.obs_dim, self.action_dim,
                                    tuple(critic_hidden))
        self.actor_params = self.actor.init_params(rng, final_scale=1e-3)
        self.critic_params = self.critic.init_params(rng)
        self.target_actor_params = self.actor_params.copy()
        self.target_critic_params = self.critic_params.copy()
        self._actor_opt = AdamOptimizer(self.actor.num_params,
                                        actor_learning_rate)
        self._critic_opt = AdamOptimizer(self.critic.num_params,
                                         critic_learning_rate)
        self._noise_rng = noise_rng if noise_rng is not None else rng

    # -- acting ---------------------------------------------------------

    def _squash(self, raw):
        if self.actor.final_activation == "tanh":
            return self.action_scale * raw
        return np.clip(raw, -self.action_scale, self.action_scale)

    def policy_action(self, obs, params=None, network=None):
        """Bounded action (control deviation) for one observation or a batch."""
        net = network if network is not None else self.actor
        p = params if params is not None else self.actor_params
        return self._squash(net.forward(p, obs))

    def select_action(self, obs, explore):
        action = self.policy_action(obs)
        if explore and self.exploration_noise > 0.0:
            action = action + self.exploration_noise * \
                self._noise_rng.standard_normal(self.action_dim)
        return np.clip(action, -self.action_scale, self.action_scale)

    def random_action(self):
        """Uniform action over the bounds, for warm-up exploration."""
        return self._noise_rng.uniform(-self.action_scale, self.action_scale,
                                       size=self.action_dim)

    def policy_gain(self):
        """Jacobian of the bounded policy at the zero observation."""
        jac = self.actor.jacobian(self.actor_params, np.zeros(self.obs_dim))
        if self.actor.final_activation == "tanh":
            return self.action_scale * jac
        inside = np.abs(self.policy_action(np.zeros(self.obs_dim))) \
            < self.action_scale
        return jac * inside[:, None]

    # -- learning -------------------------------------------------------

    def update(self, batch):
        """One critic regression step, one actor ascent step, soft updates."""
        obs = batch["obs"]
        actions = batch["actions"]
        rewards = batch["rewards"]
        next_obs = batch["next_obs"]
        done = batch["done"]
        n = obs.shape[0]
        if n == 0:
            raise UsageError("update requires a nonempty batch")
        # Overflow along the way manifests as the non-finite check below;
        # the warnings themselves are noise.
        with np.errstate(over="ignore", invalid="ignore"):
            return self._update(obs, actions, rewards, next_obs, done, n)

    def _update(self, obs, actions, rewards, next_obs, done, n):
        next_actions = self.policy_action(
            next_obs, self.target_actor_params, self.actor)
        target_q = self.critic.forward(
            self.target_critic_params,
            np.hstack([next_obs, next_actions]))[:, 0]
        targets = rewards + self.discount * (1.0 - done) * target_q

        critic_in = np.hstack([obs, actions])
        q, cache = self.critic.forward_with_cache(self.critic_params, critic_in)
        q = q[:, 0]
        errors = q - targets
        critic_loss = float(np.mean(errors ** 2))
        grad_q = (2.0 / n) * errors[:, None]
        critic_grad, _ = self.critic.backward(self.critic_params, cache, grad_q)
        new_critic = self._critic_opt.step(self.critic_params, critic_grad)

        raw, actor_cache = self.actor.forward_with_cache(self.actor_params, obs)
        policy_actions = self._squash(raw)
        q_pi, cache_pi = self.critic.forward_with_cache(
            self.critic_params, np.hstack([obs, policy_actions]))
        actor_loss = float(-np.mean(q_pi[:, 0]))
        grad_q_pi = np.full((n, 1), -1.0 / n)
        _, grad_in = self.critic.backward(self.critic_params, cache_pi,
                                          grad_q_pi)
        grad_action = grad_in[:, self.obs_dim:]
        if self.actor.final_activation == "tanh":
            grad_raw = self.action_scale * grad_action
        else:
            grad_raw = grad_action * (np.abs(raw) < self.action_scale)
        actor_grad, _ = self.actor.backward(self.actor_params, actor_cache,
                                            grad_raw)
        new_actor = self._actor_opt.step(self.actor_params, actor_grad)

        bad = [
            name
            for name, ok in (
                ("critic_loss", np.isfinite(critic_loss)),
                ("actor_loss", np.isfinite(actor_loss)),
                ("critic_params", np.all(np.isfinite(new_critic))),
                ("actor_params", np.all(np.isfinite(new_actor))),
            )
            if not ok
        ]
        if bad:
            raise DivergedUpdateError(
                f"non-finite update in {', '.join(bad)} "
                f"(critic_loss={critic_loss}, actor_loss={actor_loss})")

        self.critic_params = new_critic
        self.actor_params = new_actor
        self.soft_update()
        return actor_loss, critic_loss

    def soft_update(self, tau=None):
        tau = self.soft_update_tau if tau is None else float(tau)
        self.target_actor_params = \
            tau * self.actor_params + (1.0 - tau) * self.target_actor_params
        self.target_critic_params = \
            tau * self.critic_params + (1.0 - tau) * self.target_critic_params

    # -- persistence ------------------------------------------------------

    def network_blocks(self):
        return {
            "actor": (self.actor, self.actor_params),
            "critic": (self.critic, self.critic_params),
            "target_actor": (self.actor, self.target_actor_params),
            "target_critic": (self.critic, self.target_critic_params),
        }

    def restore(self, blocks):
        """Install checkpointed parameters, validating architectures."""
        for name, own_net in (("actor", self.actor), ("critic", self.critic),
                              ("target_actor", self.actor),
                              ("target_critic", self.critic)):
            net, params = blocks[name]
            if net.layer_sizes != own_net.layer_sizes \
                    or net.hidden_activation != own_net.hidden_activation \
                    or net.final_activation != own_net.final_activation:
                raise CheckpointMismatchError(
                    f"{name} architecture {net.describe()!r} does not match "
                    f"agent {own_net.describe()!r}")
        self.actor_params = blocks["actor"][1].copy()
        self.critic_params = blocks["critic"][1].copy()
        self.target_actor_params = blocks["target_actor"][1].copy()
        self.target_critic_params = blocks["target_critic"][1].copy()


def _format_floats(values):
    return " ".join(repr(float(v)) for v in values)


def save_checkpoint(agent, path):
    """Write the agent's four network blocks as plain text."""
    save_blocks(agent.network_blocks(), path)


def save_blocks(blocks, path):
    """Write ``{name: (network, params)}`` blocks as plain text.

    Each block starts with a ``mlp <sizes...> <hidden_act> <final_act>``
    header followed by one whitespace-separated float line per parameter
    tensor (W1, b1, W2, b2, ...).
    """
    lines = []
    for name in NETWORK_ORDER:
        net, params = blocks[name]
        lines.append(net.describe())
        for w, b in net.unpack(params):
            lines.append(_format_floats(w.ravel()))
            lines.append(_format_floats(b))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    """Read a checkpoint back into ``{name: (MlpNetwork, params)}``."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    blocks = {}
    cursor = 0
    for name in NETWORK_ORDER:
        if cursor >= len(lines):
            raise CheckpointMismatchError(
                f"checkpoint truncated before block {name!r}")
        net = MlpNetwork.from_description(lines[cursor])
        cursor += 1
        chunks = []
        for fan_in, fan_out in zip(net.layer_sizes[:-1], net.layer_sizes[1:]):
            for expected in (fan_in * fan_out, fan_out):
                if cursor >= len(lines):
                    raise CheckpointMismatchError(
                        f"checkpoint truncated inside block {name!r}")
                try:
                    values = np.array([float(v) for v in lines[cursor].split()])
                except ValueError as exc:
                    raise CheckpointMismatchError(
                        f"non-numeric tensor line in block {name!r}") from exc
                if values.size != expected:
                    raise CheckpointMismatchError(
                        f"block {name!r} tensor has {values.size} entries, "
                        f"expected {expected}")
                chunks.append(values)
                cursor += 1
        blocks[name] = (net, np.concatenate(chunks))
    if cursor != len(lines):
        raise CheckpointMismatchError(
            f"{len(lines) - cursor} trailing lines after the last block")
    return blocks

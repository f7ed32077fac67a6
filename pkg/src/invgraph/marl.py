"""Multi-agent PPO variants for the inventory network.

Variants differ only in what the critic sees:

============  =====================================================
``ippo``      one critic per agent on its own observation
``mappo``     shared critic on the concatenated observations
``gmappo``    shared critic on the flattened N x W GCN embeddings
``pgcn``      shared critic on the mean-pooled GCN embedding
``regpgcn``   ``pgcn`` plus Gaussian noise on rollout value estimates
============  =====================================================

Actors are never shared: agent ``i`` always has its own network fed with its
own normalised observation. All randomness in an iteration is derived from
``(seed, iteration)`` so a run resumed from a checkpoint continues exactly.
"""
from __future__ import annotations

import os
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import env as envmod
from .gcn import (
    GcnStack,
    gcn_backward,
    gcn_forward,
    global_mean_pool,
    global_mean_pool_backward,
    normalize_adjacency,
)
from .nn import (
    AdamState,
    LOG_STD_BOUNDS,
    DenseNet,
    StackedDenseNet,
    adam_arrays,
    adam_step,
    clamp_log_std,
    gaussian_entropy,
    gaussian_kl,
    gaussian_kl_grads,
    gaussian_logprob,
    gaussian_logprob_grads,
    load_checkpoint,
    restore_adam,
    save_checkpoint,
)
from .policy import ActionBounds, Actor, ActorGroup, bounds_arrays, orders_from_actions
from .supply_net import SupplyNetwork, adjacency, load_network, serialize

VARIANTS = ("ippo", "mappo", "gmappo", "pgcn", "regpgcn")
CRITIC_HIDDEN = (256, 256, 256)
WORKERS_ENV = "INVGRAPH_WORKERS"


class TrainingError(RuntimeError):
    pass


@dataclass
class AlgoConfig:
    variant: str = "regpgcn"
    clip: float = 0.3
    gae_lambda: float = 1.0
    gamma: float = 0.99
    kl_coeff: float = 0.2
    kl_target: float = 0.01
    batch_size: int = 4000
    minibatch_size: int = 32
    iterations: int = 60
    noise_std: float = 0.0
    entropy_coeff: float = 0.0
    vf_coeff: float = 0.5
    lr: float = 1e-3
    weight_decay: float = 1e-4
    reward_scale: float = 0.01
    gcn_hidden: tuple = (64, 64)
    gcn_out: int = 32
    init_log_std: float = -0.5

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.clip <= 0:
            raise ValueError("clip must be positive")
        if not 0 <= self.gae_lambda <= 1 or not 0 <= self.gamma <= 1:
            raise ValueError("gamma and gae_lambda must lie in [0, 1]")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        self.gcn_hidden = tuple(self.gcn_hidden)

    @property
    def uses_gcn(self) -> bool:
        return self.variant in ("gmappo", "pgcn", "regpgcn")

    @property
    def effective_noise(self) -> float:
        return self.noise_std if self.variant == "regpgcn" else 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "AlgoConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class RunMetrics:
    iteration: int
    profit: float
    entropy: float
    policy_loss: float
    value_loss: float
    kl: float
    beta: float
    seconds: float
    rejected_updates: int = 0


# ---------------------------------------------------------------- primitives


def gae(rewards, values, bootstrap, gamma: float, lam: float):
    """Generalised advantage estimates along the leading (time) axis.

    ``values[t]`` estimates the state before reward ``rewards[t]``; ``bootstrap``
    is the value after the last reward (zero for a terminal state).
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.shape != values.shape:
        raise ValueError(f"rewards {rewards.shape} and values {values.shape} differ")
    bootstrap = np.broadcast_to(np.asarray(bootstrap, dtype=float), rewards.shape[1:])
    adv = np.zeros_like(rewards)
    last = np.zeros(rewards.shape[1:])
    next_v = bootstrap
    for t in range(len(rewards) - 1, -1, -1):
        delta = rewards[t] + gamma * next_v - values[t]
        last = delta + gamma * lam * last
        adv[t] = last
        next_v = values[t]
    return adv, adv + values


def ppo_policy_loss(logp_new, logp_old, advantages, clip: float):
    """Clipped surrogate loss and its gradient w.r.t. ``logp_new``."""
    logp_new = np.asarray(logp_new, dtype=float)
    adv = np.asarray(advantages, dtype=float)
    with np.errstate(over="ignore"):
        ratio = np.exp(logp_new - np.asarray(logp_old, dtype=float))
    if not np.all(np.isfinite(ratio)):
        raise FloatingPointError("non-finite probability ratio")
    surr1 = ratio * adv
    surr2 = np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv
    n = adv.size
    loss = -np.mean(np.minimum(surr1, surr2))
    grad = np.where(surr1 <= surr2, -adv * ratio / n, 0.0)
    return float(loss), grad


def kl_update(beta: float, observed_kl: float, target: float) -> float:
    if observed_kl > 1.5 * target:
        return beta * 2.0
    if observed_kl < target / 1.5:
        return beta * 0.5
    return beta


def inject_value_noise(values, sigma: float, rng: np.random.Generator, training: bool = True):
    """Add N(0, sigma^2) to every value estimate during training rollouts only."""
    values = np.asarray(values, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if not training or sigma == 0:
        return values
    return values + rng.normal(0.0, sigma, size=values.shape)


def _normalize_adv(a):
    """Standardise along the first (sample) axis."""
    return (a - a.mean(axis=0)) / (a.std(axis=0) + 1e-8)


# ---------------------------------------------------------------- critics


class Critic:
    """Value function for one variant.

    Maps normalised node features ``(B, N, D)`` to values of shape ``(B,)`` for
    shared critics and ``(B, N)`` for ``ippo``. GCN weights belong to the
    critic and are trained by the value loss.
    """

    def __init__(self, variant: str, net: SupplyNetwork, cfg: AlgoConfig, rng=None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        rng = np.random.default_rng(rng)
        self.variant = variant
        self.n_agents = net.N
        self.obs_dim = envmod.obs_dim(net.history)
        self.gcn = None
        if variant in ("gmappo", "pgcn", "regpgcn"):
            a_hat = normalize_adjacency(adjacency(net).symmetric)
            self.gcn = GcnStack(a_hat, self.obs_dim, cfg.gcn_hidden, cfg.gcn_out, rng=rng)
        n_mlps = net.N if variant == "ippo" else 1
        self.mlps = [
            DenseNet((self.input_dim, *CRITIC_HIDDEN, 1), ("relu",) * 3 + ("identity",), rng=rng)
            for _ in range(n_mlps)
        ]
        self.stack = None
        if variant == "ippo":
            # per-agent critics share a shape, so they run as one stacked batch
            self.stack = StackedDenseNet.stack(self.mlps)
            for i, m in enumerate(self.mlps):
                m.params = self.stack.member(i)

    @property
    def input_dim(self) -> int:
        """Width of the vector fed to (each) critic MLP."""
        if self.variant == "ippo":
            return self.obs_dim
        if self.variant == "mappo":
            return self.n_agents * self.obs_dim
        if self.variant == "gmappo":
            return self.n_agents * self.gcn.out_dim
        return self.gcn.out_dim

    @property
    def params(self) -> list[np.ndarray]:
        ps = list(self.stack.params) if self.stack is not None else list(self.mlps[0].params)
        if self.gcn is not None:
            ps += self.gcn.params
        return ps

    def features(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-2] != self.n_agents:
            raise ValueError(f"critic built for {self.n_agents} agents, got {X.shape[-2]}")
        if self.variant == "ippo":
            return X, None
        if self.variant == "mappo":
            return envmod.global_state(X), None
        H, tape = gcn_forward(X, self.gcn)
        if self.variant == "gmappo":
            return H.reshape(H.shape[:-2] + (-1,)), (tape, H.shape)
        return global_mean_pool(H), (tape, H.shape)

    def value(self, X) -> np.ndarray:
        feats, _ = self.features(X)
        if self.variant == "ippo":
            x = np.moveaxis(feats, -2, 0)
            lead = x.shape[1:-1]
            y = self.stack(x.reshape(self.n_agents, -1, self.obs_dim))[..., 0]
            return np.moveaxis(y.reshape((self.n_agents,) + lead), 0, -1)
        return self.mlps[0](feats)[..., 0]

    def loss_and_grads(self, X, targets, vf_coeff: float):
        """``vf_coeff * mean((V - targets)^2)`` and gradients aligned with ``params``."""
        feats, gtape = self.features(X)
        targets = np.asarray(targets, dtype=float)
        if self.variant == "ippo":
            v, tape = self.stack.forward(np.swapaxes(feats, 0, 1))
            err = v[..., 0] - targets.T
            loss = vf_coeff * np.mean(err**2)
            grads, _ = self.stack.backward(tape, (2 * vf_coeff * err / err.size)[..., None])
            return float(loss), grads
        m = self.mlps[0]
        v, tape = m.forward(feats)
        err = v[:, 0] - targets
        loss = vf_coeff * np.mean(err**2)
        grads, g_feat = m.backward(tape, (2 * vf_coeff * err / len(err))[:, None])
        if self.gcn is not None:
            gcn_tape, h_shape = gtape
            if self.variant == "gmappo":
                g_h = g_feat.reshape(h_shape)
            else:
                g_h = global_mean_pool_backward(g_feat, self.n_agents)
            g_w, _ = gcn_backward(self.gcn, gcn_tape, g_h)
            grads = grads + g_w
        return float(loss), grads


def critic_value(variant: str, critic: Critic, observations) -> np.ndarray:
    """Per-agent value estimates for normalised observations of shape (..., N, D).

    Shared critics return the same scalar for every agent.
    """
    if variant != critic.variant:
        raise ValueError(f"critic was built for {critic.variant!r}, not {variant!r}")
    X = np.asarray(observations, dtype=float)
    lead = X.shape[:-2]
    flat = X.reshape((-1,) + X.shape[-2:])
    v = critic.value(flat)
    if variant != "ippo":
        v = np.repeat(v[:, None], critic.n_agents, axis=1)
    return v.reshape(lead + (critic.n_agents,))


# ---------------------------------------------------------------- rollouts


@dataclass
class Rollout:
    obs: np.ndarray  # (E, T + 1, N, D) normalised
    means: np.ndarray  # (E, T, N, 2) actor means used for sampling
    samples: np.ndarray  # (E, T, N, 2) unclipped raw actions
    logp: np.ndarray  # (E, T, N)
    rewards: np.ndarray  # (E, T) raw team reward
    backlog: np.ndarray  # (E, T) total end-of-period backlog
    inventory: np.ndarray  # (E, T) total end-of-period on-hand

    @property
    def profits(self) -> np.ndarray:
        return self.rewards.sum(axis=1)


def _seed(*key) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(k) for k in key])


def _stacked(actors):
    if isinstance(actors, ActorGroup):
        return actors.net, actors.log_std
    return StackedDenseNet.stack([a.net for a in actors]), np.stack([a.log_std for a in actors])


def collect_rollouts(actors, net: SupplyNetwork, env_seeds, action_seeds=None) -> Rollout:
    """Run episodes in lockstep. Without ``action_seeds`` actions are the density mode.

    ``actors`` is a list of :class:`Actor` or an :class:`ActorGroup`.
    """
    bounds = bounds_arrays([ActionBounds.for_node(n) for n in net.nodes])
    o_max = np.array([n.max_order for n in net.nodes])
    scale = envmod.obs_scale(net)
    E, T, N = len(env_seeds), net.horizon, net.N
    D = envmod.obs_dim(net.history)
    states, obs0 = zip(*(envmod.reset(net, s) for s in env_seeds))
    rngs = None if action_seeds is None else [np.random.default_rng(s) for s in action_seeds]
    stack, log_std = _stacked(actors)
    log_std = clamp_log_std(log_std)  # (N, 2)
    std = np.exp(log_std)

    X = np.zeros((E, T + 1, N, D))
    means = np.zeros((E, T, N, 2))
    samples = np.zeros((E, T, N, 2))
    logp = np.zeros((E, T, N))
    rewards = np.zeros((E, T))
    backlog = np.zeros((E, T))
    inventory = np.zeros((E, T))
    X[:, 0] = np.stack(obs0) / scale
    for t in range(T):
        mu = np.swapaxes(stack(np.swapaxes(X[:, t], 0, 1)), 0, 1)
        if rngs is None:
            a = mu
        else:
            eps = np.stack([r.standard_normal((N, 2)) for r in rngs])
            a = mu + std * eps
        means[:, t] = mu
        samples[:, t] = a
        logp[:, t] = gaussian_logprob(mu, log_std, a)
        for k, st in enumerate(states):
            orders = orders_from_actions(a[k], st.v, bounds, o_max)
            res = envmod.step(st, net, orders)
            X[k, t + 1] = res.observations / scale
            rewards[k, t] = res.team_reward
            backlog[k, t] = st.total_backlog.sum()
            inventory[k, t] = st.v.sum()
    return Rollout(X, means, samples, logp, rewards, backlog, inventory)


def _collect_chunk(args):
    return collect_rollouts(*args)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def parallel_rollouts(actors, net, env_seeds, action_seeds=None, workers=None) -> Rollout:
    """Split episodes over worker processes; results are concatenated in seed order."""
    workers = workers or _workers()
    if workers <= 1 or len(env_seeds) < 2:
        return collect_rollouts(actors, net, env_seeds, action_seeds)
    import multiprocessing as mp

    chunks = np.array_split(np.arange(len(env_seeds)), workers)
    jobs = [
        (
            actors,
            net,
            [env_seeds[i] for i in c],
            None if action_seeds is None else [action_seeds[i] for i in c],
        )
        for c in chunks
        if len(c)
    ]
    with mp.get_context("fork").Pool(len(jobs)) as pool:
        parts = pool.map(_collect_chunk, jobs)
    return Rollout(*(np.concatenate([getattr(p, f.name) for p in parts]) for f in fields(Rollout)))


# ---------------------------------------------------------------- evaluation

EVAL_SEED_BASE = 1_000_003


def eval_seeds(episodes: int = 20, base: int = EVAL_SEED_BASE) -> list[int]:
    return [base + k for k in range(episodes)]


def episode_stats(profits, backlog, inventory) -> dict:
    """Summary of evaluation episodes; backlog/inventory are (episodes, T) totals."""
    profits = np.asarray(profits, float)
    return {
        "episodes": len(profits),
        "profit_mean": float(profits.mean()),
        "profit_std": float(profits.std()),
        "backlog_median": float(np.median(np.asarray(backlog).mean(axis=1))),
        "inventory_median": float(np.median(np.asarray(inventory).mean(axis=1))),
    }


def evaluate(
    actors, net: SupplyNetwork, episodes: int = 20, seeds=None, record_traces=False, scale=None
) -> dict:
    """Deterministic evaluation at the mode of every actor; no critic, no noise.

    ``scale`` overrides the observation divisor, e.g. to keep the training
    normalisation when the demand rate is shifted at test time.
    """
    seeds = eval_seeds(episodes) if seeds is None else list(seeds)
    bounds = bounds_arrays([ActionBounds.for_node(n) for n in net.nodes])
    o_max = np.array([n.max_order for n in net.nodes])
    scale = envmod.obs_scale(net) if scale is None else scale

    def order_fn(state, obs):
        x = obs / scale
        mu = np.stack([a.net(x[i]) for i, a in enumerate(actors)])
        return orders_from_actions(mu, state.v, bounds, o_max)

    runs = [envmod.run_episode(net, order_fn, s, record_trace=record_traces) for s in seeds]
    stats = episode_stats(
        [r.profit for r in runs],
        [r.backlog.sum(axis=1) for r in runs],
        [r.inventory.sum(axis=1) for r in runs],
    )
    stats["profits"] = [r.profit for r in runs]
    if record_traces:
        stats["traces"] = [r.trace for r in runs]
    return stats


# ---------------------------------------------------------------- training


class Trainer:
    """Owns actors, critic, optimisers and the KL coefficient for one run."""

    def __init__(self, net: SupplyNetwork, cfg: AlgoConfig | None = None, seed: int = 0):
        self.net = net
        self.cfg = cfg or AlgoConfig()
        self.seed = int(seed)
        d = envmod.obs_dim(net.history)
        actor_ss = _seed(self.seed, 0).spawn(net.N)
        self.actors = [
            Actor(d, init_log_std=self.cfg.init_log_std, rng=np.random.default_rng(s)) for s in actor_ss
        ]
        self.group = ActorGroup(self.actors)
        self.critic = Critic(self.cfg.variant, net, self.cfg, rng=np.random.default_rng(_seed(self.seed, 1)))
        opt = dict(lr=self.cfg.lr, weight_decay=self.cfg.weight_decay)
        # Adam is elementwise, so one state over the stacked arrays equals one per agent
        self.actor_opt = AdamState.for_params(self.group.params, **opt)
        self.critic_opt = AdamState.for_params(self.critic.params, **opt)
        self.beta = float(self.cfg.kl_coeff)
        self.iteration = 0
        self.history: list[RunMetrics] = []

    # -- rollout and advantage computation

    def rollout(self, iteration: int) -> Rollout:
        n_ep = -(-self.cfg.batch_size // self.net.horizon)
        env_seeds = [_seed(self.seed, 2, iteration, k) for k in range(n_ep)]
        act_seeds = [_seed(self.seed, 3, iteration, k) for k in range(n_ep)]
        return parallel_rollouts(self.group, self.net, env_seeds, act_seeds)

    def advantages(self, ro: Rollout, iteration: int, training: bool = True):
        """Advantages and value targets, both shaped (E, T, N)."""
        E, T = ro.rewards.shape
        N = self.net.N
        values = self.critic.value(ro.obs[:, :T].reshape(E * T, N, -1))
        if self.cfg.variant == "ippo":
            values = values.reshape(E, T, N)
        else:
            values = values.reshape(E, T)
            rng = np.random.default_rng(_seed(self.seed, 4, iteration))
            values = inject_value_noise(values, self.cfg.effective_noise, rng, training)
            values = np.repeat(values[..., None], N, axis=-1)
        r = ro.rewards * self.cfg.reward_scale
        r = np.repeat(r[..., None], N, axis=-1)
        # episodes end at the horizon: terminal, bootstrap 0
        adv, ret = gae(
            np.swapaxes(r, 0, 1), np.swapaxes(values, 0, 1), 0.0, self.cfg.gamma, self.cfg.gae_lambda
        )
        return np.swapaxes(adv, 0, 1), np.swapaxes(ret, 0, 1)

    # -- one optimisation pass

    def actor_loss_and_grads(self, obs, samples, logp_old, mean_old, adv):
        """Summed per-agent actor loss, its clipped-surrogate part and the stacked gradients.

        Arrays are agent-major, (N, B, ...). Agent ``i`` minimises its clipped
        surrogate plus ``beta`` times the mean KL(old || new) over the batch.
        """
        g = self.group
        cfg = self.cfg
        N, B = obs.shape[:2]
        mean, tape = g.net.forward(obs)
        log_std = g.log_std[:, None, :]
        log_std_old = self._log_std_old[:, None, :]
        logp = gaussian_logprob(mean, log_std, samples)
        pl, g_logp = ppo_policy_loss(logp, logp_old, adv, cfg.clip)
        g_logp = g_logp * N  # per-agent mean over the minibatch
        kl = gaussian_kl(mean_old, log_std_old, mean, log_std)
        gm_lp, gls_lp = gaussian_logprob_grads(mean, log_std, samples)
        gm_kl, gls_kl = gaussian_kl_grads(mean_old, log_std_old, mean, log_std)
        g_mean = g_logp[..., None] * gm_lp + self.beta * gm_kl / B
        g_ls = (g_logp[..., None] * gls_lp).sum(axis=1) + self.beta * gls_kl.sum(axis=1) / B
        loss = N * (pl + self.beta * float(kl.mean()))
        if cfg.entropy_coeff:
            inside = (g.log_std > LOG_STD_BOUNDS[0]) & (g.log_std < LOG_STD_BOUNDS[1])
            g_ls = g_ls - cfg.entropy_coeff * inside
            loss -= cfg.entropy_coeff * float(np.sum(clamp_log_std(g.log_std)))
        grads, _ = g.net.backward(tape, g_mean)
        return loss, pl, grads + [g_ls]

    def _actor_update(self, obs, samples, logp_old, mean_old, adv):
        loss, pl, grads = self.actor_loss_and_grads(obs, samples, logp_old, mean_old, adv)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite actor loss at iteration {self.iteration}")
        adam_step(self.group.params, grads, self.actor_opt)
        return pl

    def train_iteration(self) -> RunMetrics:
        cfg, N = self.cfg, self.net.N
        k = self.iteration
        t0 = time.perf_counter()
        ro = self.rollout(k)
        adv, ret = self.advantages(ro, k)
        E, T = ro.rewards.shape
        S = E * T
        obs = ro.obs[:, :T].reshape(S, N, -1)
        obs_t = np.ascontiguousarray(np.swapaxes(obs, 0, 1))
        samples = np.swapaxes(ro.samples.reshape(S, N, 2), 0, 1)
        logp_old = ro.logp.reshape(S, N).T
        mean_old = np.swapaxes(ro.means.reshape(S, N, 2), 0, 1)
        adv = adv.reshape(S, N)
        ret = ret.reshape(S, N)
        targets = ret if cfg.variant == "ippo" else ret[:, 0]
        self._log_std_old = self.group.log_std.copy()
        rejected_before = self.actor_opt.rejected + self.critic_opt.rejected

        perm = np.random.default_rng(_seed(self.seed, 5, k)).permutation(S)
        p_losses, v_losses = [], []
        for start in range(0, S, cfg.minibatch_size):
            mb = perm[start : start + cfg.minibatch_size]
            a = _normalize_adv(adv[mb]).T
            p_losses.append(
                self._actor_update(obs_t[:, mb], samples[:, mb], logp_old[:, mb], mean_old[:, mb], a)
            )
            vl, grads = self.critic.loss_and_grads(obs[mb], targets[mb], cfg.vf_coeff)
            if not np.isfinite(vl):
                raise TrainingError(f"non-finite value loss at iteration {k}")
            adam_step(self.critic.params, grads, self.critic_opt)
            v_losses.append(vl)

        mean_new = self.group.net(obs_t)
        kl = float(
            gaussian_kl(mean_old, self._log_std_old[:, None], mean_new, self.group.log_std[:, None]).mean()
        )
        beta_used = self.beta
        self.beta = kl_update(self.beta, kl, cfg.kl_target)
        rejected = self.actor_opt.rejected + self.critic_opt.rejected - rejected_before

        metrics = RunMetrics(
            iteration=k + 1,
            profit=float(ro.profits.mean()),
            entropy=self.mean_entropy(),
            policy_loss=float(np.mean(p_losses)),
            value_loss=float(np.mean(v_losses)),
            kl=kl,
            beta=beta_used,
            seconds=time.perf_counter() - t0,
            rejected_updates=int(rejected),
        )
        self.iteration += 1
        self.history.append(metrics)
        return metrics

    def train(self, iterations: int | None = None, callback=None) -> list[RunMetrics]:
        iterations = self.cfg.iterations if iterations is None else iterations
        out = []
        for _ in range(iterations):
            m = self.train_iteration()
            out.append(m)
            if callback is not None:
                callback(self, m)
        return out

    def mean_entropy(self) -> float:
        return float(np.mean([gaussian_entropy(a.log_std) for a in self.actors]))

    def evaluate(self, episodes: int = 20, seeds=None, record_traces=False, net=None) -> dict:
        """Evaluate on ``net`` (default: the training network) with the training normalisation."""
        return evaluate(
            self.actors, net or self.net, episodes, seeds, record_traces, scale=envmod.obs_scale(self.net)
        )

    # -- checkpoints

    def save(self, path) -> Path:
        arrays = {}
        for j, p in enumerate(self.group.params):
            arrays[f"actors.p{j}"] = p
        arrays.update(adam_arrays("actors", self.actor_opt))
        for j, p in enumerate(self.critic.params):
            arrays[f"critic.p{j}"] = p
        arrays.update(adam_arrays("critic", self.critic_opt))
        meta = {
            "config": asdict(self.cfg),
            "seed": self.seed,
            "iteration": self.iteration,
            "beta": self.beta,
            "network": serialize(self.net),
            "network_name": self.net.name,
            "history": [asdict(m) for m in self.history],
        }
        path = Path(path)
        save_checkpoint(path, arrays, meta)
        return path

    @classmethod
    def load(cls, path, net: SupplyNetwork | None = None) -> "Trainer":
        arrays, meta = load_checkpoint(path)
        saved_net = load_network(meta["network"], name=meta.get("network_name", ""))
        if net is None:
            net = saved_net
        elif net.N != saved_net.N or net.edges != saved_net.edges or net.history != saved_net.history:
            raise ValueError("checkpoint was trained on a different network topology")
        tr = cls(net, AlgoConfig.from_dict(meta["config"]), seed=meta["seed"])
        for j, p in enumerate(tr.group.params):
            p[...] = arrays[f"actors.p{j}"]
        restore_adam("actors", arrays, tr.actor_opt)
        for j, p in enumerate(tr.critic.params):
            p[...] = arrays[f"critic.p{j}"]
        restore_adam("critic", arrays, tr.critic_opt)
        tr.iteration = int(meta["iteration"])
        tr.beta = float(meta["beta"])
        tr.history = [RunMetrics(**m) for m in meta["history"]]
        return tr

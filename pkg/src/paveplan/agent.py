"""Training loop for the budget-aware maintenance planner.

One shared action-value net scores interventions in improvement-per-dollar
terms, a policy net drives exploration and an on-policy expectation target,
and a value net supplies the advantage baseline for policy updates. Every
year the per-segment candidates compete for funding in a greedy knapsack, so
executed plans are budget-feasible by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .allocator import greedy_funding_core
from .nets import (
    HEAD_LINEAR,
    HEAD_SOFTMAX,
    DenseNet,
    backward,
    forward,
    init_net,
    load_weights,
    make_optimizer,
    optimizer_step,
    save_weights,
    soft_update,
)
from .network import ActionKind, MaintenancePlan, NetworkState
from .simulate import HIST_BINS, N_FEATURES, ArrayNetwork

N_ACTIONS = 3
PROB_FLOOR = 1e-12

BUNDLE_FORMAT = "paveplan-bundle"
BUNDLE_VERSION = 1
BUNDLE_FILES = {"q": "q.net", "policy": "policy.net", "value": "value.net"}

TARGET_RULES = ("expected_sarsa", "max")


@dataclass(frozen=True)
class NetworkSummary:
    """The shared network-level context a segment's feature vector embeds."""

    year: int
    horizon: int
    budget_remaining_cents: int
    budget_total_cents: int
    mean_los: float
    histogram: tuple[float, ...]
    max_area: float
    max_recon_unit_cost: float
    pqi_max: float = 10.0


def summarize(state: NetworkState) -> NetworkSummary:
    arr = ArrayNetwork.from_state(state)
    return NetworkSummary(
        year=state.year,
        horizon=state.horizon,
        budget_remaining_cents=state.total_budget_cents - state.spent_cents,
        budget_total_cents=state.total_budget_cents,
        mean_los=arr.los(),
        histogram=tuple(float(v) for v in arr.histogram()),
        max_area=float(arr.areas.max()),
        max_recon_unit_cost=float(arr.recon_unit.max()),
        pqi_max=state.pqi_max,
    )


def build_state(segment, summary: NetworkSummary) -> np.ndarray:
    """Augmented 19-feature vector for one segment.

    Matches ``ArrayNetwork.features`` column for column: six local features
    followed by the thirteen network-level ones.
    """
    if len(summary.histogram) != HIST_BINS:
        raise ValueError(f"histogram must have {HIST_BINS} bins")
    x = np.empty(N_FEATURES)
    x[0] = segment.pqi
    x[1] = segment.area / summary.max_area
    x[2] = segment.lam
    x[3] = segment.k
    x[4] = segment.road_class.rehab_unit_cost / summary.max_recon_unit_cost
    x[5] = segment.road_class.recon_unit_cost / summary.max_recon_unit_cost
    x[6] = summary.year / summary.horizon
    x[7] = (
        summary.budget_remaining_cents / summary.budget_total_cents
        if summary.budget_total_cents > 0
        else 0.0
    )
    x[8] = summary.mean_los / summary.pqi_max
    x[9:] = summary.histogram
    return x


@dataclass(frozen=True)
class Transition:
    """One segment-year experience record."""

    state: np.ndarray
    action: ActionKind
    local_reward: float
    global_reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    local: np.ndarray
    global_: np.ndarray
    next_states: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    """Fixed-capacity ring of transitions with seeded uniform sampling."""

    def __init__(self, capacity: int, rng: np.random.Generator, state_dim: int = N_FEATURES):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.rng = rng
        self._states = np.empty((capacity, state_dim))
        self._actions = np.empty(capacity, dtype=np.int64)
        self._local = np.empty(capacity)
        self._global = np.empty(capacity)
        self._next_states = np.empty((capacity, state_dim))
        self._done = np.empty(capacity)
        self._size = 0
        self._pos = 0

    def __len__(self) -> int:
        return self._size

    def push(self, tr: Transition) -> None:
        self.push_batch(
            tr.state[None, :],
            np.array([int(tr.action)]),
            np.array([tr.local_reward]),
            np.array([tr.global_reward]),
            tr.next_state[None, :],
            np.array([float(tr.done)]),
        )

    def push_batch(self, states, actions, local, global_, next_states, done) -> None:
        m = len(actions)
        idx = (self._pos + np.arange(m)) % self.capacity
        self._states[idx] = states
        self._actions[idx] = actions
        self._local[idx] = local
        self._global[idx] = global_
        self._next_states[idx] = next_states
        self._done[idx] = done
        self._pos = (self._pos + m) % self.capacity
        self._size = min(self._size + m, self.capacity)

    def sample(self, batch_size: int) -> TransitionBatch:
        """Uniform with replacement over current contents."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = self.rng.integers(0, self._size, size=batch_size)
        return TransitionBatch(
            states=self._states[idx],
            actions=self._actions[idx],
            local=self._local[idx],
            global_=self._global[idx],
            next_states=self._next_states[idx],
            done=self._done[idx],
        )


@dataclass
class TrainingConfig:
    gamma: float = 1.0
    episodes: int = 300
    batch_size: int = 256
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float | None = None  # derived so the floor lands at 60% of episodes
    tau: float = 0.01
    target_rule: str = "expected_sarsa"
    lr_q: float = 1e-3
    lr_v: float = 1e-3
    lr_pi: float = 3e-4
    updates_per_year: int = 1
    buffer_capacity: int = 200_000
    hidden_dims: tuple[int, ...] = (64, 64)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0):
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.target_rule not in TARGET_RULES:
            raise ValueError(f"target_rule must be one of {TARGET_RULES}")
        if self.episodes < 1 or self.batch_size < 1 or self.buffer_capacity < 1:
            raise ValueError("episodes, batch_size and buffer_capacity must be positive")
        if self.updates_per_year < 0:
            raise ValueError("updates_per_year must be nonnegative")
        self.hidden_dims = tuple(int(d) for d in self.hidden_dims)

    def epsilon_at(self, episode: int) -> float:
        if self.epsilon_start == self.epsilon_end or self.epsilon_start == 0.0:
            return self.epsilon_start
        decay = self.epsilon_decay
        if decay is None:
            if self.epsilon_end <= 0.0:
                raise ValueError("derived decay needs a positive epsilon_end")
            floor_episode = max(1, int(0.6 * self.episodes))
            decay = (self.epsilon_end / self.epsilon_start) ** (1.0 / floor_episode)
        return max(self.epsilon_end, self.epsilon_start * decay**episode)


def select_candidate(
    q_net: DenseNet,
    policy_net: DenseNet,
    state: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
) -> ActionKind:
    """Hybrid candidate choice: policy sample with probability epsilon,
    otherwise the argmax of the action values."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        probs = forward(policy_net, state)
        return ActionKind(int(rng.choice(len(probs), p=probs)))
    return ActionKind(int(np.argmax(forward(q_net, state))))


def q_target(
    transition: Transition,
    q_target_net: DenseNet,
    policy_net: DenseNet,
    gamma: float,
    rule: str = "expected_sarsa",
) -> float:
    """Bootstrapped action-value target for one transition."""
    if rule not in TARGET_RULES:
        raise ValueError(f"rule must be one of {TARGET_RULES}")
    if transition.done:
        return transition.local_reward
    q_next = forward(q_target_net, transition.next_state)
    if rule == "max":
        boot = float(q_next.max())
    else:
        probs = forward(policy_net, transition.next_state)
        boot = float(np.dot(probs, q_next))
    return transition.local_reward + gamma * boot


@dataclass(frozen=True)
class EpisodeMetrics:
    episode_return: float  # sum of post-decision LoS values over the horizon
    los_series: tuple[float, ...]  # initial LoS followed by one entry per year
    rehab_cents: tuple[int, ...]
    recon_cents: tuple[int, ...]
    budgets_cents: tuple[int, ...]
    epsilon: float
    q_loss: float = math.nan
    v_loss: float = math.nan

    @property
    def spend_cents(self) -> tuple[int, ...]:
        return tuple(a + b for a, b in zip(self.rehab_cents, self.recon_cents))


@dataclass(frozen=True)
class TrainingLogRow:
    episode: int
    episode_return: float
    q_loss: float
    v_loss: float
    epsilon: float


def write_training_csv(rows: Sequence[TrainingLogRow], path: str | Path) -> None:
    lines = ["episode,return,q_loss,v_loss,epsilon"]
    for r in rows:
        lines.append(f"{r.episode},{r.episode_return!r},{r.q_loss!r},{r.v_loss!r},{r.epsilon!r}")
    Path(path).write_text("\n".join(lines) + "\n")


class Trainer:
    """Owns the three nets, their targets, the replay buffer and all updates."""

    def __init__(self, config: TrainingConfig):
        self.config = config
        seq = np.random.SeedSequence(config.seed)
        init_ss, episode_ss, buffer_ss = seq.spawn(3)
        init_rng = np.random.default_rng(init_ss)
        dims = (N_FEATURES, *config.hidden_dims)
        self.q_net = init_net((*dims, N_ACTIONS), HEAD_LINEAR, init_rng)
        self.policy_net = init_net((*dims, N_ACTIONS), HEAD_SOFTMAX, init_rng)
        self.v_net = init_net((*dims, 1), HEAD_LINEAR, init_rng)
        self.q_target_net = self.q_net.copy()
        self.v_target_net = self.v_net.copy()
        self.opt_q = make_optimizer(self.q_net, "adam", config.lr_q)
        self.opt_v = make_optimizer(self.v_net, "adam", config.lr_v)
        self.opt_pi = make_optimizer(self.policy_net, "adam", config.lr_pi)
        self.rng = np.random.default_rng(episode_ss)
        self.buffer = ReplayBuffer(config.buffer_capacity, np.random.default_rng(buffer_ss))

    # ------------------------------------------------------------------
    # Targets and per-net updates
    # ------------------------------------------------------------------

    def _q_targets(self, batch: TransitionBatch) -> np.ndarray:
        q_next = forward(self.q_target_net, batch.next_states)
        if self.config.target_rule == "max":
            boot = q_next.max(axis=1)
        else:
            probs = forward(self.policy_net, batch.next_states)
            boot = (probs * q_next).sum(axis=1)
        return batch.local + self.config.gamma * (1.0 - batch.done) * boot

    def update_q(self, batch: TransitionBatch) -> float:
        """One TD step on the action-value net; returns the pre-step MSE."""
        if len(batch) == 0:
            raise ValueError("empty batch")
        rows = np.arange(len(batch))
        pred_all = forward(self.q_net, batch.states)
        err = pred_all[rows, batch.actions] - self._q_targets(batch)
        loss = float(np.mean(err**2))
        gout = np.zeros_like(pred_all)
        gout[rows, batch.actions] = 2.0 * err / len(batch)
        optimizer_step(self.q_net, backward(self.q_net, batch.states, gout), self.opt_q)
        return loss

    def update_value(self, batch: TransitionBatch) -> float:
        """One bootstrap step on the global value net; returns pre-step MSE."""
        if len(batch) == 0:
            raise ValueError("empty batch")
        v_next = forward(self.v_target_net, batch.next_states)[:, 0]
        y = batch.global_ + self.config.gamma * (1.0 - batch.done) * v_next
        pred = forward(self.v_net, batch.states)[:, 0]
        err = pred - y
        loss = float(np.mean(err**2))
        gout = (2.0 * err / len(batch))[:, None]
        optimizer_step(self.v_net, backward(self.v_net, batch.states, gout), self.opt_v)
        return loss

    def update_policy(self, batch: TransitionBatch) -> float:
        """Advantage-weighted log-likelihood step on the policy net.

        Advantages are computed from the online value net and treated as
        constants; probabilities are floored inside the logarithm.
        """
        if len(batch) == 0:
            raise ValueError("empty batch")
        rows = np.arange(len(batch))
        v_s = forward(self.v_net, batch.states)[:, 0]
        v_next = forward(self.v_net, batch.next_states)[:, 0]
        adv = batch.global_ + self.config.gamma * (1.0 - batch.done) * v_next - v_s
        probs = forward(self.policy_net, batch.states)
        p_sel = np.maximum(probs[rows, batch.actions], PROB_FLOOR)
        loss = float(-np.mean(np.log(p_sel) * adv))
        gout = np.zeros_like(probs)
        gout[rows, batch.actions] = -adv / (len(batch) * p_sel)
        optimizer_step(self.policy_net, backward(self.policy_net, batch.states, gout), self.opt_pi)
        return loss

    # ------------------------------------------------------------------
    # Episode machinery
    # ------------------------------------------------------------------

    def _select_actions(self, feats: np.ndarray, epsilon: float, rng) -> tuple[np.ndarray, np.ndarray]:
        """Candidate action per segment plus the action-value matrix."""
        q = forward(self.q_net, feats)
        greedy = q.argmax(axis=1)
        if epsilon <= 0.0:
            return greedy.astype(np.int8), q
        probs = forward(self.policy_net, feats)
        explore = rng.random(len(feats)) < epsilon
        u = rng.random(len(feats))
        sampled = (u[:, None] > np.cumsum(probs, axis=1)).sum(axis=1)
        sampled = np.minimum(sampled, N_ACTIONS - 1)
        return np.where(explore, sampled, greedy).astype(np.int8), q

    def _allocate(
        self,
        arr: ArrayNetwork,
        candidates: np.ndarray,
        q: np.ndarray,
        noise_sigma: float,
        rng,
        budget_cents: int,
    ) -> np.ndarray:
        """Fund candidates under the annual budget; losers fall back to DoNothing."""
        executed = np.zeros(arr.n, dtype=np.int8)
        idx = np.nonzero(candidates != ActionKind.DO_NOTHING)[0]
        if len(idx) == 0:
            return executed
        scores = q[idx, candidates[idx]]
        costs = arr.action_costs_cents(candidates)[idx]
        if noise_sigma > 0.0:
            scores = scores * (1.0 + rng.normal(0.0, noise_sigma, size=len(idx)))
        funded = greedy_funding_core(arr.ids[idx], scores, costs, budget_cents)
        executed[idx[funded]] = candidates[idx[funded]]
        return executed

    def deterministic_year_actions(self, arr: ArrayNetwork) -> np.ndarray:
        """Greedy (no exploration, no noise) actions for the current year."""
        feats = arr.features()
        cand, q = self._select_actions(feats, 0.0, None)
        return self._allocate(arr, cand, q, 0.0, None, int(arr.budgets_cents[arr.year]))

    def _episode(
        self,
        arr0: ArrayNetwork,
        epsilon: float,
        rng,
        learn: bool,
        want_transitions: bool = False,
        want_states: bool = False,
    ):
        arr = arr0.copy()
        n = arr.n
        h = arr.horizon - arr.year
        actions_matrix = np.zeros((n, h), dtype=np.int8)
        rehab_cents, recon_cents = [], []
        los_series = [arr.los()]
        states = [arr.to_state()] if want_states else None
        transitions: list[Transition] | None = [] if want_transitions else None
        q_losses: list[float] = []
        v_losses: list[float] = []
        budgets = tuple(int(b) for b in arr.budgets_cents[arr.year :])

        feats = arr.features()
        for t in range(h):
            budget = int(arr.budgets_cents[arr.year])
            cand, q = self._select_actions(feats, epsilon, rng)
            executed = self._allocate(arr, cand, q, epsilon, rng, budget)
            pqi_nothing = arr.pqi_if_nothing()
            spend = int(arr.action_costs_cents(executed).sum())
            if spend > budget:
                raise RuntimeError(f"allocation exceeded budget in year {arr.year}")
            r_rehab, r_recon = arr.step(executed)
            rehab_cents.append(r_rehab)
            recon_cents.append(r_recon)
            actions_matrix[:, t] = executed

            paid = executed != ActionKind.DO_NOTHING
            local = np.zeros(n)
            unit = np.where(executed == ActionKind.REHABILITATION, arr.rehab_unit, arr.recon_unit)
            local[paid] = (arr.pqis[paid] - pqi_nothing[paid]) / unit[paid]

            next_feats = arr.features()
            r_global = arr.los() / arr.pqi_max
            done = t == h - 1
            los_series.append(arr.los())
            if want_states:
                states.append(arr.to_state())
            if want_transitions:
                for i in range(n):
                    transitions.append(
                        Transition(
                            state=feats[i].copy(),
                            action=ActionKind(int(executed[i])),
                            local_reward=float(local[i]),
                            global_reward=r_global,
                            next_state=next_feats[i].copy(),
                            done=done,
                        )
                    )
            if learn:
                self.buffer.push_batch(
                    feats, executed.astype(np.int64), local, r_global, next_feats, float(done)
                )
                for _ in range(self.config.updates_per_year):
                    batch = self.buffer.sample(self.config.batch_size)
                    q_losses.append(self.update_q(batch))
                    v_losses.append(self.update_value(batch))
                    self.update_policy(batch)
                    soft_update(self.q_target_net, self.q_net, self.config.tau)
                    soft_update(self.v_target_net, self.v_net, self.config.tau)
            feats = next_feats

        metrics = EpisodeMetrics(
            episode_return=float(math.fsum(los_series[1:])),
            los_series=tuple(los_series),
            rehab_cents=tuple(rehab_cents),
            recon_cents=tuple(recon_cents),
            budgets_cents=budgets,
            epsilon=epsilon,
            q_loss=float(np.mean(q_losses)) if q_losses else math.nan,
            v_loss=float(np.mean(v_losses)) if v_losses else math.nan,
        )
        plan = MaintenancePlan(
            segment_ids=tuple(int(i) for i in arr.ids),
            actions=actions_matrix,
            rehab_cents=tuple(rehab_cents),
            recon_cents=tuple(recon_cents),
        )
        return plan, states, transitions, metrics

    def run_episode(
        self,
        network: NetworkState,
        epsilon: float,
        rng: np.random.Generator | None = None,
        learn: bool = False,
    ) -> tuple[list[NetworkState], list[Transition], EpisodeMetrics]:
        """Simulate one full horizon, returning the trajectory, the recorded
        transitions and the episode metrics."""
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        rng = self.rng if rng is None else rng
        arr = ArrayNetwork.from_state(network)
        _, states, transitions, metrics = self._episode(
            arr, epsilon, rng, learn=learn, want_transitions=True, want_states=True
        )
        return states, transitions, metrics

    def train(
        self,
        network: NetworkState,
        progress: Callable[[TrainingLogRow], None] | None = None,
    ) -> list[TrainingLogRow]:
        """Run the configured number of episodes against fresh copies of
        ``network``, returning one metrics row per episode."""
        arr0 = ArrayNetwork.from_state(network)
        rows: list[TrainingLogRow] = []
        for episode in range(self.config.episodes):
            eps = self.config.epsilon_at(episode)
            _, _, _, metrics = self._episode(arr0, eps, self.rng, learn=True)
            row = TrainingLogRow(
                episode=episode,
                episode_return=metrics.episode_return,
                q_loss=metrics.q_loss,
                v_loss=metrics.v_loss,
                epsilon=eps,
            )
            rows.append(row)
            if progress is not None:
                progress(row)
        return rows

    def greedy_plan(self, network: NetworkState) -> tuple[MaintenancePlan, list[NetworkState]]:
        """Deterministic rollout of the learned policy (no exploration, no
        allocation noise)."""
        arr = ArrayNetwork.from_state(network)
        plan, states, _, _ = self._episode(arr, 0.0, None, learn=False, want_states=True)
        plan.validate_budgets(list(arr.budgets_cents[network.year :]))
        return plan, states

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------

    def save_bundle(self, out_dir: str | Path, extra: dict | None = None) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_weights(self.q_net, out / BUNDLE_FILES["q"])
        save_weights(self.policy_net, out / BUNDLE_FILES["policy"])
        save_weights(self.v_net, out / BUNDLE_FILES["value"])
        manifest = {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "config": asdict(self.config),
            "seed": self.config.seed,
            "files": dict(BUNDLE_FILES),
        }
        if extra:
            manifest["extra"] = extra
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    @classmethod
    def load_bundle(cls, bundle_dir: str | Path) -> "Trainer":
        path = Path(bundle_dir)
        manifest_path = path / "manifest.json"
        if not manifest_path.exists():
            raise ValueError(f"{bundle_dir}: no manifest.json, not a model bundle")
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("format") != BUNDLE_FORMAT:
            raise ValueError(f"{bundle_dir}: not a model bundle")
        if manifest.get("version") != BUNDLE_VERSION:
            raise ValueError(f"{bundle_dir}: unsupported bundle version")
        cfg_dict = dict(manifest["config"])
        cfg_dict["hidden_dims"] = tuple(cfg_dict["hidden_dims"])
        trainer = cls(TrainingConfig(**cfg_dict))
        trainer.q_net = load_weights(path / manifest["files"]["q"])
        trainer.policy_net = load_weights(path / manifest["files"]["policy"])
        trainer.v_net = load_weights(path / manifest["files"]["value"])
        trainer.q_target_net = trainer.q_net.copy()
        trainer.v_target_net = trainer.v_net.copy()
        return trainer

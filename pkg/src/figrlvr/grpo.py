"""Group-relative policy optimization and SFT warm-up on the toy policy.

The objective minimised per step is

    loss = -(1/N) sum_groups (1/G) sum_i A_i log pi(o_i | q)
           + beta (1/N) sum_groups KL(pi(. | q) || pi_ref(. | q))

with group-normalized advantages A_i and the KL computed exactly over the
finite action set. The gradient is analytical; updates are plain gradient
descent with optional global-norm clipping.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import RejectedInputError
from .rewards import RewardBreakdown, total_reward
from .styles import StyleId, get_style
from .toy import ReferencePolicy, ToyPolicy, ToyTask, action_index, base_policy, greedy_accuracy

logger = logging.getLogger(__name__)

RewardFn = Callable[[str, str, StyleId], RewardBreakdown]


@dataclass(frozen=True)
class GrpoConfig:
    """GRPO hyperparameters.

    Attributes:
        group_size: Rollouts per context (G).
        beta: KL coefficient.
        learning_rate: Gradient-descent step size.
        epochs: Passes over the task; one context per step.
        epsilon_std: Stabilizer added to the group standard deviation.
        seed: Seed for context order and rollout sampling.
        max_grad_norm: Global-norm clip; ``None`` disables clipping.
    """
    group_size: int = 8
    beta: float = 0.04
    learning_rate: float = 1e-5
    epochs: int = 2
    epsilon_std: float = 1e-8
    seed: int = 0
    max_grad_norm: float | None = 1.0

    def __post_init__(self):
        if self.group_size < 2:
            raise RejectedInputError(f"group_size must be >= 2, got {self.group_size}")
        if self.learning_rate <= 0:
            raise RejectedInputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.beta < 0:
            raise RejectedInputError(f"beta must be >= 0, got {self.beta}")
        if self.epochs < 0:
            raise RejectedInputError(f"epochs must be >= 0, got {self.epochs}")


@dataclass(frozen=True)
class SftConfig:
    epochs: int = 5
    learning_rate: float = 2e-4
    schedule: str = "cosine"
    batch_size: int | None = 16
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in ("cosine", "constant"):
            raise RejectedInputError(f"Unknown schedule '{self.schedule}'")
        if self.learning_rate <= 0:
            raise RejectedInputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise RejectedInputError(f"epochs must be >= 0, got {self.epochs}")


def toy_profile(seed: int = 0) -> tuple[SftConfig, GrpoConfig]:
    """Step sizes that move a 13x4 softmax policy within a few thousand steps."""
    sft = SftConfig(epochs=2, learning_rate=0.1, schedule="cosine", batch_size=16, seed=seed)
    grpo = GrpoConfig(group_size=8, beta=0.04, learning_rate=0.2, epochs=2, seed=seed, max_grad_norm=1.0)
    return sft, grpo


@dataclass
class RolloutGroup:
    """G sampled actions for one context, with rewards and advantages once scored."""
    context: np.ndarray
    outputs: list[int]
    rewards: list[int] = field(default_factory=list)
    advantages: list[float] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.outputs)

    def scored(self, rewards: Sequence[int], epsilon_std: float = 1e-8) -> "RolloutGroup":
        if len(rewards) != self.size:
            raise RejectedInputError(f"expected {self.size} rewards, got {len(rewards)}")
        return replace(
            self,
            rewards=[int(r) for r in rewards],
            advantages=group_advantages(rewards, epsilon_std),
        )


@dataclass(frozen=True)
class StepRecord:
    step: int
    mean_reward: float
    kl: float
    loss: float


@dataclass
class TrainReport:
    records: list[StepRecord] = field(default_factory=list)
    final_accuracy: float | None = None

    @property
    def steps(self) -> int:
        return len(self.records)

    def mean_rewards(self) -> np.ndarray:
        return np.array([r.mean_reward for r in self.records], dtype=np.float64)

    def to_records(self) -> dict:
        return {
            "final_accuracy": self.final_accuracy,
            "records": [asdict(r) for r in self.records],
        }

    @classmethod
    def from_records(cls, data: dict) -> "TrainReport":
        return cls(
            records=[StepRecord(**r) for r in data.get("records", [])],
            final_accuracy=data.get("final_accuracy"),
        )


@dataclass
class SftResult:
    policy: ToyPolicy
    reference: ReferencePolicy
    epoch_losses: list[float]


def group_advantages(rewards: Sequence[float], epsilon_std: float = 1e-8) -> list[float]:
    """A_i = (r_i - mean) / (pop_std + eps); exactly zero for a constant group."""
    if len(rewards) < 2:
        raise RejectedInputError(f"a group needs at least 2 rewards, got {len(rewards)}")
    r = np.asarray(rewards, dtype=np.float64)
    std = float(r.std())
    if std == 0.0:
        return [0.0] * len(r)
    return ((r - r.mean()) / (std + epsilon_std)).tolist()


def categorical_kl(p: np.ndarray, q: np.ndarray) -> float:
    """Exact KL(p || q) for strictly positive distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return max(float(np.sum(p * (np.log(p) - np.log(q)))), 0.0)


def kl_divergence(policy: ToyPolicy, ref: ToyPolicy, context: np.ndarray) -> float:
    if policy.num_actions != ref.num_actions:
        raise RejectedInputError("policy and reference must share the action vocabulary")
    logp = policy.log_probabilities(context)
    logq = ref.log_probabilities(context)
    return max(float(np.sum(np.exp(logp) * (logp - logq))), 0.0)


def grpo_loss_and_grad(
    policy: ToyPolicy,
    ref: ToyPolicy,
    groups: Sequence[RolloutGroup],
    beta: float,
) -> tuple[float, np.ndarray]:
    """Loss and exact gradient with respect to ``policy.weights``."""
    if not groups:
        raise RejectedInputError("grpo_loss_and_grad needs at least one group")

    n = len(groups)
    loss = 0.0
    grad = np.zeros_like(policy.weights)
    for group in groups:
        if len(group.advantages) != group.size:
            raise RejectedInputError("group advantages are not populated")
        x = np.asarray(group.context, dtype=np.float64)
        logp = policy.log_probabilities(x)
        logq = ref.log_probabilities(x)
        p = np.exp(logp)
        adv = np.asarray(group.advantages, dtype=np.float64)
        outputs = np.asarray(group.outputs, dtype=int)
        g = group.size

        pg = -float(np.dot(adv, logp[outputs])) / g
        log_ratio = logp - logq
        kl = float(np.dot(p, log_ratio))
        loss += (pg + beta * kl) / n

        # d/dz of -(1/G) sum_i A_i log p(o_i): -(1/G) sum_i A_i (e_{o_i} - p)
        d_pg = p * adv.sum() / g
        np.add.at(d_pg, outputs, -adv / g)
        d_kl = p * (log_ratio - kl)
        grad += np.outer(x, (d_pg + beta * d_kl) / n)
    return loss, grad


def sample_rollouts(
    policy: ToyPolicy,
    context: np.ndarray,
    group_size: int,
    seed: int | np.random.Generator,
) -> RolloutGroup:
    """Draw ``group_size`` i.i.d. actions from pi(. | context)."""
    if group_size < 2:
        raise RejectedInputError(f"group_size must be >= 2, got {group_size}")
    rng = np.random.default_rng(seed)
    p = policy.probabilities(context)
    outputs = rng.choice(policy.num_actions, size=group_size, p=p / p.sum())
    return RolloutGroup(context=np.asarray(context, dtype=np.float64), outputs=[int(o) for o in outputs])


def clip_gradient(grad: np.ndarray, max_norm: float | None) -> np.ndarray:
    if max_norm is None:
        return grad
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


def cross_entropy(policy: ToyPolicy, features: np.ndarray, targets: np.ndarray) -> float:
    logp = policy.log_probabilities(features)
    return float(-np.mean(logp[np.arange(len(targets)), targets]))


def _cosine_lr(base: float, step: int, total: int) -> float:
    if total <= 1:
        return base
    return 0.5 * base * (1.0 + math.cos(math.pi * step / total))


def sft_warmup(
    policy: ToyPolicy,
    labeled: Sequence[tuple[np.ndarray, int]],
    config: SftConfig = SftConfig(),
) -> SftResult:
    """Cross-entropy warm-up towards the labeled actions.

    Returns a trained copy, its frozen reference and the full-train-set loss
    after each epoch. ``batch_size=None`` trains full-batch.
    """
    if not labeled:
        raise RejectedInputError("sft_warmup needs at least one labeled context")

    features = np.stack([np.asarray(x, dtype=np.float64) for x, _ in labeled])
    targets = np.array([a for _, a in labeled], dtype=int)
    n = len(targets)
    trained = policy.copy()
    rng = np.random.default_rng(config.seed)

    batch = n if not config.batch_size else min(config.batch_size, n)
    batches_per_epoch = math.ceil(n / batch)
    total_steps = config.epochs * batches_per_epoch
    onehot = np.eye(trained.num_actions)[targets]

    losses: list[float] = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            x = features[idx]
            p = trained.probabilities(x)
            grad = x.T @ (p - onehot[idx]) / len(idx)
            lr = (
                _cosine_lr(config.learning_rate, step, total_steps)
                if config.schedule == "cosine"
                else config.learning_rate
            )
            trained.weights = trained.weights - lr * grad
            step += 1
        losses.append(cross_entropy(trained, features, targets))
        logger.debug(f"SFT epoch {epoch + 1}/{config.epochs}: loss={losses[-1]:.6f}")

    return SftResult(policy=trained, reference=trained.freeze(), epoch_losses=losses)


def _reward_table(
    policy: ToyPolicy,
    gold: str,
    style: StyleId,
    reward: RewardFn,
    cache: dict[tuple[str, StyleId], np.ndarray],
) -> np.ndarray:
    key = (gold, style)
    if key not in cache:
        cache[key] = np.array(
            [reward(action.render(style), gold, style).total for action in policy.actions],
            dtype=np.int64,
        )
    return cache[key]


def train_grpo(
    policy: ToyPolicy,
    ref: ToyPolicy,
    task: ToyTask,
    config: GrpoConfig = GrpoConfig(),
    reward: RewardFn = total_reward,
    eval_task: ToyTask | None = None,
) -> TrainReport:
    """Run epochs x |task| single-context GRPO steps, updating ``policy`` in place.

    Each action's rendered text is scored by ``reward`` once per (gold, style);
    scores are pure so the cache does not change results.
    """
    rng = np.random.default_rng(config.seed)
    report = TrainReport()
    cache: dict[tuple[str, StyleId], np.ndarray] = {}

    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(task))
        for i in order:
            style = get_style(task.styles[i]).id
            gold = task.gold_label(i)
            group = sample_rollouts(policy, task.features[i], config.group_size, rng)
            table = _reward_table(policy, gold, style, reward, cache)
            group = group.scored(table[group.outputs].tolist(), config.epsilon_std)

            loss, grad = grpo_loss_and_grad(policy, ref, [group], config.beta)
            kl = kl_divergence(policy, ref, group.context)
            policy.weights = policy.weights - config.learning_rate * clip_gradient(grad, config.max_grad_norm)

            report.records.append(
                StepRecord(step=step, mean_reward=float(np.mean(group.rewards)), kl=kl, loss=loss)
            )
            step += 1
        logger.debug(
            f"GRPO epoch {epoch + 1}/{config.epochs}: "
            f"mean reward={np.mean([r.mean_reward for r in report.records[-len(task):]]):.4f}"
        )

    if eval_task is not None:
        report.final_accuracy = greedy_accuracy(policy, eval_task)
    logger.info(f"GRPO finished {report.steps} steps; final accuracy={report.final_accuracy}")
    return report


@dataclass
class ToyRun:
    mode: str
    policy: ToyPolicy
    reference: ReferencePolicy
    accuracy: float
    sft_losses: list[float] = field(default_factory=list)
    report: TrainReport | None = None


TOY_MODES = ("untrained", "sft", "grpo", "sft-then-grpo")


def labeled_contexts(task: ToyTask, well_formed: bool = True) -> list[tuple[np.ndarray, int]]:
    """(context, correct action) pairs; ``well_formed=False`` targets bare answers."""
    return [
        (task.features[i], action_index(bool(task.gold_positive[i]), well_formed))
        for i in range(len(task))
    ]


def run_toy_training(
    mode: str,
    train: ToyTask,
    test: ToyTask,
    seed: int = 0,
    sft_config: SftConfig | None = None,
    grpo_config: GrpoConfig | None = None,
) -> ToyRun:
    """Train the base policy under one of the toy setups and score it on ``test``."""
    if mode not in TOY_MODES:
        raise RejectedInputError(f"Unknown toy mode '{mode}'. Valid modes: {', '.join(TOY_MODES)}")
    default_sft, default_grpo = toy_profile(seed)
    sft_config = sft_config or default_sft
    grpo_config = grpo_config or default_grpo

    policy = base_policy(seed, feature_dim=train.features.shape[1])
    reference = policy.freeze()
    sft_losses: list[float] = []
    report: TrainReport | None = None

    if mode in ("sft", "sft-then-grpo"):
        result = sft_warmup(policy, labeled_contexts(train), sft_config)
        policy, reference, sft_losses = result.policy, result.reference, result.epoch_losses

    if mode in ("grpo", "sft-then-grpo"):
        report = train_grpo(policy, reference, train, grpo_config, eval_task=test)

    accuracy = greedy_accuracy(policy, test)
    logger.info(f"Toy run mode={mode} seed={seed}: accuracy={accuracy:.4f}")
    return ToyRun(
        mode=mode,
        policy=policy,
        reference=reference,
        accuracy=accuracy,
        sft_losses=sft_losses,
        report=report,
    )

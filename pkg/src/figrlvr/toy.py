"""Desk-scale toy task and softmax policies.

A context stands in for an image-caption pair. It encodes the sentiment of the
image, the sentiment of the caption, their pairing and a few distractor bits.
The gold label is positive (figurative) iff the two sentiments disagree.

Feature layout (13 dims):

    0      bias
    1-2    image positive / image negative
    3-4    caption positive / caption negative
    5-8    pair one-hot: pp, pn, np, nn  (image, caption)
    9-12   distractor bits

The policy chooses among four actions that bundle a label with a format:

    0  positive label, well-formed tags
    1  negative label, well-formed tags
    2  positive label, bare answer
    3  negative label, bare answer

Each action renders to text that the reward engine scores verbatim.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import RejectedInputError
from .rewards import predict_label
from .styles import FigurativeStyle, StyleId, get_style

logger = logging.getLogger(__name__)

NUM_DISTRACTORS = 4
FEATURE_NAMES: tuple[str, ...] = (
    "bias",
    "image_positive",
    "image_negative",
    "caption_positive",
    "caption_negative",
    "pair_pp",
    "pair_pn",
    "pair_np",
    "pair_nn",
) + tuple(f"distractor_{i + 1}" for i in range(NUM_DISTRACTORS))
NUM_FEATURES = len(FEATURE_NAMES)

TOY_REASONING = (
    "Step 1: The image sentiment is read. "
    "Step 2: The caption sentiment is read. "
    "Step 3: The two sentiments are compared. "
    "Step 4: The intent follows from the comparison."
)


@dataclass(frozen=True)
class ToyAction:
    positive: bool
    well_formed: bool

    def label(self, style: FigurativeStyle | StyleId | str) -> str:
        resolved = get_style(style)
        return resolved.positive_label if self.positive else resolved.negative_label

    def render(self, style: FigurativeStyle | StyleId | str) -> str:
        label = self.label(style)
        if self.well_formed:
            return f"<think>{TOY_REASONING}</think><answer>{label}</answer>"
        return f"Answer: {label}"


ACTIONS: tuple[ToyAction, ...] = (
    ToyAction(positive=True, well_formed=True),
    ToyAction(positive=False, well_formed=True),
    ToyAction(positive=True, well_formed=False),
    ToyAction(positive=False, well_formed=False),
)


def action_index(positive: bool, well_formed: bool) -> int:
    return ACTIONS.index(ToyAction(positive=positive, well_formed=well_formed))


def action_for_completion(text: str, style: FigurativeStyle | StyleId | str) -> int:
    """Map an SFT completion onto the toy action it corresponds to."""
    resolved = get_style(style)
    predicted, r_format = predict_label(text, resolved)
    if predicted is None:
        raise RejectedInputError(f"Completion carries no {resolved.id.value} label: {text[:60]!r}")
    return action_index(predicted == resolved.positive_label, bool(r_format))


def encode_context(
    image_positive: bool,
    caption_positive: bool,
    distractors: Sequence[int] = (0,) * NUM_DISTRACTORS,
) -> np.ndarray:
    if len(distractors) != NUM_DISTRACTORS:
        raise RejectedInputError(f"Expected {NUM_DISTRACTORS} distractor bits, got {len(distractors)}")
    x = np.zeros(NUM_FEATURES, dtype=np.float64)
    x[0] = 1.0
    x[1 if image_positive else 2] = 1.0
    x[3 if caption_positive else 4] = 1.0
    pair = 2 * (0 if image_positive else 1) + (0 if caption_positive else 1)
    x[5 + pair] = 1.0
    x[9:] = np.asarray(distractors, dtype=np.float64)
    return x


def is_incongruent(image_positive: bool, caption_positive: bool) -> bool:
    return bool(image_positive) != bool(caption_positive)


@dataclass
class ToyTask:
    """Contexts with gold labels and the style each context is scored under."""
    features: np.ndarray
    gold_positive: np.ndarray
    styles: tuple[StyleId, ...]
    ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        n = len(self.gold_positive)
        if self.features.shape[0] != n or len(self.styles) != n:
            raise RejectedInputError("features, gold labels and styles must align")
        if not self.ids:
            self.ids = tuple(f"ctx-{i}" for i in range(n))

    def __len__(self) -> int:
        return len(self.gold_positive)

    def gold_label(self, i: int) -> str:
        style = get_style(self.styles[i])
        return style.positive_label if self.gold_positive[i] else style.negative_label

    def subset(self, indices: Sequence[int] | np.ndarray) -> "ToyTask":
        idx = np.asarray(indices, dtype=int)
        return ToyTask(
            features=self.features[idx],
            gold_positive=self.gold_positive[idx],
            styles=tuple(self.styles[i] for i in idx),
            ids=tuple(self.ids[i] for i in idx),
        )

    @classmethod
    def from_samples(cls, samples: Sequence[Any]) -> "ToyTask":
        """Build a task from Samples whose meta carries toy features."""
        rows, gold, styles, ids = [], [], [], []
        for sample in samples:
            features = toy_features(sample.meta)
            if features is None:
                raise RejectedInputError(f"Sample '{sample.id}' has no toy features in meta")
            rows.append(features)
            gold.append(sample.gold_label == get_style(sample.style).positive_label)
            styles.append(get_style(sample.style).id)
            ids.append(sample.id)
        return cls(
            features=np.array(rows, dtype=np.float64).reshape(len(rows), NUM_FEATURES),
            gold_positive=np.array(gold, dtype=bool),
            styles=tuple(styles),
            ids=tuple(ids),
        )


def toy_features(meta: Mapping[str, Any]) -> np.ndarray | None:
    if "image_sentiment" not in meta or "caption_sentiment" not in meta:
        return None
    return encode_context(
        meta["image_sentiment"] == "positive",
        meta["caption_sentiment"] == "positive",
        meta.get("distractors", (0,) * NUM_DISTRACTORS),
    )


def sample_sentiments(seed: int | np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw balanced (image, caption, distractors) arrays; positives come first."""
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    n_neg = n - n_pos
    flip_pos = rng.integers(0, 2, size=n_pos).astype(bool)
    flip_neg = rng.integers(0, 2, size=n_neg).astype(bool)
    # incongruent pairs: (+, -) or (-, +); congruent pairs: (+, +) or (-, -)
    image = np.concatenate([~flip_pos, ~flip_neg])
    caption = np.concatenate([flip_pos, ~flip_neg])
    distractors = rng.integers(0, 2, size=(n, NUM_DISTRACTORS))
    order = rng.permutation(n)
    return image[order], caption[order], distractors[order]


def make_toy_task(seed: int, n: int, style: StyleId | str = StyleId.SARCASM) -> ToyTask:
    """Balanced incongruity task of ``n`` contexts, deterministic per seed."""
    if n < 1:
        raise RejectedInputError(f"n must be >= 1, got {n}")
    resolved = get_style(style)
    image, caption, distractors = sample_sentiments(seed, n)
    features = np.stack(
        [encode_context(i, c, d) for i, c, d in zip(image, caption, distractors)]
    )
    gold = image != caption
    return ToyTask(features=features, gold_positive=gold, styles=(resolved.id,) * n)


def split_toy_task(task: ToyTask, train_fraction: float = 0.8) -> tuple[ToyTask, ToyTask]:
    cut = int(round(train_fraction * len(task)))
    return task.subset(range(cut)), task.subset(range(cut, len(task)))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class ToyPolicy:
    """Linear-softmax policy: pi(a | x) = softmax(x @ W)[a]."""

    def __init__(self, weights: np.ndarray, actions: Sequence[ToyAction] = ACTIONS):
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != len(actions):
            raise RejectedInputError(
                f"weights must be (features, {len(actions)}), got {w.shape}"
            )
        self._weights = w
        self.actions = tuple(actions)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @weights.setter
    def weights(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self._weights.shape:
            raise RejectedInputError(f"shape mismatch: {value.shape} != {self._weights.shape}")
        self._weights = value.copy()

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    def logits(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self._weights

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x))

    def log_probabilities(self, x: np.ndarray) -> np.ndarray:
        return log_softmax(self.logits(x))

    def greedy_actions(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(features), axis=-1)

    def copy(self) -> "ToyPolicy":
        return ToyPolicy(self._weights.copy(), self.actions)

    def freeze(self) -> "ReferencePolicy":
        return ReferencePolicy(self._weights, self.actions)

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            np.save(f, self._weights, allow_pickle=False)
        return path

    @classmethod
    def load(cls, path: Path) -> "ToyPolicy":
        return cls(np.load(Path(path), allow_pickle=False))


class ReferencePolicy(ToyPolicy):
    """Frozen copy of a policy; its weights cannot be reassigned or written."""

    def __init__(self, weights: np.ndarray, actions: Sequence[ToyAction] = ACTIONS):
        super().__init__(weights, actions)
        self._weights.setflags(write=False)

    @ToyPolicy.weights.setter
    def weights(self, value: np.ndarray) -> None:
        raise AttributeError("ReferencePolicy weights are frozen")

    def copy(self) -> ToyPolicy:
        return ToyPolicy(self._weights.copy(), self.actions)

    def freeze(self) -> "ReferencePolicy":
        return self


def base_policy(
    seed: int,
    feature_dim: int = NUM_FEATURES,
    label_prior: float = 1.0,
    format_prior: float = 1.0,
    literal_prior: float = 9.0,
    noise: float = 0.01,
) -> ToyPolicy:
    """Untrained policy that reads captions literally and ignores the tag format.

    The bias row favours the negative label by ``label_prior`` and the bare answer
    by ``format_prior``. The caption-negative row adds ``literal_prior`` to the
    negative label, so a complaint over a happy image is almost never explored.
    Every weight gets small seeded noise.
    """
    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, noise, size=(feature_dim, len(ACTIONS)))
    caption_negative = FEATURE_NAMES.index("caption_negative")
    for a, action in enumerate(ACTIONS):
        prior = (0.0 if action.positive else label_prior) + (0.0 if action.well_formed else format_prior)
        weights[0, a] += prior
        if not action.positive and feature_dim > caption_negative:
            weights[caption_negative, a] += literal_prior
    return ToyPolicy(weights)


def greedy_predictions(policy: ToyPolicy, task: ToyTask) -> np.ndarray:
    """Predicted positive flags from the argmax action of each context."""
    chosen = policy.greedy_actions(task.features)
    return np.array([policy.actions[a].positive for a in chosen], dtype=bool)


def greedy_labels(policy: ToyPolicy, task: ToyTask) -> list[str]:
    chosen = policy.greedy_actions(task.features)
    return [policy.actions[a].label(style) for a, style in zip(chosen, task.styles)]


def greedy_accuracy(policy: ToyPolicy, task: ToyTask) -> float:
    if len(task) == 0:
        return 0.0
    return float(np.mean(greedy_predictions(policy, task) == task.gold_positive))
